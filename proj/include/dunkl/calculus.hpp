#pragma once

// Dunkl operators T_j, gradient, Laplacian and the carre-du-champ form:
// exact on polynomials (the reflection difference is divisible by <.,alpha>),
// difference quotients on sampled functions with a directional-derivative
// fallback near the reflecting hyperplanes where the quotient is removable.

#include <functional>
#include <optional>
#include <string>

#include "dunkl/measure.hpp"
#include "dunkl/polynomial.hpp"
#include "dunkl/root_system.hpp"

namespace dunkl {

enum class Smoothness { CInfinity, C2, C1, Lipschitz };

struct SmoothFn {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;  // optional analytic gradient
    std::optional<Ball> support;          // zero outside when set
    Smoothness smoothness = Smoothness::CInfinity;
    std::string id;

    double operator()(const Vec& x) const { return eval(x); }
    bool has_grad() const { return static_cast<bool>(grad); }
};

// ---------------------------------------------------------------------------
// Exact polynomial path.

namespace calc_detail {

// Orthogonal involution H with H e_1 = alpha/|alpha| (Householder).
inline Mat axis_frame(const Vec& alpha) {
    const int n = static_cast<int>(alpha.size());
    const double na = norm(alpha);
    Vec v(alpha);
    for (int i = 0; i < n; ++i) v[i] /= na;
    v[0] -= 1.0;
    const double v2 = norm2(v);
    if (v2 < 1e-30) return Mat::identity(n);
    Mat h = Mat::identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h(i, j) -= 2.0 * v[i] * v[j] / v2;
    return h;
}

}  // namespace calc_detail

/// (p - p o sigma_alpha) / <.,alpha>. The numerator vanishes on the
/// hyperplane, so the division is exact; a nonzero remainder signals an
/// implementation bug and throws.
inline MultiPoly reflection_quotient(const MultiPoly& p, const Vec& alpha) {
    const Mat sigma = reflection_matrix(alpha);
    const MultiPoly diff = p - p.compose_linear(sigma);
    if (diff.empty()) return MultiPoly(p.dim);
    const Mat frame = calc_detail::axis_frame(alpha);
    const MultiPoly rotated = diff.compose_linear(frame);
    const double tol = 1e-8 * std::max(1.0, rotated.max_abs_coeff());
    MultiPoly quotient(p.dim);
    for (const auto& [k, c] : rotated.terms) {
        if (k[0] == 0) {
            if (std::fabs(c) > tol)
                throw error("reflection_quotient: nonzero division remainder " + fmt17(c));
            continue;
        }
        MultiIndex kk(k);
        kk[0] -= 1;
        quotient.add_term(kk, c);
    }
    quotient = quotient * (1.0 / norm(alpha));
    return quotient.compose_linear(frame).trimmed();
}

/// T_j p, exact: degree drops by one on homogeneous input.
inline MultiPoly dunkl_apply_poly(const RootSystem& rs, int j, const MultiPoly& p) {
    MultiPoly out = p.derivative(j);
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double kappa = rs.multiplicity[i];
        const Vec& alpha = rs.positive_roots[i];
        if (kappa == 0.0 || alpha[j] == 0.0) continue;
        out = out + reflection_quotient(p, alpha) * (kappa * alpha[j]);
    }
    return out.trimmed();
}

inline std::vector<MultiPoly> dunkl_gradient_poly(const RootSystem& rs, const MultiPoly& p) {
    std::vector<MultiPoly> g;
    for (int j = 0; j < rs.dim; ++j) g.push_back(dunkl_apply_poly(rs, j, p));
    return g;
}

inline MultiPoly dunkl_laplacian_poly(const RootSystem& rs, const MultiPoly& p) {
    MultiPoly out(p.dim);
    for (int j = 0; j < rs.dim; ++j)
        out = out + dunkl_apply_poly(rs, j, dunkl_apply_poly(rs, j, p));
    return out.trimmed();
}

// ---------------------------------------------------------------------------
// Numeric path.

namespace calc_detail {

inline double eps_switch(const Vec& x) { return 1e-6 * (1.0 + norm(x)); }

inline Vec step(const Vec& x, int j, double h) {
    Vec y(x);
    y[j] += h;
    return y;
}

inline Vec step_dir(const Vec& x, const Vec& d, double h) {
    Vec y(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += h * d[i];
    return y;
}

inline Vec classical_gradient(const SmoothFn& f, const Vec& x, double h) {
    if (f.has_grad()) return f.grad(x);
    Vec g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        g[j] = (f(step(x, static_cast<int>(j), h)) - f(step(x, static_cast<int>(j), -h))) /
               (2.0 * h);
    return g;
}

}  // namespace calc_detail

/// T_j f(x) by central differences; near a hyperplane the reflection quotient
/// is replaced by its removable limit <grad f, alpha>.
inline double dunkl_apply_numeric(const RootSystem& rs, int j, const SmoothFn& f,
                                  const Vec& x, double h = 1e-4) {
    double val = (f(calc_detail::step(x, j, h)) - f(calc_detail::step(x, j, -h))) / (2.0 * h);
    const double eps = calc_detail::eps_switch(x);
    const double fx = f(x);
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double kappa = rs.multiplicity[i];
        const Vec& alpha = rs.positive_roots[i];
        if (kappa == 0.0 || alpha[j] == 0.0) continue;
        const double v = dot(x, alpha);
        double quot;
        if (std::fabs(v) >= eps) {
            quot = (fx - f(reflect(x, alpha))) / v;
        } else if (f.has_grad()) {
            quot = dot(f.grad(x), alpha);
        } else {
            quot = (f(calc_detail::step_dir(x, alpha, h)) -
                    f(calc_detail::step_dir(x, alpha, -h))) /
                   (2.0 * h);
        }
        val += kappa * alpha[j] * quot;
    }
    return val;
}

/// All components of nabla_kappa f(x); shares the reflection evaluations.
inline Vec dunkl_gradient_numeric(const RootSystem& rs, const SmoothFn& f, const Vec& x,
                                  double h = 1e-4) {
    const int n = rs.dim;
    Vec g(n, 0.0);
    if (f.has_grad()) {
        g = f.grad(x);
    } else {
        for (int j = 0; j < n; ++j)
            g[j] = (f(calc_detail::step(x, j, h)) - f(calc_detail::step(x, j, -h))) /
                   (2.0 * h);
    }
    const double eps = calc_detail::eps_switch(x);
    const double fx = f(x);
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double kappa = rs.multiplicity[i];
        if (kappa == 0.0) continue;
        const Vec& alpha = rs.positive_roots[i];
        const double v = dot(x, alpha);
        double quot;
        if (std::fabs(v) >= eps) {
            quot = (fx - f(reflect(x, alpha))) / v;
        } else if (f.has_grad()) {
            quot = dot(f.grad(x), alpha);
        } else {
            quot = (f(calc_detail::step_dir(x, alpha, h)) -
                    f(calc_detail::step_dir(x, alpha, -h))) /
                   (2.0 * h);
        }
        for (int j = 0; j < n; ++j) g[j] += kappa * alpha[j] * quot;
    }
    return g;
}

inline double dunkl_gradient_norm_numeric(const RootSystem& rs, const SmoothFn& f,
                                          const Vec& x, double h = 1e-4) {
    return norm(dunkl_gradient_numeric(rs, f, x, h));
}

/// Delta_kappa f(x) through the explicit C^2 formula: classical Laplacian
/// plus 2 sum kappa [ <grad f,alpha>/<alpha,x> - (f - f o sigma)/<alpha,x>^2 ].
/// Near a hyperplane the bracket tends to (1/2) d^2/ds^2 f(x + s alpha).
inline double dunkl_laplacian_numeric(const RootSystem& rs, const SmoothFn& f, const Vec& x,
                                      double h = 1e-4) {
    const int n = rs.dim;
    const double fx = f(x);
    double lap = 0.0;
    for (int j = 0; j < n; ++j) {
        lap += (f(calc_detail::step(x, j, h)) - 2.0 * fx + f(calc_detail::step(x, j, -h))) /
               (h * h);
    }
    const double eps = calc_detail::eps_switch(x);
    Vec grad;
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double kappa = rs.multiplicity[i];
        if (kappa == 0.0) continue;
        const Vec& alpha = rs.positive_roots[i];
        const double v = dot(x, alpha);
        if (std::fabs(v) >= eps) {
            if (grad.empty()) grad = calc_detail::classical_gradient(f, x, h);
            const double bracket =
                dot(grad, alpha) / v - (fx - f(reflect(x, alpha))) / (v * v);
            lap += 2.0 * kappa * bracket;
        } else {
            const double dd = (f(calc_detail::step_dir(x, alpha, h)) - 2.0 * fx +
                               f(calc_detail::step_dir(x, alpha, -h))) /
                              (h * h);
            lap += kappa * dd;
        }
    }
    return lap;
}

/// Gamma_kappa(f,g)(x) = <grad f, grad g> +
///   sum kappa (f - f o sigma)(g - g o sigma)/<alpha,x>^2.
inline double carre_du_champ(const RootSystem& rs, const SmoothFn& f, const SmoothFn& g,
                             const Vec& x, double h = 1e-4) {
    const Vec gf = calc_detail::classical_gradient(f, x, h);
    const Vec gg = calc_detail::classical_gradient(g, x, h);
    double out = dot(gf, gg);
    const double eps = calc_detail::eps_switch(x);
    const double fx = f(x), gx = g(x);
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double kappa = rs.multiplicity[i];
        if (kappa == 0.0) continue;
        const Vec& alpha = rs.positive_roots[i];
        const double v = dot(x, alpha);
        double qf, qg;
        if (std::fabs(v) >= eps) {
            const Vec sx = reflect(x, alpha);
            qf = (fx - f(sx)) / v;
            qg = (gx - g(sx)) / v;
        } else {
            qf = dot(gf, alpha);
            qg = dot(gg, alpha);
        }
        out += kappa * qf * qg;
    }
    return out;
}

/// | int (T_j f) g dmu + int f (T_j g) dmu | per coordinate; both supports
/// must be declared compact. Expected below quadrature tolerance.
inline Vec skew_symmetry_residuals(const Integrator& ig, const SmoothFn& f,
                                   const SmoothFn& g, double h = 1e-4) {
    if (!f.support || !g.support)
        throw error("skew_symmetry_residuals: compact supports required");
    const RootSystem& rs = ig.root_system();
    RegionSpec region;
    for (const Vec& c : orbit_points(ig.group(), f.support->center))
        region.region.push_back(Ball{c, f.support->radius});
    for (const Vec& c : orbit_points(ig.group(), g.support->center))
        region.region.push_back(Ball{c, g.support->radius});
    region.aux.push_back(*f.support);
    region.aux.push_back(*g.support);
    Vec res(rs.dim, 0.0);
    for (int j = 0; j < rs.dim; ++j) {
        const double a = ig.integrate_checked(
                              [&](const Vec& x) {
                                  return dunkl_apply_numeric(rs, j, f, x, h) * g(x);
                              },
                              region)
                             .value;
        const double b = ig.integrate_checked(
                              [&](const Vec& x) {
                                  return f(x) * dunkl_apply_numeric(rs, j, g, x, h);
                              },
                              region)
                             .value;
        res[j] = std::fabs(a + b);
    }
    return res;
}

}  // namespace dunkl
