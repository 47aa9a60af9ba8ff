#pragma once

// Computable ratio functionals for the relative Nash, weak Nash, Sobolev and
// pseudo-Poincare inequalities, plus the sweep machinery that records
// empirical constants and scale/center invariance deltas.
//
// Every ratio is LHS / RHS-without-constant, so an inequality with constant C
// holds on a sample exactly when the ratio is <= C. The paper's constants are
// existential: a sweep reports the maximum ratio over a finite deterministic
// family, never a supremum claim.

#include <cstdint>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dunkl/heat.hpp"

namespace dunkl {

// ---------------------------------------------------------------------------
// Test function families.

enum class TestFamilyKind { PowerBump, GaussianCutoff, PolyTimesBump, RandomMix };

inline TestFamilyKind parse_family_kind(const std::string& s) {
    if (s == "power_bump") return TestFamilyKind::PowerBump;
    if (s == "gaussian_cutoff") return TestFamilyKind::GaussianCutoff;
    if (s == "poly_times_bump") return TestFamilyKind::PolyTimesBump;
    if (s == "random_mix") return TestFamilyKind::RandomMix;
    throw config_error("unknown test family kind '" + s + "'");
}

struct TestFamilySpec {
    TestFamilyKind kind = TestFamilyKind::PolyTimesBump;
    double beta = 2.0;  // power-bump exponent, >= 2
    int degree = 2;     // polynomial degree
    int mix_size = 2;   // terms in random_mix
    int count = 2;      // functions per ball
    std::uint64_t seed = 1;
};

/// A test function with analytic gradient, declared support, kink geometry
/// for the quadrature, and (when available) a separable decomposition
/// f(x) = sum_m c_m prod_i u_{m,i}(x_i) used by the heat path.
struct TestFn {
    SmoothFn fn;
    std::vector<HyperplaneCut> kink_cuts;  // axis-aligned support faces

    struct Factor {
        std::function<double(double)> eval;
        double lo = 0.0, hi = 0.0;  // support interval
    };
    struct Term {
        double coeff = 1.0;
        std::vector<Factor> factors;
    };
    std::vector<Term> terms;  // empty when no separable form is available

    bool separable() const { return !terms.empty(); }
    double operator()(const Vec& x) const { return fn(x); }
};

namespace ineq_detail {

// 1-D factor (v - a)^e * (1 - ((v-a)/rho)^2)_+^beta and its derivative.
struct BumpFactor {
    double a, rho, beta;
    int e;
    double value(double v) const {
        const double u = (v - a) / rho;
        const double m = 1.0 - u * u;
        if (m <= 0.0) return 0.0;
        return std::pow(v - a, e) * std::pow(m, beta);
    }
    double deriv(double v) const {
        const double u = (v - a) / rho;
        const double m = 1.0 - u * u;
        if (m <= 0.0) return 0.0;
        const double d = v - a;
        const double pe = (e == 0) ? 0.0 : e * std::pow(d, e - 1) * std::pow(m, beta);
        const double pm = std::pow(d, e) * beta * std::pow(m, beta - 1.0) *
                          (-2.0 * u / rho);
        return pe + pm;
    }
};

// Assemble a product-form test function from per-axis factors, one term per
// monomial of the polynomial part.
inline TestFn product_fn(const Vec& a, double rho, double beta,
                         const std::vector<std::pair<MultiIndex, double>>& monomials,
                         const std::string& id) {
    const int n = static_cast<int>(a.size());
    TestFn out;
    std::vector<std::vector<BumpFactor>> factors;  // [term][axis]
    for (const auto& [mi, c] : monomials) {
        (void)c;
        std::vector<BumpFactor> row;
        for (int i = 0; i < n; ++i) row.push_back(BumpFactor{a[i], rho, beta, mi[i]});
        factors.push_back(std::move(row));
    }
    std::vector<double> coeffs;
    for (const auto& [mi, c] : monomials) {
        (void)mi;
        coeffs.push_back(c);
    }
    out.fn.id = id;
    out.fn.support = Ball{a, rho * std::sqrt(static_cast<double>(n)) + 1e-12};
    out.fn.smoothness = Smoothness::C2;
    out.fn.eval = [factors, coeffs, n](const Vec& x) {
        double s = 0.0;
        for (std::size_t m = 0; m < factors.size(); ++m) {
            double t = coeffs[m];
            for (int i = 0; i < n && t != 0.0; ++i) t *= factors[m][i].value(x[i]);
            s += t;
        }
        return s;
    };
    out.fn.grad = [factors, coeffs, n](const Vec& x) {
        Vec g(n, 0.0);
        for (std::size_t m = 0; m < factors.size(); ++m) {
            std::vector<double> vals(n);
            for (int i = 0; i < n; ++i) vals[i] = factors[m][i].value(x[i]);
            for (int j = 0; j < n; ++j) {
                double t = coeffs[m] * factors[m][j].deriv(x[j]);
                for (int i = 0; i < n && t != 0.0; ++i)
                    if (i != j) t *= vals[i];
                g[j] += t;
            }
        }
        return g;
    };
    for (int i = 0; i < n; ++i)
        for (double s : {-1.0, 1.0}) {
            HyperplaneCut c;
            c.normal = Vec(n, 0.0);
            c.normal[i] = 1.0;
            c.offset = -(a[i] + s * rho);
            out.kink_cuts.push_back(std::move(c));
        }
    for (std::size_t m = 0; m < factors.size(); ++m) {
        TestFn::Term term;
        term.coeff = coeffs[m];
        for (int i = 0; i < n; ++i) {
            BumpFactor bf = factors[m][i];
            term.factors.push_back(TestFn::Factor{
                [bf](double v) { return bf.value(v); }, a[i] - rho, a[i] + rho});
        }
        out.terms.push_back(std::move(term));
    }
    return out;
}

}  // namespace ineq_detail

/// Deterministic family of test functions supported in `ball`. The same spec
/// and seed reproduce the same family on every ball (parameters are drawn
/// once; geometry follows the ball).
inline std::vector<TestFn> make_test_family(int dim, const TestFamilySpec& spec,
                                            const Ball& ball) {
    if (spec.count < 1) throw error("make_test_family: empty family");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vec& a = ball.center;
    const double r = ball.radius;
    const double rho = r / std::sqrt(static_cast<double>(dim));
    std::vector<TestFn> fam;

    auto add_power_bump = [&](double beta, int idx) {
        TestFn f;
        std::ostringstream id;
        id << "power_bump[beta=" << beta << ",i=" << idx << "]";
        f.fn.id = id.str();
        f.fn.support = Ball{a, r};
        f.fn.smoothness = Smoothness::C1;
        f.fn.eval = [a, r, beta](const Vec& x) {
            const double m = 1.0 - dist(x, a) / r;
            return m <= 0.0 ? 0.0 : std::pow(m, beta);
        };
        f.fn.grad = [a, r, beta](const Vec& x) {
            Vec g(x.size(), 0.0);
            const double d = dist(x, a);
            const double m = 1.0 - d / r;
            if (m <= 0.0 || d < 1e-14) return g;
            const double c = -beta * std::pow(m, beta - 1.0) / (r * d);
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = c * (x[i] - a[i]);
            return g;
        };
        if (dim == 1) {
            TestFn::Term term;
            term.coeff = 1.0;
            const Vec aa = a;
            term.factors.push_back(TestFn::Factor{
                [aa, r, beta](double v) {
                    const double m = 1.0 - std::fabs(v - aa[0]) / r;
                    return m <= 0.0 ? 0.0 : std::pow(m, beta);
                },
                a[0] - r, a[0] + r});
            f.terms.push_back(std::move(term));
        }
        fam.push_back(std::move(f));
    };

    auto add_gaussian_cutoff = [&](double sigma_frac, int idx) {
        // product of per-axis gaussians times C^2 cutoffs, supported in the box
        std::vector<std::pair<MultiIndex, double>> mono{{MultiIndex(dim, 0), 1.0}};
        TestFn f = ineq_detail::product_fn(a, rho, 3.0, mono, "");
        const double s2 = (sigma_frac * r) * (sigma_frac * r);
        auto base_eval = f.fn.eval;
        auto base_grad = f.fn.grad;
        const Vec aa = a;
        f.fn.eval = [base_eval, aa, s2](const Vec& x) {
            double q = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - aa[i]) * (x[i] - aa[i]);
            return std::exp(-q / (2.0 * s2)) * base_eval(x);
        };
        f.fn.grad = [base_eval, base_grad, aa, s2](const Vec& x) {
            double q = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - aa[i]) * (x[i] - aa[i]);
            const double e = std::exp(-q / (2.0 * s2));
            Vec g = base_grad(x);
            const double b = base_eval(x);
            for (std::size_t i = 0; i < x.size(); ++i)
                g[i] = e * (g[i] - (x[i] - aa[i]) / s2 * b);
            return g;
        };
        // separable: per-axis gaussian times the cutoff factor
        f.terms.clear();
        TestFn::Term term;
        term.coeff = 1.0;
        for (int i = 0; i < dim; ++i) {
            const double ai = a[i];
            term.factors.push_back(TestFn::Factor{
                [ai, s2, rho](double v) {
                    const double d = v - ai;
                    const double uu = d / rho;
                    const double m = 1.0 - uu * uu;
                    if (m <= 0.0) return 0.0;
                    return std::exp(-d * d / (2.0 * s2)) * m * m * m;
                },
                a[i] - rho, a[i] + rho});
        }
        f.terms.push_back(std::move(term));
        std::ostringstream id;
        id << "gaussian_cutoff[sigma=" << sigma_frac << "r,i=" << idx << "]";
        f.fn.id = id.str();
        fam.push_back(std::move(f));
    };

    auto add_poly_bump = [&](int degree, int idx) {
        std::vector<std::pair<MultiIndex, double>> mono;
        std::function<void(MultiIndex&, int, int)> fill = [&](MultiIndex& k, int pos,
                                                              int left) {
            if (pos == dim) {
                // coefficients in ball-normalized coordinates keep the family
                // profile identical across balls
                double c = u(rng);
                int total = 0;
                for (int e : k) total += e;
                mono.emplace_back(k, c / std::pow(rho, total));
                return;
            }
            for (int e = 0; e <= left; ++e) {
                k[pos] = e;
                fill(k, pos + 1, left - e);
            }
        };
        MultiIndex k(dim, 0);
        fill(k, 0, degree);
        // anchor strict positivity on the support: |x_i - a_i| <= rho, so the
        // monomial part is bounded by sum |c_k| rho^{deg}
        double bound = 0.0;
        for (std::size_t m = 1; m < mono.size(); ++m) {
            int total = 0;
            for (int e : mono[m].first) total += e;
            bound += std::fabs(mono[m].second) * std::pow(rho, total);
        }
        mono[0].second = 0.5 + bound;
        std::ostringstream id;
        id << "poly_times_bump[deg=" << degree << ",i=" << idx << "]";
        TestFn f = ineq_detail::product_fn(a, rho, spec.beta, mono, id.str());
        fam.push_back(std::move(f));
    };

    auto add_random_mix = [&](int idx) {
        // mix of product bumps on shifted sub-boxes inside the ball
        std::vector<TestFn> parts;
        for (int m = 0; m < spec.mix_size; ++m) {
            Vec shift(dim);
            for (double& v : shift) v = 0.25 * r * u(rng);
            Vec am = add(a, shift);
            const double rm = (r - norm(shift)) / std::sqrt(static_cast<double>(dim)) * 0.9;
            std::vector<std::pair<MultiIndex, double>> mono{{MultiIndex(dim, 0),
                                                             0.5 + std::fabs(u(rng))}};
            if (spec.degree > 0) {
                MultiIndex k1(dim, 0);
                k1[m % dim] = std::min(spec.degree, 2);
                mono.emplace_back(k1, u(rng) / std::pow(rm, k1[m % dim]));
            }
            parts.push_back(ineq_detail::product_fn(am, rm, spec.beta, mono, ""));
        }
        TestFn f;
        std::ostringstream id;
        id << "random_mix[m=" << spec.mix_size << ",i=" << idx << "]";
        f.fn.id = id.str();
        f.fn.support = Ball{a, r};
        f.fn.smoothness = Smoothness::C2;
        std::vector<SmoothFn> evals;
        for (const TestFn& p : parts) evals.push_back(p.fn);
        f.fn.eval = [evals](const Vec& x) {
            double s = 0.0;
            for (const SmoothFn& e : evals) s += e(x);
            return s;
        };
        f.fn.grad = [evals](const Vec& x) {
            Vec g(x.size(), 0.0);
            for (const SmoothFn& e : evals) {
                Vec gi = e.grad(x);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += gi[i];
            }
            return g;
        };
        for (const TestFn& p : parts) {
            for (const auto& c : p.kink_cuts) f.kink_cuts.push_back(c);
            for (const auto& t : p.terms) f.terms.push_back(t);
        }
        fam.push_back(std::move(f));
    };

    for (int i = 0; i < spec.count; ++i) {
        switch (spec.kind) {
            case TestFamilyKind::PowerBump: add_power_bump(spec.beta + i, i); break;
            case TestFamilyKind::GaussianCutoff:
                add_gaussian_cutoff(1.0 / (3.0 + i), i);
                break;
            case TestFamilyKind::PolyTimesBump:
                add_poly_bump(std::max(0, spec.degree - (i % 2)), i);
                break;
            case TestFamilyKind::RandomMix: add_random_mix(i); break;
        }
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Ratio functionals.

struct RatioResult {
    double lhs = 0.0;
    double rhs0 = 0.0;   // right side without the constant
    double ratio = 0.0;
    bool flagged = false;
    std::string flag_reason;
};

namespace ineq_detail {

/// A test function viewed through a dilation x -> x/scale (support scales),
/// composition with a group element, a scalar multiple, and optionally the
/// G-symmetrization sum_g f(g^{-1} x) over distinct support images.
struct FnView {
    const TestFn* base;
    double scale = 1.0;         // f_lambda(x) = f(x/lambda)
    double amplitude = 1.0;     // c * f
    const Mat* gmap = nullptr;  // view of f o g^{-1} (g orthogonal)
    std::vector<Mat> sym;       // symmetrization representatives (empty: none)

    Vec pullback(const Vec& x) const {
        Vec v = gmap ? gmap->transpose().apply(x) : x;
        if (scale != 1.0)
            for (double& c : v) c /= scale;
        return v;
    }
    double eval(const Vec& x) const {
        const Vec v = pullback(x);
        if (sym.empty()) return amplitude * base->fn(v);
        double s = 0.0;
        for (const Mat& m : sym) s += base->fn(m.transpose().apply(v));
        return amplitude * s;
    }
    Vec grad(const Vec& x) const {
        const Vec v = pullback(x);
        Vec g(v.size(), 0.0);
        if (sym.empty()) {
            g = base->fn.grad(v);
        } else {
            for (const Mat& m : sym) {
                Vec gi = m.apply(base->fn.grad(m.transpose().apply(v)));
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += gi[i];
            }
        }
        for (double& c : g) c *= amplitude / scale;
        if (gmap) g = gmap->apply(g);
        return g;
    }
};

struct Geometry {
    Ball ball;                 // the (scaled, mapped) ball B
    RegionSpec ball_region;    // B with the function's kink geometry
    RegionSpec orbit_region;   // orbit of B (gradient integrals live here)
};

inline Geometry make_geometry(const Integrator& ig, const TestFn& f, const Ball& ball,
                              double scale, const Mat* gmap) {
    Geometry geo;
    Vec center = scaled(ball.center, scale);
    if (gmap) center = gmap->apply(center);
    geo.ball = Ball{center, ball.radius * scale};

    auto map_cut = [&](HyperplaneCut c, const Mat* extra) {
        // cut positions scale with the dilation; group maps rotate the normal
        c.offset *= scale;
        if (gmap) c.normal = gmap->apply(c.normal);
        if (extra) c.normal = extra->apply(c.normal);
        return c;
    };
    RegionSpec reg;
    reg.region.push_back(geo.ball);
    if (f.fn.support) {
        Ball s{scaled(f.fn.support->center, scale), f.fn.support->radius * scale};
        if (gmap) s.center = gmap->apply(s.center);
        reg.aux.push_back(s);
    }
    for (const auto& c : f.kink_cuts) reg.kink_cuts.push_back(map_cut(c, nullptr));
    geo.ball_region = reg;

    // the Dunkl gradient of f lives on the whole orbit of supp f, and its
    // kink geometry is carried along by every group element
    RegionSpec orb;
    for (const Vec& c : orbit_points(ig.group(), geo.ball.center))
        orb.region.push_back(Ball{c, geo.ball.radius});
    if (!reg.aux.empty()) {
        const Ball& s = reg.aux.front();
        for (const Vec& c : orbit_points(ig.group(), s.center))
            orb.aux.push_back(Ball{c, s.radius});
    }
    for (const auto& c : f.kink_cuts) {
        for (const Mat& m : ig.group().elements) {
            HyperplaneCut mapped = map_cut(c, &m);
            bool seen = false;
            for (const auto& have : orb.kink_cuts) {
                double d = std::fabs(mapped.offset - have.offset);
                for (std::size_t i = 0; i < mapped.normal.size(); ++i)
                    d += std::fabs(mapped.normal[i] - have.normal[i]);
                double dneg = std::fabs(mapped.offset + have.offset);
                for (std::size_t i = 0; i < mapped.normal.size(); ++i)
                    dneg += std::fabs(mapped.normal[i] + have.normal[i]);
                if (d < 1e-12 || dneg < 1e-12) {
                    seen = true;
                    break;
                }
            }
            if (!seen) orb.kink_cuts.push_back(std::move(mapped));
        }
    }
    geo.orbit_region = orb;
    return geo;
}

}  // namespace ineq_detail

/// Relative Nash ratio: LHS = (int_B |f|^p)^{1 + p'/(N+2g)}; RHS-without-C =
/// [r^p / V^{p/(N+2g)}] [int (|grad_k f|^p + |f|^p/r^p)] ||f||_1^{p p'/(N+2g)}.
inline RatioResult nash_ratio(const Integrator& ig, const ineq_detail::FnView& f,
                              const ineq_detail::Geometry& geo, double p,
                              const QuadratureScheme& sch) {
    if (!(p > 1.0)) throw error("nash_ratio: requires p > 1");
    RatioResult out;
    const double hom = ig.root_system().homogeneous_dimension();
    const double pp = p / (p - 1.0);
    const double r = geo.ball.radius;
    auto ip = ig.integrate_checked(
        [&](const Vec& x) { return std::pow(std::fabs(f.eval(x)), p); }, geo.ball_region,
        sch);
    auto l1 = ig.integrate_checked([&](const Vec& x) { return std::fabs(f.eval(x)); },
                                   geo.ball_region, sch);
    auto gp = ig.integrate_checked(
        [&](const Vec& x) { return std::pow(norm(f.grad(x)), p); }, geo.orbit_region, sch);
    const double v = ig.volume(geo.ball.center, r);
    if (ip.value <= 0.0) {
        out.flagged = true;
        out.flag_reason = "zero function";
        return out;
    }
    out.lhs = std::pow(ip.value, 1.0 + pp / hom);
    out.rhs0 = std::pow(r, p) / std::pow(v, p / hom) *
               (gp.value + ip.value / std::pow(r, p)) * std::pow(l1.value, p * pp / hom);
    out.ratio = out.lhs / out.rhs0;
    out.flagged = !(ip.converged && l1.converged && gp.converged);
    if (out.flagged) out.flag_reason = "quadrature estimate above tolerance";
    return out;
}

/// Weak Nash ratio at a level: lambda^{1+1/(N+2g)} mu{|f| >= lambda} over
/// [r / V^{1/(N+2g)}] [int (|grad f| + |f|/r)] ||f||_1^{1/(N+2g)}.
inline RatioResult weak_nash_ratio(const Integrator& ig, const ineq_detail::FnView& f,
                                   const ineq_detail::Geometry& geo, double level,
                                   const QuadratureScheme& sch) {
    if (!(level > 0.0)) throw error("weak_nash_ratio: level must be positive");
    RatioResult out;
    const double hom = ig.root_system().homogeneous_dimension();
    const double r = geo.ball.radius;
    const double mu = ig.level_set_measure([&](const Vec& x) { return f.eval(x); }, level,
                                           geo.ball_region, sch);
    auto l1 = ig.integrate_checked([&](const Vec& x) { return std::fabs(f.eval(x)); },
                                   geo.ball_region, sch);
    auto g1 = ig.integrate_checked(
        [&](const Vec& x) { return norm(f.grad(x)) + std::fabs(f.eval(x)) / r; },
        geo.orbit_region, sch);
    const double v = ig.volume(geo.ball.center, r);
    if (l1.value <= 0.0) {
        out.flagged = true;
        out.flag_reason = "zero function";
        return out;
    }
    out.lhs = std::pow(level, 1.0 + 1.0 / hom) * std::max(mu, 0.0);
    out.rhs0 = r / std::pow(v, 1.0 / hom) * g1.value * std::pow(l1.value, 1.0 / hom);
    out.ratio = out.lhs / out.rhs0;
    out.flagged = !(l1.converged && g1.converged);
    if (out.flagged) out.flag_reason = "quadrature estimate above tolerance";
    return out;
}

/// Relative Sobolev ratio; with `orbit` the integrals run over B_r^G(a)
/// (Theorem 4 form), still normalized by V_kappa(a,r).
inline RatioResult sobolev_ratio(const Integrator& ig, const ineq_detail::FnView& f,
                                 const ineq_detail::Geometry& geo, bool orbit,
                                 const QuadratureScheme& sch) {
    RatioResult out;
    const double hom = ig.root_system().homogeneous_dimension();
    if (hom <= 2.0)
        throw error("sobolev_ratio: needs N+2gamma > 2 (exponent undefined)");
    const double qstar = 2.0 * hom / (hom - 2.0);
    const double r = geo.ball.radius;
    const RegionSpec& lhs_region = orbit ? geo.orbit_region : geo.ball_region;
    auto iq = ig.integrate_checked(
        [&](const Vec& x) { return std::pow(std::fabs(f.eval(x)), qstar); }, lhs_region,
        sch);
    auto den = ig.integrate_checked(
        [&](const Vec& x) {
            const double fv = f.eval(x);
            const double gn = norm(f.grad(x));
            return gn * gn + fv * fv / (r * r);
        },
        geo.orbit_region, sch);
    const double v = ig.volume(geo.ball.center, r);
    if (iq.value <= 0.0) {
        out.flagged = true;
        out.flag_reason = "zero function";
        return out;
    }
    out.lhs = std::pow(iq.value, (hom - 2.0) / hom);
    out.rhs0 = r * r / std::pow(v, 2.0 / hom) * den.value;
    out.ratio = out.lhs / out.rhs0;
    out.flagged = !(iq.converged && den.converged);
    if (out.flagged) out.flag_reason = "quadrature estimate above tolerance";
    return out;
}

// ---------------------------------------------------------------------------
// Pseudo-Poincare: needs the heat semigroup.

/// Shared per-sweep heat state: kernels and separable transforms per t.
class HeatContext {
  public:
    explicit HeatContext(const Integrator& ig) : ig_(&ig) {}

    const Integrator& integrator() const { return *ig_; }

    const HeatKernelZ2& kernel(double t) const {
        std::lock_guard<std::mutex> lock(mtx_);
        auto it = kernels_.find(t);
        if (it == kernels_.end()) {
            it = kernels_
                     .emplace(t, std::make_shared<HeatKernelZ2>(ig_->root_system(), t,
                                                                ig_->scheme()))
                     .first;
        }
        return *it->second;
    }

    /// T_t f on the span [lo_i, hi_i] per axis, for separable f. Transforms
    /// are cached per (function id, t, span).
    std::function<double(const Vec&)> flow(const TestFn& f, double t, const Vec& lo,
                                           const Vec& hi) const {
        if (!f.separable())
            throw error("heat flow: test function has no separable form; "
                        "use a product-form family for the Poincare sweep");
        std::ostringstream key;
        key << f.fn.id << "|" << fmt17(t);
        for (std::size_t i = 0; i < lo.size(); ++i)
            key << "|" << fmt17(lo[i]) << "," << fmt17(hi[i]);
        {
            std::lock_guard<std::mutex> lock(mtx_);
            auto it = flows_.find(key.str());
            if (it != flows_.end()) return it->second;
        }
        const HeatKernelZ2& hk = kernel(t);
        const int n = ig_->root_system().dim;
        auto transforms = std::make_shared<std::vector<std::vector<AxisHeatTransform>>>();
        for (std::size_t m = 0; m < f.terms.size(); ++m) {
            std::vector<AxisHeatTransform> per_axis;
            for (int i = 0; i < n; ++i) {
                const TestFn::Factor& fac = f.terms[m].factors[i];
                per_axis.emplace_back(hk, i, fac.eval, fac.lo, fac.hi, lo[i], hi[i]);
            }
            transforms->push_back(std::move(per_axis));
        }
        std::vector<double> coeffs;
        for (const auto& term : f.terms) coeffs.push_back(term.coeff);
        std::function<double(const Vec&)> fn = [transforms, coeffs, n](const Vec& x) {
            double s = 0.0;
            for (std::size_t m = 0; m < transforms->size(); ++m) {
                double t0 = coeffs[m];
                for (int i = 0; i < n && t0 != 0.0; ++i) t0 *= (*transforms)[m][i](x[i]);
                s += t0;
            }
            return s;
        };
        std::lock_guard<std::mutex> lock(mtx_);
        auto [it, ok] = flows_.emplace(key.str(), std::move(fn));
        (void)ok;
        return it->second;
    }

  private:
    const Integrator* ig_;
    mutable std::mutex mtx_;
    mutable std::map<double, std::shared_ptr<HeatKernelZ2>> kernels_;
    mutable std::map<std::string, std::function<double(const Vec&)>> flows_;
};

/// ||f - T_t f||_p / (sqrt(t) ||grad_kappa f||_p). The numerator integrates
/// over the orbit of an enlarged ball (the semigroup spreads mass to all
/// reflected images); the tail outside is exponentially negligible.
inline RatioResult pseudo_poincare_ratio(const HeatContext& hc,
                                         const ineq_detail::FnView& f,
                                         const ineq_detail::Geometry& geo, double t,
                                         double p, QuadratureScheme sch) {
    if (!(p >= 1.0)) throw error("pseudo_poincare_ratio: requires p >= 1");
    if (!(t > 0.0)) throw error("pseudo_poincare_ratio: requires t > 0");
    const Integrator& ig = hc.integrator();
    RatioResult out;

    const double span = 12.0 * std::sqrt(t);
    RegionSpec num_region;
    for (const Vec& c : orbit_points(ig.group(), geo.ball.center))
        num_region.region.push_back(Ball{c, geo.ball.radius + span});
    num_region.aux = geo.orbit_region.aux;  // support images are kinks of f
    num_region.kink_cuts = geo.orbit_region.kink_cuts;

    const int n = ig.root_system().dim;
    Vec lo(n, 0.0), hi(n, 0.0);
    for (int i = 0; i < n; ++i) {
        lo[i] = 1e300;
        hi[i] = -1e300;
        for (const Ball& b : num_region.region) {
            lo[i] = std::min(lo[i], b.center[i] - b.radius);
            hi[i] = std::max(hi[i], b.center[i] + b.radius);
        }
    }

    // T_t acting on the base function at pulled-back points: the kernel is
    // G-covariant and scales parabolically, so the view's dilation and group
    // map move onto t and the evaluation point.
    const double ts = t / (f.scale * f.scale);
    auto base_flow = hc.flow(*f.base, ts, scaled(lo, 1.0 / f.scale),
                             scaled(hi, 1.0 / f.scale));
    // N.B. component-wise scaling of [lo,hi] assumes scale > 0
    auto ttf = [&](const Vec& x) { return f.amplitude * base_flow(f.pullback(x)); };

    sch.panel_max = std::min(sch.panel_max, std::sqrt(t));
    auto num = ig.integrate_checked(
        [&](const Vec& x) { return std::pow(std::fabs(f.eval(x) - ttf(x)), p); },
        num_region, sch);
    auto den = ig.integrate_checked(
        [&](const Vec& x) { return std::pow(norm(f.grad(x)), p); }, geo.orbit_region, sch);
    if (den.value <= 0.0) {
        out.flagged = true;
        out.flag_reason = "zero gradient (constant input)";
        return out;
    }
    out.lhs = std::pow(num.value, 1.0 / p);
    out.rhs0 = std::sqrt(t) * std::pow(den.value, 1.0 / p);
    out.ratio = out.lhs / out.rhs0;
    out.flagged = !(num.converged && den.converged);
    if (out.flagged) out.flag_reason = "quadrature estimate above tolerance";
    return out;
}

// ---------------------------------------------------------------------------
// Sweep.

enum class InequalityId { Nash, WeakNash, Sobolev, Poincare };

inline std::string inequality_name(InequalityId id) {
    switch (id) {
        case InequalityId::Nash: return "nash";
        case InequalityId::WeakNash: return "weaknash";
        case InequalityId::Sobolev: return "sobolev";
        case InequalityId::Poincare: return "poincare";
    }
    return "?";
}

inline InequalityId parse_inequality(const std::string& s) {
    if (s == "nash") return InequalityId::Nash;
    if (s == "weaknash") return InequalityId::WeakNash;
    if (s == "sobolev") return InequalityId::Sobolev;
    if (s == "poincare") return InequalityId::Poincare;
    throw config_error("unknown inequality '" + s + "'");
}

struct SweepConfig {
    std::vector<double> radii{0.25, 0.5, 1.0, 2.0, 4.0};
    double rel_tol = 1e-5;  // certification tolerance for the p-power integrands
    std::vector<Vec> centers;
    std::vector<double> scales{0.5, 2.0};
    std::vector<double> ps{1.5, 2.0, 3.0};        // nash / poincare
    std::vector<double> ts{0.01, 0.1, 1.0};       // poincare
    std::vector<double> level_fracs{0.25, 0.5};   // weak nash, fractions of sup|f|
    TestFamilySpec family;
    bool orbit_variant = true;  // sobolev: add orbit-ball rows
};

struct SweepRow {
    std::string fn_id;
    std::string variant;  // "euclid", "orbit", "scale=..", "center=g<i>", "amp=2"
    Vec center;
    double r = 0.0;
    double param1 = 0.0;  // p (nash/poincare) or level fraction (weaknash)
    double param2 = 0.0;  // t (poincare)
    double lhs = 0.0, rhs0 = 0.0, ratio = 0.0;
    bool flagged = false;
    std::string flag_reason;
};

struct InequalityReport {
    std::string inequality;
    std::vector<SweepRow> rows;
    double empirical_constant = 0.0;
    double scale_delta = 0.0;
    double center_delta = 0.0;
    double homogeneity_delta = 0.0;
    bool all_finite = true;

    void finalize() {
        empirical_constant = 0.0;
        all_finite = true;
        for (const SweepRow& row : rows) {
            if (row.flagged) continue;
            if (!std::isfinite(row.ratio)) {
                all_finite = false;
                continue;
            }
            if (row.variant == "euclid" || row.variant == "orbit")
                empirical_constant = std::max(empirical_constant, row.ratio);
        }
    }
};

namespace ineq_detail {

struct ParamCombo {
    double p1 = 0.0, p2 = 0.0;
};

inline std::vector<ParamCombo> param_grid(InequalityId id, const SweepConfig& cfg) {
    std::vector<ParamCombo> out;
    switch (id) {
        case InequalityId::Nash:
            for (double p : cfg.ps) out.push_back({p, 0.0});
            break;
        case InequalityId::WeakNash:
            for (double l : cfg.level_fracs) out.push_back({l, 0.0});
            break;
        case InequalityId::Sobolev: out.push_back({0.0, 0.0}); break;
        case InequalityId::Poincare:
            for (double p : cfg.ps)
                for (double t : cfg.ts) out.push_back({p, t});
            break;
    }
    return out;
}

}  // namespace ineq_detail

/// Evaluate the chosen ratio over (balls x test functions x parameters),
/// then re-evaluate a representative slice under dilations, G-images of the
/// centers, and f -> 2f. Flagged rows are recorded and skipped in the
/// aggregates; the sweep never throws on a row.
inline InequalityReport sweep(const Integrator& ig, InequalityId id,
                              const SweepConfig& cfg) {
    InequalityReport rep;
    rep.inequality = inequality_name(id);
    HeatContext hc(ig);
    QuadratureScheme row_sch = ig.scheme();
    row_sch.rel_tol = std::max(row_sch.rel_tol, cfg.rel_tol);
    const int dim = ig.root_system().dim;
    std::vector<Vec> centers = cfg.centers;
    if (centers.empty()) centers.push_back(Vec(dim, 0.0));

    const auto combos = ineq_detail::param_grid(id, cfg);

    struct Task {
        Ball ball;
        int fn_index;
        ineq_detail::ParamCombo combo;
        double scale = 1.0;
        double amplitude = 1.0;
        const Mat* gmap = nullptr;
        std::string variant = "euclid";
        bool orbit = false;
    };

    // base grid
    std::vector<Task> tasks;
    const double mid_r = cfg.radii[cfg.radii.size() / 2];
    for (const Vec& c : centers)
        for (double r : cfg.radii) {
            const Ball ball{c, r};
            const auto fam = make_test_family(dim, cfg.family, ball);
            for (std::size_t fi = 0; fi < fam.size(); ++fi)
                for (const auto& combo : combos) {
                    tasks.push_back({ball, static_cast<int>(fi), combo});
                    if (id == InequalityId::Sobolev && cfg.orbit_variant) {
                        Task t{ball, static_cast<int>(fi), combo};
                        t.orbit = true;
                        t.variant = "orbit";
                        tasks.push_back(std::move(t));
                    }
                }
        }
    // invariance slices at the middle radius
    std::vector<Mat> nontrivial;
    for (int e = 1; e < ig.group().order(); ++e)
        nontrivial.push_back(ig.group().elements[e]);
    for (const Vec& c : centers) {
        const Ball ball{c, mid_r};
        const auto fam = make_test_family(dim, cfg.family, ball);
        for (std::size_t fi = 0; fi < fam.size(); ++fi)
            for (const auto& combo : combos) {
                for (double s : cfg.scales) {
                    Task t{ball, static_cast<int>(fi), combo};
                    t.scale = s;
                    t.variant = "scale=" + fmt17(s);
                    tasks.push_back(std::move(t));
                }
                {
                    Task t{ball, static_cast<int>(fi), combo};
                    t.amplitude = 2.0;
                    t.variant = "amp=2";
                    tasks.push_back(std::move(t));
                }
                for (std::size_t e = 0; e < nontrivial.size(); ++e) {
                    Task t{ball, static_cast<int>(fi), combo};
                    t.gmap = &nontrivial[e];
                    t.variant = "center=g" + std::to_string(e + 1);
                    tasks.push_back(std::move(t));
                }
            }
    }

    rep.rows.resize(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
        const Task& task = tasks[i];
        const auto fam = make_test_family(dim, cfg.family, task.ball);
        const TestFn& base = fam[task.fn_index];
        ineq_detail::FnView view{&base, task.scale, task.amplitude, task.gmap, {}};
        if (task.orbit && base.fn.support) {
            // Theorem-4 rows exercise genuinely orbit-supported functions:
            // symmetrize over representatives mapping the support to its
            // distinct images
            std::vector<Vec> seen;
            for (const Mat& m : ig.group().elements) {
                Vec img = m.apply(base.fn.support->center);
                bool dup = false;
                for (const Vec& p : seen)
                    if (dist(p, img) < 1e-10) dup = true;
                if (!dup) {
                    seen.push_back(img);
                    view.sym.push_back(m);
                }
            }
        }
        ineq_detail::Geometry geo =
            ineq_detail::make_geometry(ig, base, task.ball, task.scale, task.gmap);
        SweepRow row;
        row.fn_id = base.fn.id;
        row.variant = task.variant;
        row.center = geo.ball.center;
        row.r = geo.ball.radius;
        row.param1 = task.combo.p1;
        row.param2 = task.combo.p2;
        RatioResult res;
        try {
            switch (id) {
                case InequalityId::Nash:
                    res = nash_ratio(ig, view, geo, task.combo.p1, row_sch);
                    break;
                case InequalityId::WeakNash: {
                    // level as a fraction of sup|f| (center value of the bump)
                    const double sup = std::fabs(view.eval(geo.ball.center));
                    const double level = task.combo.p1 * std::max(sup, 1e-12);
                    res = weak_nash_ratio(ig, view, geo, level, row_sch);
                    break;
                }
                case InequalityId::Sobolev:
                    res = sobolev_ratio(ig, view, geo, task.orbit, row_sch);
                    break;
                case InequalityId::Poincare: {
                    const double t = task.combo.p2 * task.scale * task.scale;
                    res = pseudo_poincare_ratio(hc, view, geo, t, task.combo.p1, row_sch);
                    break;
                }
            }
        } catch (const error& e) {
            res.flagged = true;
            res.flag_reason = e.what();
        }
        row.lhs = res.lhs;
        row.rhs0 = res.rhs0;
        row.ratio = res.ratio;
        row.flagged = res.flagged;
        row.flag_reason = res.flag_reason;
        rep.rows[i] = std::move(row);
    });

    // aggregates: pair invariance rows with their base rows
    auto find_base = [&](const SweepRow& row) -> const SweepRow* {
        for (const SweepRow& b : rep.rows) {
            if (b.variant != "euclid") continue;
            if (b.fn_id != row.fn_id || b.param1 != row.param1 || b.param2 != row.param2)
                continue;
            if (std::fabs(b.r - mid_r) > 1e-12) continue;
            // base center: the task center list entry whose scaled/mapped image
            // matches this row is recovered by comparing orbit distance
            if (orbit_distance(ig.group(), scaled(b.center, row.r / b.r), row.center) >
                1e-9 * (1.0 + norm(row.center)))
                continue;
            return &b;
        }
        return nullptr;
    };
    rep.scale_delta = rep.center_delta = rep.homogeneity_delta = 0.0;
    for (const SweepRow& row : rep.rows) {
        if (row.flagged) continue;
        const bool is_scale = row.variant.rfind("scale=", 0) == 0;
        const bool is_center = row.variant.rfind("center=", 0) == 0;
        const bool is_amp = row.variant == "amp=2";
        if (!is_scale && !is_center && !is_amp) continue;
        const SweepRow* base = find_base(row);
        if (!base || base->flagged || base->ratio == 0.0) continue;
        const double delta = std::fabs(row.ratio / base->ratio - 1.0);
        if (is_scale) rep.scale_delta = std::max(rep.scale_delta, delta);
        if (is_center) rep.center_delta = std::max(rep.center_delta, delta);
        if (is_amp) rep.homogeneity_delta = std::max(rep.homogeneity_delta, delta);
    }
    rep.finalize();
    return rep;
}

}  // namespace dunkl
