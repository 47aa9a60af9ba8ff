#pragma once

// Quadrature over balls and unions of balls against a weight with power-law
// cusps on known hyperplanes. Rules are built by iterated 1-D integration
// (outermost axis last): each axis is panelized with splits at hyperplane
// crossings and sliced-ball boundaries. A panel that touches a weight cusp
// |<alpha,x>|^{2 kappa} uses a one-sided Gauss-Jacobi rule that absorbs the
// cusp factor exactly (the factor is then omitted when the measure weight is
// evaluated at those nodes); a panel that touches a sliced-ball boundary uses
// the substitution v -> v* - h u^2, which removes the half-integer kink of
// the slice volume. Away from marked points, panels refine dyadically toward
// the mark so the smooth remainder is resolved at a uniform geometric rate.
//
// Node positions are affine in the ball/cut data, so scaling a region by a
// power of two scales every node exactly; sweeps rely on this covariance.

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "dunkl/common.hpp"

namespace dunkl {

struct Ball {
    Vec center;
    double radius = 0.0;
};

struct QuadratureScheme {
    int order = 12;    // Gauss nodes per panel
    int depth = 6;     // dyadic refinement levels toward marked points
    double rel_tol = 1e-7;
    double panel_max = std::numeric_limits<double>::infinity();  // resolution cap
};

/// Zero set <normal,x> + offset = 0 where the integrand has a known feature.
/// exponent > 0 marks a |.|^exponent weight cusp tied to positive root
/// `root_index`; exponent == 0 entries are ignored.
struct HyperplaneCut {
    Vec normal;
    double offset = 0.0;
    int root_index = -1;
    double exponent = 0.0;
};

struct RegionSpec {
    std::vector<Ball> region;  // integration domain: union of these balls
    std::vector<Ball> aux;     // integrand kink boundaries (e.g. bump supports)
    // integrand kink hyperplanes (e.g. product-bump support faces); exponent
    // is ignored, these produce substitution-smoothed panels only
    std::vector<HyperplaneCut> kink_cuts;
};

struct Rule {
    std::vector<Vec> pts;
    std::vector<double> w;                 // panel weights, cusp factors absorbed
    std::vector<std::vector<int>> omit;    // root factors absorbed per node
    std::size_t size() const { return pts.size(); }
};

namespace quad_detail {

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1,1] by Newton iteration.
inline const std::vector<std::pair<double, double>>& gauss_legendre(int q) {
    static std::map<int, std::vector<std::pair<double, double>>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;
    std::vector<std::pair<double, double>> nw(q);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (q + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        nw[i] = {x, wgt};
        nw[q - 1 - i] = {-x, wgt};
    }
    auto [pos, ok] = cache.emplace(q, std::move(nw));
    (void)ok;
    return pos->second;
}

// Symmetric tridiagonal eigensolver (implicit QL with shifts), tracking the
// first component of each eigenvector; enough for Golub-Welsch weights.
inline void tridiag_eigen(std::vector<double>& d, std::vector<double>& e,
                          std::vector<double>& first) {
    const int n = static_cast<int>(d.size());
    first.assign(n, 0.0);
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) z[i][i] = 1.0;
    e.push_back(0.0);
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 1e-300 + 1e-15 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) throw error("tridiag_eigen: too many iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z[k][i + 1];
                        z[k][i + 1] = s * z[k][i] + c * f;
                        z[k][i] = c * z[k][i] - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    // sort ascending, carry first components
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return d[a] < d[b]; });
    std::vector<double> ds(n);
    for (int i = 0; i < n; ++i) {
        ds[i] = d[idx[i]];
        first[i] = z[0][idx[i]];
    }
    d = ds;
}

// Gauss-Jacobi rule on [-1,1] for weight (1-t)^a (1+t)^b, a,b > -1.
inline const std::vector<std::pair<double, double>>& gauss_jacobi_pm1(int q, double a,
                                                                      double b) {
    static std::map<std::tuple<int, long long, long long>,
                    std::vector<std::pair<double, double>>>
        cache;
    static std::mutex mtx;
    const long long ak = static_cast<long long>(std::llround(a * (1LL << 32)));
    const long long bk = static_cast<long long>(std::llround(b * (1LL << 32)));
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({q, ak, bk});
    if (it != cache.end()) return it->second;

    std::vector<double> diag(q), off;
    for (int k = 0; k < q; ++k) {
        if (k == 0) {
            diag[k] = (b - a) / (a + b + 2.0);
        } else {
            const double s = 2.0 * k + a + b;
            diag[k] = (b * b - a * a) / (s * (s + 2.0));
        }
    }
    for (int k = 1; k < q; ++k) {
        const double s = 2.0 * k + a + b;
        const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
        const double den = s * s * (s + 1.0) * (s - 1.0);
        off.push_back(std::sqrt(num / den));
    }
    std::vector<double> first;
    tridiag_eigen(diag, off, first);
    const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                                std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
    std::vector<std::pair<double, double>> nw(q);
    for (int i = 0; i < q; ++i) nw[i] = {diag[i], mu0 * first[i] * first[i]};
    auto [pos, ok] = cache.emplace(std::make_tuple(q, ak, bk), std::move(nw));
    (void)ok;
    return pos->second;
}

// Gauss-Jacobi rule for int_0^1 x^beta g(x) dx = sum W_i g(X_i).
inline const std::vector<std::pair<double, double>>& gauss_jacobi01(int q, double beta) {
    static std::map<std::pair<int, long long>, std::vector<std::pair<double, double>>> cache;
    static std::mutex mtx;
    const long long bkey = static_cast<long long>(std::llround(beta * (1LL << 32)));
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({q, bkey});
    if (it != cache.end()) return it->second;

    // Monic Jacobi (alpha=0) recurrence on [-1,1] with weight (1+t)^beta,
    // mapped to [0,1].
    std::vector<double> a(q), b(q);
    for (int k = 0; k < q; ++k) {
        const double den = (2.0 * k + beta) * (2.0 * k + beta + 2.0);
        a[k] = (den == 0.0) ? 0.0 : beta * beta / den;
        if (k > 0) {
            const double t = 2.0 * k + beta;
            b[k] = 4.0 * k * k * (k + beta) * (k + beta) / (t * t * (t + 1.0) * (t - 1.0));
        }
    }
    std::vector<double> diag(q), off;
    for (int k = 0; k < q; ++k) diag[k] = (a[k] + 1.0) / 2.0;  // map t=2x-1
    for (int k = 1; k < q; ++k) off.push_back(std::sqrt(b[k] / 4.0));
    std::vector<double> first;
    tridiag_eigen(diag, off, first);
    const double mu0 = 1.0 / (beta + 1.0);  // int_0^1 x^beta dx
    std::vector<std::pair<double, double>> nw(q);
    for (int i = 0; i < q; ++i) nw[i] = {diag[i], mu0 * first[i] * first[i]};
    auto [pos, ok] = cache.emplace(std::make_pair(q, bkey), std::move(nw));
    (void)ok;
    return pos->second;
}

// ---------------------------------------------------------------------------
// Axis panelization.

enum class MarkKind { WeightCut, Kink };

struct Mark {
    double pos;
    MarkKind kind;
    std::vector<int> roots;  // positive-root indices absorbed at this mark
    double exponent = 0.0;   // sum of 2*kappa over those roots
    double coeff = 1.0;      // prod |n_axis|^{2 kappa}
};

struct Interval {
    double lo, hi;
};

inline std::vector<Interval> merge_intervals(std::vector<Interval> iv) {
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo;
    });
    std::vector<Interval> out;
    for (const Interval& s : iv) {
        if (!out.empty() && s.lo <= out.back().hi + 1e-300) {
            out.back().hi = std::max(out.back().hi, s.hi);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

struct AxisNode {
    double x;
    double w;
    std::vector<int> absorb;  // roots whose cusp factor is already in w
};

inline void emit_plain(double lo, double hi, int order, double panel_max,
                       std::vector<AxisNode>& out) {
    const double len = hi - lo;
    if (!(len > 0.0)) return;
    int parts = 1;
    if (std::isfinite(panel_max) && len > panel_max)
        parts = static_cast<int>(std::ceil(len / panel_max));
    const auto& gl = gauss_legendre(order);
    for (int p = 0; p < parts; ++p) {
        const double a = lo + len * p / parts;
        const double b = lo + len * (p + 1) / parts;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (const auto& [xi, wi] : gl) out.push_back({mid + half * xi, half * wi, {}});
    }
}

// Panel adjacent to a marked point at `at` (left end if at_low). Width h.
inline void emit_closing(double at, double h, bool at_low, const Mark& m, int order,
                         std::vector<AxisNode>& out) {
    if (!(h > 0.0)) return;
    if (m.kind == MarkKind::WeightCut) {
        const auto& gj = gauss_jacobi01(order, m.exponent);
        const double scale = m.coeff * std::pow(h, m.exponent + 1.0);
        for (const auto& [xi, wi] : gj) {
            const double v = at_low ? at + h * xi : at - h * xi;
            out.push_back({v, scale * wi, m.roots});
        }
    } else {
        // v = at +/- h u^2 smooths half-integer kinks of sliced volumes.
        const auto& gl = gauss_legendre(order);
        for (const auto& [t, wt] : gl) {
            const double u = 0.5 * (t + 1.0);
            const double wu = 0.5 * wt;
            const double v = at_low ? at + h * u * u : at - h * u * u;
            out.push_back({v, 2.0 * h * u * wu, {}});
        }
    }
}

// One side of a segment: marked endpoint at `at`, far endpoint `far`.
inline void emit_marked_side(double at, double far, const Mark& m,
                             const QuadratureScheme& sch, std::vector<AxisNode>& out) {
    const bool at_low = at < far;
    const double len = std::fabs(far - at);
    if (!(len > 0.0)) return;
    const int depth = std::max(0, sch.depth);
    const double h = len * std::ldexp(1.0, -depth);
    emit_closing(at, h, at_low, m, sch.order, out);
    for (int j = depth - 1; j >= 0; --j) {
        const double a = len * std::ldexp(1.0, -(j + 1));
        const double b = len * std::ldexp(1.0, -j);
        if (at_low)
            emit_plain(at + a, at + b, sch.order, sch.panel_max, out);
        else
            emit_plain(at - b, at - a, sch.order, sch.panel_max, out);
    }
}

/// Panelize merged intervals with marks; returns axis nodes in deterministic
/// order (not sorted by position; order follows the construction).
inline std::vector<AxisNode> build_axis_nodes(const std::vector<Interval>& merged,
                                              std::vector<Mark>& marks,
                                              const QuadratureScheme& sch) {
    std::sort(marks.begin(), marks.end(),
              [](const Mark& a, const Mark& b) { return a.pos < b.pos; });
    // merge coincident marks
    std::vector<Mark> ms;
    for (const Mark& m : marks) {
        if (!ms.empty() && std::fabs(m.pos - ms.back().pos) <
                               1e-13 * (1.0 + std::fabs(m.pos))) {
            Mark& t = ms.back();
            if (m.kind == MarkKind::WeightCut) {
                if (t.kind == MarkKind::WeightCut) {
                    t.exponent += m.exponent;
                    t.coeff *= m.coeff;
                    t.roots.insert(t.roots.end(), m.roots.begin(), m.roots.end());
                } else {
                    t = m;
                }
            }
            continue;
        }
        ms.push_back(m);
    }

    std::vector<AxisNode> out;
    for (const Interval& iv : merged) {
        const double tol_lo = 1e-13 * (1.0 + std::fabs(iv.lo));
        const double tol_hi = 1e-13 * (1.0 + std::fabs(iv.hi));
        // breakpoints strictly inside this interval
        std::vector<const Mark*> inside;
        for (const Mark& m : ms)
            if (m.pos > iv.lo + tol_lo && m.pos < iv.hi - tol_hi) inside.push_back(&m);
        const Mark* lo_mark = nullptr;
        const Mark* hi_mark = nullptr;
        for (const Mark& m : ms) {
            if (std::fabs(m.pos - iv.lo) <= tol_lo) lo_mark = &m;
            if (std::fabs(m.pos - iv.hi) <= tol_hi) hi_mark = &m;
        }
        std::vector<double> bps{iv.lo};
        std::vector<const Mark*> bp_marks{lo_mark};
        for (const Mark* m : inside) {
            bps.push_back(m->pos);
            bp_marks.push_back(m);
        }
        bps.push_back(iv.hi);
        bp_marks.push_back(hi_mark);

        for (std::size_t s = 0; s + 1 < bps.size(); ++s) {
            const double u = bps[s], v = bps[s + 1];
            const Mark* mu = bp_marks[s];
            const Mark* mv = bp_marks[s + 1];
            if (mu && mv) {
                const double mid = 0.5 * (u + v);
                emit_marked_side(u, mid, *mu, sch, out);
                emit_marked_side(v, mid, *mv, sch, out);
            } else if (mu) {
                emit_marked_side(u, v, *mu, sch, out);
            } else if (mv) {
                emit_marked_side(v, u, *mv, sch, out);
            } else {
                emit_plain(u, v, sch.order, sch.panel_max, out);
            }
        }
    }
    return out;
}

struct SlicedBall {
    Vec center;  // first d components meaningful
    double radius;
};

struct ReducedCut {
    Vec normal;  // first d components meaningful
    double offset;
    int root_index;
    double exponent;
};

inline void build_recursive(int d, const std::vector<SlicedBall>& region,
                            const std::vector<SlicedBall>& aux,
                            const std::vector<ReducedCut>& cuts,
                            const QuadratureScheme& sch, Vec& coords, double wacc,
                            std::vector<int>& omits, Rule& out) {
    const int axis = d - 1;
    // intervals of the region along this axis
    std::vector<Interval> iv;
    for (const SlicedBall& b : region)
        iv.push_back({b.center[axis] - b.radius, b.center[axis] + b.radius});
    std::vector<Interval> merged = merge_intervals(iv);
    if (merged.empty()) return;

    std::vector<Mark> marks;
    auto add_kink = [&](double pos) {
        marks.push_back(Mark{pos, MarkKind::Kink, {}, 0.0, 1.0});
    };

    // axis-concentrated cuts produce weight-cusp marks (or plain kink marks
    // for integrand-feature cuts, which carry exponent <= 0)
    const double ntol = 1e-12;
    for (const ReducedCut& c : cuts) {
        bool lower = false;
        for (int j = 0; j < axis; ++j)
            if (std::fabs(c.normal[j]) > ntol) lower = true;
        if (lower || std::fabs(c.normal[axis]) <= ntol) continue;
        const double pos = -c.offset / c.normal[axis];
        if (c.exponent > 0.0) {
            Mark m{pos, MarkKind::WeightCut, {c.root_index}, c.exponent,
                   std::pow(std::fabs(c.normal[axis]), c.exponent)};
            marks.push_back(std::move(m));
        } else {
            add_kink(pos);
        }
    }

    if (d == 1) {
        // innermost: integrand kinks at aux-ball section endpoints
        for (const SlicedBall& b : aux) {
            add_kink(b.center[0] - b.radius);
            add_kink(b.center[0] + b.radius);
        }
        std::vector<AxisNode> nodes = build_axis_nodes(merged, marks, sch);
        for (const AxisNode& n : nodes) {
            coords[0] = n.x;
            out.pts.push_back(coords);
            out.w.push_back(wacc * n.w);
            std::vector<int> om = omits;
            om.insert(om.end(), n.absorb.begin(), n.absorb.end());
            out.omit.push_back(std::move(om));
        }
        return;
    }

    // slice boundaries of every ball are kinks of the sliced volume
    for (const SlicedBall& b : region) {
        add_kink(b.center[axis] - b.radius);
        add_kink(b.center[axis] + b.radius);
    }
    for (const SlicedBall& b : aux) {
        add_kink(b.center[axis] - b.radius);
        add_kink(b.center[axis] + b.radius);
    }
    if (d == 2) {
        // union topology events: circle-circle intersections
        for (std::size_t i = 0; i < region.size(); ++i)
            for (std::size_t j = i + 1; j < region.size(); ++j) {
                const SlicedBall &A = region[i], &B = region[j];
                const double dx = B.center[0] - A.center[0];
                const double dy = B.center[1] - A.center[1];
                const double dd = std::sqrt(dx * dx + dy * dy);
                if (dd <= 1e-14 || dd >= A.radius + B.radius ||
                    dd <= std::fabs(A.radius - B.radius))
                    continue;
                const double a = (A.radius * A.radius - B.radius * B.radius + dd * dd) /
                                 (2.0 * dd);
                const double h2 = A.radius * A.radius - a * a;
                if (h2 <= 0.0) continue;
                const double h = std::sqrt(h2);
                const double px = A.center[0] + a * dx / dd;
                const double py = A.center[1] + a * dy / dd;
                add_kink(py + h * dx / dd);
                add_kink(py - h * dx / dd);
                (void)px;
            }
        // chord endpoints of oblique cuts against each circle
        auto chord_marks = [&](const SlicedBall& b) {
            for (const ReducedCut& c : cuts) {
                const double n0 = c.normal[0], n1 = c.normal[1];
                if (std::fabs(n0) <= ntol) continue;  // splits handled elsewhere
                const double nn = std::sqrt(n0 * n0 + n1 * n1);
                const double dsigned = (n0 * b.center[0] + n1 * b.center[1] + c.offset) / nn;
                if (std::fabs(dsigned) >= b.radius) continue;
                const double l = std::sqrt(b.radius * b.radius - dsigned * dsigned);
                // foot of perpendicular, then +/- l along the line direction
                const double fy = b.center[1] - dsigned * n1 / nn;
                add_kink(fy + l * n0 / nn);
                add_kink(fy - l * n0 / nn);
            }
        };
        for (const SlicedBall& b : region) chord_marks(b);
        for (const SlicedBall& b : aux) chord_marks(b);
    }

    std::vector<AxisNode> nodes = build_axis_nodes(merged, marks, sch);
    for (const AxisNode& n : nodes) {
        coords[axis] = n.x;
        std::vector<SlicedBall> sub_region, sub_aux;
        for (const SlicedBall& b : region) {
            const double dv = n.x - b.center[axis];
            const double r2 = b.radius * b.radius - dv * dv;
            if (r2 > 0.0) sub_region.push_back({b.center, std::sqrt(r2)});
        }
        if (sub_region.empty()) continue;
        for (const SlicedBall& b : aux) {
            const double dv = n.x - b.center[axis];
            const double r2 = b.radius * b.radius - dv * dv;
            if (r2 > 0.0) sub_aux.push_back({b.center, std::sqrt(r2)});
        }
        std::vector<ReducedCut> sub_cuts;
        for (const ReducedCut& c : cuts) {
            bool lower = false;
            for (int j = 0; j < axis; ++j)
                if (std::fabs(c.normal[j]) > ntol) lower = true;
            if (!lower) continue;  // constant or axis-resolved: no feature below
            ReducedCut rc = c;
            rc.offset += c.normal[axis] * n.x;
            rc.normal[axis] = 0.0;
            sub_cuts.push_back(std::move(rc));
        }
        std::vector<int> om = omits;
        om.insert(om.end(), n.absorb.begin(), n.absorb.end());
        build_recursive(d - 1, sub_region, sub_aux, sub_cuts, sch, coords, wacc * n.w, om,
                        out);
    }
}

}  // namespace quad_detail

/// Build a rule for the union of `spec.region` balls. Cut factors absorbed by
/// closing panels are listed per node in `omit`; the caller's weight function
/// must skip those root factors (their contribution is already in w).
inline Rule build_rule(int dim, const RegionSpec& spec,
                       const std::vector<HyperplaneCut>& cuts,
                       const QuadratureScheme& sch) {
    Rule rule;
    if (spec.region.empty()) return rule;
    std::vector<quad_detail::SlicedBall> region, aux;
    for (const Ball& b : spec.region) {
        if (!(b.radius > 0.0)) throw error("build_rule: ball radius must be positive");
        region.push_back({b.center, b.radius});
    }
    for (const Ball& b : spec.aux) aux.push_back({b.center, b.radius});
    std::vector<quad_detail::ReducedCut> rc;
    for (const HyperplaneCut& c : cuts) {
        if (c.exponent < 0.0) throw error("build_rule: negative cut exponent");
        rc.push_back({c.normal, c.offset, c.root_index, c.exponent});
    }
    for (const HyperplaneCut& c : spec.kink_cuts)
        rc.push_back({c.normal, c.offset, -1, 0.0});
    Vec coords(dim, 0.0);
    std::vector<int> omits;
    quad_detail::build_recursive(dim, region, aux, rc, sch, coords, 1.0, omits, rule);
    return rule;
}

}  // namespace dunkl
