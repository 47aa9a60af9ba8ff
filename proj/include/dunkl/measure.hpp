#pragma once

// Integration against d mu_kappa = omega_kappa dx on balls and orbit balls:
// volumes, L^p norms, level-set measures, and the volume-estimate report
// rows (growth bands, doubling).

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "dunkl/quadrature.hpp"
#include "dunkl/root_system.hpp"

namespace dunkl {

/// omega_kappa(x) = prod over R+ of |<alpha,x>|^{2 kappa_alpha}.
inline double weight_omega(const RootSystem& rs, const Vec& x) {
    double w = 1.0;
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double k = rs.multiplicity[i];
        if (k == 0.0) continue;
        w *= std::pow(std::fabs(dot(rs.positive_roots[i], x)), 2.0 * k);
    }
    return w;
}

inline double weight_omega_omit(const RootSystem& rs, const Vec& x,
                                const std::vector<int>& omit) {
    double w = 1.0;
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        const double k = rs.multiplicity[i];
        if (k == 0.0) continue;
        bool skip = false;
        for (int o : omit)
            if (o == static_cast<int>(i)) skip = true;
        if (skip) continue;
        w *= std::pow(std::fabs(dot(rs.positive_roots[i], x)), 2.0 * k);
    }
    return w;
}

/// B_r^G(a): the union of the balls B_r(sigma a), sigma in G.
struct OrbitBall {
    Vec center;
    double radius = 0.0;
    const CoxeterGroup* group = nullptr;
};

inline RegionSpec region_of(const Ball& b) { return RegionSpec{{b}, {}}; }

inline RegionSpec region_of(const OrbitBall& ob) {
    RegionSpec spec;
    for (const Vec& c : orbit_points(*ob.group, ob.center))
        spec.region.push_back(Ball{c, ob.radius});
    return spec;
}

/// Quadrature rule with the measure weight folded in.
struct MeasureRule {
    std::vector<Vec> pts;
    std::vector<double> wmu;

    std::size_t size() const { return pts.size(); }

    struct Sums {
        double value;
        double abs_sum;
    };

    Sums apply(const std::function<double(const Vec&)>& f) const {
        double s = 0.0, c = 0.0, as = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double term = wmu[i] * f(pts[i]);
            as += std::fabs(term);
            const double y = term - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return {s, as};
    }
};

struct IntegrationResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
};

/// Shared immutable context: root system, group, cached rules and volumes.
/// All evaluation methods are const and thread-safe.
class Integrator {
  public:
    Integrator(const RootSystem& rs, const CoxeterGroup& g, QuadratureScheme scheme = {})
        : rs_(&rs), group_(&g), scheme_(scheme) {
        for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
            HyperplaneCut c;
            c.normal = rs.positive_roots[i];
            c.offset = 0.0;
            c.root_index = static_cast<int>(i);
            c.exponent = 2.0 * rs.multiplicity[i];
            if (c.exponent > 0.0) cuts_.push_back(std::move(c));
        }
    }

    const RootSystem& root_system() const { return *rs_; }
    const CoxeterGroup& group() const { return *group_; }
    const QuadratureScheme& scheme() const { return scheme_; }

    std::shared_ptr<const MeasureRule> rule(const RegionSpec& region,
                                            const QuadratureScheme& sch) const {
        const std::string key = region_key(region, sch);
        {
            std::lock_guard<std::mutex> lock(mtx_);
            auto it = rule_cache_.find(key);
            if (it != rule_cache_.end()) return it->second;
        }
        Rule geo = build_rule(rs_->dim, region, cuts_, sch);
        auto mr = std::make_shared<MeasureRule>();
        mr->pts = std::move(geo.pts);
        mr->wmu.resize(mr->pts.size());
        for (std::size_t i = 0; i < mr->pts.size(); ++i)
            mr->wmu[i] = geo.w[i] * weight_omega_omit(*rs_, mr->pts[i], geo.omit[i]);
        std::lock_guard<std::mutex> lock(mtx_);
        auto [it, inserted] = rule_cache_.emplace(key, std::move(mr));
        (void)inserted;
        return it->second;
    }

    /// Rule for the image g(region): same weights, mapped nodes. Legitimate
    /// because omega is G-invariant; used so center-invariance sweeps compare
    /// structurally identical quadratures.
    std::shared_ptr<const MeasureRule> mapped_rule(const RegionSpec& region,
                                                   const QuadratureScheme& sch,
                                                   const Mat& g) const {
        auto base = rule(region, sch);
        auto mr = std::make_shared<MeasureRule>();
        mr->wmu = base->wmu;
        mr->pts.reserve(base->pts.size());
        for (const Vec& p : base->pts) mr->pts.push_back(g.apply(p));
        return mr;
    }

    IntegrationResult integrate_checked(const std::function<double(const Vec&)>& f,
                                        const RegionSpec& region) const {
        return integrate_checked(f, region, scheme_);
    }

    IntegrationResult integrate_checked(const std::function<double(const Vec&)>& f,
                                        const RegionSpec& region,
                                        const QuadratureScheme& sch) const {
        auto coarse = rule(region, sch);
        QuadratureScheme fs = sch;
        fs.order += 4;
        fs.depth += 2;
        auto fine = rule(region, fs);
        const double vc = coarse->apply(f).value;
        const auto [vf, abs_sum] = fine->apply(f);
        const double diff = std::fabs(vf - vc);
        IntegrationResult r;
        r.value = vf;
        r.error_estimate = diff;
        r.converged = diff <= sch.rel_tol * std::fabs(vf) + 1e-12 * abs_sum;
        return r;
    }

    double integrate(const std::function<double(const Vec&)>& f,
                     const RegionSpec& region) const {
        IntegrationResult r = integrate_checked(f, region);
        if (!r.converged)
            throw quadrature_error("integrate: tolerance not reached (estimate " +
                                       fmt17(r.error_estimate) + ")",
                                   r.value, r.error_estimate);
        return r.value;
    }

    /// V_kappa(a,r) = mu_kappa(B_r(a)), cached.
    double volume(const Vec& a, double r) const {
        std::ostringstream key;
        key << "V";
        for (double c : a) key << ":" << fmt17(c);
        key << ":" << fmt17(r);
        {
            std::lock_guard<std::mutex> lock(mtx_);
            auto it = value_cache_.find(key.str());
            if (it != value_cache_.end()) return it->second;
        }
        const double v = integrate([](const Vec&) { return 1.0; }, region_of(Ball{a, r}));
        std::lock_guard<std::mutex> lock(mtx_);
        value_cache_.emplace(key.str(), v);
        return v;
    }

    /// mu_kappa(B_r^G(a)).
    double orbit_volume(const Vec& a, double r) const {
        std::ostringstream key;
        key << "OV";
        for (double c : a) key << ":" << fmt17(c);
        key << ":" << fmt17(r);
        {
            std::lock_guard<std::mutex> lock(mtx_);
            auto it = value_cache_.find(key.str());
            if (it != value_cache_.end()) return it->second;
        }
        const double v = integrate([](const Vec&) { return 1.0; },
                                   region_of(OrbitBall{a, r, group_}));
        std::lock_guard<std::mutex> lock(mtx_);
        value_cache_.emplace(key.str(), v);
        return v;
    }

    double lp_norm(const std::function<double(const Vec&)>& f, double p,
                   const RegionSpec& region) const {
        if (p < 1.0) throw error("lp_norm: requires p >= 1");
        const double ip = integrate(
            [&](const Vec& x) { return std::pow(std::fabs(f(x)), p); }, region);
        return std::pow(std::max(ip, 0.0), 1.0 / p);
    }

    /// mu_kappa{x in region : |f(x)| >= lambda} by a smoothed indicator with
    /// Richardson extrapolation of the smoothing width.
    double level_set_measure(const std::function<double(const Vec&)>& f, double lambda,
                             const RegionSpec& region) const {
        return level_set_measure(f, lambda, region, scheme_);
    }

    double level_set_measure(const std::function<double(const Vec&)>& f, double lambda,
                             const RegionSpec& region, const QuadratureScheme& sch) const {
        if (!(lambda > 0.0)) throw error("level_set_measure: lambda must be positive");
        auto smooth_step = [](double s) {
            if (s <= -1.0) return 0.0;
            if (s >= 1.0) return 1.0;
            // quintic smoothstep, symmetric about 0
            return 0.5 + (15.0 / 16.0) * (s - (2.0 / 3.0) * s * s * s +
                                          0.2 * s * s * s * s * s);
        };
        auto measure_h = [&](double h) {
            return integrate_checked(
                       [&](const Vec& x) { return smooth_step((std::fabs(f(x)) - lambda) / h); },
                       region, sch)
                .value;
        };
        const double h = 0.05 * lambda;
        const double mh = measure_h(h);
        const double mh2 = measure_h(0.5 * h);
        return (4.0 * mh2 - mh) / 3.0;
    }

  private:
    std::string region_key(const RegionSpec& region, const QuadratureScheme& sch) const {
        std::ostringstream os;
        os << sch.order << "|" << sch.depth << "|" << fmt17(sch.panel_max);
        for (const Ball& b : region.region) {
            os << "|B";
            for (double c : b.center) os << "," << fmt17(c);
            os << ";" << fmt17(b.radius);
        }
        for (const Ball& b : region.aux) {
            os << "|A";
            for (double c : b.center) os << "," << fmt17(c);
            os << ";" << fmt17(b.radius);
        }
        for (const HyperplaneCut& c : region.kink_cuts) {
            os << "|K";
            for (double v : c.normal) os << "," << fmt17(v);
            os << ";" << fmt17(c.offset);
        }
        return os.str();
    }

    const RootSystem* rs_;
    const CoxeterGroup* group_;
    QuadratureScheme scheme_;
    std::vector<HyperplaneCut> cuts_;
    mutable std::mutex mtx_;
    mutable std::map<std::string, std::shared_ptr<const MeasureRule>> rule_cache_;
    mutable std::map<std::string, double> value_cache_;
};

// ---------------------------------------------------------------------------
// Volume estimate report (growth bands and doubling).

struct VolumeBoundSample {
    Vec a;
    double r;
    double s;  // 0 < s <= r
    Vec y;     // a point of B_r(a) for the comparison row
};

struct BandRow {
    std::string quantity;
    Vec a;
    double r, s;
    double value;
    double band_lo, band_hi;
    bool pass;
};

/// For each sample, the volume-comparison ratios together with per-row bands
/// derived from the recorded constant C*. Violations are rows with
/// pass=false, never exceptions.
inline std::vector<BandRow> volume_bounds_report(const Integrator& ig,
                                                 const std::vector<VolumeBoundSample>& samples,
                                                 double c_star) {
    const RootSystem& rs = ig.root_system();
    const double dim = rs.dim;
    const double hom = rs.homogeneous_dimension();
    std::vector<BandRow> rows;
    auto push = [&](const std::string& q, const VolumeBoundSample& sm, double value,
                    double lo, double hi) {
        rows.push_back(BandRow{q, sm.a, sm.r, sm.s, value, lo, hi,
                               std::isfinite(value) && value >= lo && value <= hi});
    };
    for (const VolumeBoundSample& sm : samples) {
        const double vr = ig.volume(sm.a, sm.r);
        const double vs = ig.volume(sm.a, sm.s);
        const double v2r = ig.volume(sm.a, 2.0 * sm.r);
        const double vys = ig.volume(sm.y, sm.s);

        double comparison = std::pow(sm.r, dim);
        for (std::size_t i = 0; i < rs.positive_roots.size(); ++i)
            comparison *= std::pow(std::fabs(dot(rs.positive_roots[i], sm.a)) + sm.r,
                                   2.0 * rs.multiplicity[i]);
        push("growth_product", sm, vr / comparison, 1.0 / c_star, c_star);

        const double q = vr / vs;
        const double ratio_n = q * std::pow(sm.s / sm.r, dim);
        const double gap = std::pow(sm.r / sm.s, hom - dim);
        push("radius_ratio_lower", sm, ratio_n, 1.0 / c_star, c_star * gap);
        const double ratio_d = q * std::pow(sm.s / sm.r, hom);
        push("radius_ratio_upper", sm, ratio_d, 1.0 / (c_star * gap), c_star);

        const double cmp = vr * std::pow(sm.s, hom) / (vys * std::pow(sm.r, hom));
        push("center_comparison", sm, cmp, std::pow(sm.s / sm.r, hom) / c_star, c_star);

        push("doubling", sm, v2r / vr, 1.0, c_star * std::pow(2.0, hom));
    }
    return rows;
}

}  // namespace dunkl
