#pragma once

// Reduced normalized root systems, their Coxeter groups, multiplicities,
// orbits and the orbit distance d(a,x) = min_{g in G} |x - g a|.
//
// Catalog families: Z2^N (sign changes), A_{N-1} (symmetric group acting on
// R^N), B_N, and the dihedral systems I2(m). All roots are rescaled to
// |alpha|^2 = 2, so sigma_alpha(x) = x - <x,alpha> alpha.

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dunkl/common.hpp"

namespace dunkl {

enum class Family { Z2N, A, B, I2 };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::Z2N: return "z2";
        case Family::A: return "a";
        case Family::B: return "b";
        case Family::I2: return "i2";
    }
    return "?";
}

struct RootSystem {
    int dim = 0;  // N
    Family family = Family::Z2N;
    int family_param = 0;  // N for z2/a/b, m for i2
    std::string id;
    std::vector<Vec> positive_roots;
    std::vector<double> multiplicity;  // kappa per positive root
    std::vector<int> orbit_of_root;    // catalog orbit index per positive root

    double gamma() const {
        double g = 0.0;
        for (double k : multiplicity) g += k;
        return g;
    }
    double homogeneous_dimension() const { return dim + 2.0 * gamma(); }
};

/// gamma = sum over R+ of kappa(alpha); N + 2 gamma is the homogeneous
/// dimension governing the scaling of mu_kappa.
struct Gamma {
    double gamma;
    double homogeneous_dimension;
};

inline Gamma gamma_of(const RootSystem& rs) {
    return Gamma{rs.gamma(), rs.homogeneous_dimension()};
}

struct CoxeterGroup {
    std::vector<Mat> elements;  // identity first, then discovery order
    int order() const { return static_cast<int>(elements.size()); }
};

inline Vec reflect(const Vec& x, const Vec& alpha) {
    const double n2 = norm2(alpha);
    if (!(n2 > 0.0)) throw error("reflect: zero root vector");
    const double c = 2.0 * dot(x, alpha) / n2;
    Vec y(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= c * alpha[i];
    return y;
}

struct GroupOptions {
    double dedup_tol = 1e-10;
    int max_order = 10000;
};

/// Closure of the generating reflections under composition. Throws if the
/// closure exceeds opt.max_order, which signals a non-finite or
/// ill-conditioned input rather than a catalog system.
inline CoxeterGroup generate_group(const RootSystem& rs, GroupOptions opt = {}) {
    CoxeterGroup g;
    g.elements.push_back(Mat::identity(rs.dim));
    auto find = [&](const Mat& m) -> int {
        for (std::size_t i = 0; i < g.elements.size(); ++i)
            if (g.elements[i].max_diff(m) < opt.dedup_tol) return static_cast<int>(i);
        return -1;
    };
    std::vector<Mat> generators;
    for (const Vec& a : rs.positive_roots) {
        Mat s = reflection_matrix(a);
        if (find(s) < 0) {
            g.elements.push_back(s);
            generators.push_back(s);
        } else {
            generators.push_back(s);
        }
    }
    // breadth-first closure
    std::size_t next = 0;
    while (next < g.elements.size()) {
        const Mat cur = g.elements[next++];
        for (const Mat& s : generators) {
            Mat prod = s.mul(cur);
            if (find(prod) < 0) {
                g.elements.push_back(prod);
                if (static_cast<int>(g.elements.size()) > opt.max_order)
                    throw error("generate_group: closure exceeds max order " +
                                std::to_string(opt.max_order));
            }
        }
    }
    return g;
}

inline double orbit_distance(const CoxeterGroup& g, const Vec& a, const Vec& x) {
    double best = dist(x, a);
    for (const Mat& m : g.elements) {
        best = std::min(best, dist(x, m.apply(a)));
    }
    return best;
}

/// Distinct images {g a : g in G}, deduplicated.
inline std::vector<Vec> orbit_points(const CoxeterGroup& g, const Vec& a, double tol = 1e-10) {
    std::vector<Vec> pts;
    for (const Mat& m : g.elements) {
        Vec p = m.apply(a);
        bool seen = false;
        for (const Vec& q : pts)
            if (dist(p, q) < tol) {
                seen = true;
                break;
            }
        if (!seen) pts.push_back(std::move(p));
    }
    return pts;
}

namespace detail {

inline Vec unit_axis(int n, int i, double scale) {
    Vec v(n, 0.0);
    v[i] = scale;
    return v;
}

// Lexicographic sign convention for the positive half R+.
inline void canonicalize_sign(Vec& a, double tol = 1e-12) {
    for (double c : a) {
        if (c > tol) return;
        if (c < -tol) {
            for (double& x : a) x = -x;
            return;
        }
    }
}

}  // namespace detail

inline RootSystem build_root_system(Family family, int n, const std::vector<double>& kappas) {
    for (double k : kappas)
        if (k < 0.0) throw error("build_root_system: negative multiplicity");
    RootSystem rs;
    rs.family = family;
    rs.family_param = n;
    const double sqrt2 = std::sqrt(2.0);
    switch (family) {
        case Family::Z2N: {
            if (n < 1) throw error("build_root_system: z2 requires N >= 1");
            if (static_cast<int>(kappas.size()) != n)
                throw error("build_root_system: z2:" + std::to_string(n) + " needs " +
                            std::to_string(n) + " multiplicities (one per coordinate orbit)");
            rs.dim = n;
            for (int i = 0; i < n; ++i) {
                rs.positive_roots.push_back(detail::unit_axis(n, i, sqrt2));
                rs.multiplicity.push_back(kappas[i]);
                rs.orbit_of_root.push_back(i);
            }
            break;
        }
        case Family::A: {
            if (n < 2) throw error("build_root_system: a requires N >= 2");
            if (kappas.size() != 1)
                throw error("build_root_system: A_{N-1} has one root orbit, needs 1 multiplicity");
            rs.dim = n;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    Vec a(n, 0.0);
                    a[i] = 1.0;
                    a[j] = -1.0;  // |e_i - e_j|^2 = 2 exactly
                    rs.positive_roots.push_back(std::move(a));
                    rs.multiplicity.push_back(kappas[0]);
                    rs.orbit_of_root.push_back(0);
                }
            break;
        }
        case Family::B: {
            if (n < 2) throw error("build_root_system: b requires N >= 2");
            if (kappas.size() != 2)
                throw error("build_root_system: B_N has two root orbits, needs 2 multiplicities "
                            "(axis, diagonal)");
            rs.dim = n;
            for (int i = 0; i < n; ++i) {
                rs.positive_roots.push_back(detail::unit_axis(n, i, sqrt2));
                rs.multiplicity.push_back(kappas[0]);
                rs.orbit_of_root.push_back(0);
            }
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    for (int s = 0; s < 2; ++s) {
                        Vec a(n, 0.0);
                        a[i] = 1.0;
                        a[j] = (s == 0) ? 1.0 : -1.0;
                        rs.positive_roots.push_back(std::move(a));
                        rs.multiplicity.push_back(kappas[1]);
                        rs.orbit_of_root.push_back(1);
                    }
            break;
        }
        case Family::I2: {
            const int m = n;
            if (m < 2) throw error("build_root_system: i2 requires m >= 2");
            const bool even = (m % 2 == 0);
            if (static_cast<std::size_t>(even ? 2 : 1) != kappas.size())
                throw error(std::string("build_root_system: I2(m) needs ") +
                            (even ? "2 multiplicities (even/odd orbit)" : "1 multiplicity"));
            rs.dim = 2;
            const double pi = 3.14159265358979323846;
            for (int k = 0; k < m; ++k) {
                const double phi = pi / 2.0 + k * pi / m;
                Vec a{sqrt2 * std::cos(phi), sqrt2 * std::sin(phi)};
                detail::canonicalize_sign(a);
                rs.positive_roots.push_back(std::move(a));
                rs.multiplicity.push_back(even ? kappas[k % 2] : kappas[0]);
                rs.orbit_of_root.push_back(even ? (k % 2) : 0);
            }
            break;
        }
    }
    std::ostringstream id;
    id << family_name(family) << ":" << n << ":";
    for (std::size_t i = 0; i < kappas.size(); ++i) id << (i ? "," : "") << fmt17(kappas[i]);
    rs.id = id.str();
    return rs;
}

/// Parse identifiers of the form family:param:k1[,k2,...], e.g. "z2:2:0.5,1",
/// "a:3:1", "b:2:1,0.5", "i2:5:0.7".
inline RootSystem parse_root_system(const std::string& id) {
    const auto c1 = id.find(':');
    const auto c2 = (c1 == std::string::npos) ? std::string::npos : id.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw config_error("root system id must be family:param:kappas, got '" + id + "'");
    const std::string fam = id.substr(0, c1);
    const std::string par = id.substr(c1 + 1, c2 - c1 - 1);
    const std::string kap = id.substr(c2 + 1);
    Family family;
    if (fam == "z2")
        family = Family::Z2N;
    else if (fam == "a")
        family = Family::A;
    else if (fam == "b")
        family = Family::B;
    else if (fam == "i2")
        family = Family::I2;
    else
        throw config_error("unknown root system family '" + fam + "'");
    int n = 0;
    try {
        std::size_t used = 0;
        n = std::stoi(par, &used);
        if (used != par.size()) throw std::invalid_argument(par);
    } catch (const std::exception&) {
        throw config_error("bad rank/order in root system id '" + id + "'");
    }
    std::vector<double> kappas;
    std::string tok;
    std::istringstream ks(kap);
    while (std::getline(ks, tok, ',')) {
        try {
            std::size_t used = 0;
            kappas.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw config_error("bad multiplicity '" + tok + "' in root system id '" + id + "'");
        }
    }
    if (kappas.empty()) throw config_error("no multiplicities in root system id '" + id + "'");
    try {
        return build_root_system(family, n, kappas);
    } catch (const error& e) {
        throw config_error(e.what());
    }
}

struct CheckResult {
    std::string name;
    bool pass;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

// Matches v against +/- some positive root; returns index or -1.
inline int match_root(const RootSystem& rs, const Vec& v, double tol = 1e-9) {
    for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
        if (dist(v, rs.positive_roots[i]) < tol) return static_cast<int>(i);
        if (dist(scaled(v, -1.0), rs.positive_roots[i]) < tol) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace detail

/// Checks the type invariants of a root system / group pair. Failures are
/// report entries, not exceptions.
inline ValidationReport validate(const RootSystem& rs, const CoxeterGroup& g) {
    ValidationReport rep;
    auto push = [&](const std::string& name, bool ok, const std::string& detail) {
        rep.checks.push_back({name, ok, detail});
    };

    {
        bool ok = true;
        std::string detail;
        for (std::size_t i = 0; ok && i < rs.positive_roots.size(); ++i)
            for (std::size_t j = i + 1; ok && j < rs.positive_roots.size(); ++j) {
                const double c = dot(rs.positive_roots[i], rs.positive_roots[j]);
                const double ni = norm(rs.positive_roots[i]), nj = norm(rs.positive_roots[j]);
                if (std::fabs(std::fabs(c) - ni * nj) < 1e-10 * ni * nj) {
                    ok = false;
                    detail = "roots " + std::to_string(i) + "," + std::to_string(j) +
                             " are parallel";
                }
            }
        push("reduced", ok, detail);
    }
    {
        bool ok = true;
        std::string detail;
        for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
            const double d = std::fabs(norm2(rs.positive_roots[i]) - 2.0);
            if (d > 1e-12) {
                ok = false;
                detail = "root " + std::to_string(i) + " has |alpha|^2 off by " + fmt17(d);
                break;
            }
        }
        push("normalized", ok, detail);
    }
    {
        bool ok = true;
        std::string detail;
        for (double k : rs.multiplicity)
            if (k < 0.0) {
                ok = false;
                detail = "negative multiplicity";
                break;
            }
        push("multiplicity_nonnegative", ok, detail);
    }
    {
        // R and kappa stable under every group element.
        bool r_ok = true, k_ok = true;
        std::string r_detail, k_detail;
        for (std::size_t e = 0; e < g.elements.size(); ++e) {
            for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
                const Vec img = g.elements[e].apply(rs.positive_roots[i]);
                const int j = detail::match_root(rs, img);
                if (j < 0) {
                    if (r_ok) {
                        r_ok = false;
                        r_detail = "element " + std::to_string(e) + " maps root " +
                                   std::to_string(i) + " outside R";
                    }
                    continue;
                }
                if (std::fabs(rs.multiplicity[i] - rs.multiplicity[j]) > 1e-12 && k_ok) {
                    k_ok = false;
                    k_detail = "kappa differs along orbit: roots " + std::to_string(i) + " -> " +
                               std::to_string(j);
                }
            }
        }
        push("root_set_G_stable", r_ok, r_detail);
        push("multiplicity_G_invariant", k_ok, k_detail);
    }
    {
        bool ok = true;
        std::string detail;
        for (std::size_t e = 0; e < g.elements.size(); ++e) {
            const Mat& m = g.elements[e];
            if (m.mul(m.transpose()).max_diff(Mat::identity(rs.dim)) > 1e-10) {
                ok = false;
                detail = "element " + std::to_string(e) + " not orthogonal";
                break;
            }
        }
        push("group_orthogonal", ok, detail);
    }
    {
        bool ok = true;
        std::string detail;
        for (std::size_t i = 0; i < rs.positive_roots.size(); ++i) {
            const Mat s = reflection_matrix(rs.positive_roots[i]);
            if (s.mul(s).max_diff(Mat::identity(rs.dim)) > 1e-12) {
                ok = false;
                detail = "sigma_alpha^2 != id for root " + std::to_string(i);
                break;
            }
        }
        push("generators_involutive", ok, detail);
    }
    return rep;
}

/// Known group orders for the catalog families (|G|).
inline long expected_group_order(const RootSystem& rs) {
    auto factorial = [](int k) {
        long f = 1;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    switch (rs.family) {
        case Family::Z2N: return 1L << rs.dim;
        case Family::A: return factorial(rs.family_param);
        case Family::B: return (1L << rs.dim) * factorial(rs.dim);
        case Family::I2: return 2L * rs.family_param;
    }
    return -1;
}

}  // namespace dunkl
