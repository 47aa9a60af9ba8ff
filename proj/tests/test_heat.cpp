#include <catch_amalgamated.hpp>

#include <random>

#include "dunkl/heat.hpp"
#include "oracles.hpp"

using namespace dunkl;
using Catch::Approx;

namespace {

MultiPoly random_poly1(int dim, int deg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MultiPoly p(dim);
    std::function<void(MultiIndex&, int, int)> fill = [&](MultiIndex& k, int pos, int left) {
        if (pos == dim) {
            p.add_term(k, u(rng));
            return;
        }
        for (int e = 0; e <= left; ++e) {
            k[pos] = e;
            fill(k, pos + 1, left - e);
        }
    };
    MultiIndex k(dim, 0);
    fill(k, 0, deg);
    return p;
}

}  // namespace

TEST_CASE("rank-one Dunkl kernel series") {
    SECTION("E(x,0) = 1 and the classical limit") {
        REQUIRE(dunkl_kernel_rank1(0.7, 1.3, 0.0) == Approx(1.0));
        REQUIRE(dunkl_kernel_rank1(2.0, 0.0, -0.4) == Approx(1.0));
        REQUIRE(dunkl_kernel_rank1(0.0, 1.0, 1.0) == Approx(std::exp(1.0)).epsilon(1e-14));
    }
    SECTION("kappa=1 series value from the gamma-product oracle") {
        // gamma sequence 3,2,5,4,7,6,...: sum 1/(g1...gn) directly
        double sum = 1.0, prod = 1.0;
        for (int n = 1; n < 60; ++n) {
            const double g = (n % 2 == 0) ? n : n + 2.0;
            prod *= g;
            sum += 1.0 / prod;
        }
        REQUIRE(dunkl_kernel_rank1(1.0, 1.0, 1.0) == Approx(sum).epsilon(1e-13));
    }
    SECTION("series and integral branches agree on the overlap") {
        for (double kappa : {0.3, 0.5, 1.0, 2.5}) {
            RankOneKernelParams par;
            par.kappa = kappa;
            for (double s : {-4.0, -2.0, 1.0, 20.0, 63.0}) {
                const double a = heat_detail::log_series(s, par);
                const double b = heat_detail::log_integral(s, kappa);
                INFO("kappa=" << kappa << " s=" << s);
                REQUIRE(a == Approx(b).margin(1e-10));
            }
        }
    }
    SECTION("eigen-relation T_x E = y E, numerically") {
        for (double kappa : {0.5, 1.0, 2.0}) {
            RootSystem rs = build_root_system(Family::Z2N, 1, {kappa});
            const double y = 1.4;
            SmoothFn f;
            f.eval = [&](const Vec& x) { return dunkl_kernel_rank1(kappa, x[0], y); };
            for (double x : {-1.1, 0.2, 0.9, 2.3}) {
                const double lhs = dunkl_apply_numeric(rs, 0, f, Vec{x}, 1e-5);
                const double rhs = y * dunkl_kernel_rank1(kappa, x, y);
                INFO("kappa=" << kappa << " x=" << x);
                REQUIRE(lhs == Approx(rhs).margin(1e-8 * (1.0 + std::fabs(rhs))));
            }
        }
    }
    SECTION("positivity across both branches") {
        for (double kappa : {0.3, 1.0, 2.0})
            for (double s : {-300.0, -40.0, -6.0, -1.0, 0.5, 40.0, 300.0}) {
                RankOneKernelParams par;
                par.kappa = kappa;
                REQUIRE(std::isfinite(log_dunkl_kernel_rank1(par, s)));
            }
    }
}

TEST_CASE("Z2^N heat kernel structure") {
    SECTION("kappa=0 equals the classical Gaussian kernel") {
        RootSystem rs = parse_root_system("z2:2:0,0");
        HeatKernelZ2 hk(rs, 0.37);
        std::mt19937_64 rng(67);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int k = 0; k < 20; ++k) {
            Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
            REQUIRE(hk.eval(x, y) ==
                    Approx(oracle::gauss_kernel(0.37, x, y)).epsilon(1e-8));
        }
    }
    SECTION("normalization matches the Gamma closed form") {
        // mass at x=0: int e^{-y^2/4t} 2^k |y|^{2k} dy = 2^{3k+1} t^{k+1/2} Gamma(k+1/2)
        for (double kappa : {0.5, 1.0, 2.0}) {
            for (double t : {0.01, 0.5}) {
                RootSystem rs = build_root_system(Family::Z2N, 1, {kappa});
                HeatKernelZ2 hk(rs, t);
                const double mass0 = std::exp((3.0 * kappa + 1.0) * std::log(2.0) +
                                              (kappa + 0.5) * std::log(t) +
                                              std::lgamma(kappa + 0.5));
                INFO("kappa=" << kappa << " t=" << t);
                REQUIRE(hk.factor(0, 0.0, 0.0) == Approx(1.0 / mass0).epsilon(1e-10));
            }
        }
    }
    SECTION("unit mass at centers away from the origin") {
        RootSystem rs = parse_root_system("z2:1:1");
        CoxeterGroup g = generate_group(rs);
        Integrator ig(rs, g);
        for (double t : {0.05, 0.5}) {
            HeatKernelZ2 hk(rs, t);
            QuadratureScheme sch = ig.scheme();
            sch.panel_max = std::sqrt(t);
            for (double x : {0.0, 0.7, 2.5}) {
                const double span = 14.0 * std::sqrt(t);
                RegionSpec reg{{Ball{Vec{x}, span}, Ball{Vec{-x}, span}}, {}};
                const double mass = ig.integrate_checked(
                                          [&](const Vec& y) { return hk.eval(Vec{x}, y); },
                                          reg, sch)
                                        .value;
                INFO("t=" << t << " x=" << x);
                REQUIRE(mass == Approx(1.0).margin(1e-4));
            }
        }
    }
    SECTION("symmetry and G-covariance") {
        RootSystem rs = parse_root_system("z2:2:0.5,1");
        CoxeterGroup g = generate_group(rs);
        HeatKernelZ2 hk(rs, 0.2);
        std::mt19937_64 rng(71);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int k = 0; k < 10; ++k) {
            Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
            REQUIRE(hk.eval(x, y) == Approx(hk.eval(y, x)).epsilon(1e-12));
            for (const Mat& m : g.elements)
                REQUIRE(hk.eval(m.apply(x), m.apply(y)) ==
                        Approx(hk.eval(x, y)).epsilon(1e-12));
            REQUIRE(hk.eval(x, y) > 0.0);
        }
    }
}

TEST_CASE("polynomial heat semigroup") {
    SECTION("worked values") {
        for (double kappa : {0.0, 0.5, 1.0}) {
            RootSystem rs = build_root_system(Family::Z2N, 1, {kappa});
            const MultiPoly x = MultiPoly::variable(1, 0);
            const double t = 0.3;
            MultiPoly ht = heat_apply_poly(rs, t, x * x);
            // x^2 + 2(1+2kappa) t
            REQUIRE(ht.eval(Vec{0.5}) ==
                    Approx(0.25 + 2.0 * (1.0 + 2.0 * kappa) * t).epsilon(1e-13));
            MultiPoly c = heat_apply_poly(rs, t, MultiPoly::constant(1, 3.25));
            REQUIRE(c.eval(Vec{1.9}) == Approx(3.25));
        }
    }
    SECTION("semigroup law exact on coefficients") {
        std::mt19937_64 rng(73);
        for (const char* id : {"z2:1:1", "z2:2:0.5,1", "b:2:1,0.5"}) {
            RootSystem rs = parse_root_system(id);
            for (double t : {0.1, 1.0})
                for (double s : {0.1, 1.0}) {
                    MultiPoly p = random_poly1(rs.dim, 8, rng);
                    MultiPoly a = heat_apply_poly(rs, t, heat_apply_poly(rs, s, p));
                    MultiPoly b = heat_apply_poly(rs, t + s, p);
                    INFO(id << " t=" << t << " s=" << s);
                    REQUIRE(a.max_coeff_diff(b) < 1e-10 * std::max(1.0, b.max_abs_coeff()));
                }
        }
    }
    SECTION("time derivative equals the Dunkl Laplacian") {
        RootSystem rs = parse_root_system("z2:1:0.75");
        std::mt19937_64 rng(79);
        MultiPoly p = random_poly1(1, 6, rng);
        const double t = 0.4, dt = 1e-5;
        MultiPoly up = heat_apply_poly(rs, t + dt, p);
        MultiPoly dn = heat_apply_poly(rs, t - dt, p);
        MultiPoly lap = dunkl_laplacian_poly(rs, heat_apply_poly(rs, t, p));
        const Vec at{0.8};
        REQUIRE((up.eval(at) - dn.eval(at)) / (2.0 * dt) ==
                Approx(lap.eval(at)).margin(1e-7));
    }
}

TEST_CASE("kernel convolution against the exact polynomial flow") {
    // f = p truncated far outside the heat range
    for (double kappa : {0.5, 1.0, 2.0}) {
        RootSystem rs = build_root_system(Family::Z2N, 1, {kappa});
        CoxeterGroup g = generate_group(rs);
        Integrator ig(rs, g);
        const MultiPoly x = MultiPoly::variable(1, 0);
        const MultiPoly p = x * x;
        for (double t : {0.01, 0.1, 1.0}) {
            HeatKernelZ2 hk(rs, t);
            SmoothFn f;
            f.support = Ball{Vec{0.0}, 12.0};
            f.eval = [&](const Vec& v) { return p.eval(v); };
            const MultiPoly exact = heat_apply_poly(rs, t, p);
            for (double at : {0.0, 0.5, 1.1}) {
                const auto got = heat_apply_numeric(ig, hk, f, Vec{at});
                INFO("kappa=" << kappa << " t=" << t << " x=" << at);
                REQUIRE(got.converged);
                REQUIRE(got.value ==
                        Approx(exact.eval(Vec{at})).epsilon(1e-4));
            }
        }
    }
    SECTION("worked number: kappa=1, t=0.01, x=0.5") {
        RootSystem rs = parse_root_system("z2:1:1");
        CoxeterGroup g = generate_group(rs);
        Integrator ig(rs, g);
        HeatKernelZ2 hk(rs, 0.01);
        SmoothFn f;
        f.support = Ball{Vec{0.0}, 12.0};
        f.eval = [](const Vec& v) { return v[0] * v[0]; };
        const auto got = heat_apply_numeric(ig, hk, f, Vec{0.5});
        REQUIRE(got.value == Approx(0.31).margin(1e-3));  // 0.25 + 2*3*0.01
    }
}

TEST_CASE("positivity, contraction, approximate identity") {
    RootSystem rs = parse_root_system("z2:1:1");
    CoxeterGroup g = generate_group(rs);
    Integrator ig(rs, g);
    SmoothFn f;
    f.support = Ball{Vec{0.4}, 0.6};
    f.eval = [](const Vec& v) {
        const double m = 1.0 - std::fabs(v[0] - 0.4) / 0.6;
        return m <= 0.0 ? 0.0 : m * m;
    };
    SECTION("nonnegative input, nonnegative output, sup bound") {
        HeatKernelZ2 hk(rs, 0.05);
        for (double at : {-1.0, 0.0, 0.4, 2.0}) {
            const double v = heat_apply_numeric(ig, hk, f, Vec{at}).value;
            REQUIRE(v >= -1e-12);
            REQUIRE(v <= 1.0 + 1e-8);  // L^inf contraction
        }
    }
    SECTION("t -> 0+ recovers f") {
        HeatKernelZ2 hk(rs, 1e-4);
        for (double at : {0.25, 0.55, 0.7}) {
            const double v = heat_apply_numeric(ig, hk, f, Vec{at}).value;
            REQUIRE(v == Approx(f(Vec{at})).margin(5e-3));
        }
        // at the Lipschitz kink of f the defect is O(sqrt t)
        const double vk = heat_apply_numeric(ig, hk, f, Vec{0.4}).value;
        REQUIRE(vk == Approx(f(Vec{0.4})).margin(0.06));
    }
}

TEST_CASE("separable axis transform") {
    RootSystem rs = parse_root_system("z2:2:0.5,1");
    HeatKernelZ2 hk(rs, 0.2);
    auto g0 = [](double y) {
        const double m = 1.0 - y * y;
        return m <= 0.0 ? 0.0 : m * m;
    };
    AxisHeatTransform tr(hk, 1, g0, -1.0, 1.0, -3.0, 3.0);
    SECTION("interpolant matches the direct quadrature") {
        for (double x : {-2.7, -0.4, 0.0, 1.3, 2.9})
            REQUIRE(tr(x) == Approx(tr.direct(x)).margin(1e-10));
    }
    SECTION("product structure equals the full 2-D convolution") {
        RootSystem rs1 = parse_root_system("z2:1:0.5");
        CoxeterGroup g1 = generate_group(rs1);
        Integrator ig1(rs1, g1);
        HeatKernelZ2 hk1(rs1, 0.2);
        // full kernel application of f(y) = g0(y0) g0(y1)
        RootSystem rs2 = parse_root_system("z2:2:0.5,1");
        CoxeterGroup g2 = generate_group(rs2);
        Integrator ig2(rs2, g2);
        SmoothFn f;
        f.support = Ball{Vec{0.0, 0.0}, 1.5};
        f.eval = [&](const Vec& v) { return g0(v[0]) * g0(v[1]); };
        AxisHeatTransform tr0(hk, 0, g0, -1.0, 1.0, -3.0, 3.0);
        const Vec at{0.45, -0.8};
        const double full = heat_apply_numeric(ig2, hk, f, at).value;
        REQUIRE(tr0(at[0]) * tr(at[1]) == Approx(full).margin(2e-6));
    }
}

TEST_CASE("bound reports") {
    RootSystem rs = parse_root_system("z2:1:1");
    CoxeterGroup g = generate_group(rs);
    Integrator ig(rs, g);

    SECTION("gaussian ratio reproduces the classical constant at kappa=0, x=y") {
        RootSystem rs0 = parse_root_system("z2:1:0");
        CoxeterGroup g0 = generate_group(rs0);
        Integrator ig0(rs0, g0);
        std::vector<HeatGridSample> grid{{Vec{0.3}, Vec{0.3}, 0.25}};
        BoundReport rep = gaussian_bound_report(ig0, grid, 16.0);
        // h_t(x,x) V(x,sqrt t) = (4 pi t)^{-1/2} * 2 sqrt(t)
        const double expect = 2.0 / std::sqrt(4.0 * 3.14159265358979323846);
        REQUIRE(rep.rows[0].ratio == Approx(expect).epsilon(1e-6));
    }
    SECTION("far field stays bounded") {
        std::vector<HeatGridSample> grid;
        for (double x : {-2.0, -0.5, 0.5, 2.0})
            for (double y : {-2.0, 0.0, 1.0})
                for (double t : {0.05, 0.2, 1.0}) grid.push_back({Vec{x}, Vec{y}, t});
        BoundReport rep = gaussian_bound_report(ig, grid, 16.0);
        REQUIRE(rep.rows.size() == 36);
        for (const auto& row : rep.rows) REQUIRE(row.pass);
        REQUIRE(std::isfinite(rep.empirical_constant));
        BoundReport grad = gradient_bound_report(ig, grid, 16.0);
        for (const auto& row : grad.rows) REQUIRE(row.pass);
    }
    SECTION("gradient at the origin is finite (kernel even in x there)") {
        std::vector<HeatGridSample> grid{{Vec{0.0}, Vec{0.8}, 0.1}};
        BoundReport rep = gradient_bound_report(ig, grid, 16.0);
        REQUIRE(rep.rows[0].pass);
    }
    SECTION("sqrt(s) L1 norm of the kernel gradient is flat in s") {
        BoundReport rep = gradient_l1_report(ig, Vec{0.9}, {0.01, 0.1, 1.0});
        double lo = 1e300, hi = 0.0;
        for (const auto& row : rep.rows) {
            REQUIRE(row.pass);
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        REQUIRE(hi / lo < 2.0);
    }
}

TEST_CASE("Schur bounds") {
    RootSystem rs = parse_root_system("z2:1:1");
    CoxeterGroup g = generate_group(rs);
    Integrator ig(rs, g);
    const double t = 0.1;
    HeatKernelZ2 hk(rs, t);
    QuadratureScheme sch = ig.scheme();
    sch.panel_max = std::sqrt(t);
    const double span = 14.0 * std::sqrt(t);

    SECTION("the heat kernel is an L1 contraction: C1 = C2 = 1") {
        std::vector<Vec> xs{Vec{0.0}, Vec{0.5}, Vec{1.2}};
        auto region_for = [&](const Vec& c) {
            return RegionSpec{{Ball{c, span}, Ball{scaled(c, -1.0), span}}, {}};
        };
        double c1 = 0.0, c2 = 0.0;
        for (const Vec& x : xs) {
            auto r = schur_bounds(
                ig, [&](const Vec& a, const Vec& b) { return hk.eval(a, b); }, {x},
                region_for(x), {x}, region_for(x), {1.0, 2.0, 4.0}, sch);
            c1 = std::max(c1, r.c1);
            c2 = std::max(c2, r.c2);
        }
        REQUIRE(c1 == Approx(1.0).margin(1e-4));
        REQUIRE(c2 == Approx(1.0).margin(1e-4));
    }
    SECTION("restriction to a small ball loses mass") {
        RegionSpec small = region_of(Ball{Vec{0.2}, 0.1});
        auto r = schur_bounds(
            ig, [&](const Vec& a, const Vec& b) { return hk.eval(a, b); }, {Vec{0.2}},
            small, {Vec{0.2}}, small, {2.0}, sch);
        REQUIRE(r.c1 < 1.0);
        REQUIRE(r.bounds[0].second < 1.0);
    }
}

TEST_CASE("operator norm report") {
    RootSystem rs = parse_root_system("z2:1:1");
    CoxeterGroup g = generate_group(rs);
    Integrator ig(rs, g);
    const Vec a{0.8};
    const double r = 1.0;

    SECTION("p=1 is the L1 contraction: ratio identically 1") {
        BoundReport rep = operator_norm_report(ig, a, r, 1.0, {0.25, 0.5, 1.0});
        for (const auto& row : rep.rows) REQUIRE(row.ratio == Approx(1.0));
    }
    SECTION("p=2 ratios finite and O(1) across t") {
        BoundReport rep = operator_norm_report(ig, a, r, 2.0, {0.1, 0.25, 0.5, 1.0});
        REQUIRE(rep.rows.size() == 4);
        for (const auto& row : rep.rows) {
            REQUIRE(row.pass);
            REQUIRE(row.ratio < 10.0);
        }
    }
    SECTION("kappa=0 sup matches the classical closed form") {
        RootSystem rs0 = parse_root_system("z2:1:0");
        CoxeterGroup g0 = generate_group(rs0);
        Integrator ig0(rs0, g0);
        const double t = 0.5;
        BoundReport rep = operator_norm_report(ig0, Vec{0.0}, 1.0, 2.0, {t}, 17);
        // sup h_{t^2} = (4 pi t^2)^{-1/2}; V = 2r; ratio = sqrt(sup * 2r * t/r)
        const double expect =
            std::sqrt(std::pow(4.0 * 3.14159265358979323846 * t * t, -0.5) * 2.0 * t);
        REQUIRE(rep.rows[0].ratio == Approx(expect).epsilon(1e-6));
    }
}
