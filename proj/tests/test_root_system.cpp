#include <catch_amalgamated.hpp>

#include <random>

#include "dunkl/root_system.hpp"

using namespace dunkl;
using Catch::Approx;

TEST_CASE("catalog construction and gamma bookkeeping") {
    SECTION("rank one") {
        RootSystem rs = build_root_system(Family::Z2N, 1, {1.0});
        REQUIRE(rs.positive_roots.size() == 1);
        REQUIRE(norm2(rs.positive_roots[0]) == Approx(2.0).margin(1e-14));
        REQUIRE(rs.gamma() == Approx(1.0));
        REQUIRE(rs.homogeneous_dimension() == Approx(3.0));
    }
    SECTION("product of rank ones") {
        RootSystem rs = build_root_system(Family::Z2N, 2, {0.5, 0.5});
        REQUIRE(rs.positive_roots.size() == 2);
        REQUIRE(dot(rs.positive_roots[0], rs.positive_roots[1]) == Approx(0.0).margin(1e-15));
        REQUIRE(rs.gamma() == Approx(1.0));
        REQUIRE(rs.homogeneous_dimension() == Approx(4.0));
    }
    SECTION("B2 orbit count and gamma") {
        RootSystem rs = build_root_system(Family::B, 2, {0.75, 0.25});
        REQUIRE(rs.positive_roots.size() == 4);
        // gamma = 2 k_axis + 2 k_diag, counting the positive roots per orbit
        REQUIRE(rs.gamma() == Approx(2.0 * 0.75 + 2.0 * 0.25));
        for (const Vec& a : rs.positive_roots)
            REQUIRE(norm2(a) == Approx(2.0).margin(1e-12));
    }
    SECTION("bad inputs") {
        REQUIRE_THROWS_AS(build_root_system(Family::Z2N, 2, {1.0}), error);
        REQUIRE_THROWS_AS(build_root_system(Family::Z2N, 1, {-0.5}), error);
        REQUIRE_THROWS_AS(build_root_system(Family::B, 1, {1.0, 1.0}), error);
        REQUIRE_THROWS_AS(parse_root_system("nope:2:1"), config_error);
        REQUIRE_THROWS_AS(parse_root_system("z2:x:1"), config_error);
        REQUIRE_THROWS_AS(parse_root_system("z2:2:1,oops"), config_error);
    }
    SECTION("id round trip") {
        RootSystem rs = parse_root_system("z2:2:0.5,1");
        REQUIRE(rs.dim == 2);
        REQUIRE(rs.multiplicity[0] == Approx(0.5));
        REQUIRE(rs.multiplicity[1] == Approx(1.0));
    }
}

TEST_CASE("reflections") {
    RootSystem rs = build_root_system(Family::Z2N, 2, {1.0, 1.0});
    const Vec alpha = rs.positive_roots[0];

    SECTION("fixed points on the hyperplane") {
        Vec x{0.0, 0.7};
        Vec y = reflect(x, alpha);
        REQUIRE(dist(x, y) == Approx(0.0).margin(1e-15));
    }
    SECTION("sign flip") {
        Vec x{1.0, 0.0};
        Vec y = reflect(x, alpha);
        REQUIRE(y[0] == Approx(-1.0));
        REQUIRE(y[1] == Approx(0.0).margin(1e-15));
    }
    SECTION("involution and isometry on random points") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int k = 0; k < 25; ++k) {
            Vec x{u(rng), u(rng)};
            Vec y = reflect(x, alpha);
            REQUIRE(norm(y) == Approx(norm(x)).margin(1e-13));
            REQUIRE(dist(reflect(y, alpha), x) == Approx(0.0).margin(1e-13));
        }
    }
    SECTION("zero root rejected") {
        REQUIRE_THROWS_AS(reflect(Vec{1.0, 0.0}, Vec{0.0, 0.0}), error);
    }
}

TEST_CASE("group generation matches known orders") {
    struct Case {
        std::string id;
        long order;
    };
    const Case cases[] = {
        {"z2:1:1", 2},      {"z2:2:0.5,0.5", 4}, {"z2:3:1,1,1", 8}, {"a:3:1", 6},
        {"b:2:1,0.5", 8},   {"i2:5:0.7", 10},    {"i2:4:1,2", 8},   {"i2:6:0.5,1.5", 12},
    };
    for (const Case& c : cases) {
        RootSystem rs = parse_root_system(c.id);
        CoxeterGroup g = generate_group(rs);
        INFO(c.id);
        REQUIRE(g.order() == c.order);
        REQUIRE(g.order() == expected_group_order(rs));
    }
}

TEST_CASE("brute-force closure for A1 x A1 embedded in R^2") {
    // two orthogonal reflections: the closure has 4 elements
    RootSystem rs = build_root_system(Family::Z2N, 2, {1.0, 2.0});
    CoxeterGroup g = generate_group(rs);
    REQUIRE(g.order() == 4);
    // explicit closure: {id, s1, s2, s1 s2}
    Mat s1 = reflection_matrix(rs.positive_roots[0]);
    Mat s2 = reflection_matrix(rs.positive_roots[1]);
    std::vector<Mat> expect{Mat::identity(2), s1, s2, s1.mul(s2)};
    for (const Mat& e : expect) {
        bool found = false;
        for (const Mat& m : g.elements)
            if (m.max_diff(e) < 1e-12) found = true;
        REQUIRE(found);
    }
}

TEST_CASE("group closure cap signals runaway input") {
    RootSystem rs = build_root_system(Family::B, 3, {1.0, 1.0});
    GroupOptions opt;
    opt.max_order = 10;  // B3 has 48 elements
    REQUIRE_THROWS_AS(generate_group(rs, opt), error);
}

TEST_CASE("conjugation sends sigma_alpha to sigma_{g alpha}") {
    for (const char* id : {"b:2:1,0.5", "i2:5:0.7", "a:3:1"}) {
        RootSystem rs = parse_root_system(id);
        CoxeterGroup g = generate_group(rs);
        for (const Mat& m : g.elements) {
            for (const Vec& a : rs.positive_roots) {
                const Mat lhs = m.mul(reflection_matrix(a)).mul(m.transpose());
                const Mat rhs = reflection_matrix(m.apply(a));
                INFO(id);
                REQUIRE(lhs.max_diff(rhs) < 1e-12);
            }
        }
    }
}

TEST_CASE("orbit distance") {
    RootSystem rs = build_root_system(Family::Z2N, 1, {1.0});
    CoxeterGroup g = generate_group(rs);

    REQUIRE(orbit_distance(g, Vec{1.0}, Vec{1.0}) == Approx(0.0).margin(1e-15));
    REQUIRE(orbit_distance(g, Vec{1.0}, Vec{-1.0}) == Approx(0.0).margin(1e-15));
    REQUIRE(orbit_distance(g, Vec{1.0}, Vec{3.0}) == Approx(2.0));

    SECTION("symmetry and triangle inequality on random triples") {
        RootSystem rs2 = parse_root_system("b:2:1,0.5");
        CoxeterGroup g2 = generate_group(rs2);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int k = 0; k < 50; ++k) {
            Vec a{u(rng), u(rng)}, x{u(rng), u(rng)}, y{u(rng), u(rng)};
            const double dax = orbit_distance(g2, a, x);
            REQUIRE(orbit_distance(g2, x, a) == Approx(dax).margin(1e-12));
            REQUIRE(dax <= orbit_distance(g2, a, y) + orbit_distance(g2, y, x) + 1e-12);
        }
    }
}

TEST_CASE("validation report") {
    RootSystem rs = parse_root_system("z2:2:0.5,1");
    CoxeterGroup g = generate_group(rs);

    SECTION("valid catalog system passes") {
        ValidationReport rep = validate(rs, g);
        for (const CheckResult& c : rep.checks) {
            INFO(c.name << ": " << c.detail);
            REQUIRE(c.pass);
        }
    }
    SECTION("kappa perturbed on one root of an orbit fails G-invariance") {
        RootSystem bad = parse_root_system("a:3:1");
        CoxeterGroup gb = generate_group(bad);
        bad.multiplicity[0] = 2.0;  // A2 orbit is a single class
        ValidationReport rep = validate(bad, gb);
        bool found = false;
        for (const CheckResult& c : rep.checks)
            if (c.name == "multiplicity_G_invariant") found = !c.pass;
        REQUIRE(found);
        REQUIRE_FALSE(rep.all_pass());
    }
    SECTION("denormalized root fails") {
        RootSystem bad = rs;
        bad.positive_roots[0] = scaled(bad.positive_roots[0], 1.0 / std::sqrt(2.0));
        ValidationReport rep = validate(bad, g);
        bool found = false;
        for (const CheckResult& c : rep.checks)
            if (c.name == "normalized") found = !c.pass;
        REQUIRE(found);
    }
}
