#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <optional>

#include "mlc/errors.hpp"
#include "mlc/geometry.hpp"
#include "oracles.hpp"

using namespace mlc::geometry;
namespace oracle = mlc::test_oracle;

TEST_CASE("core at the standard design point yields the published output rise") {
    const auto g = solve_core({0.5, 2.0});
    CHECK(std::abs(g.delta_out_frac - 0.56) <= 0.01);
    CHECK(oracle::core_max_residual(g) < 1e-10);
    CHECK(g.phi > 0);
    CHECK(g.phi < std::numbers::pi / 2);
}

TEST_CASE("core at rest leaves d unmoved") {
    for (double h : {1.5, 2.0, 2.5}) {
        const auto g = solve_core({0.0, h});
        CHECK(g.delta_out_frac == 0.0);
        CHECK(g.gamma1 == doctest::Approx(g.gamma2));
        CHECK(g.zeta == doctest::Approx(g.phi));
        CHECK(oracle::core_max_residual(g) < 1e-10);
    }
}

TEST_CASE("core residual closure at an off-design point") {
    const auto g = solve_core({0.25, 1.5});
    CHECK(oracle::core_max_residual(g) < 1e-10);
    CHECK(g.x_frac + std::cos(g.phi) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("core sweep columns are monotone in the expansion") {
    std::vector<double> deltas;
    for (int i = 0; i <= 40; ++i) deltas.push_back(0.02 * i);
    const auto rows = sweep_core(deltas, {1.6, 2.0, 2.4});
    REQUIRE(rows.size() == deltas.size() * 3);
    for (double h : {1.6, 2.0, 2.4}) {
        std::optional<double> prev;
        int feasible = 0;
        for (const auto& r : rows) {
            if (r.h_frac != h || !r.delta_out_frac) continue;
            ++feasible;
            if (prev) CHECK(*r.delta_out_frac >= *prev - 1e-12);
            prev = r.delta_out_frac;
        }
        CHECK(feasible > 10);
    }
    for (const auto& r : rows)
        if (r.delta_in_frac == 0.0) CHECK(r.delta_out_frac.value() == 0.0);
}

TEST_CASE("sweep CSV has the documented header and marks infeasible rows") {
    const auto rows = sweep_core({0.0, 0.5}, {2.0, 0.3});
    const auto csv = sweep_to_csv(rows);
    CHECK(csv.rfind("delta_in_frac,h_frac,delta_out_frac,feasible\n", 0) == 0);
    CHECK(csv.find("false") != std::string::npos);
    CHECK(csv.find("true") != std::string::npos);
}

TEST_CASE("infeasible core specs report NoConvergence, bad specs InvalidSpec") {
    CHECK_THROWS_AS(solve_core({0.5, 0.3}), mlc::NoConvergence);
    CHECK_THROWS_AS(solve_core({-0.1, 2.0}), mlc::InvalidSpec);
    CHECK_THROWS_AS(solve_core({0.5, 0.0}), mlc::InvalidSpec);
    CHECK_THROWS_AS(solve_core({0.5, std::nan("")}), mlc::InvalidSpec);
    CHECK_THROWS_AS(sweep_core({}, {2.0}), mlc::InvalidSpec);
}

TEST_CASE("core solver is deterministic") {
    const auto a = solve_core({0.37, 2.1});
    const auto b = solve_core({0.37, 2.1});
    CHECK(std::memcmp(&a, &b, sizeof(a)) == 0);
}

TEST_CASE("core pose reproduces the logic table of the mechanism") {
    const auto g = solve_core({0.5, 2.0});
    const double h = 2.0;
    CHECK(core_pose(g, 1.0, 1.0).dy == doctest::Approx(h).epsilon(1e-12));
    CHECK(core_pose(g, 1.0, 1.5).dy == doctest::Approx(h).epsilon(1e-10));
    CHECK(core_pose(g, 1.5, 1.0).dy == doctest::Approx(h).epsilon(1e-10));
    CHECK(core_pose(g, 1.5, 1.5).dy == doctest::Approx(h + g.delta_out_frac).epsilon(1e-10));
}

TEST_CASE("open input lever matches the closed-form oracle") {
    const LeverSpec spec{1.0, 1.0, -0.5, 0.5, 1.5, HingeType::Open};
    const auto g = solve_lever(spec);
    CHECK(oracle::lever_max_residual(g) < 1e-10);
    // Frozen from the elimination oracle below.
    CHECK(std::sin(g.dtheta) == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
    CHECK(1 / std::tan(g.theta1) == doctest::Approx(2.0784).epsilon(1e-4));
    CHECK(1 / std::tan(g.theta2) == doctest::Approx(-0.5784).epsilon(1e-4));
    CHECK(g.l1 == doctest::Approx(2.306).epsilon(1e-3));
    CHECK(g.l2 == doctest::Approx(1.155).epsilon(1e-3));

    const auto ref = oracle::lever_closed_form(spec, 1.0);
    REQUIRE(ref.has_value());
    CHECK(g.dtheta == doctest::Approx(ref->dtheta).epsilon(1e-9));
    CHECK(g.theta1 == doctest::Approx(ref->theta1).epsilon(1e-9));
    CHECK(g.theta2 == doctest::Approx(ref->theta2).epsilon(1e-9));
    CHECK(g.l1 == doctest::Approx(ref->l1).epsilon(1e-9));
    CHECK(g.l2 == doctest::Approx(ref->l2).epsilon(1e-9));
}

TEST_CASE("crossed output lever of the contracting NAND closes") {
    const LeverSpec spec{2.0, 1.0, 0.56, -0.5, 2.0, HingeType::Crossed};
    const auto g = solve_lever(spec);
    CHECK(oracle::lever_max_residual(g) < 1e-10);
    const auto ref = oracle::lever_closed_form(spec, 1.0);
    REQUIRE(ref.has_value());
    CHECK(g.dtheta == doctest::Approx(ref->dtheta).epsilon(1e-9));
}

TEST_CASE("lever solutions are homogeneous in length") {
    const LeverSpec spec{1.0, 1.0, -0.5, 0.5, 1.5, HingeType::Open};
    const auto base = solve_lever(spec);
    for (double c : {0.1, 10.0}) {
        const auto g = solve_lever(spec.scaled(c));
        CHECK(g.theta1 == doctest::Approx(base.theta1).epsilon(1e-9));
        CHECK(g.theta2 == doctest::Approx(base.theta2).epsilon(1e-9));
        CHECK(g.dtheta == doctest::Approx(base.dtheta).epsilon(1e-9));
        CHECK(g.l1 == doctest::Approx(c * base.l1).epsilon(1e-9));
        CHECK(g.l2 == doctest::Approx(c * base.l2).epsilon(1e-9));
    }
}

TEST_CASE("half-span levers agree with their closed form and move monotonically") {
    const LeverSpec specs[] = {
        {1.0, 1.0, -0.5, 0.5, 1.5, HingeType::Open},
        {1.0, 1.0, 0.5, 0.5, 1.5, HingeType::Crossed},
        {1.0, 1.5, -0.5, -0.5, 1.5, HingeType::Crossed},
        {2.0, 1.0, 0.557, 0.5, 2.0, HingeType::Crossed},
        {2.0, 1.5, 0.557, -0.5, 2.0, HingeType::Open},
        {1.0, 2.0, 0.5, 1.0, 2.5, HingeType::Crossed},
    };
    for (const auto& spec : specs) {
        const auto g = solve_lever(spec, 1e-12, LeverConvention::HalfSpan);
        CHECK(oracle::lever_max_residual(g) < 1e-10);
        CHECK(lever_is_monotone(g));
        const auto ref = oracle::lever_closed_form(spec, 0.5);
        REQUIRE(ref.has_value());
        CHECK(g.dtheta == doctest::Approx(ref->dtheta).epsilon(1e-9));
    }
}

TEST_CASE("lever spec validation") {
    CHECK_THROWS_AS(solve_lever({1.0, 1.0, 1.0, 0.5, 1.5, HingeType::Open}), mlc::InvalidSpec);
    CHECK_THROWS_AS(solve_lever({-1.0, 1.0, 0.1, 0.5, 1.5, HingeType::Open}), mlc::InvalidSpec);
    CHECK_THROWS_AS(solve_lever({1.0, 1.0, 0.5, 0.5, 1.5, HingeType::Open}, 0.0), mlc::InvalidSpec);
    // An open lever cannot keep the signal direction for equal rest lengths.
    CHECK_THROWS_AS(solve_lever({1.0, 1.0, -0.5, -0.5, 1.5, HingeType::Open}, 1e-12,
                                LeverConvention::HalfSpan),
                    mlc::NoConvergence);
    CHECK(hinge_from_string("Crossed") == HingeType::Crossed);
    CHECK_THROWS_AS(hinge_from_string("hinged"), mlc::InvalidSpec);
}

TEST_CASE("geometry results serialize with their field names") {
    const nlohmann::json core = solve_core({0.5, 2.0});
    for (const char* key : {"spec", "x_frac", "phi", "gamma1", "gamma2", "gamma3", "zeta", "delta_out_frac"})
        CHECK(core.contains(key));
    CHECK(core["spec"]["h_frac"] == 2.0);
    const nlohmann::json lever = solve_lever({1.0, 1.0, -0.5, 0.5, 1.5, HingeType::Open});
    for (const char* key : {"spec", "theta1", "theta2", "l1", "l2", "dtheta"}) CHECK(lever.contains(key));
    CHECK(lever["spec"]["hinge"] == "open");
}
