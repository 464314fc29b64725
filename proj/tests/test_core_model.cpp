#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "entbeam/core_model.hpp"
#include "entbeam/error.hpp"
#include "support.hpp"

using namespace entbeam;

namespace {

// Sodium beam at 9 cm/s through a 3 um condensate with g0 = 2e4 rad/s.
PhysicalParams sodium_example() {
    PhysicalParams p;
    p.g0 = 2e4;
    p.m = 3.82e-26;
    p.mu = PhysicalParams::mu_from_velocity(0.09, p.m);
    p.a = 3e-6;
    p.gamma = 100.0;
    p.n0 = 1e6;
    return p;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an entbeam::Error");
    return ErrorCode::Config;
}

}  // namespace

TEST_CASE("worked example conversion") {
    const auto p = sodium_example();
    CHECK(p.mu == doctest::Approx(1467040.9118282).epsilon(1e-12));
    CHECK(p.beam_velocity() == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(transit_time(p) == doctest::Approx(6.66666666666667e-5).epsilon(1e-13));

    const auto r = to_dimensionless(p, 0.0);
    CHECK(r.kappa == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
    CHECK(r.big_m == doctest::Approx(73.3520455914099).epsilon(1e-12));
    CHECK(r.d == 0.0);
    CHECK(to_dimensionless(p, 3e4).d == doctest::Approx(1.5));
}

TEST_CASE("zero region length is the trivial model") {
    auto p = sodium_example();
    p.a = 0.0;
    CHECK(to_dimensionless(p, 0.0).kappa == 0.0);
}

TEST_CASE("parameter validation") {
    auto bad = [](auto mutate) {
        auto p = sodium_example();
        mutate(p);
        return code_of([&] { p.validate(); });
    };
    CHECK(bad([](PhysicalParams& p) { p.g0 = 0.0; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.mu = -1.0; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.a = -1e-6; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.m = 0.0; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.gamma = -1.0; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.n0 = 0.5; }) == ErrorCode::ParameterDomain);
    CHECK(bad([](PhysicalParams& p) { p.g0 = std::nan(""); }) == ErrorCode::ParameterDomain);
    CHECK(code_of([] { (void)to_dimensionless(sodium_example(), INFINITY); }) == ErrorCode::ParameterDomain);
    CHECK(code_of([] { (void)PhysicalParams::mu_from_velocity(-1.0, 1.0); }) == ErrorCode::ParameterDomain);

    CHECK(code_of([] { DimensionlessParams{0.0, 0.0, 1.0}.validate(); }) == ErrorCode::ParameterDomain);
    CHECK(code_of([] { DimensionlessParams{0.0, 10.0, -1.0}.validate(); }) == ErrorCode::ParameterDomain);
    CHECK(code_of([] { DimensionlessParams{NAN, 10.0, 1.0}.validate(); }) == ErrorCode::ParameterDomain);
    CHECK_NOTHROW(DimensionlessParams{-3.0, 10.0, 0.0}.validate());
}

TEST_CASE("scale consistency of the reduction") {
    testing::Gen gen(11);
    for (int trial = 0; trial < 500; ++trial) {
        PhysicalParams p;
        p.g0 = gen.log_uniform(1e2, 1e6);
        p.mu = p.g0 * gen.log_uniform(2.0, 1e4);
        p.a = gen.log_uniform(1e-7, 1e-4);
        p.m = gen.log_uniform(1e-27, 1e-24);
        p.gamma = p.g0 * gen.uniform(0.0, 0.5);
        const double delta = p.g0 * gen.uniform(-5.0, 5.0);
        const double lambda = gen.log_uniform(1e-3, 1e3);

        PhysicalParams q = p;
        q.g0 *= lambda;
        q.mu *= lambda;
        q.gamma *= lambda;
        q.a /= std::sqrt(lambda);

        const auto a = to_dimensionless(p, delta);
        const auto b = to_dimensionless(q, delta * lambda);
        REQUIRE(testing::rel_close(a.d, b.d, 1e-13));
        REQUIRE(testing::rel_close(a.big_m, b.big_m, 1e-13));
        REQUIRE(testing::rel_close(a.kappa, b.kappa, 1e-13));
    }
}

TEST_CASE("conversion is pure") {
    const auto p = sodium_example();
    const auto a = to_dimensionless(p, 1234.5);
    const auto b = to_dimensionless(p, 1234.5);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("validity report") {
    auto p = sodium_example();
    const std::vector<double> grid{0.0, 1.0, 3.0};
    auto v = validity(p, grid);
    CHECK(v.gamma_over_g0 == doctest::Approx(0.005));
    CHECK(v.steady_output_ok);
    CHECK(v.g0_over_mu == doctest::Approx(1.0 / 73.3520455914099));
    CHECK(v.large_mu_ok);
    CHECK(v.below_threshold);
    CHECK(v.threshold_distance == doctest::Approx(std::numbers::pi / 2 - 4.0 / 3.0).epsilon(1e-12));
    CHECK(v.max_coupling_scale == doctest::Approx(std::sqrt(10.0)));
    CHECK(v.channels_open);

    p.gamma = 0.2 * p.g0;
    CHECK_FALSE(validity(p, grid).steady_output_ok);
    const std::vector<double> wide{0.0, 80.0};
    CHECK_FALSE(validity(p, wide).channels_open);

    ValidityThresholds strict{0.001, 0.001};
    CHECK_FALSE(validity(sodium_example(), grid, strict).large_mu_ok);
    CHECK_FALSE(validity(sodium_example(), grid, strict).steady_output_ok);

    // Slower beam: longer transit pushes kappa past pi/2.
    auto slow = sodium_example();
    slow.mu = PhysicalParams::mu_from_velocity(0.06, slow.m);
    CHECK_FALSE(validity(slow, grid).below_threshold);
}

TEST_CASE("distance to threshold") {
    CHECK(distance_to_threshold(0.0) == doctest::Approx(std::numbers::pi / 2));
    CHECK(distance_to_threshold(std::numbers::pi / 2) == 0.0);
    CHECK(distance_to_threshold(3.0 * std::numbers::pi / 2 + 0.1) == doctest::Approx(0.1));
    CHECK(distance_to_threshold(std::numbers::pi) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("error messages carry the code name") {
    try {
        DimensionlessParams{0.0, -1.0, 1.0}.validate();
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("ParameterDomain: ", 0) == 0);
    }
}
