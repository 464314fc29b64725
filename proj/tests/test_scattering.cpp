#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "entbeam/analytic_squeezing.hpp"
#include "entbeam/error.hpp"
#include "entbeam/scattering.hpp"
#include "support.hpp"

using namespace entbeam;

namespace {

// Reference coefficients from a high-precision matrix-exponential propagation
// of the interior equations from the wall, matched to the same exterior waves.
struct Reference {
    double d, m, kappa;
    double alpha_sq, beta_sq, r;
    cplx alpha_p, beta_p;
};

const Reference kReferences[] = {
    {0.0, 100, 1.0, 3.451098415648151, 2.451098415648151, 1.230608399243074,
     {-1.857693989864013, 0.008453145643878772}, {0.0, -1.565598420939466}},
    {0.5, 50, 0.7, 1.644763627057346, 0.6447636270573459, 0.7349871192568143,
     {-1.280093440107904, -0.07825862029232993}, {0.05497381427238224, -0.8010877023158522}},
    {2.0, 30, 1.2, 1.038458175231552, 0.03845817523155229, 0.1948718389282759,
     {-0.9675160774584205, -0.3199543953300593}, {0.06287443425097337, -0.1857551634522505}},
    {-1.5, 20, 0.4, 1.161216509200838, 0.1612165092008379, 0.3914441527483031,
     {-1.07719079435888, 0.02960577222979424}, {-0.0125436947759483, -0.4013217723002401}},
    {0.0, 20, 1.0, 3.319216183723425, 2.319216183723425, 1.20739760740815,
     {-1.821869114958202, -0.003018556748371141}, {0.0, -1.522897299138529}},
};

}  // namespace

TEST_CASE("interior modes") {
    const auto modes = interior_modes({0.75, 10.0, 1.2});
    const double s = std::hypot(1.0, 0.75);
    CHECK(modes.eigenvalue[0] == doctest::Approx(10.0 - s));
    CHECK(modes.eigenvalue[1] == doctest::Approx(10.0 + s));
    CHECK(modes.length_scale == doctest::Approx(1.2 * std::sqrt(10.0)));
    for (int j = 0; j < 2; ++j) {
        const auto& v = modes.eigenvector[static_cast<std::size_t>(j)];
        CHECK(std::hypot(v[0], v[1]) == doctest::Approx(1.0));
        // [[M+d, -1], [-1, M-d]] v = lambda v
        CHECK((10.75 * v[0] - v[1]) == doctest::Approx(modes.eigenvalue[static_cast<std::size_t>(j)] * v[0]));
        CHECK(modes.wavevector[static_cast<std::size_t>(j)].real() ==
              doctest::Approx(modes.length_scale * std::sqrt(modes.eigenvalue[static_cast<std::size_t>(j)])));
    }
    CHECK(modes.plus_channel_open);
    CHECK(modes.minus_channel_open);

    // Interior evanescence: M - s < 0.
    const auto ev = interior_modes({0.0, 0.5, 1.0});
    CHECK(ev.eigenvalue[0] < 0.0);
    CHECK(ev.wavevector[0].imag() > 0.0);
    CHECK(std::abs(ev.wavevector[0].real()) < 1e-15);

    const auto closed = interior_modes({3.0, 2.0, 1.0});
    CHECK(closed.plus_channel_open);
    CHECK_FALSE(closed.minus_channel_open);
}

TEST_CASE("coefficients against the propagation reference") {
    for (const auto& ref : kReferences) {
        CAPTURE(ref.d);
        CAPTURE(ref.m);
        const auto c = solve_scattering({ref.d, ref.m, ref.kappa});
        CHECK(std::norm(c.alpha_p) == doctest::Approx(ref.alpha_sq).epsilon(1e-10));
        CHECK(std::norm(c.beta_p) == doctest::Approx(ref.beta_sq).epsilon(1e-10));
        CHECK(std::abs(c.alpha_p - ref.alpha_p) < 1e-10);
        CHECK(std::abs(c.beta_p - ref.beta_p) < 1e-10);
        CHECK(r_from_coefficients(c).r == doctest::Approx(ref.r).epsilon(1e-10));
        CHECK_FALSE(c.ill_conditioned);
    }
}

TEST_CASE("decoupled slab reflects with alpha = -1") {
    const auto c = solve_slab({50.5, 49.5, 0.0, 7.0});
    CHECK(std::abs(c.alpha_p + 1.0) < 1e-12);
    CHECK(std::abs(c.alpha_m + 1.0) < 1e-12);
    CHECK(std::abs(c.beta_p) < 1e-12);
    CHECK(std::abs(c.beta_m) < 1e-12);

    const auto zero = solve_scattering({0.4, 50.0, 0.0});
    CHECK(std::abs(zero.beta_p) < 1e-14);
    CHECK(std::abs(zero.beta_m) < 1e-14);
    CHECK(r_from_coefficients(zero).r == 0.0);
}

TEST_CASE("symplectic identities on a grid at M = 50") {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double d = 3.0 * i / 19.0;
            const double k = 0.05 + 1.4 * j / 19.0;
            const auto c = solve_scattering({d, 50.0, k});
            worst = std::max({worst, std::abs(c.plus_norm_residual()), std::abs(c.minus_norm_residual()),
                              c.cross_residual()});
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("symplectic identities on random inputs") {
    testing::Gen gen(99);
    for (int trial = 0; trial < 400; ++trial) {
        const double m = gen.log_uniform(3.0, 1e3);
        const double d = gen.uniform(-0.9, 0.9) * (m - 1.0);
        const double k = gen.uniform(0.0, 1.5);
        const auto c = solve_scattering({d, m, k});
        if (c.ill_conditioned) continue;
        const double scale = std::norm(c.alpha_p);
        REQUIRE(std::abs(c.plus_norm_residual()) < 1e-10 * scale);
        REQUIRE(std::abs(c.minus_norm_residual()) < 1e-10 * scale);
        REQUIRE(c.cross_residual() < 1e-10 * scale);
    }
}

TEST_CASE("detuning symmetry") {
    testing::Gen gen(5);
    for (int trial = 0; trial < 100; ++trial) {
        const double d = gen.uniform(0.0, 3.0);
        const double k = gen.uniform(0.0, 1.3);
        const double m = gen.uniform(10.0, 300.0);
        const double a = r_from_coefficients(solve_scattering({d, m, k})).r;
        const double b = r_from_coefficients(solve_scattering({-d, m, k})).r;
        REQUIRE(std::abs(a - b) < 1e-10);
    }
}

TEST_CASE("convergence to the closed form with M") {
    // Pointwise the difference oscillates with M (exterior phase); the grid
    // maximum falls monotonically.
    double prev = INFINITY;
    for (double m : {10.0, 30.0, 100.0, 300.0, 1000.0}) {
        double worst = 0.0;
        for (int i = 0; i <= 15; ++i)
            for (int j = 0; j <= 13; ++j) {
                const DimensionlessParams p{3.0 * i / 15.0, m, 1.3 * j / 13.0};
                worst = std::max(worst, std::abs(r_from_coefficients(solve_scattering(p)).r - r_analytic(p).r));
            }
        CAPTURE(m);
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("errors") {
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Config;
    };
    CHECK(code_of([] { (void)solve_scattering({5.0, 5.0, 1.0}); }) == ErrorCode::ClosedExteriorChannel);
    CHECK(code_of([] { (void)solve_scattering({-6.0, 5.0, 1.0}); }) == ErrorCode::ClosedExteriorChannel);
    CHECK(code_of([] { (void)solve_scattering({0.0, -1.0, 1.0}); }) == ErrorCode::ParameterDomain);

    BogoliubovCoefficients bad;
    bad.alpha_p = 2.0;
    bad.beta_p = 1.0;
    bad.alpha_m = 2.0;
    bad.beta_m = 1.5;
    CHECK(code_of([&] { (void)r_from_coefficients(bad); }) == ErrorCode::InconsistentChannels);
    bad.beta_m = 1.0 + 1e-12;
    CHECK(r_from_coefficients(bad).r == doctest::Approx(std::atanh(0.5)));
}

TEST_CASE("conditioning is reported") {
    const auto c = solve_scattering({0.0, 100.0, 1.0});
    CHECK(c.condition_number >= 1.0);
    CHECK(c.condition_number < 1e6);
    // Close to the threshold the coefficients grow but stay consistent.
    const auto near = solve_scattering({0.0, 100.0, 1.5707});
    CHECK(std::norm(near.alpha_p) > 1e3);
    CHECK(std::abs(near.plus_norm_residual()) < 1e-8 * std::norm(near.alpha_p));
}
