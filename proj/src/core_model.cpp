#include "entbeam/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "entbeam/error.hpp"

namespace entbeam {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ParameterDomain: return "ParameterDomain";
        case ErrorCode::ClosedChannel: return "ClosedChannel";
        case ErrorCode::ClosedExteriorChannel: return "ClosedExteriorChannel";
        case ErrorCode::InconsistentChannels: return "InconsistentChannels";
        case ErrorCode::Resolution: return "ResolutionError";
        case ErrorCode::InstabilityDetected: return "InstabilityDetected";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::PerturbationInvalid: return "PerturbationInvalid";
        case ErrorCode::EmptyPostSelection: return "EmptyPostSelection";
        case ErrorCode::AboveThresholdInSpectrum: return "AboveThresholdInSpectrum";
        case ErrorCode::Config: return "ConfigError";
    }
    return "Unknown";
}

namespace {

void require_finite(double v, const char* name) {
    ENTBEAM_REQUIRE(std::isfinite(v), ErrorCode::ParameterDomain,
                    std::string(name) + " must be finite");
}

}  // namespace

void PhysicalParams::validate() const {
    require_finite(g0, "g0");
    require_finite(mu, "mu");
    require_finite(a, "a");
    require_finite(m, "m");
    require_finite(gamma, "gamma");
    require_finite(n0, "n0");
    ENTBEAM_REQUIRE(g0 > 0.0, ErrorCode::ParameterDomain, "g0 must be > 0");
    ENTBEAM_REQUIRE(mu > 0.0, ErrorCode::ParameterDomain, "mu must be > 0");
    ENTBEAM_REQUIRE(a >= 0.0, ErrorCode::ParameterDomain, "a must be >= 0");
    ENTBEAM_REQUIRE(m > 0.0, ErrorCode::ParameterDomain, "m must be > 0");
    ENTBEAM_REQUIRE(gamma >= 0.0, ErrorCode::ParameterDomain, "gamma must be >= 0");
    ENTBEAM_REQUIRE(n0 >= 1.0, ErrorCode::ParameterDomain, "n0 must be >= 1");
}

double PhysicalParams::mu_from_velocity(double v, double m) {
    ENTBEAM_REQUIRE(std::isfinite(v) && v > 0.0 && std::isfinite(m) && m > 0.0,
                    ErrorCode::ParameterDomain, "velocity and mass must be positive");
    return v * v * m / (2.0 * kHbar);
}

double PhysicalParams::beam_velocity() const { return std::sqrt(2.0 * kHbar * mu / m); }

void DimensionlessParams::validate() const {
    ENTBEAM_REQUIRE(std::isfinite(d) && std::isfinite(big_m) && std::isfinite(kappa),
                    ErrorCode::ParameterDomain, "dimensionless parameters must be finite");
    ENTBEAM_REQUIRE(big_m > 0.0, ErrorCode::ParameterDomain, "big_m must be > 0");
    ENTBEAM_REQUIRE(kappa >= 0.0, ErrorCode::ParameterDomain, "kappa must be >= 0");
}

double transit_time(const PhysicalParams& p) {
    p.validate();
    return 2.0 * p.a / p.beam_velocity();
}

DimensionlessParams to_dimensionless(const PhysicalParams& p, double delta) {
    p.validate();
    ENTBEAM_REQUIRE(std::isfinite(delta), ErrorCode::ParameterDomain, "delta must be finite");
    return {delta / p.g0, p.mu / p.g0, p.g0 * transit_time(p)};
}

double distance_to_threshold(double kappa) {
    constexpr double pi = std::numbers::pi;
    const double n = std::max(0.0, std::round((kappa - pi / 2.0) / pi));
    return std::abs(kappa - (pi / 2.0 + n * pi));
}

ValidityReport validity(const PhysicalParams& p, std::span<const double> d_grid,
                        const ValidityThresholds& thresholds) {
    p.validate();
    ValidityReport rep;
    rep.gamma_over_g0 = p.gamma / p.g0;
    rep.steady_output_ok = rep.gamma_over_g0 <= thresholds.max_gamma_over_g0;
    rep.g0_over_mu = p.g0 / p.mu;
    rep.large_mu_ok = rep.g0_over_mu <= thresholds.max_g0_over_mu;

    const double kappa = p.g0 * transit_time(p);
    rep.threshold_distance = distance_to_threshold(kappa);
    rep.below_threshold = kappa < std::numbers::pi / 2.0;

    for (double d : d_grid) rep.max_coupling_scale = std::max(rep.max_coupling_scale, std::hypot(1.0, d));
    rep.channels_open = rep.max_coupling_scale < p.mu / p.g0;
    return rep;
}

}  // namespace entbeam
