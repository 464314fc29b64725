#include "entbeam/analytic_squeezing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "entbeam/error.hpp"
#include "entbeam/scattering.hpp"

namespace entbeam {

SqueezingValue SqueezingValue::from_argument(double arg) { return from_argument(arg, 1.0 - std::abs(arg)); }

SqueezingValue SqueezingValue::from_argument(double arg, double gap) {
    SqueezingValue v;
    v.arctanh_argument = arg;
    if (!(gap > 0.0) || std::isnan(arg)) {
        v.above_threshold = true;
        v.r = std::numeric_limits<double>::infinity();
        return v;
    }
    v.near_threshold = gap < kNearThresholdBand;
    // atanh(1 - gap) = log((2 - gap) / gap) / 2 keeps digits as gap -> 0.
    v.r = gap > 0.5 ? std::abs(std::atanh(arg)) : 0.5 * std::log((2.0 - gap) / gap);
    return v;
}

namespace {

// sin(phase)/s with 1 - |sin(phase)/s| evaluated as
// ((s - 1) + 2 sin^2(psi/2)) / s, psi the offset from the nearest pi/2 + n pi.
SqueezingValue from_phase(double phase, double d) {
    const double s = std::hypot(1.0, d);
    const double n = std::round((phase - std::numbers::pi / 2.0) / std::numbers::pi);
    const double psi = phase - (std::numbers::pi / 2.0 + n * std::numbers::pi);
    const double half = std::sin(0.5 * psi);
    const double gap = (d * d / (1.0 + s) + 2.0 * half * half) / s;
    return SqueezingValue::from_argument(std::sin(phase) / s, gap);
}

}  // namespace

double tanh_two_theta(double d) { return 1.0 / std::hypot(1.0, d); }

double wavenumber_phase(const DimensionlessParams& params) {
    params.validate();
    const double s = std::hypot(1.0, params.d);
    const double ratio = s / params.big_m;
    ENTBEAM_REQUIRE(ratio <= 1.0, ErrorCode::ClosedChannel,
                    "big_m = " + std::to_string(params.big_m) + " < sqrt(1+d^2) = " +
                        std::to_string(s) + ": k- is imaginary");
    // sqrt(1+x) - sqrt(1-x) = 2x / (sqrt(1+x) + sqrt(1-x)) avoids cancellation at large M.
    const double diff = 2.0 * ratio / (std::sqrt(1.0 + ratio) + std::sqrt(1.0 - ratio));
    return params.kappa * params.big_m * diff;
}

SqueezingValue r_analytic(const DimensionlessParams& params) {
    return from_phase(wavenumber_phase(params), params.d);
}

SqueezingValue r_large_mu_limit(double d, double kappa) {
    ENTBEAM_REQUIRE(std::isfinite(kappa) && kappa >= 0.0 && std::isfinite(d),
                    ErrorCode::ParameterDomain, "kappa must be finite and >= 0");
    return from_phase(kappa * std::hypot(1.0, d), d);
}

SqueezingValue r_zero_detuning(double kappa) { return r_large_mu_limit(0.0, kappa); }

std::vector<double> threshold_kappas(int n_max) {
    ENTBEAM_REQUIRE(n_max >= 0, ErrorCode::ParameterDomain, "n_max must be >= 0");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) out.push_back(std::numbers::pi / 2.0 + n * std::numbers::pi);
    return out;
}

double loss_rate(double r0, double g0, double n0) {
    ENTBEAM_REQUIRE(n0 >= 1.0, ErrorCode::ParameterDomain, "n0 must be >= 1");
    const double sh = std::sinh(r0);
    return 2.0 * g0 * sh * sh / n0;
}

SqueezingSpectrum squeezing_spectrum(const std::vector<double>& d_grid, double big_m, double kappa,
                                     SqueezingMethod method) {
    SqueezingSpectrum spec;
    spec.big_m = big_m;
    spec.kappa = kappa;
    spec.points.reserve(d_grid.size());
    for (std::size_t i = 0; i < d_grid.size(); ++i) {
        ENTBEAM_REQUIRE(i == 0 || d_grid[i] > d_grid[i - 1], ErrorCode::ParameterDomain,
                        "detuning grid must be strictly increasing");
        const DimensionlessParams p{d_grid[i], big_m, kappa};
        SqueezingValue v;
        switch (method) {
            case SqueezingMethod::Analytic: v = r_analytic(p); break;
            case SqueezingMethod::LargeMu: v = r_large_mu_limit(p.d, p.kappa); break;
            case SqueezingMethod::Scattering: v = r_from_coefficients(solve_scattering(p)); break;
        }
        spec.points.push_back({d_grid[i], v});
    }
    return spec;
}

}  // namespace entbeam
