#pragma once

#include <vector>

#include "entbeam/core_model.hpp"

namespace entbeam {

/// |arctanh_argument| above this (but below 1) raises near_threshold.
inline constexpr double kNearThresholdBand = 1e-12;

/// A squeezing parameter together with the argument it was built from.
///
/// above_threshold <=> |arctanh_argument| >= 1, in which case r is +inf. The
/// closed forms evaluate 1 - |argument| without cancellation, so the flag
/// flips at the threshold kappa itself rather than where sin rounds to 1. The
/// value is never clipped: inside the near-threshold band r is reported as
/// computed and near_threshold is raised.
struct SqueezingValue {
    double r = 0.0;
    bool above_threshold = false;
    bool near_threshold = false;
    double arctanh_argument = 0.0;

    [[nodiscard]] static SqueezingValue from_argument(double arg);
    /// Same, with gap = 1 - |arg| supplied by the caller.
    [[nodiscard]] static SqueezingValue from_argument(double arg, double gap);
    /// tanh(r) = ratio, ratio >= 0.
    [[nodiscard]] static SqueezingValue from_ratio(double ratio) { return from_argument(ratio); }
};

struct SpectrumPoint {
    double d = 0.0;
    SqueezingValue value;
};

struct SqueezingSpectrum {
    std::vector<SpectrumPoint> points;  // strictly increasing d
    double big_m = 0.0;
    double kappa = 0.0;
};

/// tanh(2 theta) with theta = arctanh(sqrt(d^2+1) - d), in the closed form
/// 1/sqrt(1 + d^2). Even in d, equal to 1 at d = 0.
[[nodiscard]] double tanh_two_theta(double d);

/// (k+ - k-) a in reduced units.
///
/// With hbar = 1, k+- = sqrt(2m(mu +- g0 s)), s = sqrt(1+d^2). Eliminating a
/// through kappa = g0 * 2a / sqrt(2 mu / m) gives a*sqrt(2 m mu) = kappa * M,
/// hence (k+ - k-) a = kappa M [sqrt(1 + s/M) - sqrt(1 - s/M)].
/// Throws ClosedChannel when M < s (k- imaginary).
[[nodiscard]] double wavenumber_phase(const DimensionlessParams& params);

/// Closed-form squeezing with the exact k+- (finite M).
[[nodiscard]] SqueezingValue r_analytic(const DimensionlessParams& params);

/// M -> infinity limit: argument sin(kappa s)/s.
[[nodiscard]] SqueezingValue r_large_mu_limit(double d, double kappa);

/// |arctanh(sin kappa)|, the d = 0 case of r_large_mu_limit.
[[nodiscard]] SqueezingValue r_zero_detuning(double kappa);

/// pi/2 + n pi for n = 0..n_max.
[[nodiscard]] std::vector<double> threshold_kappas(int n_max);

/// Condensate loss rate 2 g0 sinh^2(r0) / n0, same units as g0.
[[nodiscard]] double loss_rate(double r0, double g0, double n0);

enum class SqueezingMethod { Analytic, LargeMu, Scattering };

/// Squeezing spectrum over an increasing d grid at fixed (big_m, kappa).
[[nodiscard]] SqueezingSpectrum squeezing_spectrum(const std::vector<double>& d_grid, double big_m,
                                                   double kappa,
                                                   SqueezingMethod method = SqueezingMethod::Analytic);

}  // namespace entbeam
