#pragma once

#include <span>

namespace entbeam {

/// Reduced Planck constant in J*s. Frequencies throughout the library are
/// angular (rad/s), so with hbar = 1 an energy E and the rate E/hbar coincide.
inline constexpr double kHbar = 1.054571817e-34;

/// Physical parameters of the condensate + beam model.
///
/// g0, mu and gamma are angular rates (rad/s); a in meters; m in kg; n0 is the
/// condensate atom count.
struct PhysicalParams {
    double g0 = 0.0;
    double mu = 0.0;
    double a = 0.0;
    double m = 0.0;
    double gamma = 0.0;
    double n0 = 1.0;

    /// Throws ErrorCode::ParameterDomain on any invariant violation. A zero
    /// region length is accepted (it is the trivial kappa = 0 model).
    void validate() const;

    /// mu from a beam velocity v = sqrt(2 hbar mu / m).
    [[nodiscard]] static double mu_from_velocity(double v, double m);
    [[nodiscard]] double beam_velocity() const;
};

/// Reduced parameters: d = Delta/g0, big_m = mu/g0, kappa = g0 * t_bar.
struct DimensionlessParams {
    double d = 0.0;
    double big_m = 0.0;
    double kappa = 0.0;

    void validate() const;
};

struct ValidityThresholds {
    double max_gamma_over_g0 = 0.1;
    double max_g0_over_mu = 0.1;
};

struct ValidityReport {
    bool steady_output_ok = false;
    double gamma_over_g0 = 0.0;
    bool large_mu_ok = false;
    double g0_over_mu = 0.0;
    bool below_threshold = false;
    /// min_n |kappa - (pi/2 + n pi)|
    double threshold_distance = 0.0;
    /// Largest sqrt(1 + d^2) on the supplied detuning grid; both channels
    /// stay open while this is below big_m.
    double max_coupling_scale = 1.0;
    bool channels_open = true;
};

/// Transmission time t_bar = 2a / sqrt(2 hbar mu / m) in seconds.
[[nodiscard]] double transit_time(const PhysicalParams& p);

/// Converts to reduced form. The rate mu (rad/s) is turned into an energy
/// hbar*mu (J) for the velocity, lengths stay in meters, so kappa = g0 * t_bar
/// is a pure number.
[[nodiscard]] DimensionlessParams to_dimensionless(const PhysicalParams& p, double delta);

[[nodiscard]] ValidityReport validity(const PhysicalParams& p, std::span<const double> d_grid,
                                      const ValidityThresholds& thresholds = {});

/// Distance from kappa to the nearest pi/2 + n*pi, n >= 0.
[[nodiscard]] double distance_to_threshold(double kappa);

}  // namespace entbeam
