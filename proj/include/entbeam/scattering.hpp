#pragma once

#include <array>
#include <complex>

#include "entbeam/analytic_squeezing.hpp"
#include "entbeam/core_model.hpp"

namespace entbeam {

using cplx = std::complex<double>;

inline constexpr double kIllConditionedLimit = 1e12;

/// Interior eigenstructure of the coupled slab.
///
/// Stationary fields (u, w) = (Phi_{+1}, Phi_{-1}^dagger) at detuning Delta
/// obey, inside the condensate,
///   -u''/2m = (mu + Delta) u - g0 w,   -w''/2m = (mu - Delta) w - g0 u,
/// so k^2/(2 m g0) are the eigenvalues of [[M+d, -1], [-1, M-d]], i.e. M +- s.
/// Lengths are measured in units of the region length a, so a wavenumber k
/// becomes q = k a = kappa sqrt(M) sqrt(lambda).
struct InteriorModes {
    std::array<double, 2> eigenvalue{};                 // ascending
    std::array<std::array<double, 2>, 2> eigenvector{}; // eigenvector[j] = (u, w), unit norm
    std::array<cplx, 2> wavevector{};                   // q_j; Im q_j > 0 when lambda_j < 0
    double length_scale = 0.0;                          // kappa * sqrt(M)
    bool plus_channel_open = false;                     // M + d > 0
    bool minus_channel_open = false;                    // M - d > 0
};

[[nodiscard]] InteriorModes interior_modes(const DimensionlessParams& params);

/// Output coefficients B+-(mu +- Delta) = alpha+- A+-(mu +- Delta) + beta+- A-+^dagger(mu -+ Delta),
/// with flux-normalized exterior plane waves.
struct BogoliubovCoefficients {
    cplx alpha_p, beta_p, alpha_m, beta_m;
    double d = 0.0;
    double big_m = 0.0;
    double kappa = 0.0;
    double condition_number = 1.0;
    bool ill_conditioned = false;

    /// |alpha+|^2 - |beta+|^2 - 1
    [[nodiscard]] double plus_norm_residual() const;
    [[nodiscard]] double minus_norm_residual() const;
    /// |alpha+ beta- - alpha- beta+|
    [[nodiscard]] double cross_residual() const;
};

/// Uniform slab on [0, a] against a hard wall at x = 0, in reduced units.
/// energy_plus/minus are (mu +- Delta)/g0, coupling is g0/g0 (1 for the
/// physical model, 0 for the decoupled check) and length_scale = kappa sqrt(M).
struct SlabProblem {
    double energy_plus = 0.0;
    double energy_minus = 0.0;
    double coupling = 1.0;
    double length_scale = 0.0;
};

/// Mode matching at x = a: two interior solutions vanishing at the wall,
/// continuity of (u, w) and derivatives against the exterior waves, one 4x4
/// complex solve per incoming channel.
[[nodiscard]] BogoliubovCoefficients solve_slab(const SlabProblem& problem);

/// Throws ClosedExteriorChannel when M <= |d|.
[[nodiscard]] BogoliubovCoefficients solve_scattering(const DimensionlessParams& params);

/// tanh r = mean(|beta+|/|alpha+|, |beta-|/|alpha-|). Throws
/// InconsistentChannels when the two ratios differ by more than tolerance.
[[nodiscard]] SqueezingValue r_from_coefficients(const BogoliubovCoefficients& c,
                                                 double tolerance = 1e-9);

}  // namespace entbeam
