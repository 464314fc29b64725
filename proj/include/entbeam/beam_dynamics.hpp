#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entbeam/core_model.hpp"

namespace entbeam {

using cplx = std::complex<double>;

// Time-domain integration of the linear beam equations for a Bogoliubov mode
// pair. In the frame rotating at mu, with u the coefficient of an incoming
// annihilation operator in phi_{+1} and w its coefficient in phi_{-1}^dagger,
//
//   i du/dt =  (H - mu) u + g(x,t) w,
//   i dw/dt = -(H - mu) w - g(x,t) u,        H = -d_xx/2m + V(x).
//
// A stationary solution ~ e^{-i Delta t} reproduces the frequency-domain
// equations solved by the scattering module. sigma_z times the generator is
// Hermitian, so int(|u|^2 - |w|^2) dx is conserved.
//
// Reduced units throughout: x in units of the region length a, t in 1/g0,
// energies in g0. The kinetic term is then q^2 / (kappa^2 M).

enum class Boundary { HardWall, Periodic };

struct Absorber {
    double width = 0.0;     // layer at the x_max end of the grid
    double strength = 0.0;  // peak damping rate; quadratic profile
};

struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_points = 256;
    double dt = 0.01;
    Absorber absorber;
    Boundary boundary = Boundary::HardWall;

    void validate() const;
    /// HardWall: interior points of [x_min, x_max] with both ends as walls.
    [[nodiscard]] double dx() const;
    [[nodiscard]] double x(int i) const;
    [[nodiscard]] std::vector<double> coordinates() const;
    /// Length seen by the transform (wall distance or period).
    [[nodiscard]] double transform_length() const { return x_max - x_min; }
    /// Throws Resolution unless dx gives at least 8 points per 2 pi / k_max.
    void require_resolves(double k_max) const;
};

/// Reduced model: big_m = mu/g0, kappa = g0 t_bar.
struct BeamModel {
    double big_m = 100.0;
    double kappa = 1.0;

    void validate() const;
    /// Wavenumber (per a) of a free wave with rotating-frame energy offset e,
    /// i.e. kinetic energy big_m + e.
    [[nodiscard]] double wavenumber(double energy_offset) const;
    /// Group velocity (a per 1/g0) of the u channel at that wavenumber.
    [[nodiscard]] double group_velocity(double q) const;
};

enum class Channel { Plus, Minus };

struct ModeLabel {
    Channel incoming = Channel::Minus;
    double delta = 0.0;  // rotating-frame frequency in units of g0
};

struct ModeState {
    std::vector<cplx> u;
    std::vector<cplx> w;
    double t = 0.0;
    ModeLabel label;
};

enum class RampShape { Constant, TanhOn, TanhPulse };

/// g(x,t) = g0_peak * envelope(t) on [x_lo, x_hi], zero elsewhere.
///
/// TanhOn:    (1 + tanh(gamma (t - t_on))) / 2
/// TanhPulse: TanhOn times (1 - tanh(gamma (t - t_off))) / 2
struct CouplingRamp {
    double g0_peak = 1.0;
    double gamma = 0.0;
    RampShape shape = RampShape::TanhOn;
    double t_on = 0.0;
    double t_off = 0.0;
    double x_lo = 0.0;
    double x_hi = 1.0;

    [[nodiscard]] double envelope(double t) const;
    /// Fraction of each grid cell covered by [x_lo, x_hi]; edges fall between
    /// grid points in general and partial cells keep the slab length exact to
    /// second order in dx.
    [[nodiscard]] std::vector<double> spatial_profile(const GridSpec& grid) const;
};

/// Optional continuous-wave injection into one channel:
/// i dpsi/dt += profile(x) * e^{-i delta t} * (1 + tanh((t - t_on)/rise)) / 2.
struct Drive {
    Channel channel = Channel::Minus;
    std::vector<cplx> profile;
    double delta = 0.0;
    double t_on = 0.0;
    double rise = 1.0;

    [[nodiscard]] cplx amplitude(double t) const;
};

struct EvolveOptions {
    std::optional<Drive> drive;
    /// Called with the state after every observe_every steps (0 disables).
    std::function<void(const ModeState&)> observer;
    int observe_every = 0;
    /// Upper band edge used for the resolution check, in units of g0 above
    /// the chemical potential.
    double band_margin = 4.0;
};

/// Strang splitting: half kinetic step in the spectral basis, then the local
/// part (potential phases, absorber damping and the exact exponential of the
/// 2x2 coupling generator [[cosh, -i sinh], [i sinh, cosh]]), then the other
/// half kinetic step. Every sub-step preserves |u|^2 - |w|^2 pointwise or
/// in norm, so the symplectic norm is conserved to round-off without an
/// absorber. Second order in dt.
///
/// Throws Resolution when the grid misses the band, InstabilityDetected when
/// the total norm outgrows e^{2 g0_peak t} (checked only without a drive).
[[nodiscard]] ModeState evolve(ModeState state, const CouplingRamp& ramp,
                               std::span<const double> potential, const GridSpec& grid,
                               const BeamModel& model, double t_final,
                               const EvolveOptions& options = {});

[[nodiscard]] double symplectic_norm(const ModeState& state, const GridSpec& grid);
[[nodiscard]] double total_norm(const ModeState& state, const GridSpec& grid);

/// Region and time interval analysed by extract_output_correlators.
struct OutputWindow {
    double x_lo = 0.0;
    double x_hi = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::vector<double> deltas;
    double bin_width = 1.0;  // requested frequency resolution, units of g0
    Channel input = Channel::Minus;
    int sub_windows = 4;     // for the spread estimate
};

struct CorrelatorEstimate {
    double delta = 0.0;
    /// |alpha|^2 of the input channel and |beta|^2 of the conjugate output,
    /// both normalised to the incoming flux.
    double alpha_sq = 0.0;
    double beta_sq = 0.0;
    double alpha_sq_stderr = 0.0;
    double beta_sq_stderr = 0.0;
    cplx incoming{};
    double resolution = 0.0;
};

/// Hann-windowed temporal Fourier component at each delta, then a least
/// squares split of the field in [x_lo, x_hi] into incoming and outgoing
/// plane waves of each channel. Amplitudes are flux normalised (times
/// sqrt(q)). The spread across sub_windows overlapping sub-intervals gives
/// the standard error. Throws WindowTooShort when 2 pi / (t_hi - t_lo)
/// exceeds bin_width or fewer than 8 snapshots fall inside the window.
[[nodiscard]] std::vector<CorrelatorEstimate> extract_output_correlators(
    std::span<const ModeState> history, const OutputWindow& window, const GridSpec& grid,
    const BeamModel& model);

/// Columnar snapshot: x, Re u, Im u, Re w, Im w.
[[nodiscard]] std::string snapshot_csv(const ModeState& state, const GridSpec& grid);

/// Steady-output check: a continuous incoming wave at frequency delta in the
/// minus channel hits the hard-wall slab while the coupling ramps on with
/// rate gamma; |beta|^2 is measured over [t_on + 3/gamma, t_on + 5/gamma].
struct SteadyOutputSetup {
    BeamModel model{20.0, 1.0};
    double gamma = 0.01;
    double delta = 0.0;
    GridSpec grid{0.0, 40.0, 2047, 0.02, {16.0, 4.0}, Boundary::HardWall};
    double drive_center = 14.0;
    double drive_width = 1.0;
    double fit_lo = 2.0;
    double fit_hi = 9.0;
    double settle_time = 40.0;   // drive transient has left the fit region
    double sample_every = 0.4;   // snapshot spacing in 1/g0
};

struct SteadyOutputResult {
    double beta_sq_time_domain = 0.0;
    double beta_sq_stderr = 0.0;
    double alpha_sq_time_domain = 0.0;
    double beta_sq_frequency_domain = 0.0;
    double relative_error = 0.0;
    double r_frequency_domain = 0.0;
    double ramp_center = 0.0;
    ModeState final_state;
};

[[nodiscard]] SteadyOutputResult run_steady_output(const SteadyOutputSetup& setup);

}  // namespace entbeam
