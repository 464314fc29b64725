#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "entbeam/beam_dynamics.hpp"
#include "entbeam/core_model.hpp"

namespace entbeam {

// Weak-coupling pair creation. To first order in g the state is
//   |Psi(t)> = int f(x, y, t) phi_{+1}^dagger(x) phi_{-1}^dagger(y) dx dy |vac>,
// and in the frame rotating at 2 mu the amplitude obeys
//   i df/dt = (h_+(x) + h_-(y) - 2 mu) f + g(x, t) delta(x - y),
// with h_+- = -d^2/2m + V_+-(x). The delta source is one diagonal cell of
// height 1/dx.
//
// Reduced units: lengths in the condensate half-width a, hbar = m = 1, so
// energies are in hbar/(m a^2) and times in m a^2/hbar. The coupling support
// is [-1, 1].

/// Setup in reduced units. grid must be Periodic and square; the same grid is
/// used for both atoms. Empty potentials mean V = 0.
struct PairSetup {
    double mu = 8.0;
    CouplingRamp ramp{0.02, 4.0, RampShape::TanhPulse, 1.0, 2.0, -1.0, 1.0};
    GridSpec grid{-24.0, 24.0, 512, 0.01, {}, Boundary::Periodic};
    std::vector<double> potential_plus;
    std::vector<double> potential_minus;
    double t0 = 3.5;
    /// Created norm^2 above this raises PerturbationInvalid.
    double max_created_norm = 0.1;
};

struct PairAmplitude {
    int n = 0;                 // grid points per axis
    std::vector<double> x;     // shared axis coordinates
    double dx = 0.0;
    std::vector<cplx> f;       // row-major, f[i * n + j] = f(x_i, y_j)
    double t0 = 0.0;
    double half_width = 1.0;   // a in reduced units
    double total_norm = 0.0;   // sum |f|^2 dx dy
    double leakage_max_amplitude = 0.0;  // max |f| with |x|, |y| <= a
    double edge_weight = 0.0;            // |f|^2 weight within 10% of the grid edges

    [[nodiscard]] cplx at(int i, int j) const { return f[static_cast<std::size_t>(i) * n + j]; }
};

/// Converts SI inputs: mu, g0 and potentials in rad/s, grid in meters and
/// seconds, ramp gamma/t_on/t_off in SI as well.
struct PairPhysicalInput {
    PhysicalParams params;
    std::vector<double> potential_plus;   // rad/s on the grid
    std::vector<double> potential_minus;
    CouplingRamp ramp;                    // g0_peak in rad/s; support in meters
    GridSpec grid;                        // meters, seconds
    double t0 = 0.0;                      // seconds
};

[[nodiscard]] PairSetup to_reduced(const PairPhysicalInput& in);

/// Evolves the 2D amplitude to setup.t0 by Strang splitting (2D FFT kinetic
/// half steps around potential phases and the midpoint source). Throws
/// Resolution and PerturbationInvalid.
[[nodiscard]] PairAmplitude pair_amplitude(const PairSetup& setup);
[[nodiscard]] PairAmplitude pair_amplitude(const PairPhysicalInput& in);

/// Index sets: L = {x < -a}, R = {x > a}. Leakage is everything with at
/// least one coordinate in [-a, a].
struct QuadrantDecomposition {
    double w_ll = 0.0, w_lr = 0.0, w_rl = 0.0, w_rr = 0.0;
    double leakage = 0.0;
    double total = 0.0;
    std::vector<int> left;   // axis indices with x < -a, ascending
    std::vector<int> right;  // axis indices with x > a, ascending
    /// Restricted amplitudes on (first-axis side) x (second-axis side)
    /// blocks, row-major: ll is left x left, lr is left x right, ...
    std::vector<cplx> f_ll, f_lr, f_rl, f_rr;
    double cell = 0.0;  // dx * dy
};

[[nodiscard]] QuadrantDecomposition quadrant_decompose(const PairAmplitude& fa);

/// One atom on each side, expressed in (left coordinate, right coordinate):
///   branch_a(l, r) = f_LR(l, r)  with internal labels (+1 left, -1 right)
///   branch_b(l, r) = f_RL(r, l)  with internal labels (-1 left, +1 right)
/// scaled so that ||a||^2 + ||b||^2 = 1 (sum times cell).
struct ProjectedPairState {
    int n_left = 0;
    int n_right = 0;
    std::vector<cplx> branch_a;  // row-major n_left x n_right
    std::vector<cplx> branch_b;
    double cell = 0.0;
    double normalization = 1.0;       // multiplier applied to the raw amplitudes
    double success_probability = 0.0; // (w_LR + w_RL) / total
};

/// Throws EmptyPostSelection when w_LR + w_RL == 0.
[[nodiscard]] ProjectedPairState post_select(const QuadrantDecomposition& q);

/// Internal state after tracing out motion, in the basis {|+1,-1>, |-1,+1>}
/// (left label first): [[||a||^2, <b|a>], [<a|b>, ||b||^2]].
[[nodiscard]] Eigen::Matrix2cd internal_reduced_state(const ProjectedPairState& s);

/// The same state embedded in the two-qubit space, basis |++>, |+->, |-+>,
/// |--> with the left qubit first.
[[nodiscard]] Eigen::Matrix4cd two_qubit_state(const Eigen::Matrix2cd& reduced);

struct BellMetrics {
    double fidelity = 0.0;  // <Psi+| rho |Psi+>, Psi+ = (|+-> + |-+>)/sqrt 2
    double chsh = 0.0;      // max CHSH over local settings (Horodecki)
    double entropy = 0.0;   // von Neumann entropy (nats) of one side
};

[[nodiscard]] BellMetrics bell_metrics(const Eigen::Matrix4cd& rho);
[[nodiscard]] BellMetrics bell_metrics(const ProjectedPairState& s);

/// Dense |f|^2 grid as CSV: x, y, density.
[[nodiscard]] std::string density_csv(const PairAmplitude& fa, int stride = 1);

/// Gaussian bump of the given height centred at x_c on the grid; used to
/// break the left/right symmetry for one internal state.
[[nodiscard]] std::vector<double> gaussian_barrier(const GridSpec& grid, double height, double x_c,
                                                   double width);

}  // namespace entbeam
