#include "entbeam/beam_dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>

#include "entbeam/error.hpp"
#include "entbeam/scattering.hpp"
#include "spectral.hpp"

namespace entbeam {

namespace {

constexpr cplx kI{0.0, 1.0};

}  // namespace

void GridSpec::validate() const {
    ENTBEAM_REQUIRE(n_points >= 16, ErrorCode::Resolution, "n_points must be >= 16");
    ENTBEAM_REQUIRE(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
                    ErrorCode::Resolution, "grid requires x_max > x_min");
    ENTBEAM_REQUIRE(std::isfinite(dt) && dt > 0.0, ErrorCode::Resolution, "dt must be > 0");
    ENTBEAM_REQUIRE(absorber.width >= 0.0 && absorber.width <= x_max - x_min &&
                        absorber.strength >= 0.0,
                    ErrorCode::Resolution, "absorber must lie inside the grid");
}

double GridSpec::dx() const {
    const double len = x_max - x_min;
    return boundary == Boundary::HardWall ? len / (n_points + 1) : len / n_points;
}

double GridSpec::x(int i) const {
    return boundary == Boundary::HardWall ? x_min + (i + 1) * dx() : x_min + i * dx();
}

std::vector<double> GridSpec::coordinates() const {
    std::vector<double> xs(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) xs[static_cast<std::size_t>(i)] = x(i);
    return xs;
}

void GridSpec::require_resolves(double k_max) const {
    const double needed = 2.0 * std::numbers::pi / (8.0 * k_max);
    ENTBEAM_REQUIRE(dx() <= needed, ErrorCode::Resolution,
                    "grid spacing " + std::to_string(dx()) + " exceeds " + std::to_string(needed) +
                        " (8 points per shortest wavelength, k_max = " + std::to_string(k_max) + ")");
}

void BeamModel::validate() const {
    ENTBEAM_REQUIRE(std::isfinite(big_m) && big_m > 0.0 && std::isfinite(kappa) && kappa > 0.0,
                    ErrorCode::ParameterDomain, "beam model needs big_m > 0 and kappa > 0");
}

double BeamModel::wavenumber(double energy_offset) const {
    return kappa * std::sqrt(big_m) * std::sqrt(std::max(0.0, big_m + energy_offset));
}

double BeamModel::group_velocity(double q) const { return 2.0 * q / (kappa * kappa * big_m); }

double CouplingRamp::envelope(double t) const {
    switch (shape) {
        case RampShape::Constant: return 1.0;
        case RampShape::TanhOn: return 0.5 * (1.0 + std::tanh(gamma * (t - t_on)));
        case RampShape::TanhPulse:
            return 0.25 * (1.0 + std::tanh(gamma * (t - t_on))) * (1.0 - std::tanh(gamma * (t - t_off)));
    }
    return 0.0;
}

std::vector<double> CouplingRamp::spatial_profile(const GridSpec& grid) const {
    std::vector<double> prof(static_cast<std::size_t>(grid.n_points), 0.0);
    const double h = grid.dx();
    for (int i = 0; i < grid.n_points; ++i) {
        const double lo = grid.x(i) - 0.5 * h;
        const double hi = grid.x(i) + 0.5 * h;
        const double overlap = std::min(hi, x_hi) - std::max(lo, x_lo);
        prof[static_cast<std::size_t>(i)] = std::clamp(overlap / h, 0.0, 1.0);
    }
    return prof;
}

cplx Drive::amplitude(double t) const {
    return std::exp(-kI * delta * t) * 0.5 * (1.0 + std::tanh((t - t_on) / rise));
}

double symplectic_norm(const ModeState& s, const GridSpec& grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) acc += std::norm(s.u[i]) - std::norm(s.w[i]);
    return acc * grid.dx();
}

double total_norm(const ModeState& s, const GridSpec& grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) acc += std::norm(s.u[i]) + std::norm(s.w[i]);
    return acc * grid.dx();
}

ModeState evolve(ModeState state, const CouplingRamp& ramp, std::span<const double> potential,
                 const GridSpec& grid, const BeamModel& model, double t_final,
                 const EvolveOptions& options) {
    grid.validate();
    model.validate();
    const auto n = static_cast<std::size_t>(grid.n_points);
    ENTBEAM_REQUIRE(state.u.size() == n && state.w.size() == n, ErrorCode::Resolution,
                    "state size does not match grid");
    ENTBEAM_REQUIRE(potential.empty() || potential.size() == n, ErrorCode::Resolution,
                    "potential size does not match grid");
    if (options.drive) {
        ENTBEAM_REQUIRE(options.drive->profile.size() == n, ErrorCode::Resolution,
                        "drive profile size does not match grid");
    }

    double deepest = 0.0;
    for (double v : potential) deepest = std::max(deepest, -v);
    const double drive_offset = options.drive ? std::abs(options.drive->delta) : 0.0;
    grid.require_resolves(
        model.wavenumber(std::abs(ramp.g0_peak) + drive_offset + deepest + options.band_margin));

    detail::Transform1D tr(n, grid.boundary == Boundary::HardWall ? detail::TransformKind::SineI
                                                                   : detail::TransformKind::Fourier);
    const double dt = grid.dt;
    const double kin_scale = 1.0 / (model.kappa * model.kappa * model.big_m);

    // Half-step kinetic phases, e^{-i h dt/2} on u and the conjugate on w.
    std::vector<cplx> kin_half(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = tr.wavenumber(i, grid.transform_length());
        kin_half[i] = std::exp(-kI * (q * q * kin_scale - model.big_m) * (0.5 * dt));
    }

    // Local half-step factors: potential phase and absorber damping.
    std::vector<cplx> loc_u(n, 1.0), loc_w(n, 1.0);
    const double abs_start = grid.x_max - grid.absorber.width;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = potential.empty() ? 0.0 : potential[i];
        double damp = 0.0;
        const double xi = grid.x(static_cast<int>(i));
        if (grid.absorber.width > 0.0 && xi > abs_start) {
            const double s = (xi - abs_start) / grid.absorber.width;
            damp = grid.absorber.strength * s * s;
        }
        loc_u[i] = std::exp((-kI * v - damp) * (0.5 * dt));
        loc_w[i] = std::exp((kI * v - damp) * (0.5 * dt));
    }
    const std::vector<double> g_prof = ramp.spatial_profile(grid);

    const auto n_steps = static_cast<long long>(std::ceil((t_final - state.t) / dt - 1e-9));
    const double norm0 = total_norm(state, grid);
    const double t0 = state.t;

    auto kinetic = [&](std::vector<cplx>& f, bool conj_phase) {
        tr.forward(f);
        for (std::size_t i = 0; i < n; ++i) f[i] *= conj_phase ? std::conj(kin_half[i]) : kin_half[i];
        tr.backward(f);
    };

    for (long long step = 0; step < n_steps; ++step) {
        const double t_mid = state.t + 0.5 * dt;
        kinetic(state.u, false);
        kinetic(state.w, true);

        const double g_now = ramp.g0_peak * ramp.envelope(t_mid);
        cplx src{};
        std::vector<cplx>* src_target = nullptr;
        if (options.drive) {
            src = -kI * (0.5 * dt) * options.drive->amplitude(t_mid);
            src_target = options.drive->channel == Channel::Plus ? &state.u : &state.w;
        }
        for (std::size_t i = 0; i < n; ++i) {
            state.u[i] *= loc_u[i];
            state.w[i] *= loc_w[i];
            if (src_target) (*src_target)[i] += src * options.drive->profile[i];
            const double gdt = g_now * g_prof[i] * dt;
            if (gdt != 0.0) {
                const double ch = std::cosh(gdt);
                const double sh = std::sinh(gdt);
                const cplx u = state.u[i];
                const cplx w = state.w[i];
                state.u[i] = ch * u - kI * sh * w;
                state.w[i] = kI * sh * u + ch * w;
            }
            if (src_target) (*src_target)[i] += src * options.drive->profile[i];
            state.u[i] *= loc_u[i];
            state.w[i] *= loc_w[i];
        }

        kinetic(state.u, false);
        kinetic(state.w, true);
        state.t = t0 + static_cast<double>(step + 1) * dt;

        if (!options.drive && (step % 64 == 63 || step + 1 == n_steps)) {
            const double bound = norm0 * std::exp(2.0 * std::abs(ramp.g0_peak) * (state.t - t0));
            const double now = total_norm(state, grid);
            ENTBEAM_REQUIRE(std::isfinite(now) && now <= bound * (1.0 + 1e-6) + 1e-300,
                            ErrorCode::InstabilityDetected,
                            "norm " + std::to_string(now) + " exceeds bound " + std::to_string(bound) +
                                " at t = " + std::to_string(state.t));
        }
        if (options.observer && options.observe_every > 0 && (step + 1) % options.observe_every == 0) {
            options.observer(state);
        }
    }
    return state;
}

namespace {

struct PlaneWaveFit {
    cplx plus_k;   // coefficient of e^{+iqx}
    cplx minus_k;  // coefficient of e^{-iqx}
};

PlaneWaveFit fit_plane_waves(std::span<const cplx> field, std::span<const double> xs, double q) {
    Eigen::MatrixXcd a(static_cast<Eigen::Index>(xs.size()), 2);
    Eigen::VectorXcd b(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = std::exp(kI * q * xs[i]);
        a(r, 1) = std::exp(-kI * q * xs[i]);
        b(r) = field[i];
    }
    const Eigen::Vector2cd c = a.colPivHouseholderQr().solve(b);
    return {c(0), c(1)};
}

struct WindowedEstimate {
    double alpha_sq = 0.0;
    double beta_sq = 0.0;
    cplx incoming{};
};

WindowedEstimate estimate_over(std::span<const ModeState* const> snaps, double t_lo, double t_hi,
                               double delta, const OutputWindow& win, std::span<const int> idx,
                               std::span<const double> xs, const BeamModel& model) {
    std::vector<cplx> uf(idx.size()), wf(idx.size());
    double wsum = 0.0;
    for (const ModeState* s : snaps) {
        if (s->t < t_lo || s->t > t_hi) continue;
        const double phase = (s->t - t_lo) / (t_hi - t_lo);
        const double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * phase));
        const cplx rot = hann * std::exp(kI * delta * s->t);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            uf[j] += rot * s->u[static_cast<std::size_t>(idx[j])];
            wf[j] += rot * s->w[static_cast<std::size_t>(idx[j])];
        }
        wsum += hann;
    }
    for (auto& v : uf) v /= wsum;
    for (auto& v : wf) v /= wsum;

    // u carries energy mu + Delta; w = Phi_-^dagger carries mu - Delta and
    // its incoming part is e^{+iqx}.
    const double qu = model.wavenumber(delta);
    const double qw = model.wavenumber(-delta);
    const PlaneWaveFit fu = fit_plane_waves(uf, xs, qu);
    const PlaneWaveFit fw = fit_plane_waves(wf, xs, qw);
    const double u_out = std::norm(fu.plus_k) * qu;
    const double u_in = std::norm(fu.minus_k) * qu;
    const double w_in = std::norm(fw.plus_k) * qw;
    const double w_out = std::norm(fw.minus_k) * qw;

    WindowedEstimate e;
    if (win.input == Channel::Minus) {
        e.alpha_sq = w_out / w_in;
        e.beta_sq = u_out / w_in;
        e.incoming = fw.plus_k;
    } else {
        e.alpha_sq = u_out / u_in;
        e.beta_sq = w_out / u_in;
        e.incoming = fu.minus_k;
    }
    return e;
}

}  // namespace

std::vector<CorrelatorEstimate> extract_output_correlators(std::span<const ModeState> history,
                                                           const OutputWindow& window,
                                                           const GridSpec& grid,
                                                           const BeamModel& model) {
    model.validate();
    const double span = window.t_hi - window.t_lo;
    ENTBEAM_REQUIRE(span > 0.0, ErrorCode::WindowTooShort, "empty time window");
    const double resolution = 2.0 * std::numbers::pi / span;
    ENTBEAM_REQUIRE(resolution <= window.bin_width, ErrorCode::WindowTooShort,
                    "frequency resolution " + std::to_string(resolution) +
                        " exceeds requested bin width " + std::to_string(window.bin_width));

    std::vector<const ModeState*> snaps;
    for (const auto& s : history) {
        if (s.t >= window.t_lo && s.t <= window.t_hi) snaps.push_back(&s);
    }
    ENTBEAM_REQUIRE(snaps.size() >= 8, ErrorCode::WindowTooShort,
                    "only " + std::to_string(snaps.size()) + " snapshots inside the window");

    std::vector<int> idx;
    std::vector<double> xs;
    for (int i = 0; i < grid.n_points; ++i) {
        if (grid.x(i) >= window.x_lo && grid.x(i) <= window.x_hi) {
            idx.push_back(i);
            xs.push_back(grid.x(i));
        }
    }
    ENTBEAM_REQUIRE(idx.size() >= 4, ErrorCode::Resolution, "fit region holds fewer than 4 points");

    std::vector<CorrelatorEstimate> out;
    const int nsub = std::max(2, window.sub_windows);
    for (double delta : window.deltas) {
        const WindowedEstimate full =
            estimate_over(snaps, window.t_lo, window.t_hi, delta, window, idx, xs, model);
        // Half-length sub-windows with even spacing.
        std::vector<WindowedEstimate> subs;
        const double sub_len = 0.5 * span;
        for (int k = 0; k < nsub; ++k) {
            const double lo = window.t_lo + (span - sub_len) * k / (nsub - 1);
            subs.push_back(estimate_over(snaps, lo, lo + sub_len, delta, window, idx, xs, model));
        }
        auto stderr_of = [&](auto member) {
            double mean = 0.0;
            for (const auto& s : subs) mean += s.*member;
            mean /= static_cast<double>(subs.size());
            double var = 0.0;
            for (const auto& s : subs) var += (s.*member - mean) * (s.*member - mean);
            var /= static_cast<double>(subs.size() - 1);
            return std::sqrt(var / static_cast<double>(subs.size()));
        };
        CorrelatorEstimate ce;
        ce.delta = delta;
        ce.alpha_sq = full.alpha_sq;
        ce.beta_sq = full.beta_sq;
        ce.alpha_sq_stderr = stderr_of(&WindowedEstimate::alpha_sq);
        ce.beta_sq_stderr = stderr_of(&WindowedEstimate::beta_sq);
        ce.incoming = full.incoming;
        ce.resolution = resolution;
        out.push_back(ce);
    }
    return out;
}

std::string snapshot_csv(const ModeState& state, const GridSpec& grid) {
    std::ostringstream os;
    os << "# t=" << state.t << "\n";
    os << "x,re_u,im_u,re_w,im_w\n";
    char line[160];
    for (std::size_t i = 0; i < state.u.size(); ++i) {
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g,%.10g\n", grid.x(static_cast<int>(i)),
                      state.u[i].real(), state.u[i].imag(), state.w[i].real(), state.w[i].imag());
        os << line;
    }
    return os.str();
}

SteadyOutputResult run_steady_output(const SteadyOutputSetup& setup) {
    setup.model.validate();
    ENTBEAM_REQUIRE(setup.gamma > 0.0, ErrorCode::ParameterDomain, "gamma must be > 0");
    const GridSpec& grid = setup.grid;
    grid.validate();
    const auto n = static_cast<std::size_t>(grid.n_points);

    // Directional source: Gaussian envelope on the incoming carrier e^{+iqx}
    // of the minus channel.
    const double q_in = setup.model.wavenumber(-setup.delta);
    Drive drive;
    drive.channel = Channel::Minus;
    drive.delta = setup.delta;
    drive.t_on = 0.25 * setup.settle_time;
    drive.rise = 0.05 * setup.settle_time;
    drive.profile.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = (grid.x(static_cast<int>(i)) - setup.drive_center) / setup.drive_width;
        drive.profile[i] = std::exp(-0.5 * xr * xr) * std::exp(kI * q_in * (xr * setup.drive_width));
    }

    CouplingRamp ramp;
    ramp.g0_peak = 1.0;
    ramp.gamma = setup.gamma;
    ramp.shape = RampShape::TanhOn;
    ramp.t_on = setup.settle_time + 3.0 / setup.gamma;
    ramp.x_lo = 0.0;
    ramp.x_hi = 1.0;

    const double t_lo = ramp.t_on + 3.0 / setup.gamma;
    const double t_hi = ramp.t_on + 5.0 / setup.gamma;

    std::vector<ModeState> history;
    EvolveOptions opt;
    opt.drive = drive;
    opt.observe_every = std::max(1, static_cast<int>(std::lround(setup.sample_every / grid.dt)));
    opt.observer = [&](const ModeState& s) {
        if (s.t >= t_lo - 1e-9 && s.t <= t_hi + 1e-9) history.push_back(s);
    };

    ModeState init;
    init.u.assign(n, 0.0);
    init.w.assign(n, 0.0);
    init.label = {Channel::Minus, setup.delta};
    ModeState fin = evolve(std::move(init), ramp, {}, grid, setup.model, t_hi + grid.dt, opt);

    OutputWindow win;
    win.x_lo = setup.fit_lo;
    win.x_hi = setup.fit_hi;
    win.t_lo = t_lo;
    win.t_hi = t_hi;
    win.deltas = {setup.delta};
    win.bin_width = 2.0 * std::numbers::pi / (t_hi - t_lo);
    win.input = Channel::Minus;
    const auto est = extract_output_correlators(history, win, grid, setup.model);

    const BogoliubovCoefficients c =
        solve_scattering({setup.delta, setup.model.big_m, setup.model.kappa});
    SteadyOutputResult res;
    res.beta_sq_time_domain = est.front().beta_sq;
    res.beta_sq_stderr = est.front().beta_sq_stderr;
    res.alpha_sq_time_domain = est.front().alpha_sq;
    res.beta_sq_frequency_domain = std::norm(c.beta_p);
    res.r_frequency_domain = r_from_coefficients(c).r;
    res.relative_error =
        std::abs(res.beta_sq_time_domain - res.beta_sq_frequency_domain) / res.beta_sq_frequency_domain;
    res.ramp_center = ramp.t_on;
    res.final_state = std::move(fin);
    return res;
}

}  // namespace entbeam
