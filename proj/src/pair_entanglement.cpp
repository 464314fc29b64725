#include "entbeam/pair_entanglement.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "entbeam/error.hpp"
#include "spectral.hpp"

namespace entbeam {

namespace {

constexpr cplx kI{0.0, 1.0};

std::vector<double> scaled(const std::vector<double>& v, double s) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [s](double x) { return x * s; });
    return out;
}

}  // namespace

PairSetup to_reduced(const PairPhysicalInput& in) {
    in.params.validate();
    ENTBEAM_REQUIRE(in.params.a > 0.0, ErrorCode::ParameterDomain, "pair geometry needs a > 0");
    const double len = in.params.a;
    const double time = in.params.m * len * len / kHbar;

    PairSetup s;
    s.mu = in.params.mu * time;
    s.ramp = in.ramp;
    s.ramp.g0_peak = in.ramp.g0_peak * time;
    s.ramp.gamma = in.ramp.gamma * time;
    s.ramp.t_on = in.ramp.t_on / time;
    s.ramp.t_off = in.ramp.t_off / time;
    s.ramp.x_lo = in.ramp.x_lo / len;
    s.ramp.x_hi = in.ramp.x_hi / len;
    s.grid = in.grid;
    s.grid.x_min = in.grid.x_min / len;
    s.grid.x_max = in.grid.x_max / len;
    s.grid.dt = in.grid.dt / time;
    s.grid.absorber = {};
    s.potential_plus = scaled(in.potential_plus, time);
    s.potential_minus = scaled(in.potential_minus, time);
    s.t0 = in.t0 / time;
    return s;
}

PairAmplitude pair_amplitude(const PairPhysicalInput& in) { return pair_amplitude(to_reduced(in)); }

PairAmplitude pair_amplitude(const PairSetup& setup) {
    const GridSpec& grid = setup.grid;
    grid.validate();
    ENTBEAM_REQUIRE(grid.boundary == Boundary::Periodic, ErrorCode::Resolution,
                    "pair grid must be periodic");
    ENTBEAM_REQUIRE(setup.mu > 0.0 && std::isfinite(setup.mu), ErrorCode::ParameterDomain,
                    "mu must be > 0");
    const auto n = static_cast<std::size_t>(grid.n_points);
    ENTBEAM_REQUIRE(setup.potential_plus.empty() || setup.potential_plus.size() == n,
                    ErrorCode::Resolution, "potential_plus size does not match grid");
    ENTBEAM_REQUIRE(setup.potential_minus.empty() || setup.potential_minus.size() == n,
                    ErrorCode::Resolution, "potential_minus size does not match grid");

    // Pair energy 2 mu can sit entirely in one atom.
    double deepest = 0.0;
    for (double v : setup.potential_plus) deepest = std::max(deepest, -v);
    for (double v : setup.potential_minus) deepest = std::max(deepest, -v);
    grid.require_resolves(std::sqrt(2.0 * (2.0 * setup.mu + deepest + 4.0)));

    detail::Transform2D tr(n);
    const double dt = grid.dt;
    const double period = grid.transform_length();

    std::vector<double> k2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = tr.wavenumber(i, period);
        k2[i] = 0.5 * k * k;
    }
    std::vector<cplx> kin_half(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            kin_half[i * n + j] = std::exp(-kI * (k2[i] + k2[j] - 2.0 * setup.mu) * (0.5 * dt));

    auto pot = [](const std::vector<double>& v, std::size_t i) { return v.empty() ? 0.0 : v[i]; };
    std::vector<cplx> ph_x(n), ph_y(n);
    bool has_potential = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double vp = pot(setup.potential_plus, i);
        const double vm = pot(setup.potential_minus, i);
        has_potential = has_potential || vp != 0.0 || vm != 0.0;
        ph_x[i] = std::exp(-kI * vp * (0.5 * dt));
        ph_y[i] = std::exp(-kI * vm * (0.5 * dt));
    }

    const std::vector<double> g_prof = setup.ramp.spatial_profile(grid);
    const double inv_dx = 1.0 / grid.dx();

    std::vector<cplx> f(n * n, cplx{});
    const auto n_steps = static_cast<long long>(std::ceil(setup.t0 / dt - 1e-9));
    auto apply_potential = [&] {
        if (!has_potential) return;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) f[i * n + j] *= ph_x[i] * ph_y[j];
    };
    auto kinetic = [&] {
        tr.forward(f);
        for (std::size_t k = 0; k < n * n; ++k) f[k] *= kin_half[k];
        tr.backward(f);
    };

    for (long long step = 0; step < n_steps; ++step) {
        const double t_mid = (static_cast<double>(step) + 0.5) * dt;
        kinetic();
        apply_potential();
        const double g = setup.ramp.g0_peak * setup.ramp.envelope(t_mid);
        if (g != 0.0) {
            for (std::size_t i = 0; i < n; ++i) f[i * n + i] += -kI * dt * g * g_prof[i] * inv_dx;
        }
        apply_potential();
        kinetic();
    }

    PairAmplitude out;
    out.n = grid.n_points;
    out.x = grid.coordinates();
    out.dx = grid.dx();
    out.t0 = static_cast<double>(n_steps) * dt;
    out.half_width = 1.0;

    const double cell = out.dx * out.dx;
    const double edge = 0.1 * (grid.x_max - grid.x_min);
    double total = 0.0, edge_w = 0.0, leak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double p = std::norm(f[i * n + j]);
            total += p;
            const double xi = out.x[i], yj = out.x[j];
            if (xi < grid.x_min + edge || xi > grid.x_max - edge || yj < grid.x_min + edge ||
                yj > grid.x_max - edge)
                edge_w += p;
            if (std::abs(xi) <= out.half_width && std::abs(yj) <= out.half_width)
                leak = std::max(leak, std::sqrt(p));
        }
    }
    out.total_norm = total * cell;
    out.edge_weight = edge_w * cell;
    out.leakage_max_amplitude = leak;
    ENTBEAM_REQUIRE(out.total_norm <= setup.max_created_norm, ErrorCode::PerturbationInvalid,
                    "created pair norm " + std::to_string(out.total_norm) + " exceeds " +
                        std::to_string(setup.max_created_norm));
    out.f = std::move(f);
    return out;
}

QuadrantDecomposition quadrant_decompose(const PairAmplitude& fa) {
    QuadrantDecomposition q;
    q.cell = fa.dx * fa.dx;
    for (int i = 0; i < fa.n; ++i) {
        if (fa.x[static_cast<std::size_t>(i)] < -fa.half_width) q.left.push_back(i);
        if (fa.x[static_cast<std::size_t>(i)] > fa.half_width) q.right.push_back(i);
    }
    auto block = [&](const std::vector<int>& rows, const std::vector<int>& cols, std::vector<cplx>& dst,
                     double& weight) {
        dst.reserve(rows.size() * cols.size());
        double acc = 0.0;
        for (int i : rows)
            for (int j : cols) {
                const cplx v = fa.at(i, j);
                dst.push_back(v);
                acc += std::norm(v);
            }
        weight = acc * q.cell;
    };
    block(q.left, q.left, q.f_ll, q.w_ll);
    block(q.left, q.right, q.f_lr, q.w_lr);
    block(q.right, q.left, q.f_rl, q.w_rl);
    block(q.right, q.right, q.f_rr, q.w_rr);

    double total = 0.0;
    for (const cplx& v : fa.f) total += std::norm(v);
    q.total = total * q.cell;
    // Remaining index pairs are exactly those with a coordinate in [-a, a].
    double leak = 0.0;
    for (int i = 0; i < fa.n; ++i) {
        const bool in_i = std::abs(fa.x[static_cast<std::size_t>(i)]) <= fa.half_width;
        for (int j = 0; j < fa.n; ++j) {
            const bool in_j = std::abs(fa.x[static_cast<std::size_t>(j)]) <= fa.half_width;
            if (in_i || in_j) leak += std::norm(fa.at(i, j));
        }
    }
    q.leakage = leak * q.cell;
    return q;
}

ProjectedPairState post_select(const QuadrantDecomposition& q) {
    const double w = q.w_lr + q.w_rl;
    ENTBEAM_REQUIRE(w > 0.0, ErrorCode::EmptyPostSelection, "no weight with one atom on each side");
    ProjectedPairState s;
    s.n_left = static_cast<int>(q.left.size());
    s.n_right = static_cast<int>(q.right.size());
    s.cell = q.cell;
    s.normalization = 1.0 / std::sqrt(w);
    s.success_probability = q.total > 0.0 ? w / q.total : 0.0;

    const auto nl = static_cast<std::size_t>(s.n_left);
    const auto nr = static_cast<std::size_t>(s.n_right);
    s.branch_a.resize(nl * nr);
    s.branch_b.resize(nl * nr);
    for (std::size_t l = 0; l < nl; ++l) {
        for (std::size_t r = 0; r < nr; ++r) {
            // f_LR is stored left x right; f_RL is stored right x left.
            s.branch_a[l * nr + r] = q.f_lr[l * nr + r] * s.normalization;
            s.branch_b[l * nr + r] = q.f_rl[r * nl + l] * s.normalization;
        }
    }
    return s;
}

Eigen::Matrix2cd internal_reduced_state(const ProjectedPairState& s) {
    double na = 0.0, nb = 0.0;
    cplx ba{};
    for (std::size_t k = 0; k < s.branch_a.size(); ++k) {
        na += std::norm(s.branch_a[k]);
        nb += std::norm(s.branch_b[k]);
        ba += std::conj(s.branch_b[k]) * s.branch_a[k];
    }
    const double tr = na + nb;
    Eigen::Matrix2cd rho;
    rho << na / tr, ba / tr, std::conj(ba) / tr, nb / tr;
    return rho;
}

Eigen::Matrix4cd two_qubit_state(const Eigen::Matrix2cd& reduced) {
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    rho(1, 1) = reduced(0, 0);
    rho(1, 2) = reduced(0, 1);
    rho(2, 1) = reduced(1, 0);
    rho(2, 2) = reduced(1, 1);
    return rho;
}

BellMetrics bell_metrics(const Eigen::Matrix4cd& rho) {
    BellMetrics m;
    Eigen::Vector4cd psi(0.0, 1.0, 1.0, 0.0);
    psi /= std::sqrt(2.0);
    m.fidelity = std::clamp((psi.adjoint() * rho * psi)(0, 0).real(), 0.0, 1.0);

    // Correlation tensor T_ij = Tr(rho sigma_i x sigma_j).
    std::array<Eigen::Matrix2cd, 3> pauli;
    pauli[0] << 0, 1, 1, 0;
    pauli[1] << 0, -kI, kI, 0;
    pauli[2] << 1, 0, 0, -1;
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Eigen::Matrix4cd op;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) op(r, c) = pauli[i](r / 2, c / 2) * pauli[j](r % 2, c % 2);
            t(i, j) = (rho * op).trace().real();
        }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t.transpose() * t);
    const auto& ev = es.eigenvalues();  // ascending
    m.chsh = 2.0 * std::sqrt(std::max(0.0, ev(2) + ev(1)));

    // Left reduced state: trace over the right qubit.
    Eigen::Matrix2cd left = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int r = 0; r < 2; ++r) left(a, b) += rho(2 * a + r, 2 * b + r);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> ls(left);
    for (int k = 0; k < 2; ++k) {
        const double p = ls.eigenvalues()(k);
        if (p > 0.0) m.entropy -= p * std::log(p);
    }
    return m;
}

BellMetrics bell_metrics(const ProjectedPairState& s) {
    return bell_metrics(two_qubit_state(internal_reduced_state(s)));
}

std::string density_csv(const PairAmplitude& fa, int stride) {
    stride = std::max(1, stride);
    std::ostringstream os;
    os << "# pair density |f(x,y)|^2 at t0=" << fa.t0 << ", lengths in units of a\n";
    os << "x,y,density\n";
    char line[96];
    for (int i = 0; i < fa.n; i += stride)
        for (int j = 0; j < fa.n; j += stride) {
            std::snprintf(line, sizeof line, "%.8g,%.8g,%.10g\n", fa.x[static_cast<std::size_t>(i)],
                          fa.x[static_cast<std::size_t>(j)], std::norm(fa.at(i, j)));
            os << line;
        }
    return os.str();
}

std::vector<double> gaussian_barrier(const GridSpec& grid, double height, double x_c, double width) {
    std::vector<double> v(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) {
        const double s = (grid.x(i) - x_c) / width;
        v[static_cast<std::size_t>(i)] = height * std::exp(-s * s);
    }
    return v;
}

}  // namespace entbeam
