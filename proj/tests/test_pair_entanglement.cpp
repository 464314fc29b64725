#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "entbeam/error.hpp"
#include "entbeam/pair_entanglement.hpp"
#include "support.hpp"

using namespace entbeam;
using std::numbers::pi;

namespace {

constexpr cplx kI{0.0, 1.0};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Config;
}

// Reduced-size version of the default geometry; pairs still separate well
// before they reach the box edge.
PairSetup small_setup() {
    PairSetup s;
    s.grid = GridSpec{-16.0, 16.0, 288, 0.01, {}, Boundary::Periodic};
    return s;
}

const PairAmplitude& symmetric_run() {
    static const PairAmplitude fa = pair_amplitude(small_setup());
    return fa;
}

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd k;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) k(r, c) = a(r / 2, c / 2) * b(r % 2, c % 2);
    return k;
}

Eigen::Matrix2cd spin(double theta, double phi) {
    Eigen::Matrix2cd m;
    m << std::cos(theta), std::sin(theta) * std::exp(-kI * phi), std::sin(theta) * std::exp(kI * phi),
        -std::cos(theta);
    return m;
}

// Brute-force CHSH: scan b, b' over a sphere grid; the optimal a, a' for
// fixed b, b' are along T(b + b') and T(b - b').
double chsh_brute_force(const Eigen::Matrix4cd& rho) {
    std::array<Eigen::Matrix2cd, 3> s;
    s[0] << 0, 1, 1, 0;
    s[1] << 0, -kI, kI, 0;
    s[2] << 1, 0, 0, -1;
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = (rho * kron(s[i], s[j])).trace().real();
    std::vector<Eigen::Vector3d> dirs;
    const int nt = 36, np = 72;
    for (int i = 0; i <= nt; ++i)
        for (int j = 0; j < np; ++j) {
            const double th = pi * i / nt, ph = 2 * pi * j / np;
            dirs.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        }
    std::vector<Eigen::Vector3d> tb;
    for (const auto& d : dirs) tb.push_back(t * d);
    double best = 0.0;
    for (std::size_t i = 0; i < tb.size(); ++i)
        for (std::size_t j = i; j < tb.size(); ++j)
            best = std::max(best, (tb[i] + tb[j]).norm() + (tb[i] - tb[j]).norm());
    return best;
}

Eigen::Matrix4cd projector(const Eigen::Vector4cd& v) { return v * v.adjoint() / v.squaredNorm(); }

}  // namespace

TEST_CASE("free two-particle propagation against the closed form") {
    // Point source in one cell at the origin, constant coupling, V = 0.
    PairSetup s;
    s.mu = 2.0;
    s.grid = GridSpec{-4.5, 4.5, 48, 0.00025, {}, Boundary::Periodic};
    const double dx = s.grid.dx();
    s.ramp = CouplingRamp{0.05, 0.0, RampShape::Constant, 0.0, 0.0, -0.5 * dx, 0.5 * dx};
    s.t0 = 0.5;
    const auto fa = pair_amplitude(s);

    const int n = 48;
    const int l = 24;
    REQUIRE(std::abs(fa.x[l]) < 1e-12);
    const double period = 9.0;
    std::vector<double> k(n);
    for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = 2 * pi * (i < n / 2 ? i : i - n) / period;
    // f_hat(t) = -S_hat (1 - e^{-iEt}) / E with E = (k1^2 + k2^2)/2 - 2 mu.
    std::vector<cplx> phi(static_cast<std::size_t>(n * n));
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            const double e = 0.5 * (k[p] * k[p] + k[q] * k[q]) - 2.0 * s.mu;
            phi[static_cast<std::size_t>(p * n + q)] =
                std::abs(e) < 1e-14 ? -kI * s.t0 : -(1.0 - std::exp(-kI * e * s.t0)) / e;
        }
    double worst = 0.0, peak = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx acc{};
            for (int p = 0; p < n; ++p) {
                const cplx ex = std::exp(kI * k[p] * (fa.x[i] - fa.x[l]));
                for (int q = 0; q < n; ++q)
                    acc += ex * std::exp(kI * k[q] * (fa.x[j] - fa.x[l])) * phi[static_cast<std::size_t>(p * n + q)];
            }
            acc *= 0.05 / dx / double(n * n);
            worst = std::max(worst, std::abs(fa.at(i, j) - acc));
            peak = std::max(peak, std::abs(acc));
        }
    MESSAGE("max deviation " << worst / peak << " of peak");
    CHECK(worst < 1e-3 * peak);

    // A point source has no preferred pair axis: f is symmetric under
    // x -> -x on either coordinate.
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) {
            const cplx a = fa.at(i, j);
            const cplx b = fa.at(n - i, j);
            REQUIRE(std::abs(a - b) < 1e-10 * peak);
        }
}

TEST_CASE("extended source emits back-to-back pairs") {
    const auto& fa = symmetric_run();
    const auto q = quadrant_decompose(fa);
    CHECK(q.w_lr + q.w_rl > 10.0 * (q.w_ll + q.w_rr));
    // Fast transient pairs reach the border of this reduced box; the bulk
    // does not.
    CHECK(fa.edge_weight < 0.1 * fa.total_norm);
    CHECK(fa.total_norm < 0.1);
    CHECK(fa.t0 == doctest::Approx(3.5));
}

TEST_CASE("exchange symmetry") {
    const auto& fa = symmetric_run();
    const double peak = max_abs(fa.f);
    double worst = 0.0;
    for (int i = 0; i < fa.n; ++i)
        for (int j = 0; j < fa.n; ++j) worst = std::max(worst, std::abs(fa.at(i, j) - fa.at(j, i)));
    CHECK(worst < 1e-10 * peak);

    // Swapping which state feels a potential transposes the amplitude.
    auto a = small_setup();
    auto b = small_setup();
    a.potential_plus = gaussian_barrier(a.grid, 2.0, -4.0, 0.3);
    b.potential_minus = a.potential_plus;
    const auto fa_a = pair_amplitude(a);
    const auto fa_b = pair_amplitude(b);
    worst = 0.0;
    for (int i = 0; i < fa_a.n; ++i)
        for (int j = 0; j < fa_a.n; ++j) worst = std::max(worst, std::abs(fa_a.at(i, j) - fa_b.at(j, i)));
    CHECK(worst < 1e-10 * peak);
}

TEST_CASE("quadrant partition is exact") {
    const auto& fa = symmetric_run();
    const auto q = quadrant_decompose(fa);
    CHECK(q.total == doctest::Approx(fa.total_norm).epsilon(1e-14));
    const double sum = q.w_ll + q.w_lr + q.w_rl + q.w_rr + q.leakage;
    CHECK(std::abs(sum - q.total) < 1e-13 * q.total);
    CHECK(q.f_lr.size() == q.left.size() * q.right.size());
    for (int i : q.left) CHECK(fa.x[static_cast<std::size_t>(i)] < -1.0);
}

TEST_CASE("symmetric configuration is a Bell state") {
    const auto& fa = symmetric_run();
    const auto s = post_select(quadrant_decompose(fa));
    CHECK(s.success_probability > 0.8);
    double norm = 0.0;
    for (std::size_t k = 0; k < s.branch_a.size(); ++k) norm += std::norm(s.branch_a[k]) + std::norm(s.branch_b[k]);
    CHECK(norm * s.cell == doctest::Approx(1.0).epsilon(1e-12));

    const auto m = bell_metrics(s);
    CHECK(m.fidelity >= 0.999);
    CHECK(std::abs(m.entropy - std::numbers::ln2) < 1e-3);
    CHECK(std::abs(m.chsh - 2.0 * std::numbers::sqrt2) < 1e-3);
}

TEST_CASE("perturbative linearity") {
    auto s = small_setup();
    s.ramp.g0_peak *= 3.0;
    const auto big = pair_amplitude(s);
    const auto& base = symmetric_run();
    double worst = 0.0;
    for (std::size_t k = 0; k < big.f.size(); ++k) worst = std::max(worst, std::abs(big.f[k] - 3.0 * base.f[k]));
    CHECK(worst < 1e-12 * max_abs(big.f));
    CHECK(big.total_norm == doctest::Approx(9.0 * base.total_norm).epsilon(1e-12));

    s.ramp.g0_peak = 1.0;
    CHECK(code_of([&] { (void)pair_amplitude(s); }) == ErrorCode::PerturbationInvalid);
}

TEST_CASE("asymmetry lowers all three metrics") {
    std::vector<BellMetrics> ms{bell_metrics(post_select(quadrant_decompose(symmetric_run())))};
    for (double h : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        auto s = small_setup();
        s.potential_plus = gaussian_barrier(s.grid, h, -4.0, 0.3);
        ms.push_back(bell_metrics(post_select(quadrant_decompose(pair_amplitude(s)))));
    }
    for (std::size_t k = 1; k < ms.size(); ++k) {
        CAPTURE(k);
        CHECK(ms[k].fidelity < ms[k - 1].fidelity);
        CHECK(ms[k].entropy < ms[k - 1].entropy);
        CHECK(ms[k].chsh < ms[k - 1].chsh);
    }
}

TEST_CASE("metrics of reference states") {
    Eigen::Vector4cd bell(0, 1, 1, 0);
    const auto mb = bell_metrics(projector(bell));
    CHECK(mb.fidelity == doctest::Approx(1.0));
    CHECK(mb.chsh == doctest::Approx(2.0 * std::numbers::sqrt2));
    CHECK(mb.entropy == doctest::Approx(std::numbers::ln2));

    Eigen::Vector4cd prod(0, 1, 0, 0);
    const auto mp = bell_metrics(projector(prod));
    CHECK(mp.fidelity == doctest::Approx(0.5));
    CHECK(mp.chsh == doctest::Approx(2.0));
    CHECK(mp.entropy == doctest::Approx(0.0));

    // Werner states.
    for (double p : {0.2, 0.6, 0.9}) {
        const Eigen::Matrix4cd rho = p * projector(bell) + (1.0 - p) * Eigen::Matrix4cd::Identity() / 4.0;
        const auto m = bell_metrics(rho);
        CHECK(m.chsh == doctest::Approx(2.0 * std::numbers::sqrt2 * p));
        CHECK(m.fidelity == doctest::Approx((1.0 + 3.0 * p) / 4.0));
        CHECK(m.entropy == doctest::Approx(std::numbers::ln2));
    }

    // Singlet-type phase lowers the fidelity to Psi+ but not the CHSH value.
    Eigen::Vector4cd singlet(0, 1, -1, 0);
    const auto ms = bell_metrics(projector(singlet));
    CHECK(ms.fidelity == doctest::Approx(0.0));
    CHECK(ms.chsh == doctest::Approx(2.0 * std::numbers::sqrt2));
}

TEST_CASE("CHSH agrees with a brute-force search") {
    testing::Gen gen(41);
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::Matrix4cd a;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) a(r, c) = cplx(gen.normal(), gen.normal());
        Eigen::Matrix4cd rho = a * a.adjoint();
        if (trial % 2 == 0) {
            // Mostly-pure entangled state.
            Eigen::Vector4cd v(gen.normal(), cplx(gen.normal(), gen.normal()), cplx(gen.normal(), gen.normal()),
                               gen.normal());
            rho = 0.9 * projector(v) + 0.1 * rho / rho.trace();
        }
        rho /= rho.trace();
        const double h = bell_metrics(rho).chsh;
        const double b = chsh_brute_force(rho);
        CAPTURE(trial);
        CHECK(b <= h + 1e-12);
        CHECK(b >= h - 2e-2);
    }
}

TEST_CASE("reduced state construction") {
    ProjectedPairState s;
    s.n_left = 1;
    s.n_right = 2;
    s.branch_a = {cplx(0.6, 0.0), cplx(0.0, 0.0)};
    s.branch_b = {cplx(0.0, 0.0), cplx(0.0, 0.8)};
    const auto rho = internal_reduced_state(s);
    CHECK(rho(0, 0).real() == doctest::Approx(0.36));
    CHECK(std::abs(rho(0, 1)) < 1e-15);  // orthogonal motional states
    const auto m = bell_metrics(s);
    CHECK(m.fidelity == doctest::Approx(0.5));
    CHECK(m.chsh == doctest::Approx(2.0));

    const auto q4 = two_qubit_state(rho);
    CHECK(q4(1, 1).real() == doctest::Approx(0.36));
    CHECK(q4(0, 0) == cplx(0.0));
}

TEST_CASE("errors and conversions") {
    QuadrantDecomposition empty;
    CHECK(code_of([&] { (void)post_select(empty); }) == ErrorCode::EmptyPostSelection);

    auto s = small_setup();
    s.grid.boundary = Boundary::HardWall;
    CHECK(code_of([&] { (void)pair_amplitude(s); }) == ErrorCode::Resolution);
    s = small_setup();
    s.potential_plus.assign(10, 0.0);
    CHECK(code_of([&] { (void)pair_amplitude(s); }) == ErrorCode::Resolution);
    s = small_setup();
    s.grid.n_points = 128;
    CHECK(code_of([&] { (void)pair_amplitude(s); }) == ErrorCode::Resolution);
    s = small_setup();
    s.mu = 0.0;
    CHECK(code_of([&] { (void)pair_amplitude(s); }) == ErrorCode::ParameterDomain);

    PairPhysicalInput in;
    in.params = PhysicalParams{2e4, 1e3, 2e-6, 1e-26, 0.0, 1.0};
    const double time = 1e-26 * 4e-12 / kHbar;
    in.ramp = CouplingRamp{100.0, 10.0, RampShape::TanhPulse, 1e-3, 2e-3, -2e-6, 2e-6};
    in.grid = GridSpec{-4e-5, 4e-5, 256, 1e-5, {}, Boundary::Periodic};
    in.t0 = 5e-3;
    const auto red = to_reduced(in);
    CHECK(red.mu == doctest::Approx(1e3 * time));
    CHECK(red.ramp.g0_peak == doctest::Approx(100.0 * time));
    CHECK(red.ramp.gamma == doctest::Approx(10.0 * time));
    CHECK(red.ramp.t_on == doctest::Approx(1e-3 / time));
    CHECK(red.ramp.x_lo == doctest::Approx(-1.0));
    CHECK(red.grid.x_max == doctest::Approx(20.0));
    CHECK(red.t0 == doctest::Approx(5e-3 / time));
}

TEST_CASE("density export and determinism") {
    PairSetup s;
    s.mu = 2.0;
    s.grid = GridSpec{-6.0, 6.0, 64, 0.01, {}, Boundary::Periodic};
    s.ramp = CouplingRamp{0.05, 4.0, RampShape::TanhPulse, 0.3, 0.8, -1.0, 1.0};
    s.t0 = 1.0;
    const auto a = pair_amplitude(s);
    const auto b = pair_amplitude(s);
    CHECK(a.f == b.f);
    const std::string csv = density_csv(a, 4);
    CHECK(csv == density_csv(b, 4));
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("# pair density", 0) == 0);
    std::getline(is, line);
    CHECK(line == "x,y,density");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 16 * 16);

    const auto bar = gaussian_barrier(s.grid, 3.0, 0.0, 0.5);
    CHECK(bar[32] == doctest::Approx(3.0));
    CHECK(bar[0] < 1e-10);
}
