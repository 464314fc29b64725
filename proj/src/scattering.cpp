#include "entbeam/scattering.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "entbeam/error.hpp"

namespace entbeam {

namespace {

using Mat4 = Eigen::Matrix<cplx, 4, 4>;
using Vec4 = Eigen::Matrix<cplx, 4, 1>;
constexpr cplx kI{0.0, 1.0};

struct ModePair {
    std::array<double, 2> eigenvalue{};
    std::array<std::array<double, 2>, 2> eigenvector{};
};

ModePair diagonalize(double e_plus, double e_minus, double coupling) {
    Eigen::Matrix2d h;
    h << e_plus, -coupling, -coupling, e_minus;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
    ModePair out;
    for (int j = 0; j < 2; ++j) {
        out.eigenvalue[j] = es.eigenvalues()(j);
        Eigen::Vector2d v = es.eigenvectors().col(j);
        // Fix the sign so the largest component is positive; results are then
        // a pure function of the inputs.
        if (std::abs(v(0)) >= std::abs(v(1)) ? v(0) < 0.0 : v(1) < 0.0) v = -v;
        out.eigenvector[j] = {v(0), v(1)};
    }
    return out;
}

cplx wavevector_for(double scale, double lambda) {
    return lambda >= 0.0 ? cplx(scale * std::sqrt(lambda), 0.0)
                         : cplx(0.0, scale * std::sqrt(-lambda));
}

}  // namespace

InteriorModes interior_modes(const DimensionlessParams& params) {
    params.validate();
    const ModePair mp = diagonalize(params.big_m + params.d, params.big_m - params.d, 1.0);
    InteriorModes out;
    out.eigenvalue = mp.eigenvalue;
    out.eigenvector = mp.eigenvector;
    out.length_scale = params.kappa * std::sqrt(params.big_m);
    for (int j = 0; j < 2; ++j) out.wavevector[j] = wavevector_for(out.length_scale, out.eigenvalue[j]);
    out.plus_channel_open = params.big_m + params.d > 0.0;
    out.minus_channel_open = params.big_m - params.d > 0.0;
    return out;
}

double BogoliubovCoefficients::plus_norm_residual() const {
    return std::norm(alpha_p) - std::norm(beta_p) - 1.0;
}

double BogoliubovCoefficients::minus_norm_residual() const {
    return std::norm(alpha_m) - std::norm(beta_m) - 1.0;
}

double BogoliubovCoefficients::cross_residual() const {
    return std::abs(alpha_p * beta_m - alpha_m * beta_p);
}

BogoliubovCoefficients solve_slab(const SlabProblem& pr) {
    ENTBEAM_REQUIRE(pr.energy_plus > 0.0 && pr.energy_minus > 0.0, ErrorCode::ClosedExteriorChannel,
                    "both exterior channels must propagate (mu +- Delta > 0)");
    ENTBEAM_REQUIRE(std::isfinite(pr.length_scale) && pr.length_scale >= 0.0 &&
                        std::isfinite(pr.coupling),
                    ErrorCode::ParameterDomain, "invalid slab problem");

    BogoliubovCoefficients out;
    if (pr.length_scale == 0.0) {
        // Zero-length region: bare hard wall at x = 0.
        out.alpha_p = out.alpha_m = -1.0;
        out.beta_p = out.beta_m = 0.0;
        return out;
    }

    const ModePair mp = diagonalize(pr.energy_plus, pr.energy_minus, pr.coupling);
    const double k1 = pr.length_scale * std::sqrt(pr.energy_plus);
    const double k2 = pr.length_scale * std::sqrt(pr.energy_minus);
    const double n1 = 1.0 / std::sqrt(k1);
    const double n2 = 1.0 / std::sqrt(k2);
    const cplx e1 = std::exp(kI * k1);
    const cplx e2 = std::exp(kI * k2);

    // Unknowns (c1, c2, B+, B-dagger); rows: u, u'/k1, w, w'/k2 at x = a.
    // Exterior: u = (A+ e^{-ik1x} + B+ e^{ik1x})/sqrt(k1),
    //           w = (A-^dag e^{ik2x} + B-^dag e^{-ik2x})/sqrt(k2).
    Mat4 sys = Mat4::Zero();
    for (int j = 0; j < 2; ++j) {
        const cplx q = wavevector_for(pr.length_scale, mp.eigenvalue[j]);
        const cplx s = std::sin(q);
        const cplx c = q * std::cos(q);
        const auto& ev = mp.eigenvector[j];
        sys(0, j) = ev[0] * s;
        sys(1, j) = ev[0] * c / k1;
        sys(2, j) = ev[1] * s;
        sys(3, j) = ev[1] * c / k2;
    }
    sys(0, 2) = -n1 * e1;
    sys(1, 2) = -kI * n1 * e1;
    sys(2, 3) = -n2 / e2;
    sys(3, 3) = kI * n2 / e2;

    Eigen::Matrix<cplx, 4, 2> rhs;
    // Incoming + channel.
    rhs.col(0) << n1 / e1, -kI * n1 / e1, 0.0, 0.0;
    // Incoming - channel.
    rhs.col(1) << 0.0, 0.0, n2 * e2, kI * n2 * e2;

    Eigen::JacobiSVD<Mat4> svd(sys);
    const auto& sv = svd.singularValues();
    out.condition_number = sv(3) > 0.0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
    out.ill_conditioned = out.condition_number > kIllConditionedLimit;

    const Eigen::Matrix<cplx, 4, 2> x = sys.fullPivLu().solve(rhs);
    out.alpha_p = x(2, 0);
    out.beta_m = std::conj(x(3, 0));
    out.beta_p = x(2, 1);
    out.alpha_m = std::conj(x(3, 1));
    return out;
}

BogoliubovCoefficients solve_scattering(const DimensionlessParams& params) {
    params.validate();
    ENTBEAM_REQUIRE(params.big_m > std::abs(params.d), ErrorCode::ClosedExteriorChannel,
                    "mu - |Delta| <= 0 (big_m = " + std::to_string(params.big_m) +
                        ", d = " + std::to_string(params.d) + ")");
    BogoliubovCoefficients out = solve_slab({params.big_m + params.d, params.big_m - params.d, 1.0,
                                             params.kappa * std::sqrt(params.big_m)});
    out.d = params.d;
    out.big_m = params.big_m;
    out.kappa = params.kappa;
    return out;
}

SqueezingValue r_from_coefficients(const BogoliubovCoefficients& c, double tolerance) {
    const double rp = std::abs(c.beta_p) / std::abs(c.alpha_p);
    const double rm = std::abs(c.beta_m) / std::abs(c.alpha_m);
    ENTBEAM_REQUIRE(std::abs(rp - rm) <= tolerance, ErrorCode::InconsistentChannels,
                    "channel ratios differ: " + std::to_string(rp) + " vs " + std::to_string(rm));
    if (rp >= 1.0 || rm >= 1.0) return SqueezingValue::from_argument(std::max(rp, rm));
    return SqueezingValue::from_ratio(0.5 * (rp + rm));
}

}  // namespace entbeam
