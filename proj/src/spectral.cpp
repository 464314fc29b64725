#include "spectral.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <numbers>

#include "entbeam/error.hpp"

namespace entbeam::detail {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void copy_in(fftw_complex* dst, std::span<const cplx> src) {
    std::memcpy(dst, src.data(), src.size() * sizeof(cplx));
}

void copy_out(std::span<cplx> dst, const fftw_complex* src, double scale) {
    const auto* s = reinterpret_cast<const cplx*>(src);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = s[i] * scale;
}

double fourier_wavenumber(std::size_t i, std::size_t n, double period) {
    const auto si = static_cast<long long>(i);
    const auto sn = static_cast<long long>(n);
    const long long m = si < (sn + 1) / 2 ? si : si - sn;
    return 2.0 * std::numbers::pi * static_cast<double>(m) / period;
}

}  // namespace

Transform1D::Transform1D(std::size_t n, TransformKind kind) : n_(n), kind_(kind) {
    ENTBEAM_REQUIRE(n >= 2, ErrorCode::Resolution, "transform length must be >= 2");
    std::lock_guard lock(planner_mutex());
    buf_ = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    if (kind == TransformKind::SineI) {
        // Real and imaginary parts are two interleaved real sequences.
        auto* re = reinterpret_cast<double*>(buf_);
        const fftw_r2r_kind k = FFTW_RODFT00;
        fwd_ = fftw_plan_many_r2r(1, &len, 2, re, nullptr, 2, 1, re, nullptr, 2, 1, &k, FFTW_ESTIMATE);
        bwd_ = fwd_;
    } else {
        fwd_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
}

Transform1D::~Transform1D() {
    std::lock_guard lock(planner_mutex());
    if (bwd_ != fwd_) fftw_destroy_plan(bwd_);
    fftw_destroy_plan(fwd_);
    fftw_free(buf_);
}

void Transform1D::forward(std::span<cplx> data) {
    copy_in(buf_, data);
    fftw_execute(fwd_);
    copy_out(data, buf_, 1.0);
}

void Transform1D::backward(std::span<cplx> data) {
    copy_in(buf_, data);
    fftw_execute(bwd_);
    const double scale = kind_ == TransformKind::SineI ? 1.0 / (2.0 * static_cast<double>(n_ + 1))
                                                        : 1.0 / static_cast<double>(n_);
    copy_out(data, buf_, scale);
}

double Transform1D::wavenumber(std::size_t i, double length) const {
    if (kind_ == TransformKind::SineI) return std::numbers::pi * static_cast<double>(i + 1) / length;
    return fourier_wavenumber(i, n_, length);
}

Transform2D::Transform2D(std::size_t n) : n_(n) {
    ENTBEAM_REQUIRE(n >= 2, ErrorCode::Resolution, "transform length must be >= 2");
    std::lock_guard lock(planner_mutex());
    buf_ = fftw_alloc_complex(n * n);
    const int len = static_cast<int>(n);
    fwd_ = fftw_plan_dft_2d(len, len, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(len, len, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Transform2D::~Transform2D() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
}

void Transform2D::forward(std::span<cplx> data) {
    copy_in(buf_, data);
    fftw_execute(fwd_);
    copy_out(data, buf_, 1.0);
}

void Transform2D::backward(std::span<cplx> data) {
    copy_in(buf_, data);
    fftw_execute(bwd_);
    copy_out(data, buf_, 1.0 / static_cast<double>(n_ * n_));
}

double Transform2D::wavenumber(std::size_t i, double period) const {
    return fourier_wavenumber(i, n_, period);
}

}  // namespace entbeam::detail
