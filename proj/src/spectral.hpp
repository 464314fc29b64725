#pragma once

// FFTW-backed transforms used by the split-step integrators. Plans are made
// with FFTW_ESTIMATE so the chosen algorithm, and hence every output bit, is
// independent of timing.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>

namespace entbeam::detail {

using cplx = std::complex<double>;

enum class TransformKind {
    SineI,    // DST-I: Dirichlet walls at both ends of the grid
    Fourier,  // periodic DFT
};

/// In-place 1D transform over a complex array of fixed length. Owns aligned
/// scratch storage; forward() then backward() is the identity.
class Transform1D {
public:
    Transform1D(std::size_t n, TransformKind kind);
    ~Transform1D();
    Transform1D(const Transform1D&) = delete;
    Transform1D& operator=(const Transform1D&) = delete;

    void forward(std::span<cplx> data);
    void backward(std::span<cplx> data);

    /// Wavenumber of spectral index i for a grid of physical length L (the
    /// wall-to-wall distance for SineI, the period for Fourier).
    [[nodiscard]] double wavenumber(std::size_t i, double length) const;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    TransformKind kind_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// In-place 2D periodic DFT over an n x n row-major array.
class Transform2D {
public:
    explicit Transform2D(std::size_t n);
    ~Transform2D();
    Transform2D(const Transform2D&) = delete;
    Transform2D& operator=(const Transform2D&) = delete;

    void forward(std::span<cplx> data);
    void backward(std::span<cplx> data);

    [[nodiscard]] double wavenumber(std::size_t i, double period) const;
    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

}  // namespace entbeam::detail
