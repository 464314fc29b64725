#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entbeam/analytic_squeezing.hpp"
#include "entbeam/core_model.hpp"

namespace entbeam {

inline constexpr const char* kToolVersion = "0.3.0";

enum class RunMode { Spectrum, Threshold, Compare, Dynamics, Pairs };
enum class Method { Analytic, Scattering, Both };

struct SpectrumGrid {
    double d_min = 0.0;
    double d_max = 3.0;
    int d_points = 41;
    double kappa_min = 0.0;
    double kappa_max = 1.45;
    int kappa_points = 30;

    [[nodiscard]] std::vector<double> d_values() const;
    [[nodiscard]] std::vector<double> kappa_values() const;
    bool operator==(const SpectrumGrid&) const = default;
};

struct ThresholdOptions {
    double kappa_min = 0.0;
    double kappa_max = 2.0;
    double d = 0.0;
    int scan_points = 4000;
    double tolerance = 1e-9;
    bool operator==(const ThresholdOptions&) const = default;
};

struct CompareOptions {
    std::vector<double> big_m_values{10.0, 30.0, 100.0, 300.0};
    double tolerance = 0.01;
    bool time_domain = false;
    double time_domain_gamma = 0.1;
    bool operator==(const CompareOptions&) const = default;
};

struct DynamicsOptions {
    std::vector<double> gammas{0.3, 0.1, 0.03, 0.01};
    double tolerance = 0.05;
    int n_points = 2047;
    double x_max = 40.0;
    double dt = 0.02;
    bool operator==(const DynamicsOptions&) const = default;
};

struct PairsOptions {
    double mu = 8.0;          // reduced units hbar/(m a^2); replaced when a physical block is given
    double coupling = 0.02;
    double ramp_rate = 4.0;
    double t_on = 1.0;
    double t_off = 2.0;
    double t0 = 3.5;
    int n_points = 512;
    double half_length = 24.0;
    double dt = 0.01;
    std::vector<double> asymmetry{};  // barrier heights for the +1 state on the left
    double barrier_center = -4.0;
    double barrier_width = 0.3;
    int density_stride = 4;
    bool operator==(const PairsOptions&) const = default;
};

struct RunConfig {
    RunMode mode = RunMode::Spectrum;
    Method method = Method::Analytic;
    std::optional<PhysicalParams> physical;
    std::optional<DimensionlessParams> dimensionless;
    SpectrumGrid grid;
    ThresholdOptions threshold;
    CompareOptions compare;
    DynamicsOptions dynamics;
    PairsOptions pairs;
    std::string output_dir = "out";
    int jobs = 1;

    /// Exactly one parameter block, sane grids; throws ErrorCode::Config with
    /// the offending field name.
    void validate() const;
    /// Reduced parameters at d = 0 from whichever block is present.
    [[nodiscard]] DimensionlessParams reduced() const;
    /// g0 in rad/s when a physical block is present, else 1 (units of g0).
    [[nodiscard]] double g0_scale() const;

    [[nodiscard]] std::string to_json() const;
    /// Parse errors carry line/column; field errors name the field.
    [[nodiscard]] static RunConfig from_json(const std::string& text);
    /// Built-in defaults for a mode (used when no config file is given).
    [[nodiscard]] static RunConfig defaults(RunMode mode);

    bool operator==(const RunConfig& o) const;
};

[[nodiscard]] std::string to_string(RunMode mode);
[[nodiscard]] std::string to_string(Method method);
[[nodiscard]] RunMode parse_mode(const std::string& s);
[[nodiscard]] Method parse_method(const std::string& s);

/// Runs fn(i) for i in [0, n) on up to jobs threads; results come back in
/// index order.
template <typename T>
[[nodiscard]] std::vector<T> parallel_map(std::size_t n, int jobs, const std::function<T(std::size_t)>& fn);

// ---- spectrum grid -------------------------------------------------------

struct GridRow {
    double d = 0.0;
    double kappa = 0.0;
    SqueezingValue value;
};

/// Rows ordered kappa-major (all d for the first kappa, then the next).
[[nodiscard]] std::vector<GridRow> spectrum_grid(const SpectrumGrid& grid, double big_m,
                                                 SqueezingMethod method, int jobs = 1);

/// CSV with '#' metadata lines and the header delta_over_g0,kappa,r,above_threshold.
[[nodiscard]] std::string spectrum_csv(const std::vector<GridRow>& rows, double big_m,
                                       const std::string& method_name);

// ---- thresholds ----------------------------------------------------------

struct ThresholdHit {
    double kappa = 0.0;
    double argument = 0.0;    // |arctanh argument| at the located maximum
    double nearest = 0.0;     // nearest pi/2 + n pi
    double deviation = 0.0;   // kappa - nearest
};

/// Locates divergences of r(kappa): local maxima of |argument(kappa)| that
/// reach 1 within unit_tolerance. The maxima are bracketed on a scan grid and
/// refined by bisection on the sign of the central-difference slope until
/// the bracket is below tolerance.
[[nodiscard]] std::vector<ThresholdHit> find_thresholds(const std::function<double(double)>& argument,
                                                        double kappa_min, double kappa_max,
                                                        int scan_points = 4000,
                                                        double tolerance = 1e-9,
                                                        double unit_tolerance = 1e-6);

// ---- cross-solver comparison ---------------------------------------------

struct CompareRow {
    double big_m = 0.0;
    double max_abs_diff = 0.0;
    double mean_abs_diff = 0.0;
    double worst_d = 0.0;
    double worst_kappa = 0.0;
};

/// max/mean |r_scattering - r_analytic| over the grid at each big_m.
[[nodiscard]] std::vector<CompareRow> compare_solvers(const SpectrumGrid& grid,
                                                      const std::vector<double>& big_m_values,
                                                      int jobs = 1);

// ---- flux diagnostic -----------------------------------------------------

/// Output flux in atoms per second under the adopted definition
///   flux = (1/2pi) * integral dDelta sum_{two channels} sinh^2(r_Delta),
/// with Delta = d g0 and the integral taken as a midpoint sum over exactly
/// the sampled d range. A single-point spectrum needs single_bin_width (in
/// units of g0). Throws AboveThresholdInSpectrum.
[[nodiscard]] double flux_estimate(const SqueezingSpectrum& spectrum, double g0,
                                   std::optional<double> single_bin_width = std::nullopt);

inline constexpr const char* kFluxDefinition =
    "flux = (1/2pi) * integral dDelta [sinh^2 r(+Delta) + sinh^2 r(-Delta)]; midpoint sum over the "
    "sampled detuning range; both channels counted; r from the reduced-unit spectrum";

// ---- run persistence -----------------------------------------------------

struct FileEntry {
    std::string path;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunRecord {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::string started_utc;
    std::string finished_utc;
    std::vector<FileEntry> files;
    std::string validity_json = "null";

    [[nodiscard]] std::string to_json() const;
};

[[nodiscard]] std::string sha256_hex(const std::string& bytes);
[[nodiscard]] std::string utc_timestamp();

}  // namespace entbeam

#include "entbeam/detail/parallel_map.hpp"
