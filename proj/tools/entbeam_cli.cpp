// entbeam: command-line driver for spectra, thresholds, solver comparisons,
// beam dynamics and pair entanglement runs.
//
// Exit codes: 0 ok, 1 config error, 2 solver error, 3 compare tolerance failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "entbeam/analysis.hpp"
#include "entbeam/beam_dynamics.hpp"
#include "entbeam/error.hpp"
#include "entbeam/pair_entanglement.hpp"
#include "entbeam/scattering.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace entbeam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitTolerance = 3;

struct Overrides {
    std::optional<double> d_min, d_max, kappa_min, kappa_max, big_m, kappa;
    std::optional<int> d_points, kappa_points;
    std::optional<std::string> method;
    std::optional<std::string> out;
    std::optional<int> jobs;
};

// Collects data files and their checksums for the run record.
class OutputSink {
public:
    explicit OutputSink(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw Error(ErrorCode::Config, "output path '" + (dir_ / name).string() + "' is not writable");
        f << content;
        f.close();
        files_.push_back({name, sha256_hex(content), content.size()});
    }

    [[nodiscard]] const std::vector<FileEntry>& files() const { return files_; }
    [[nodiscard]] const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<FileEntry> files_;
};

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Config, "cannot read config file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json squeezing_json(const SqueezingValue& v) {
    return {{"r", number_or_null(v.r)},
            {"above_threshold", v.above_threshold},
            {"near_threshold", v.near_threshold},
            {"arctanh_argument", number_or_null(v.arctanh_argument)}};
}

json validity_json(const RunConfig& cfg) {
    const auto d = cfg.grid.d_values();
    if (cfg.physical) {
        const auto v = validity(*cfg.physical, d);
        return {{"steady_output_ok", v.steady_output_ok}, {"gamma_over_g0", v.gamma_over_g0},
                {"large_mu_ok", v.large_mu_ok},           {"g0_over_mu", v.g0_over_mu},
                {"below_threshold", v.below_threshold},   {"threshold_distance", v.threshold_distance},
                {"max_coupling_scale", v.max_coupling_scale}, {"channels_open", v.channels_open}};
    }
    const auto p = cfg.reduced();
    double s_max = 1.0;
    for (double x : d) s_max = std::max(s_max, std::sqrt(1.0 + x * x));
    const ValidityThresholds t;
    return {{"steady_output_ok", nullptr},
            {"gamma_over_g0", nullptr},
            {"large_mu_ok", 1.0 / p.big_m <= t.max_g0_over_mu},
            {"g0_over_mu", 1.0 / p.big_m},
            {"below_threshold", p.kappa < std::numbers::pi / 2.0},
            {"threshold_distance", distance_to_threshold(p.kappa)},
            {"max_coupling_scale", s_max},
            {"channels_open", s_max < p.big_m}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- modes ---------------------------------------------------------------

int run_spectrum(const RunConfig& cfg, OutputSink& out, json& summary) {
    const double big_m = cfg.reduced().big_m;
    std::vector<std::pair<std::string, SqueezingMethod>> methods;
    if (cfg.method != Method::Scattering) methods.emplace_back("analytic", SqueezingMethod::Analytic);
    if (cfg.method != Method::Analytic) methods.emplace_back("scattering", SqueezingMethod::Scattering);

    for (const auto& [name, method] : methods) {
        const auto rows = spectrum_grid(cfg.grid, big_m, method, cfg.jobs);
        const std::string file = cfg.method == Method::Both ? "spectrum_" + name + ".csv" : "spectrum.csv";
        out.write(file, spectrum_csv(rows, big_m, name));
        std::size_t above = 0;
        for (const auto& r : rows) above += r.value.above_threshold ? 1 : 0;
        summary["datasets"].push_back({{"file", file}, {"method", name}, {"rows", rows.size()},
                                       {"above_threshold_rows", above}});
    }

    // Flux diagnostic at the configured kappa over the sampled detunings.
    const auto p = cfg.reduced();
    json flux{{"definition", kFluxDefinition}, {"kappa", p.kappa}, {"big_m", big_m},
              {"d_range", {cfg.grid.d_min, cfg.grid.d_max}}};
    try {
        const auto spec = squeezing_spectrum(cfg.grid.d_values(), big_m, p.kappa, SqueezingMethod::Analytic);
        const double g0 = cfg.g0_scale();
        std::optional<double> bin;
        if (spec.points.size() == 1) bin = 1.0;
        const double f = flux_estimate(spec, g0, bin);
        flux["units"] = cfg.physical ? "atoms per second" : "atoms per unit 1/g0";
        flux["value"] = f;
        if (cfg.physical) {
            flux["reference_atoms_per_second"] = 6.8e5;
            flux["log10_ratio_to_reference"] = f > 0.0 ? json(std::log10(f / 6.8e5)) : json(nullptr);
        }
    } catch (const Error& e) {
        flux["value"] = nullptr;
        flux["error"] = e.what();
    }
    summary["flux_diagnostic"] = flux;
    return kExitOk;
}

int run_threshold(const RunConfig& cfg, OutputSink& out, json& summary) {
    const auto& t = cfg.threshold;
    const double big_m = cfg.reduced().big_m;
    json report{{"kappa_range", {t.kappa_min, t.kappa_max}}, {"d", t.d}, {"tolerance", t.tolerance}};

    auto emit = [&](const std::string& name, const std::function<double(double)>& arg) {
        const auto hits = find_thresholds(arg, t.kappa_min, t.kappa_max, t.scan_points, t.tolerance);
        json list = json::array();
        for (const auto& h : hits)
            list.push_back({{"kappa", h.kappa}, {"argument", h.argument}, {"nearest_pi_half_plus_n_pi", h.nearest},
                            {"deviation", h.deviation}});
        report["results"][name] = {{"thresholds", list},
                                   {"status", hits.empty() ? "none in range" : "found"}};
    };

    emit("large_mu", [&](double k) { return r_large_mu_limit(t.d, k).arctanh_argument; });
    if (cfg.method != Method::Scattering)
        emit("analytic", [&](double k) { return r_analytic({t.d, big_m, k}).arctanh_argument; });
    if (cfg.method != Method::Analytic)
        emit("scattering", [&](double k) {
            const auto c = solve_scattering({t.d, big_m, k});
            return 0.5 * (std::abs(c.beta_p) / std::abs(c.alpha_p) + std::abs(c.beta_m) / std::abs(c.alpha_m));
        });
    report["big_m"] = big_m;
    out.write("threshold.json", dump(report));
    summary["threshold"] = report["results"];
    return kExitOk;
}

int run_compare(const RunConfig& cfg, OutputSink& out, json& summary) {
    const auto& c = cfg.compare;
    std::vector<double> ms = c.big_m_values;
    std::sort(ms.begin(), ms.end());
    const auto rows = compare_solvers(cfg.grid, ms, cfg.jobs);

    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        monotone = monotone && rows[i].max_abs_diff < rows[i - 1].max_abs_diff;
    const bool within = rows.back().max_abs_diff <= c.tolerance;

    std::ostringstream csv;
    csv << "# analytic vs scattering squeezing on the shared grid\n";
    csv << "big_m,max_abs_diff,mean_abs_diff,worst_d,worst_kappa\n";
    json table = json::array();
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n", r.big_m, r.max_abs_diff,
                      r.mean_abs_diff, r.worst_d, r.worst_kappa);
        csv << buf;
        table.push_back({{"big_m", r.big_m}, {"max_abs_diff", r.max_abs_diff}, {"mean_abs_diff", r.mean_abs_diff},
                         {"worst_d", r.worst_d}, {"worst_kappa", r.worst_kappa}});
    }
    out.write("compare.csv", csv.str());

    json report{{"table", table},
                {"tolerance", c.tolerance},
                {"largest_big_m_within_tolerance", within},
                {"monotone_in_big_m", monotone}};
    bool pass = within && monotone;

    if (c.time_domain) {
        const auto p = cfg.reduced();
        SteadyOutputSetup s;
        s.model = {p.big_m, p.kappa};
        s.gamma = c.time_domain_gamma;
        s.grid.n_points = cfg.dynamics.n_points;
        s.grid.x_max = cfg.dynamics.x_max;
        s.grid.dt = cfg.dynamics.dt;
        const auto res = run_steady_output(s);
        const bool td_ok = res.relative_error <= cfg.dynamics.tolerance;
        report["time_domain"] = {{"gamma", s.gamma},
                                 {"beta_sq_time_domain", res.beta_sq_time_domain},
                                 {"beta_sq_frequency_domain", res.beta_sq_frequency_domain},
                                 {"relative_error", res.relative_error},
                                 {"tolerance", cfg.dynamics.tolerance},
                                 {"pass", td_ok}};
        pass = pass && td_ok;
    }
    report["pass"] = pass;
    out.write("compare.json", dump(report));
    summary["compare"] = {{"pass", pass}};
    std::cout << (pass ? "compare: PASS" : "compare: FAIL") << " (max|dr| at M=" << rows.back().big_m << " is "
              << rows.back().max_abs_diff << ", tolerance " << c.tolerance << ")\n";
    return pass ? kExitOk : kExitTolerance;
}

int run_dynamics(const RunConfig& cfg, OutputSink& out, json& summary) {
    const auto p = cfg.reduced();
    const auto& dyn = cfg.dynamics;
    const auto results = parallel_map<SteadyOutputResult>(dyn.gammas.size(), cfg.jobs, [&](std::size_t i) {
        SteadyOutputSetup s;
        s.model = {p.big_m, p.kappa};
        s.gamma = dyn.gammas[i];
        s.grid.n_points = dyn.n_points;
        s.grid.x_max = dyn.x_max;
        s.grid.dt = dyn.dt;
        return run_steady_output(s);
    });

    json rows = json::array();
    std::size_t best = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        rows.push_back({{"gamma_over_g0", dyn.gammas[i]},
                        {"beta_sq_time_domain", r.beta_sq_time_domain},
                        {"beta_sq_stderr", r.beta_sq_stderr},
                        {"alpha_sq_time_domain", r.alpha_sq_time_domain},
                        {"beta_sq_frequency_domain", r.beta_sq_frequency_domain},
                        {"relative_error", r.relative_error},
                        {"within_tolerance", r.relative_error <= dyn.tolerance}});
        if (dyn.gammas[i] < dyn.gammas[best]) best = i;
    }
    const json report{{"big_m", p.big_m},
                      {"kappa", p.kappa},
                      {"delta", 0.0},
                      {"r_frequency_domain", results[best].r_frequency_domain},
                      {"tolerance", dyn.tolerance},
                      {"rows", rows}};
    out.write("dynamics.json", dump(report));

    SteadyOutputSetup s;
    s.grid.n_points = dyn.n_points;
    s.grid.x_max = dyn.x_max;
    s.grid.dt = dyn.dt;
    out.write("snapshot.csv", snapshot_csv(results[best].final_state, s.grid));
    summary["dynamics"] = {{"smallest_gamma", dyn.gammas[best]},
                           {"relative_error", results[best].relative_error}};
    return kExitOk;
}

PairSetup pair_setup(const RunConfig& cfg) {
    const auto& o = cfg.pairs;
    PairSetup s;
    s.mu = o.mu;
    s.ramp.g0_peak = o.coupling;
    s.ramp.gamma = o.ramp_rate;
    s.ramp.t_on = o.t_on;
    s.ramp.t_off = o.t_off;
    s.grid = GridSpec{-o.half_length, o.half_length, o.n_points, o.dt, {}, Boundary::Periodic};
    s.t0 = o.t0;
    if (cfg.physical) {
        // Reduced pair units: energies in hbar/(m a^2).
        const auto& ph = *cfg.physical;
        const double unit = ph.m * ph.a * ph.a / kHbar;
        s.mu = ph.mu * unit;
        s.ramp.g0_peak = ph.g0 * unit;
    }
    return s;
}

int run_pairs(const RunConfig& cfg, OutputSink& out, json& summary) {
    const auto base = pair_setup(cfg);
    const auto& o = cfg.pairs;
    std::vector<double> heights{0.0};
    heights.insert(heights.end(), o.asymmetry.begin(), o.asymmetry.end());

    struct Outcome {
        PairAmplitude fa;
        QuadrantDecomposition q;
        ProjectedPairState s;
        BellMetrics m;
    };
    const auto outcomes = parallel_map<Outcome>(heights.size(), cfg.jobs, [&](std::size_t i) {
        PairSetup s = base;
        if (heights[i] != 0.0) s.potential_plus = gaussian_barrier(s.grid, heights[i], o.barrier_center, o.barrier_width);
        Outcome r;
        r.fa = pair_amplitude(s);
        r.q = quadrant_decompose(r.fa);
        r.s = post_select(r.q);
        r.m = bell_metrics(r.s);
        if (i != 0) r.fa.f.clear();
        return r;
    });

    json runs = json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& r = outcomes[i];
        runs.push_back({{"barrier_height", heights[i]},
                        {"fidelity", r.m.fidelity},
                        {"chsh", r.m.chsh},
                        {"entropy", r.m.entropy},
                        {"success_probability", r.s.success_probability},
                        {"weights", {{"LL", r.q.w_ll}, {"LR", r.q.w_lr}, {"RL", r.q.w_rl}, {"RR", r.q.w_rr},
                                     {"leakage", r.q.leakage}, {"total", r.q.total}}},
                        {"created_norm", r.fa.total_norm},
                        {"edge_weight", r.fa.edge_weight}});
    }
    const json report{{"mu_reduced", base.mu},
                      {"coupling_reduced", base.ramp.g0_peak},
                      {"t0", base.t0},
                      {"n_points", o.n_points},
                      {"half_length", o.half_length},
                      {"barrier_center", o.barrier_center},
                      {"barrier_width", o.barrier_width},
                      {"targets", {{"fidelity", 1.0}, {"chsh", 2.0 * std::numbers::sqrt2}, {"entropy", std::numbers::ln2}}},
                      {"runs", runs}};
    out.write("pairs.json", dump(report));
    out.write("pair_density.csv", density_csv(outcomes[0].fa, o.density_stride));
    summary["pairs"] = {{"fidelity", outcomes[0].m.fidelity}, {"chsh", outcomes[0].m.chsh},
                        {"entropy", outcomes[0].m.entropy}};
    return kExitOk;
}

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
    if (ov.d_min) cfg.grid.d_min = *ov.d_min;
    if (ov.d_max) cfg.grid.d_max = *ov.d_max;
    if (ov.d_points) cfg.grid.d_points = *ov.d_points;
    if (ov.kappa_min) cfg.grid.kappa_min = *ov.kappa_min;
    if (ov.kappa_max) cfg.grid.kappa_max = *ov.kappa_max;
    if (ov.kappa_points) cfg.grid.kappa_points = *ov.kappa_points;
    if (ov.big_m || ov.kappa) {
        if (!cfg.dimensionless)
            throw Error(ErrorCode::Config, "--big-m/--kappa override the 'dimensionless' block, which is absent");
        if (ov.big_m) cfg.dimensionless->big_m = *ov.big_m;
        if (ov.kappa) cfg.dimensionless->kappa = *ov.kappa;
    }
    if (ov.method) cfg.method = parse_method(*ov.method);
    if (ov.out) cfg.output_dir = *ov.out;
    if (ov.jobs) cfg.jobs = *ov.jobs;
}

int execute(RunMode mode, const std::string& config_path, const Overrides& ov, bool dump_config) {
    RunConfig cfg = config_path.empty() ? RunConfig::defaults(mode) : RunConfig::from_json(read_text(config_path));
    cfg.mode = mode;
    apply_overrides(cfg, ov);
    cfg.validate();
    if (dump_config) {
        std::cout << cfg.to_json() << "\n";
        return kExitOk;
    }

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw Error(ErrorCode::Config, "output.dir '" + cfg.output_dir + "': " + ec.message());

    RunRecord record;
    record.started_utc = utc_timestamp();
    const std::string config_text = cfg.to_json() + "\n";
    record.config_hash = sha256_hex(config_text);

    OutputSink out(cfg.output_dir);
    out.write("config.json", config_text);
    json summary{{"mode", to_string(mode)}, {"method", to_string(cfg.method)}, {"config_hash", record.config_hash},
                 {"datasets", json::array()}};
    const json valid = validity_json(cfg);
    summary["validity"] = valid;

    int code = kExitOk;
    switch (mode) {
        case RunMode::Spectrum: code = run_spectrum(cfg, out, summary); break;
        case RunMode::Threshold: code = run_threshold(cfg, out, summary); break;
        case RunMode::Compare: code = run_compare(cfg, out, summary); break;
        case RunMode::Dynamics: code = run_dynamics(cfg, out, summary); break;
        case RunMode::Pairs: code = run_pairs(cfg, out, summary); break;
    }
    out.write("summary.json", dump(summary));

    record.files = out.files();
    record.validity_json = valid.dump();
    record.finished_utc = utc_timestamp();
    std::ofstream(out.dir() / "run_record.json") << record.to_json() << "\n";
    std::cout << "wrote " << record.files.size() << " files to " << cfg.output_dir << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entbeam: entangled atomic beams from spin-exchange collisions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string config_path;
    bool dump_config = false;
    Overrides ov;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", ov.out, "output directory");
        sub->add_option("--method", ov.method, "analytic | scattering | both");
        sub->add_option("--jobs", ov.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--d-min", ov.d_min, "grid: smallest Delta/g0");
        sub->add_option("--d-max", ov.d_max, "grid: largest Delta/g0");
        sub->add_option("--d-points", ov.d_points, "grid: number of detunings");
        sub->add_option("--kappa-min", ov.kappa_min, "grid: smallest kappa");
        sub->add_option("--kappa-max", ov.kappa_max, "grid: largest kappa");
        sub->add_option("--kappa-points", ov.kappa_points, "grid: number of kappas");
        sub->add_option("--big-m", ov.big_m, "mu/g0 (dimensionless block)");
        sub->add_option("--kappa", ov.kappa, "g0 t_bar (dimensionless block)");
        sub->add_flag("--dump-config", dump_config, "print the effective config and exit");
    };

    const std::vector<std::pair<RunMode, const char*>> modes{
        {RunMode::Spectrum, "squeezing grid r(Delta/g0, kappa)"},
        {RunMode::Threshold, "locate kappa thresholds"},
        {RunMode::Compare, "analytic vs scattering discrepancy table"},
        {RunMode::Dynamics, "time-domain steady-output check"},
        {RunMode::Pairs, "two-atom amplitude and Bell metrics"}};
    std::vector<std::pair<RunMode, CLI::App*>> subs;
    for (const auto& [mode, help] : modes) {
        auto* sub = app.add_subcommand(to_string(mode), help);
        add_common(sub);
        subs.emplace_back(mode, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    RunMode mode = RunMode::Spectrum;
    for (const auto& [m, sub] : subs)
        if (sub->parsed()) mode = m;

    try {
        return execute(mode, config_path, ov, dump_config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Config ? kExitConfig : kExitSolver;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
