#include "entbeam/analysis.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <numbers>
#include <set>
#include <sstream>

#include "entbeam/error.hpp"
#include "entbeam/scattering.hpp"
#include "json.hpp"

namespace entbeam {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

// Reads obj[key] into dst if present, with a field-qualified message on a
// type mismatch.
template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& dst) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_error("field '" + path + "." + key + "': expected " +
                     (std::is_same_v<T, std::string> ? "a string"
                      : std::is_same_v<T, bool>      ? "a boolean"
                      : std::is_integral_v<T>        ? "an integer"
                      : std::is_same_v<T, double>    ? "a number"
                                                     : "a list of numbers") +
                     ", got " + obj.at(key).dump());
    }
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) config_error("field '" + path + "': expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.contains(k)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            config_error("unknown field '" + (path.empty() ? k : path + "." + k) +
                         "' (allowed: " + list + ")");
        }
    }
}

void require_field(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) config_error("field '" + field + "': " + msg);
}

}  // namespace

std::vector<double> SpectrumGrid::d_values() const { return linspace(d_min, d_max, d_points); }
std::vector<double> SpectrumGrid::kappa_values() const {
    return linspace(kappa_min, kappa_max, kappa_points);
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Spectrum: return "spectrum";
        case RunMode::Threshold: return "threshold";
        case RunMode::Compare: return "compare";
        case RunMode::Dynamics: return "dynamics";
        case RunMode::Pairs: return "pairs";
    }
    return "?";
}

std::string to_string(Method method) {
    switch (method) {
        case Method::Analytic: return "analytic";
        case Method::Scattering: return "scattering";
        case Method::Both: return "both";
    }
    return "?";
}

RunMode parse_mode(const std::string& s) {
    for (auto m : {RunMode::Spectrum, RunMode::Threshold, RunMode::Compare, RunMode::Dynamics, RunMode::Pairs})
        if (to_string(m) == s) return m;
    config_error("field 'mode': unknown mode '" + s +
                 "' (expected spectrum, threshold, compare, dynamics or pairs)");
}

Method parse_method(const std::string& s) {
    for (auto m : {Method::Analytic, Method::Scattering, Method::Both})
        if (to_string(m) == s) return m;
    config_error("field 'method': unknown method '" + s + "' (expected analytic, scattering or both)");
}

bool RunConfig::operator==(const RunConfig& o) const {
    auto phys_eq = [](const std::optional<PhysicalParams>& a, const std::optional<PhysicalParams>& b) {
        if (a.has_value() != b.has_value()) return false;
        if (!a) return true;
        return a->g0 == b->g0 && a->mu == b->mu && a->a == b->a && a->m == b->m && a->gamma == b->gamma &&
               a->n0 == b->n0;
    };
    auto dim_eq = [](const std::optional<DimensionlessParams>& a,
                     const std::optional<DimensionlessParams>& b) {
        if (a.has_value() != b.has_value()) return false;
        if (!a) return true;
        return a->d == b->d && a->big_m == b->big_m && a->kappa == b->kappa;
    };
    return mode == o.mode && method == o.method && phys_eq(physical, o.physical) &&
           dim_eq(dimensionless, o.dimensionless) && grid == o.grid && threshold == o.threshold &&
           compare == o.compare && dynamics == o.dynamics && pairs == o.pairs &&
           output_dir == o.output_dir && jobs == o.jobs;
}

void RunConfig::validate() const {
    if (physical.has_value() == dimensionless.has_value())
        config_error(physical ? "both 'physical' and 'dimensionless' parameter blocks are present; keep exactly one"
                              : "no parameter block: add either 'physical' {g0, mu|v_bar, a, m, gamma, n0} "
                                "or 'dimensionless' {big_m, kappa, d}");
    if (physical) {
        try {
            physical->validate();
        } catch (const Error& e) {
            config_error(std::string("block 'physical': ") + e.what());
        }
    }
    if (dimensionless) {
        try {
            dimensionless->validate();
        } catch (const Error& e) {
            config_error(std::string("block 'dimensionless': ") + e.what());
        }
    }
    require_field(grid.d_points >= 1, "grid.d_points", "must be >= 1");
    require_field(grid.kappa_points >= 1, "grid.kappa_points", "must be >= 1");
    require_field(grid.d_max >= grid.d_min, "grid.d_max", "must be >= grid.d_min");
    require_field(grid.d_points == 1 || grid.d_max > grid.d_min, "grid.d_max",
                  "must exceed grid.d_min when d_points > 1");
    require_field(grid.kappa_min >= 0.0 && grid.kappa_max >= grid.kappa_min, "grid.kappa_min",
                  "need 0 <= kappa_min <= kappa_max");
    require_field(grid.kappa_points == 1 || grid.kappa_max > grid.kappa_min, "grid.kappa_max",
                  "must exceed grid.kappa_min when kappa_points > 1");
    require_field(threshold.kappa_max > threshold.kappa_min && threshold.kappa_min >= 0.0,
                  "threshold.kappa_max", "need 0 <= kappa_min < kappa_max");
    require_field(threshold.scan_points >= 8, "threshold.scan_points", "must be >= 8");
    require_field(threshold.tolerance > 0.0, "threshold.tolerance", "must be > 0");
    require_field(!compare.big_m_values.empty(), "compare.big_m_values", "must not be empty");
    for (double m : compare.big_m_values)
        require_field(m > 0.0, "compare.big_m_values", "entries must be > 0");
    require_field(compare.tolerance > 0.0, "compare.tolerance", "must be > 0");
    require_field(!dynamics.gammas.empty(), "dynamics.gammas", "must not be empty");
    for (double g : dynamics.gammas) require_field(g > 0.0, "dynamics.gammas", "entries must be > 0");
    require_field(dynamics.n_points >= 16, "dynamics.n_points", "must be >= 16");
    require_field(dynamics.dt > 0.0 && dynamics.x_max > 0.0, "dynamics.dt", "dt and x_max must be > 0");
    require_field(pairs.n_points >= 16, "pairs.n_points", "must be >= 16");
    require_field(pairs.dt > 0.0 && pairs.t0 > 0.0 && pairs.half_length > 1.0, "pairs.dt",
                  "dt, t0 > 0 and half_length > 1 required");
    require_field(pairs.mu > 0.0, "pairs.mu", "must be > 0");
    require_field(pairs.density_stride >= 1, "pairs.density_stride", "must be >= 1");
    require_field(!output_dir.empty(), "output.dir", "must not be empty");
    require_field(jobs >= 1, "jobs", "must be >= 1");
}

DimensionlessParams RunConfig::reduced() const {
    if (physical) return to_dimensionless(*physical, 0.0);
    if (dimensionless) return *dimensionless;
    config_error("no parameter block");
}

double RunConfig::g0_scale() const { return physical ? physical->g0 : 1.0; }

std::string RunConfig::to_json() const {
    json j;
    j["mode"] = to_string(mode);
    j["method"] = to_string(method);
    if (physical)
        j["physical"] = {{"g0", physical->g0}, {"mu", physical->mu},       {"a", physical->a},
                         {"m", physical->m},   {"gamma", physical->gamma}, {"n0", physical->n0}};
    if (dimensionless)
        j["dimensionless"] = {{"d", dimensionless->d},
                              {"big_m", dimensionless->big_m},
                              {"kappa", dimensionless->kappa}};
    j["grid"] = {{"d_min", grid.d_min},         {"d_max", grid.d_max},
                 {"d_points", grid.d_points},   {"kappa_min", grid.kappa_min},
                 {"kappa_max", grid.kappa_max}, {"kappa_points", grid.kappa_points}};
    j["threshold"] = {{"kappa_min", threshold.kappa_min},
                      {"kappa_max", threshold.kappa_max},
                      {"d", threshold.d},
                      {"scan_points", threshold.scan_points},
                      {"tolerance", threshold.tolerance}};
    j["compare"] = {{"big_m_values", compare.big_m_values},
                    {"tolerance", compare.tolerance},
                    {"time_domain", compare.time_domain},
                    {"time_domain_gamma", compare.time_domain_gamma}};
    j["dynamics"] = {{"gammas", dynamics.gammas}, {"tolerance", dynamics.tolerance},
                     {"n_points", dynamics.n_points}, {"x_max", dynamics.x_max},
                     {"dt", dynamics.dt}};
    j["pairs"] = {{"mu", pairs.mu},
                  {"coupling", pairs.coupling},
                  {"ramp_rate", pairs.ramp_rate},
                  {"t_on", pairs.t_on},
                  {"t_off", pairs.t_off},
                  {"t0", pairs.t0},
                  {"n_points", pairs.n_points},
                  {"half_length", pairs.half_length},
                  {"dt", pairs.dt},
                  {"asymmetry", pairs.asymmetry},
                  {"barrier_center", pairs.barrier_center},
                  {"barrier_width", pairs.barrier_width},
                  {"density_stride", pairs.density_stride}};
    j["output"] = {{"dir", output_dir}};
    j["jobs"] = jobs;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error(std::string("malformed config: ") + e.what());
    }
    reject_unknown(j, "", {"mode", "method", "physical", "dimensionless", "grid", "threshold", "compare",
                           "dynamics", "pairs", "output", "jobs"});

    if (j.contains("physical") && j.contains("dimensionless"))
        config_error("both 'physical' and 'dimensionless' parameter blocks are present; keep exactly one");

    RunConfig c;
    std::string s;
    if (j.contains("mode")) {
        read(j, "mode", "", s);
        c.mode = parse_mode(s);
    }
    if (j.contains("method")) {
        read(j, "method", "", s);
        c.method = parse_method(s);
    }
    if (j.contains("physical")) {
        const json& p = j["physical"];
        reject_unknown(p, "physical", {"g0", "mu", "v_bar", "a", "m", "gamma", "n0"});
        for (const char* k : {"g0", "a", "m"})
            require_field(p.contains(k), std::string("physical.") + k, "missing");
        require_field(p.contains("mu") != p.contains("v_bar"), "physical.mu",
                      "give exactly one of 'mu' (rad/s) or 'v_bar' (m/s)");
        PhysicalParams pp;
        read(p, "g0", "physical", pp.g0);
        read(p, "a", "physical", pp.a);
        read(p, "m", "physical", pp.m);
        read(p, "gamma", "physical", pp.gamma);
        read(p, "n0", "physical", pp.n0);
        if (p.contains("mu")) {
            read(p, "mu", "physical", pp.mu);
        } else {
            double v = 0.0;
            read(p, "v_bar", "physical", v);
            require_field(v > 0.0 && pp.m > 0.0, "physical.v_bar", "must be > 0 (with m > 0)");
            pp.mu = PhysicalParams::mu_from_velocity(v, pp.m);
        }
        c.physical = pp;
    }
    if (j.contains("dimensionless")) {
        const json& p = j["dimensionless"];
        reject_unknown(p, "dimensionless", {"d", "big_m", "kappa"});
        for (const char* k : {"big_m", "kappa"})
            require_field(p.contains(k), std::string("dimensionless.") + k, "missing");
        DimensionlessParams dp;
        read(p, "d", "dimensionless", dp.d);
        read(p, "big_m", "dimensionless", dp.big_m);
        read(p, "kappa", "dimensionless", dp.kappa);
        c.dimensionless = dp;
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        reject_unknown(g, "grid", {"d_min", "d_max", "d_points", "kappa_min", "kappa_max", "kappa_points"});
        read(g, "d_min", "grid", c.grid.d_min);
        read(g, "d_max", "grid", c.grid.d_max);
        read(g, "d_points", "grid", c.grid.d_points);
        read(g, "kappa_min", "grid", c.grid.kappa_min);
        read(g, "kappa_max", "grid", c.grid.kappa_max);
        read(g, "kappa_points", "grid", c.grid.kappa_points);
    }
    if (j.contains("threshold")) {
        const json& t = j["threshold"];
        reject_unknown(t, "threshold", {"kappa_min", "kappa_max", "d", "scan_points", "tolerance"});
        read(t, "kappa_min", "threshold", c.threshold.kappa_min);
        read(t, "kappa_max", "threshold", c.threshold.kappa_max);
        read(t, "d", "threshold", c.threshold.d);
        read(t, "scan_points", "threshold", c.threshold.scan_points);
        read(t, "tolerance", "threshold", c.threshold.tolerance);
    }
    if (j.contains("compare")) {
        const json& t = j["compare"];
        reject_unknown(t, "compare", {"big_m_values", "tolerance", "time_domain", "time_domain_gamma"});
        read(t, "big_m_values", "compare", c.compare.big_m_values);
        read(t, "tolerance", "compare", c.compare.tolerance);
        read(t, "time_domain", "compare", c.compare.time_domain);
        read(t, "time_domain_gamma", "compare", c.compare.time_domain_gamma);
    }
    if (j.contains("dynamics")) {
        const json& t = j["dynamics"];
        reject_unknown(t, "dynamics", {"gammas", "tolerance", "n_points", "x_max", "dt"});
        read(t, "gammas", "dynamics", c.dynamics.gammas);
        read(t, "tolerance", "dynamics", c.dynamics.tolerance);
        read(t, "n_points", "dynamics", c.dynamics.n_points);
        read(t, "x_max", "dynamics", c.dynamics.x_max);
        read(t, "dt", "dynamics", c.dynamics.dt);
    }
    if (j.contains("pairs")) {
        const json& t = j["pairs"];
        reject_unknown(t, "pairs", {"mu", "coupling", "ramp_rate", "t_on", "t_off", "t0", "n_points",
                                    "half_length", "dt", "asymmetry", "barrier_center", "barrier_width",
                                    "density_stride"});
        read(t, "mu", "pairs", c.pairs.mu);
        read(t, "coupling", "pairs", c.pairs.coupling);
        read(t, "ramp_rate", "pairs", c.pairs.ramp_rate);
        read(t, "t_on", "pairs", c.pairs.t_on);
        read(t, "t_off", "pairs", c.pairs.t_off);
        read(t, "t0", "pairs", c.pairs.t0);
        read(t, "n_points", "pairs", c.pairs.n_points);
        read(t, "half_length", "pairs", c.pairs.half_length);
        read(t, "dt", "pairs", c.pairs.dt);
        read(t, "asymmetry", "pairs", c.pairs.asymmetry);
        read(t, "barrier_center", "pairs", c.pairs.barrier_center);
        read(t, "barrier_width", "pairs", c.pairs.barrier_width);
        read(t, "density_stride", "pairs", c.pairs.density_stride);
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, "output", {"dir"});
        read(o, "dir", "output", c.output_dir);
    }
    read(j, "jobs", "", c.jobs);
    c.validate();
    return c;
}

RunConfig RunConfig::defaults(RunMode mode) {
    RunConfig c;
    c.mode = mode;
    switch (mode) {
        case RunMode::Spectrum:
        case RunMode::Threshold:
            c.dimensionless = DimensionlessParams{0.0, 100.0, 1.0};
            break;
        case RunMode::Compare:
            c.method = Method::Both;
            c.dimensionless = DimensionlessParams{0.0, 100.0, 1.0};
            c.grid = SpectrumGrid{0.0, 3.0, 31, 0.0, 1.3, 27};
            break;
        case RunMode::Dynamics:
            c.dimensionless = DimensionlessParams{0.0, 20.0, 1.0};
            break;
        case RunMode::Pairs:
            c.dimensionless = DimensionlessParams{0.0, 100.0, 1.0};
            break;
    }
    return c;
}

std::vector<GridRow> spectrum_grid(const SpectrumGrid& grid, double big_m, SqueezingMethod method,
                                   int jobs) {
    const auto ds = grid.d_values();
    const auto ks = grid.kappa_values();
    const std::size_t n = ds.size() * ks.size();
    return parallel_map<GridRow>(n, jobs, [&](std::size_t idx) {
        const double kappa = ks[idx / ds.size()];
        const double d = ds[idx % ds.size()];
        const DimensionlessParams p{d, big_m, kappa};
        GridRow row{d, kappa, {}};
        switch (method) {
            case SqueezingMethod::Analytic: row.value = r_analytic(p); break;
            case SqueezingMethod::LargeMu: row.value = r_large_mu_limit(d, kappa); break;
            case SqueezingMethod::Scattering: {
                const auto c = solve_scattering(p);
                row.value = c.ill_conditioned ? SqueezingValue::from_argument(1.0) : r_from_coefficients(c);
                break;
            }
        }
        return row;
    });
}

std::string spectrum_csv(const std::vector<GridRow>& rows, double big_m, const std::string& method_name) {
    std::ostringstream os;
    char buf[192];
    os << "# squeezing spectrum r(Delta/g0, kappa)\n";
    os << "# method=" << method_name << "\n";
    std::snprintf(buf, sizeof buf, "# big_m=%.17g\n", big_m);
    os << buf;
    os << "# r is inf where above_threshold=1 (|arctanh argument| >= 1)\n";
    os << "delta_over_g0,kappa,r,above_threshold\n";
    for (const auto& r : rows) {
        if (r.value.above_threshold)
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,inf,1\n", r.d, r.kappa);
        else
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g,0\n", r.d, r.kappa, r.value.r);
        os << buf;
    }
    return os.str();
}

std::vector<ThresholdHit> find_thresholds(const std::function<double(double)>& argument, double kappa_min,
                                          double kappa_max, int scan_points, double tolerance,
                                          double unit_tolerance) {
    ENTBEAM_REQUIRE(kappa_max > kappa_min && scan_points >= 3, ErrorCode::ParameterDomain,
                    "threshold scan needs kappa_max > kappa_min and >= 3 points");
    auto mag = [&](double k) { return std::abs(argument(k)); };
    const double h = (kappa_max - kappa_min) / (scan_points - 1);
    std::vector<double> a(static_cast<std::size_t>(scan_points));
    for (int i = 0; i < scan_points; ++i) a[static_cast<std::size_t>(i)] = mag(kappa_min + i * h);

    std::vector<ThresholdHit> hits;
    for (int i = 1; i + 1 < scan_points; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!(a[ui] >= a[ui - 1] && a[ui] > a[ui + 1])) continue;
        double lo = kappa_min + (i - 1) * h;
        double hi = kappa_min + (i + 1) * h;
        while (hi - lo > 0.25 * tolerance) {
            const double mid = 0.5 * (lo + hi);
            const double fd = 1e-5 * std::max(1.0, std::abs(mid));
            const double slope = mag(mid + fd) - mag(mid - fd);
            if (slope > 0.0)
                lo = mid;
            else if (slope < 0.0)
                hi = mid;
            else
                lo = hi = mid;
        }
        const double k = 0.5 * (lo + hi);
        const double peak = std::max(mag(k), a[ui]);
        if (peak < 1.0 - unit_tolerance) continue;
        ThresholdHit hit;
        hit.kappa = k;
        hit.argument = peak;
        const double n = std::max(0.0, std::round((k - std::numbers::pi / 2.0) / std::numbers::pi));
        hit.nearest = std::numbers::pi / 2.0 + n * std::numbers::pi;
        hit.deviation = k - hit.nearest;
        hits.push_back(hit);
    }
    return hits;
}

std::vector<CompareRow> compare_solvers(const SpectrumGrid& grid, const std::vector<double>& big_m_values,
                                        int jobs) {
    ENTBEAM_REQUIRE(grid.d_points >= 1 && grid.kappa_points >= 1 && !big_m_values.empty(),
                    ErrorCode::Config, "comparison grid is empty");
    std::vector<CompareRow> out;
    for (double m : big_m_values) {
        const auto an = spectrum_grid(grid, m, SqueezingMethod::Analytic, jobs);
        const auto sc = spectrum_grid(grid, m, SqueezingMethod::Scattering, jobs);
        CompareRow row;
        row.big_m = m;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < an.size(); ++i) {
            if (an[i].value.above_threshold || sc[i].value.above_threshold) continue;
            const double diff = std::abs(an[i].value.r - sc[i].value.r);
            sum += diff;
            ++count;
            if (diff > row.max_abs_diff) {
                row.max_abs_diff = diff;
                row.worst_d = an[i].d;
                row.worst_kappa = an[i].kappa;
            }
        }
        row.mean_abs_diff = count ? sum / static_cast<double>(count) : 0.0;
        out.push_back(row);
    }
    return out;
}

double flux_estimate(const SqueezingSpectrum& spectrum, double g0, std::optional<double> single_bin_width) {
    const auto& pts = spectrum.points;
    if (pts.empty()) return 0.0;
    for (const auto& p : pts)
        ENTBEAM_REQUIRE(!p.value.above_threshold, ErrorCode::AboveThresholdInSpectrum,
                        "spectrum point at d = " + std::to_string(p.d) + " is above threshold");
    double integral = 0.0;
    if (pts.size() == 1) {
        ENTBEAM_REQUIRE(single_bin_width.has_value() && *single_bin_width > 0.0, ErrorCode::ParameterDomain,
                        "a single-point spectrum needs an explicit bin width");
        const double sh = std::sinh(pts[0].value.r);
        integral = sh * sh * *single_bin_width;
    } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double left = i == 0 ? pts[i].d : 0.5 * (pts[i - 1].d + pts[i].d);
            const double right = i + 1 == pts.size() ? pts[i].d : 0.5 * (pts[i].d + pts[i + 1].d);
            const double sh = std::sinh(pts[i].value.r);
            integral += sh * sh * (right - left);
        }
    }
    // Both output channels carry the same sinh^2 r.
    return g0 * 2.0 * integral / (2.0 * std::numbers::pi);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunRecord::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    j["files"] = json::array();
    for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["validity"] = json::parse(validity_json);
    return j.dump(2);
}

}  // namespace entbeam
