#include "gpudse/dse.hpp"

#include "gpudse/config_io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace gpudse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t KiB = 1024;

std::vector<std::uint64_t> raw_grid(ParamAxis axis) {
    switch (axis) {
    case ParamAxis::l1_size: return {16 * KiB, 32 * KiB, 48 * KiB, 96 * KiB, 192 * KiB};
    case ParamAxis::l1_assoc: return {1, 2, 4, 8};
    case ParamAxis::l2_size: return {128 * KiB, 256 * KiB, 512 * KiB, 1024 * KiB, 2048 * KiB};
    case ParamAxis::l2_assoc: return {1, 2, 4, 8, 16};
    case ParamAxis::cores_per_smb: return {8, 16, 32, 64};
    case ParamAxis::regfile: return {16384, 32768, 65536, 131072};
    case ParamAxis::shmem: return {8 * KiB, 16 * KiB, 32 * KiB, 64 * KiB, 128 * KiB};
    case ParamAxis::warp_schedulers: return {1, 2, 4, 8, 16};
    case ParamAxis::smb_per_sm: return {1, 2, 4};
    case ParamAxis::sms_per_cluster: return {1, 2, 4, 8, 16};
    case ParamAxis::num_sms: return {1, 2, 4, 8, 16};
    }
    return {};
}

bool overrides_ok(const GpuConfig& base, ParamAxis axis, std::uint64_t value) {
    try {
        apply_override(base, axis, value);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

std::string hardware_key(GpuConfig c) {
    c.label.clear();
    return to_json(c).dump();
}

std::vector<ConfigPoint> enumerate_points(const SweepPlan& plan) {
    std::vector<ConfigPoint> points;
    if (plan.mode == SweepMode::single) {
        for (const SweepAxis& a : plan.axes) {
            for (std::uint64_t v : a.values) points.push_back(ConfigPoint{{{a.axis, v}}});
        }
        return points;
    }
    if (plan.axes.empty()) return points;
    std::vector<std::size_t> idx(plan.axes.size(), 0);
    for (;;) {
        ConfigPoint p;
        for (std::size_t i = 0; i < plan.axes.size(); ++i) {
            p.settings.emplace_back(plan.axes[i].axis, plan.axes[i].values[idx[i]]);
        }
        points.push_back(std::move(p));
        std::size_t i = plan.axes.size();
        while (i > 0) {
            --i;
            if (++idx[i] < plan.axes[i].values.size()) break;
            idx[i] = 0;
            if (i == 0) return points;
        }
    }
}

GpuConfig build_config(const GpuConfig& base, const ConfigPoint& p) {
    GpuConfig c = base;
    for (const auto& [axis, value] : p.settings) c = apply_override(c, axis, value);
    return c;
}

struct Outcome {
    std::optional<std::uint64_t> cycles;
    std::string flag;
};

Outcome run_one(const GpuConfig& config, const KernelSpec& kernel, const SimOptions& options) {
    Outcome o;
    try {
        o.cycles = simulate(config, kernel, options).total_cycles;
    } catch (const UnschedulableError& e) {
        o.flag = std::string("unschedulable: ") + e.what();
    } catch (const CycleCapExceeded& e) {
        o.flag = std::string("cycle_cap: ") + e.what();
    } catch (const std::exception& e) {
        o.flag = std::string("error: ") + e.what();
    }
    return o;
}

// Runs every (config, kernel) pair. Results are stored by index, so the output does not
// depend on which worker ran what.
std::vector<std::vector<Outcome>> run_matrix(const std::vector<GpuConfig>& configs,
                                             const std::vector<KernelSpec>& kernels, const RunOptions& options) {
    const std::size_t total = configs.size() * kernels.size();
    std::vector<std::vector<Outcome>> out(configs.size(), std::vector<Outcome>(kernels.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t c = job / kernels.size();
            const std::size_t k = job % kernels.size();
            out[c][k] = run_one(configs[c], kernels[k], options.sim);
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    if (jobs == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return out;
}

SweepCell make_cell(const Outcome& o, std::optional<std::uint64_t> baseline) {
    SweepCell cell;
    cell.cycles = o.cycles;
    if (!o.cycles) {
        cell.flag = o.flag;
    } else if (!baseline) {
        cell.flag = "no_baseline";
    } else {
        cell.slowdown = double(*o.cycles) / double(*baseline);
    }
    return cell;
}

ordered_json cell_json(const SweepCell& c) {
    ordered_json j;
    j["cycles"] = c.cycles ? json(*c.cycles) : json(nullptr);
    j["slowdown"] = c.slowdown ? json(*c.slowdown) : json(nullptr);
    if (!c.flag.empty()) j["flag"] = c.flag;
    return j;
}

SweepCell cell_from_json(const json& j, const std::string& path) {
    SweepCell c;
    const json& cy = detail::require_field(j, "cycles", path);
    if (!cy.is_null()) c.cycles = detail::get_u64(j, "cycles", path);
    const json& sl = detail::require_field(j, "slowdown", path);
    if (!sl.is_null()) c.slowdown = detail::get_double(j, "slowdown", path);
    if (j.contains("flag")) c.flag = detail::get_string(j, "flag", path);
    return c;
}

ordered_json settings_json(const ConfigPoint& p) {
    ordered_json a = ordered_json::array();
    for (const auto& [axis, value] : p.settings) a.push_back({{"axis", to_string(axis)}, {"value", value}});
    return a;
}

std::vector<std::uint64_t> parse_values(const json& j, ParamAxis axis, const GpuConfig& base,
                                        const std::string& path) {
    if (j.is_string() && j.get<std::string>() == "default") return default_grid(axis, base);
    if (!j.is_array()) throw ParseError("field '" + path + "' must be an array or \"default\"");
    std::vector<std::uint64_t> out;
    for (const json& v : j) {
        if (!v.is_number_unsigned()) throw ParseError("field '" + path + "' must hold non-negative integers");
        out.push_back(v.get<std::uint64_t>());
    }
    return out;
}

double improvement_best(const SweepResult& r, ParamAxis axis) {
    double best = 0.0;
    const auto base_it = r.geomean.find(ConfigPoint{});
    const double base = base_it != r.geomean.end() && base_it->second ? *base_it->second : 1.0;
    for (const auto& [v, g] : axis_curve(r, axis)) {
        if (g) best = std::max(best, 1.0 - *g / base);
    }
    return best;
}

}  // namespace

std::string_view to_string(SweepMode mode) { return mode == SweepMode::single ? "single" : "cross"; }

SweepMode parse_sweep_mode(std::string_view name) {
    if (name == "single") return SweepMode::single;
    if (name == "cross") return SweepMode::cross;
    throw ConfigError("unknown sweep mode '" + std::string(name) + "' (expected single or cross)");
}

std::vector<std::uint64_t> default_grid(ParamAxis axis, const GpuConfig& base) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t v : raw_grid(axis)) {
        if (overrides_ok(base, axis, v)) out.push_back(v);
    }
    out.push_back(axis_value(base, axis));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<ParamAxis> default_axes(Platform platform) {
    std::vector<ParamAxis> out(std::begin(kAllAxes), std::end(kAllAxes));
    // The Xavier one-parameter study leaves shared memory out.
    if (platform == Platform::xavier) std::erase(out, ParamAxis::shmem);
    return out;
}

SweepPlan default_plan(Platform platform, std::vector<KernelSpec> workloads) {
    SweepPlan plan;
    plan.base = preset(platform);
    plan.workloads = std::move(workloads);
    for (ParamAxis a : default_axes(platform)) plan.axes.push_back({a, default_grid(a, plan.base)});
    return plan;
}

void validate_plan(const SweepPlan& plan) {
    if (auto v = validate(plan.base); !v.empty()) throw ValidationError(std::move(v));
    if (plan.workloads.empty()) throw ConfigError("sweep plan has no workloads");

    std::set<std::string> labels;
    for (const KernelSpec& k : plan.workloads) {
        if (!labels.insert(k.label).second) throw ConfigError("duplicate workload label '" + k.label + "'");
    }

    std::set<ParamAxis> seen;
    std::vector<Violation> bad;
    for (const SweepAxis& a : plan.axes) {
        const std::string name(to_string(a.axis));
        if (!seen.insert(a.axis).second) throw ConfigError("axis '" + name + "' appears more than once");
        if (a.values.empty()) throw ConfigError("axis '" + name + "' has no values");
        if (!std::is_sorted(a.values.begin(), a.values.end()) ||
            std::adjacent_find(a.values.begin(), a.values.end()) != a.values.end()) {
            throw ConfigError("values of axis '" + name + "' must be unique and ascending");
        }
        for (std::uint64_t v : a.values) {
            try {
                apply_override(plan.base, a.axis, v);
            } catch (const ValidationError& e) {
                for (const Violation& x : e.violations()) {
                    bad.push_back({x.field, "with " + name + "=" + std::to_string(v) + ": " + x.message});
                }
            }
        }
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::vector<KernelSpec> resolve_workloads(const std::string& spec, const std::filesystem::path& base_dir) {
    const std::filesystem::path path = base_dir / spec;
    const bool looks_like_path = spec.find('/') != std::string::npos || spec.ends_with(".json");
    if (looks_like_path || std::filesystem::exists(path)) return {read_kernel(path)};

    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t colon = spec.find(':', start);
        parts.push_back(spec.substr(start, colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() > 3 || parts[0].empty()) throw ConfigError("bad workload reference '" + spec + "'");
    const Scale scale = parts.size() > 1 ? parse_scale(parts[1]) : Scale::small;
    std::uint64_t seed = 1;
    if (parts.size() > 2) {
        try {
            std::size_t used = 0;
            seed = std::stoull(parts[2], &used);
            if (used != parts[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("bad seed in workload reference '" + spec + "'");
        }
    }
    if (parts[0] == "suite") return synthetic_suite(scale, seed);
    return {gen_archetype({parse_archetype(parts[0]), scale}, seed)};
}

SweepPlan plan_from_json(const json& j, const std::filesystem::path& base_dir) {
    SweepPlan plan;
    const json& base = detail::require_field(j, "base", "");
    if (base.is_string()) {
        const std::string name = base.get<std::string>();
        plan.base = (name == "tx2" || name == "xavier") ? preset(name) : read_config(base_dir / name);
    } else if (base.is_object()) {
        plan.base = gpu_config_from_json(base);
        if (auto v = validate(plan.base); !v.empty()) throw ValidationError(std::move(v));
    } else {
        throw ParseError("field 'base' must be a preset name, a config path or a config object");
    }

    if (j.contains("mode")) plan.mode = parse_sweep_mode(detail::get_string(j, "mode", ""));

    if (j.contains("axes")) {
        const json& axes = j.at("axes");
        if (axes.is_string() && axes.get<std::string>() == "default") {
            // Platform-specific axis lists apply to presets; custom bases sweep every axis.
            const std::string head = plan.base.label.substr(0, plan.base.label.find('+'));
            std::vector<ParamAxis> list(std::begin(kAllAxes), std::end(kAllAxes));
            if (head == "tx2" || head == "xavier") list = default_axes(parse_platform(head));
            for (ParamAxis a : list) plan.axes.push_back({a, default_grid(a, plan.base)});
        } else if (axes.is_array()) {
            for (std::size_t i = 0; i < axes.size(); ++i) {
                const std::string path = "axes[" + std::to_string(i) + "]";
                SweepAxis a;
                a.axis = parse_axis(detail::get_string(axes[i], "axis", path));
                a.values = parse_values(detail::require_field(axes[i], "values", path), a.axis, plan.base,
                                        path + ".values");
                plan.axes.push_back(std::move(a));
            }
        } else {
            throw ParseError("field 'axes' must be an array or \"default\"");
        }
    }

    const json& wl = detail::require_field(j, "workloads", "");
    if (!wl.is_array()) throw ParseError("field 'workloads' must be an array of strings");
    for (const json& w : wl) {
        if (!w.is_string()) throw ParseError("field 'workloads' must be an array of strings");
        for (KernelSpec& k : resolve_workloads(w.get<std::string>(), base_dir)) plan.workloads.push_back(std::move(k));
    }
    validate_plan(plan);
    return plan;
}

SweepPlan read_plan(const std::filesystem::path& path) {
    const json j = parse_json_file(path);
    try {
        return plan_from_json(j, path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string ConfigPoint::axis_key() const {
    if (settings.empty()) return "base";
    std::string out;
    for (const auto& [axis, _] : settings) {
        if (!out.empty()) out += '+';
        out += to_string(axis);
    }
    return out;
}

std::string ConfigPoint::value_key() const {
    if (settings.empty()) return "-";
    std::string out;
    for (const auto& [_, value] : settings) {
        if (!out.empty()) out += '+';
        out += std::to_string(value);
    }
    return out;
}

bool operator<(const ConfigPoint& a, const ConfigPoint& b) {
    const std::string ka = a.axis_key();
    const std::string kb = b.axis_key();
    if (ka != kb) return ka < kb;
    return std::lexicographical_compare(a.settings.begin(), a.settings.end(), b.settings.begin(), b.settings.end(),
                                        [](const auto& x, const auto& y) { return x.second < y.second; });
}

const SweepCell& SweepResult::cell(const ConfigPoint& point, const std::string& workload) const {
    auto p = entries.find(point);
    if (p == entries.end()) throw ConfigError("no sweep point " + point.axis_key() + "=" + point.value_key());
    auto c = p->second.find(workload);
    if (c == p->second.end()) throw ConfigError("no workload '" + workload + "' in sweep result");
    return c->second;
}

std::optional<double> geomean_of(const std::map<std::string, SweepCell>& cells) {
    double log_sum = 0.0;
    std::size_t n = 0;
    for (const auto& [_, c] : cells) {
        if (!c.slowdown) continue;
        log_sum += std::log(*c.slowdown);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return std::exp(log_sum / double(n));
}

SweepResult run_sweep(const SweepPlan& plan, const RunOptions& options) {
    validate_plan(plan);

    SweepResult r;
    r.base = plan.base;
    r.mode = plan.mode;
    r.axes = plan.axes;
    for (const KernelSpec& k : plan.workloads) r.workloads.push_back(k.label);

    const std::vector<ConfigPoint> points = enumerate_points(plan);

    // Distinct hardware gets one simulation; index 0 is the base.
    std::vector<GpuConfig> configs{plan.base};
    std::map<std::string, std::size_t> by_hardware{{hardware_key(plan.base), 0}};
    std::vector<std::optional<std::size_t>> point_config(points.size());
    std::vector<std::string> point_error(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        GpuConfig c;
        try {
            c = build_config(plan.base, points[i]);
        } catch (const ValidationError& e) {
            point_error[i] = "invalid_config: " + format_violations(e.violations());
            while (!point_error[i].empty() && point_error[i].back() == '\n') point_error[i].pop_back();
            continue;
        }
        auto [it, fresh] = by_hardware.emplace(hardware_key(c), configs.size());
        if (fresh) configs.push_back(std::move(c));
        point_config[i] = it->second;
    }

    const auto outcomes = run_matrix(configs, plan.workloads, options);

    for (std::size_t k = 0; k < plan.workloads.size(); ++k) {
        if (outcomes[0][k].cycles) r.baseline_cycles[plan.workloads[k].label] = *outcomes[0][k].cycles;
    }
    auto baseline_of = [&](std::size_t k) -> std::optional<std::uint64_t> { return outcomes[0][k].cycles; };

    auto& base_cells = r.entries[ConfigPoint{}];
    for (std::size_t k = 0; k < plan.workloads.size(); ++k) {
        base_cells[plan.workloads[k].label] = make_cell(outcomes[0][k], baseline_of(k));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& cells = r.entries[points[i]];
        for (std::size_t k = 0; k < plan.workloads.size(); ++k) {
            SweepCell cell;
            if (point_config[i]) {
                cell = make_cell(outcomes[*point_config[i]][k], baseline_of(k));
            } else {
                cell.flag = point_error[i];
            }
            cells[plan.workloads[k].label] = std::move(cell);
        }
    }
    for (const auto& [p, cells] : r.entries) r.geomean[p] = geomean_of(cells);
    return r;
}

ordered_json to_json(const SweepResult& r) {
    ordered_json j;
    j["base"] = to_json(r.base);
    j["mode"] = to_string(r.mode);
    ordered_json axes = ordered_json::array();
    for (const SweepAxis& a : r.axes) axes.push_back({{"axis", to_string(a.axis)}, {"values", a.values}});
    j["axes"] = std::move(axes);
    j["workloads"] = r.workloads;
    ordered_json base = ordered_json::object();
    for (const auto& [w, c] : r.baseline_cycles) base[w] = c;
    j["baseline_cycles"] = std::move(base);
    ordered_json points = ordered_json::array();
    for (const auto& [p, cells] : r.entries) {
        ordered_json pj;
        pj["settings"] = settings_json(p);
        const auto g = r.geomean.at(p);
        pj["geomean"] = g ? json(*g) : json(nullptr);
        ordered_json cj = ordered_json::object();
        for (const auto& [w, c] : cells) cj[w] = cell_json(c);
        pj["cells"] = std::move(cj);
        points.push_back(std::move(pj));
    }
    j["points"] = std::move(points);
    return j;
}

SweepResult sweep_result_from_json(const json& j) {
    SweepResult r;
    r.base = gpu_config_from_json(detail::require_field(j, "base", ""));
    r.mode = parse_sweep_mode(detail::get_string(j, "mode", ""));
    const json& axes = detail::require_field(j, "axes", "");
    if (!axes.is_array()) throw ParseError("field 'axes' must be an array");
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const std::string path = "axes[" + std::to_string(i) + "]";
        SweepAxis a;
        a.axis = parse_axis(detail::get_string(axes[i], "axis", path));
        a.values = parse_values(detail::require_field(axes[i], "values", path), a.axis, r.base, path + ".values");
        r.axes.push_back(std::move(a));
    }
    const json& wl = detail::require_field(j, "workloads", "");
    if (!wl.is_array()) throw ParseError("field 'workloads' must be an array");
    for (const json& w : wl) {
        if (!w.is_string()) throw ParseError("field 'workloads' must hold strings");
        r.workloads.push_back(w.get<std::string>());
    }
    const json& base = detail::require_field(j, "baseline_cycles", "");
    for (auto it = base.begin(); it != base.end(); ++it) {
        r.baseline_cycles[it.key()] = detail::get_u64(base, it.key(), "baseline_cycles");
    }
    const json& points = detail::require_field(j, "points", "");
    if (!points.is_array()) throw ParseError("field 'points' must be an array");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::string path = "points[" + std::to_string(i) + "]";
        ConfigPoint p;
        const json& st = detail::require_field(points[i], "settings", path);
        for (std::size_t s = 0; s < st.size(); ++s) {
            const std::string sp = path + ".settings[" + std::to_string(s) + "]";
            p.settings.emplace_back(parse_axis(detail::get_string(st[s], "axis", sp)),
                                    detail::get_u64(st[s], "value", sp));
        }
        const json& cells = detail::require_field(points[i], "cells", path);
        auto& out = r.entries[p];
        for (auto it = cells.begin(); it != cells.end(); ++it) {
            out[it.key()] = cell_from_json(it.value(), path + ".cells." + it.key());
        }
        const json& g = detail::require_field(points[i], "geomean", path);
        r.geomean[p] = g.is_null() ? std::nullopt : std::optional<double>(detail::get_double(points[i], "geomean", path));
    }
    return r;
}

SweepResult read_sweep_result(const std::filesystem::path& path) {
    const json j = parse_json_file(path);
    try {
        return sweep_result_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::set<ParamAxis> default_software_axes() {
    return {ParamAxis::smb_per_sm, ParamAxis::sms_per_cluster, ParamAxis::num_sms};
}

std::vector<std::pair<std::uint64_t, std::optional<double>>> axis_curve(const SweepResult& r, ParamAxis axis) {
    std::map<std::uint64_t, std::optional<double>> curve;
    auto value_of = [&](const std::map<std::string, SweepCell>& cells, const ConfigPoint& p) -> std::optional<double> {
        for (const auto& [_, c] : cells) {
            if (c.flagged()) return std::nullopt;
        }
        return r.geomean.at(p);
    };
    for (const auto& [p, cells] : r.entries) {
        if (p.settings.size() == 1 && p.settings[0].first == axis) curve[p.settings[0].second] = value_of(cells, p);
    }
    if (!curve.empty()) {
        const ConfigPoint base;
        if (auto it = r.entries.find(base); it != r.entries.end()) {
            curve.emplace(axis_value(r.base, axis), value_of(it->second, base));
        }
    }
    return {curve.begin(), curve.end()};
}

ParamClassification classify(const SweepResult& r, ParamAxis param, double epsilon,
                             const std::set<ParamAxis>& sw_axes) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be a positive number");
    const auto curve = axis_curve(r, param);
    const std::string name(to_string(param));
    if (curve.empty()) throw ConfigError("sweep result has no single-axis data for '" + name + "'");

    ParamClassification out;
    out.param = param;
    if (sw_axes.count(param)) {
        out.category = 2;
        return out;
    }
    if (curve.size() < 3) {
        throw ConfigError("axis '" + name + "' needs at least 3 swept values to classify (has " +
                          std::to_string(curve.size()) + ")");
    }
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (!curve[i].second) continue;
        const double gv = *curve[i].second;
        bool saturated = true;
        for (std::size_t k = i + 1; k < curve.size() && saturated; ++k) {
            if (curve[k].second && (gv - *curve[k].second) / gv >= epsilon) saturated = false;
        }
        if (saturated) {
            out.limit = curve[i].first;
            return out;
        }
    }
    throw ConfigError("every point of axis '" + name + "' has flagged cells");
}

std::vector<ParamClassification> classify_all(const SweepResult& r, double epsilon,
                                              const std::set<ParamAxis>& sw_axes) {
    std::vector<ParamClassification> out;
    for (ParamAxis a : kAllAxes) {
        if (!axis_curve(r, a).empty()) out.push_back(classify(r, a, epsilon, sw_axes));
    }
    return out;
}

bool gains_after_regranularize(const SweepResult& as_is, const SweepResult& regranularized, ParamAxis axis,
                               double epsilon) {
    return improvement_best(regranularized, axis) - improvement_best(as_is, axis) >= epsilon;
}

std::string_view to_string(SetupName name) {
    switch (name) {
    case SetupName::reduced_die: return "reduced_die";
    case SetupName::increased_perf_a: return "increased_perf_a";
    case SetupName::increased_perf_b: return "increased_perf_b";
    }
    return "?";
}

std::vector<ImprovedSetup> improved_setups(Platform platform) {
    const GpuConfig base = preset(platform);
    using Change = std::pair<ParamAxis, std::uint64_t>;
    std::vector<Change> reduced{{ParamAxis::warp_schedulers, 2}, {ParamAxis::regfile, 32768}};
    std::vector<Change> perf_a;
    if (platform == Platform::tx2) {
        reduced.push_back({ParamAxis::shmem, 16 * KiB});
        perf_a = {{ParamAxis::num_sms, 4}, {ParamAxis::l1_size, 96 * KiB}, {ParamAxis::l2_size, 256 * KiB}};
    } else {
        perf_a = {{ParamAxis::num_sms, 16}, {ParamAxis::l1_size, 256 * KiB}, {ParamAxis::l2_size, 256 * KiB}};
    }
    std::vector<Change> perf_b = perf_a;
    perf_b.back().second = 128 * KiB;

    std::vector<ImprovedSetup> out;
    for (const auto& [name, changes] : {std::pair{SetupName::reduced_die, reduced},
                                        std::pair{SetupName::increased_perf_a, perf_a},
                                        std::pair{SetupName::increased_perf_b, perf_b}}) {
        ImprovedSetup s;
        s.name = name;
        s.platform = platform;
        s.config = base;
        for (const auto& [axis, value] : changes) s.config = apply_override(s.config, axis, value);
        s.config.label = std::string(to_string(platform)) + "." + std::string(to_string(name));
        out.push_back(std::move(s));
    }
    return out;
}

SetupComparison compare_setups(Platform platform, const std::vector<KernelSpec>& workloads,
                               const AreaWeights& weights, const RunOptions& options) {
    if (workloads.empty()) throw ConfigError("setup comparison needs at least one workload");
    SetupComparison cmp;
    cmp.platform = platform;
    for (const KernelSpec& k : workloads) cmp.workloads.push_back(k.label);

    std::vector<GpuConfig> configs{preset(platform)};
    std::vector<std::string> names{"baseline"};
    for (const ImprovedSetup& s : improved_setups(platform)) {
        configs.push_back(s.config);
        names.emplace_back(to_string(s.name));
    }
    const auto outcomes = run_matrix(configs, workloads, options);
    const double base_area = area_cost(configs[0], weights).total_units;

    for (std::size_t c = 0; c < configs.size(); ++c) {
        SetupRow row;
        row.name = names[c];
        row.config = configs[c];
        for (std::size_t k = 0; k < workloads.size(); ++k) {
            row.cells[workloads[k].label] = make_cell(outcomes[c][k], outcomes[0][k].cycles);
        }
        row.geomean = geomean_of(row.cells);
        row.area_units = area_cost(configs[c], weights).total_units;
        row.area_delta = row.area_units - base_area;
        row.area_delta_ratio = base_area > 0 ? row.area_delta / base_area : 0.0;
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

ordered_json to_json(const SetupComparison& cmp) {
    ordered_json j;
    j["platform"] = to_string(cmp.platform);
    j["workloads"] = cmp.workloads;
    ordered_json rows = ordered_json::array();
    for (const SetupRow& r : cmp.rows) {
        ordered_json rj;
        rj["name"] = r.name;
        rj["config"] = to_json(r.config);
        ordered_json cells = ordered_json::object();
        for (const auto& [w, c] : r.cells) cells[w] = cell_json(c);
        rj["cells"] = std::move(cells);
        rj["geomean"] = r.geomean ? json(*r.geomean) : json(nullptr);
        rj["area_units"] = r.area_units;
        rj["area_delta"] = r.area_delta;
        rj["area_delta_ratio"] = r.area_delta_ratio;
        rows.push_back(std::move(rj));
    }
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace gpudse
