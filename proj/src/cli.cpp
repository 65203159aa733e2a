#include "gpudse/cli.hpp"

#include "gpudse/config_io.hpp"
#include "gpudse/dse.hpp"
#include "gpudse/report.hpp"
#include "gpudse/simcore.hpp"
#include "gpudse/workload.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace gpudse {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_text_file(path, text);
}

SimOptions sim_options() {
    SimOptions o;
    o.cycle_cap = cycle_cap_from_env();
    return o;
}

std::vector<KernelSpec> workload_list(const std::string& list) {
    std::vector<KernelSpec> out;
    for (const std::string& item : split(list, ',')) {
        for (KernelSpec& k : resolve_workloads(item, fs::current_path())) out.push_back(std::move(k));
    }
    if (out.empty()) throw ConfigError("no workloads given");
    return out;
}

struct ConfigArgs {
    std::string preset_name;
    std::string from;
    std::vector<std::string> overrides;
    std::string out;
    bool check = false;
};

int cmd_config(const ConfigArgs& a, std::ostream& out) {
    if (a.preset_name.empty() == a.from.empty()) {
        throw CLI::ValidationError("config", "exactly one of --preset or --from is required");
    }
    GpuConfig c = a.from.empty() ? preset(a.preset_name) : read_config(a.from);
    for (const std::string& o : a.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected axis=value, got '" + o + "'");
        std::uint64_t v = 0;
        try {
            std::size_t used = 0;
            v = std::stoull(o.substr(eq + 1), &used);
            if (used != o.size() - eq - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw CLI::ValidationError("--set", "value of '" + o + "' is not a non-negative integer");
        }
        c = apply_override(c, parse_axis(o.substr(0, eq)), v);
    }
    const std::string text = to_json(c).dump(2) + "\n";
    if (!a.out.empty()) {
        write_file(a.out, text);
    } else if (!a.check) {
        out << text;
    }
    out << "config: " << c.label << " valid sms=" << c.num_sms << " cuda_cores=" << c.total_cuda_cores()
        << " area_units=" << format_short(area_cost(c).total_units) << "\n";
    return kExitOk;
}

struct GenArgs {
    std::string archetype;
    bool suite = false;
    std::string scale = "small";
    std::uint64_t seed = 1;
    std::uint32_t tpb = 0;
    std::string out;
    std::string out_dir;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
    if (a.archetype.empty() == !a.suite) {
        throw CLI::ValidationError("gen-workload", "give exactly one of --archetype or --suite");
    }
    std::vector<KernelSpec> kernels;
    const Scale scale = parse_scale(a.scale);
    if (a.suite) {
        kernels = synthetic_suite(scale, a.seed);
    } else {
        kernels.push_back(gen_archetype({parse_archetype(a.archetype), scale}, a.seed));
    }
    if (a.tpb) {
        for (KernelSpec& k : kernels) k = regranularize(k, a.tpb);
    }
    if (kernels.size() > 1 && a.out_dir.empty()) throw CLI::ValidationError("--suite", "needs --out-dir");
    for (const KernelSpec& k : kernels) {
        if (!a.out_dir.empty()) {
            ensure_dir(a.out_dir);
            write_kernel(k, fs::path(a.out_dir) / (k.label + ".json"));
        } else if (!a.out.empty()) {
            if (fs::path(a.out).has_parent_path()) ensure_dir(fs::path(a.out).parent_path());
            write_kernel(k, a.out);
        } else {
            out << kernel_to_text(k);
        }
    }
    for (const KernelSpec& k : kernels) {
        out << "gen-workload: " << k.label << " blocks=" << k.grid_blocks << " threads_per_block=" << k.threads_per_block
            << " warp_instructions=" << k.total_warp_instructions() << "\n";
    }
    return kExitOk;
}

struct SimArgs {
    std::string config;
    std::string kernel;
    std::string out;
    std::string trace;
    std::string policy = "oldest_ready";
    std::uint32_t mshr = 32;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
    const GpuConfig c = load_config_or_preset(a.config);
    const auto kernels = resolve_workloads(a.kernel, fs::current_path());
    if (kernels.size() != 1) throw ConfigError("--kernel must name a single kernel");
    SimOptions o = sim_options();
    o.mshr_per_sm = a.mshr;
    o.policy = a.policy == "round_robin" ? SchedulerPolicy::round_robin : SchedulerPolicy::oldest_ready;
    std::ofstream trace;
    if (!a.trace.empty()) {
        trace.open(a.trace, std::ios::trunc);
        if (!trace) throw std::runtime_error("cannot write '" + a.trace + "'");
        o.trace = &trace;
    }
    const SimResult r = simulate(c, kernels.front(), o);
    const std::string text = to_json(r).dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_file(a.out, text);
    }
    out << "simulate: kernel=" << r.kernel_label << " config=" << r.config_label << " total_cycles=" << r.total_cycles
        << " blocks=" << r.blocks_executed << "\n";
    return kExitOk;
}

struct SweepArgs {
    std::string plan;
    std::string out_dir;
    unsigned jobs = 1;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const SweepPlan plan = read_plan(a.plan);
    RunOptions o;
    o.jobs = a.jobs;
    o.sim = sim_options();
    const SweepResult r = run_sweep(plan, o);

    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    write_file(dir / "sweep.csv", emit_csv(r));
    write_file(dir / "sweep.json", emit_json(r));
    write_file(dir / "summary.txt", format_sweep_table(r));
    std::set<std::string> keys;
    for (const auto& [p, _] : r.entries) {
        if (!p.is_base()) keys.insert(p.axis_key());
    }
    for (const std::string& k : keys) write_file(dir / "plot" / (k + ".dat"), emit_axis_data(r, k));
    for (const std::string& id : figures_for(r)) write_file(dir / "figures" / (id + ".dat"), emit_figure_data(r, id));

    std::size_t flagged = 0;
    for (const auto& [_, cells] : r.entries) {
        for (const auto& [__, c] : cells) flagged += c.flagged() ? 1 : 0;
    }
    const auto worst = std::max_element(r.geomean.begin(), r.geomean.end(), [](const auto& x, const auto& y) {
        return x.second.value_or(0.0) < y.second.value_or(0.0);
    });
    out << "sweep: points=" << r.entries.size() << " workloads=" << r.workloads.size() << " flagged=" << flagged
        << " max_geomean=" << format_short(worst->second.value_or(1.0)) << " ("
        << worst->first.axis_key() << "=" << worst->first.value_key() << ") out=" << dir.string() << "\n";
    return kExitOk;
}

struct ClassifyArgs {
    std::string results;
    double epsilon = kDefaultEpsilon;
    std::string sw_axes;
    bool sw_axes_given = false;
    std::string regranularized;
    std::string out;
};

SweepResult load_results(const std::string& path) {
    const fs::path p(path);
    return read_sweep_result(fs::is_directory(p) ? p / "sweep.json" : p);
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
    const SweepResult r = load_results(a.results);
    std::set<ParamAxis> sw = default_software_axes();
    if (a.sw_axes_given) {
        sw.clear();
        if (a.sw_axes != "none") {
            for (const std::string& name : split(a.sw_axes, ',')) sw.insert(parse_axis(name));
        }
    }
    const auto rows = classify_all(r, a.epsilon, sw);
    std::string table = format_classification(rows);
    if (!a.regranularized.empty()) {
        const SweepResult g = load_results(a.regranularized);
        table += "\ngains after regranularize (epsilon " + format_short(a.epsilon) + "):\n";
        for (const ParamClassification& c : rows) {
            if (axis_curve(g, c.param).empty()) continue;
            table += "  " + std::string(to_string(c.param)) + ": " +
                     (gains_after_regranularize(r, g, c.param, a.epsilon) ? "yes" : "no") + "\n";
        }
    }
    if (!a.out.empty()) write_file(a.out, table);
    out << table;
    std::size_t cat1 = 0;
    for (const ParamClassification& c : rows) cat1 += c.category == 1 ? 1 : 0;
    out << "classify: axes=" << rows.size() << " category1=" << cat1 << " category2=" << rows.size() - cat1
        << " epsilon=" << format_short(a.epsilon) << "\n";
    return kExitOk;
}

struct SetupsArgs {
    std::string platform;
    std::string workloads = "suite:small:1";
    std::string out_dir;
    std::string area_weights;
    unsigned jobs = 1;
};

int cmd_setups(const SetupsArgs& a, std::ostream& out) {
    const Platform p = parse_platform(a.platform);
    const auto kernels = workload_list(a.workloads);
    const AreaWeights w = a.area_weights.empty() ? AreaWeights{} : read_area_weights(a.area_weights);
    RunOptions o;
    o.jobs = a.jobs;
    o.sim = sim_options();
    const SetupComparison cmp = compare_setups(p, kernels, w, o);

    const std::string table = format_setups(cmp);
    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        ensure_dir(dir);
        write_file(dir / "setups.csv", emit_setups_csv(cmp));
        write_file(dir / "setups.json", to_json(cmp).dump(2) + "\n");
        write_file(dir / "summary.txt", table);
        write_file(dir / (p == Platform::tx2 ? "fig8.dat" : "fig9.dat"), emit_setups_figure(cmp));
    }
    out << table;
    out << "setups: platform=" << to_string(p);
    for (const SetupRow& r : cmp.rows) {
        out << ' ' << r.name << '=' << (r.geomean ? format_short(*r.geomean) : "NA");
    }
    out << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Design-space exploration for embedded GPU configurations", "gpu-dse"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    ConfigArgs config_args;
    auto* config = app.add_subcommand("config", "Write, check or edit a GPU configuration");
    config->add_option("--preset", config_args.preset_name, "Start from a preset")->check(CLI::IsMember({"tx2", "xavier"}));
    config->add_option("--from", config_args.from, "Start from a config file");
    config->add_option("--set", config_args.overrides, "Override one parameter, axis=value (repeatable)");
    config->add_option("--out", config_args.out, "Output file (default: stdout)");
    config->add_flag("--check", config_args.check, "Only validate; print the summary line");

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen-workload", "Generate synthetic kernels");
    gen->add_option("--archetype", gen_args.archetype, "Archetype name");
    gen->add_flag("--suite", gen_args.suite, "Generate one kernel per archetype");
    gen->add_option("--scale", gen_args.scale, "tiny, small or medium")->capture_default_str();
    gen->add_option("--seed", gen_args.seed, "Seed (the only entropy source)")->capture_default_str();
    gen->add_option("--threads-per-block", gen_args.tpb, "Regranularize to this block size")
        ->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_args.out, "Output kernel file (default: stdout)");
    gen->add_option("--out-dir", gen_args.out_dir, "Output directory, one file per kernel");

    SimArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Run one kernel on one configuration");
    sim->add_option("--config", sim_args.config, "Config file or preset name")->required();
    sim->add_option("--kernel", sim_args.kernel, "Kernel file or archetype:scale:seed")->required();
    sim->add_option("--out", sim_args.out, "Result JSON (default: stdout)");
    sim->add_option("--trace", sim_args.trace, "Write a per-access cache trace");
    sim->add_option("--policy", sim_args.policy, "Warp selection policy")
        ->check(CLI::IsMember({"oldest_ready", "round_robin"}))
        ->capture_default_str();
    sim->add_option("--mshr", sim_args.mshr, "Outstanding L1 misses per SM")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Run a sweep plan");
    sweep->add_option("--plan", sweep_args.plan, "Plan file (JSON)")->required();
    sweep->add_option("--out-dir", sweep_args.out_dir, "Output directory")->required();
    sweep->add_option("--jobs", sweep_args.jobs, "Concurrent simulations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    ClassifyArgs cls_args;
    auto* cls = app.add_subcommand("classify", "Classify swept parameters");
    cls->add_option("--results", cls_args.results, "Sweep output directory or sweep.json")->required();
    cls->add_option("--epsilon", cls_args.epsilon, "Relative improvement treated as significant")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* sw_opt = cls->add_option("--sw-axes", cls_args.sw_axes,
                                   "Comma-separated software-limited axes, or 'none' (default: smb_per_sm,sms_per_cluster,num_sms)");
    cls->add_option("--regranularized", cls_args.regranularized,
                    "Sweep of regranularized workloads; reports axes that gain from it");
    cls->add_option("--out", cls_args.out, "Also write the table to this file");

    SetupsArgs setups_args;
    auto* setups = app.add_subcommand("setups", "Compare the improved setups against the baseline");
    setups->add_option("--platform", setups_args.platform, "tx2 or xavier")
        ->required()
        ->check(CLI::IsMember({"tx2", "xavier"}));
    setups->add_option("--workloads", setups_args.workloads, "Comma-separated kernel files or archetype specs")
        ->capture_default_str();
    setups->add_option("--out-dir", setups_args.out_dir, "Output directory");
    setups->add_option("--area-weights", setups_args.area_weights, "Area weight file (JSON)");
    setups->add_option("--jobs", setups_args.jobs, "Concurrent simulations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("gpu-dse");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }
    cls_args.sw_axes_given = sw_opt->count() > 0;

    try {
        if (config->parsed()) return cmd_config(config_args, out);
        if (gen->parsed()) return cmd_gen(gen_args, out);
        if (sim->parsed()) return cmd_simulate(sim_args, out);
        if (sweep->parsed()) return cmd_sweep(sweep_args, out);
        if (cls->parsed()) return cmd_classify(cls_args, out);
        if (setups->parsed()) return cmd_setups(setups_args, out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what();
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}

}  // namespace gpudse
