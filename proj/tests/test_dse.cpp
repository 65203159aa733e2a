#include "gpudse/config_io.hpp"
#include "gpudse/dse.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace gpudse;

namespace {

constexpr std::uint64_t KB = 1024;

// A one-workload result whose l1_size curve is given directly.
SweepResult l1_curve(const std::vector<std::pair<std::uint64_t, double>>& curve, double scale = 1.0) {
    SweepResult r;
    r.base = preset(Platform::tx2);
    r.workloads = {"w"};
    r.baseline_cycles["w"] = static_cast<std::uint64_t>(1000 * scale);
    SweepAxis axis{ParamAxis::l1_size, {}};
    for (const auto& [v, g] : curve) {
        ConfigPoint p;
        if (v != r.base.sm.l1.size_bytes) {
            p.settings = {{ParamAxis::l1_size, v}};
            axis.values.push_back(v);
        }
        r.entries[p]["w"] = SweepCell{static_cast<std::uint64_t>(g * 1000 * scale), g, ""};
        r.geomean[p] = g;
    }
    r.axes = {axis};
    return r;
}

std::vector<KernelSpec> tiny_suite() { return synthetic_suite(Scale::tiny, 1); }

std::filesystem::path temp_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(DefaultGrid, ContainsBaseAndOnlyValidValues) {
    for (Platform p : {Platform::tx2, Platform::xavier}) {
        const GpuConfig base = preset(p);
        for (ParamAxis a : default_axes(p)) {
            const auto g = default_grid(a, base);
            EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
            EXPECT_NE(std::find(g.begin(), g.end(), axis_value(base, a)), g.end()) << to_string(a);
            for (std::uint64_t v : g) EXPECT_NO_THROW(apply_override(base, a, v)) << to_string(a) << "=" << v;
        }
    }
    EXPECT_EQ(default_grid(ParamAxis::l1_size, preset(Platform::tx2)),
              (std::vector<std::uint64_t>{16 * KB, 32 * KB, 48 * KB, 96 * KB, 192 * KB}));
}

TEST(DefaultAxes, XavierExcludesSharedMemory) {
    EXPECT_EQ(default_axes(Platform::tx2).size(), 11u);
    const auto x = default_axes(Platform::xavier);
    EXPECT_EQ(x.size(), 10u);
    EXPECT_EQ(std::find(x.begin(), x.end(), ParamAxis::shmem), x.end());
}

TEST(ValidatePlan, RejectsBadAxes) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    plan.workloads = tiny_suite();
    plan.axes = {{ParamAxis::l2_size, {256 * KB, 128 * KB}}};
    EXPECT_THROW(validate_plan(plan), ConfigError);
    plan.axes = {{ParamAxis::l1_assoc, {2, 5}}};
    EXPECT_THROW(validate_plan(plan), ValidationError);
    plan.axes = {{ParamAxis::l2_size, {128 * KB}}, {ParamAxis::l2_size, {256 * KB}}};
    EXPECT_THROW(validate_plan(plan), ConfigError);
    plan.axes.clear();
    plan.workloads.clear();
    EXPECT_THROW(validate_plan(plan), ConfigError);
}

TEST(RunSweep, EmptyAxesGiveOnlyBaseline) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    plan.workloads = tiny_suite();
    const SweepResult r = run_sweep(plan);
    ASSERT_EQ(r.entries.size(), 1u);
    const ConfigPoint base;
    for (const auto& [label, cell] : r.entries.at(base)) {
        EXPECT_EQ(*cell.slowdown, 1.0) << label;
        EXPECT_EQ(*cell.cycles, r.baseline_cycles.at(label));
    }
    EXPECT_EQ(*r.geomean.at(base), 1.0);
}

TEST(RunSweep, SmallFootprintIgnoresL2Size) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    KernelSpec k = gen_archetype({ArchetypeName::graph_traversal, Scale::tiny}, 1);
    ASSERT_LT(k.footprint_bytes, 128 * KB);
    plan.workloads = {k};
    plan.axes = {{ParamAxis::l2_size, {128 * KB, 256 * KB, 1024 * KB}}};
    const SweepResult r = run_sweep(plan);
    for (const auto& [p, g] : r.geomean) EXPECT_NEAR(*g, 1.0, 0.01) << p.value_key();
}

TEST(RunSweep, CrossModeCountsPoints) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    plan.workloads = {gen_archetype({ArchetypeName::structured_grid, Scale::tiny}, 1)};
    plan.mode = SweepMode::cross;
    plan.axes = {{ParamAxis::l1_assoc, {2, 4, 8}}, {ParamAxis::l2_size, {128 * KB, 256 * KB, 512 * KB, 1024 * KB}}};
    const SweepResult r = run_sweep(plan);
    std::size_t crossed = 0;
    for (const auto& [p, cells] : r.entries) {
        if (p.settings.size() == 2) {
            ++crossed;
            EXPECT_EQ(p.axis_key(), "l1_assoc+l2_size");
            EXPECT_EQ(cells.size(), 1u);
        }
    }
    EXPECT_EQ(crossed, 12u);
}

TEST(RunSweep, UnschedulablePointIsFlagged) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    plan.workloads = {gen_archetype({ArchetypeName::dynamic_programming, Scale::tiny}, 1)};
    plan.axes = {{ParamAxis::shmem, {8 * KB, 64 * KB}}};
    const SweepResult r = run_sweep(plan);
    const ConfigPoint small{{{ParamAxis::shmem, 8 * KB}}};
    const SweepCell& c = r.cell(small, plan.workloads[0].label);
    EXPECT_TRUE(c.flagged());
    EXPECT_EQ(c.flag.rfind("unschedulable", 0), 0u) << c.flag;
    EXPECT_FALSE(r.geomean.at(small).has_value());
}

TEST(RunSweep, IndependentOfJobCount) {
    SweepPlan plan = default_plan(Platform::tx2, tiny_suite());
    plan.axes.resize(3);
    RunOptions one, four;
    four.jobs = 4;
    EXPECT_EQ(run_sweep(plan, one), run_sweep(plan, four));
}

TEST(SweepJson, RoundTrip) {
    SweepPlan plan;
    plan.base = preset(Platform::xavier);
    plan.workloads = {gen_archetype({ArchetypeName::unstructured_grid, Scale::tiny}, 2)};
    plan.axes = {{ParamAxis::warp_schedulers, {1, 2, 4}}};
    const SweepResult r = run_sweep(plan);
    const auto path = temp_dir("gpudse_sweep_json") / "sweep.json";
    write_text_file(path, to_json(r).dump(2));
    EXPECT_EQ(read_sweep_result(path), r);
}

TEST(Geomean, AllOnesIsExactlyOne) {
    std::map<std::string, SweepCell> cells;
    for (int i = 0; i < 7; ++i) cells["w" + std::to_string(i)] = SweepCell{100, 1.0, ""};
    EXPECT_EQ(*geomean_of(cells), 1.0);
    cells["flagged"] = SweepCell{std::nullopt, std::nullopt, "unschedulable"};
    EXPECT_EQ(*geomean_of(cells), 1.0);
}

TEST(Geomean, KnownValue) {
    std::map<std::string, SweepCell> cells{{"a", {1, 2.0, ""}}, {"b", {1, 8.0, ""}}};
    EXPECT_DOUBLE_EQ(*geomean_of(cells), 4.0);
}

TEST(Classify, FlatCurveGivesSmallestValue) {
    const auto r = l1_curve({{16 * KB, 1.0}, {48 * KB, 1.0}, {96 * KB, 1.0}, {192 * KB, 1.0}});
    const auto c = classify(r, ParamAxis::l1_size);
    EXPECT_EQ(c.category, 1);
    EXPECT_EQ(c.limit, 16 * KB);
}

TEST(Classify, SaturatingCurve) {
    const auto r = l1_curve({{16 * KB, 1.30}, {48 * KB, 1.00}, {96 * KB, 0.999}, {192 * KB, 0.998}});
    EXPECT_EQ(classify(r, ParamAxis::l1_size).limit, 48 * KB);
}

TEST(Classify, ScaleInvariant) {
    const std::vector<std::pair<std::uint64_t, double>> curve{
        {16 * KB, 1.5}, {32 * KB, 1.2}, {48 * KB, 1.0}, {96 * KB, 0.97}, {192 * KB, 0.965}};
    EXPECT_EQ(classify(l1_curve(curve), ParamAxis::l1_size), classify(l1_curve(curve, 37.0), ParamAxis::l1_size));
    EXPECT_EQ(classify(l1_curve(curve), ParamAxis::l1_size).limit, 96 * KB);
}

TEST(Classify, SoftwareAxesAreCategoryTwo) {
    SweepPlan plan;
    plan.base = preset(Platform::tx2);
    plan.workloads = {gen_archetype({ArchetypeName::dense_linear_algebra, Scale::tiny}, 1)};
    plan.axes = {{ParamAxis::num_sms, {1, 2, 4}}};
    const auto c = classify(run_sweep(plan), ParamAxis::num_sms);
    EXPECT_EQ(c.category, 2);
    EXPECT_FALSE(c.limit.has_value());
}

TEST(Classify, Errors) {
    const auto r = l1_curve({{16 * KB, 1.1}, {48 * KB, 1.0}});
    EXPECT_THROW(classify(r, ParamAxis::l1_size), ConfigError);
    EXPECT_THROW(classify(r, ParamAxis::l2_size), ConfigError);
    EXPECT_THROW(classify(r, ParamAxis::l1_size, -1.0), ConfigError);
}

TEST(Classify, RegranularizeHeuristic) {
    const auto flat = l1_curve({{16 * KB, 1.0}, {48 * KB, 1.0}, {96 * KB, 1.0}});
    const auto better = l1_curve({{16 * KB, 1.0}, {48 * KB, 1.0}, {96 * KB, 0.9}});
    EXPECT_TRUE(gains_after_regranularize(flat, better, ParamAxis::l1_size));
    EXPECT_FALSE(gains_after_regranularize(flat, flat, ParamAxis::l1_size));
}

TEST(ImprovedSetups, Tx2Fields) {
    const GpuConfig base = preset(Platform::tx2);
    const auto s = improved_setups(Platform::tx2);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].config.sm.shmem_bytes, 16 * KB);
    EXPECT_EQ(s[0].config.sm.warp_schedulers, 2u);
    EXPECT_EQ(s[0].config.sm.regfile_regs, 32768u);
    GpuConfig undo = s[0].config;
    undo.sm.shmem_bytes = base.sm.shmem_bytes;
    undo.sm.warp_schedulers = base.sm.warp_schedulers;
    undo.sm.regfile_regs = base.sm.regfile_regs;
    EXPECT_TRUE(same_hardware(undo, base));
    EXPECT_EQ(s[2].config.num_sms, 4u);
    EXPECT_EQ(s[2].config.sm.l1.size_bytes, 96 * KB);
    EXPECT_EQ(s[2].config.l2.size_bytes, 128 * KB);
    for (const auto& x : s) EXPECT_TRUE(validate(x.config).empty());
}

TEST(ImprovedSetups, XavierFields) {
    const auto s = improved_setups(Platform::xavier);
    EXPECT_EQ(s[1].config.num_sms, 16u);
    EXPECT_EQ(s[1].config.sm.l1.size_bytes, 256 * KB);
    EXPECT_EQ(s[1].config.l2.size_bytes, 256 * KB);
    EXPECT_EQ(s[0].config.sm.shmem_bytes, preset(Platform::xavier).sm.shmem_bytes);
}

TEST(CompareSetups, ShapeAndArea) {
    const auto suite = tiny_suite();
    const SetupComparison c = compare_setups(Platform::tx2, suite);
    ASSERT_EQ(c.rows.size(), 4u);
    EXPECT_EQ(c.rows[0].name, "baseline");
    EXPECT_EQ(*c.rows[0].geomean, 1.0);
    for (const auto& [_, cell] : c.rows[0].cells) EXPECT_EQ(*cell.slowdown, 1.0);
    for (const SetupRow& row : c.rows) EXPECT_EQ(row.cells.size(), suite.size());
    EXPECT_EQ(c.rows[1].name, "reduced_die");
    EXPECT_LT(c.rows[1].area_delta, 0.0);
    EXPECT_EQ(c.rows[0].area_delta, 0.0);
}

TEST(Plan, ParsesInlineAndDefaultAxes) {
    const auto dir = temp_dir("gpudse_plan");
    write_text_file(dir / "plan.json", R"({
  "base": "tx2",
  "axes": [{"axis": "l2_size", "values": [131072, 1048576]}, {"axis": "warp_schedulers", "values": "default"}],
  "workloads": ["graph_traversal:tiny:3", "suite:tiny"]
})");
    const SweepPlan p = read_plan(dir / "plan.json");
    EXPECT_EQ(p.base, preset(Platform::tx2));
    ASSERT_EQ(p.axes.size(), 2u);
    EXPECT_EQ(p.axes[1].values, default_grid(ParamAxis::warp_schedulers, p.base));
    EXPECT_EQ(p.workloads.size(), 1 + std::size(kAllArchetypes));
    EXPECT_EQ(p.workloads[0].label, "graph_traversal.tiny.s3");
}

TEST(Plan, KernelFileRelativeToPlan) {
    const auto dir = temp_dir("gpudse_plan_kernel");
    write_kernel(gen_archetype({ArchetypeName::structured_grid, Scale::tiny}, 4), dir / "k.json");
    write_text_file(dir / "plan.json", R"({"base": "xavier", "axes": "default", "mode": "single", "workloads": ["k.json"]})");
    const SweepPlan p = read_plan(dir / "plan.json");
    EXPECT_EQ(p.workloads.at(0).label, "structured_grid.tiny.s4");
    EXPECT_EQ(p.axes.size(), default_axes(Platform::xavier).size());
}

TEST(Plan, Errors) {
    EXPECT_THROW(plan_from_json(nlohmann::json::parse(R"({"base": "tx2", "workloads": []})"), "."), ConfigError);
    EXPECT_THROW(plan_from_json(nlohmann::json::parse(R"({"base": "tx2", "workloads": ["nope:tiny"]})"), "."),
                 std::exception);
    EXPECT_THROW(plan_from_json(nlohmann::json::parse(R"({"base": "tx2", "mode": "zigzag", "workloads": ["suite:tiny"]})"), "."),
                 ConfigError);
}

TEST(ConfigPoint, KeysAndOrder) {
    const ConfigPoint base;
    const ConfigPoint a{{{ParamAxis::l2_size, 131072}}};
    const ConfigPoint b{{{ParamAxis::l2_size, 1048576}}};
    const ConfigPoint c{{{ParamAxis::l1_assoc, 2}, {ParamAxis::l1_size, 16384}}};
    EXPECT_EQ(base.axis_key(), "base");
    EXPECT_EQ(base.value_key(), "-");
    EXPECT_EQ(c.axis_key(), "l1_assoc+l1_size");
    EXPECT_EQ(c.value_key(), "2+16384");
    EXPECT_TRUE(a < b);
    EXPECT_TRUE(base < c);
    EXPECT_TRUE(c < a);
}
