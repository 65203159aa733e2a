#pragma once

#include "gpudse/arch.hpp"
#include "gpudse/simcore.hpp"
#include "gpudse/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace gpudse {

enum class SweepMode { single, cross };

std::string_view to_string(SweepMode mode);
SweepMode parse_sweep_mode(std::string_view name);

struct SweepAxis {
    ParamAxis axis = ParamAxis::l1_size;
    std::vector<std::uint64_t> values;  // unique, ascending

    bool operator==(const SweepAxis&) const = default;
};

struct SweepPlan {
    GpuConfig base;
    std::vector<SweepAxis> axes;
    std::vector<KernelSpec> workloads;
    SweepMode mode = SweepMode::single;
};

/// Default values swept for an axis on a platform. Values that the base config cannot
/// take (e.g. a cluster size that does not divide num_sms) are dropped, and the base
/// value is always included.
std::vector<std::uint64_t> default_grid(ParamAxis axis, const GpuConfig& base);

/// Axes in the platform's one-parameter study, in figure order.
std::vector<ParamAxis> default_axes(Platform platform);

/// Single-axis plan over default_axes() with default grids.
SweepPlan default_plan(Platform platform, std::vector<KernelSpec> workloads);

/// Throws ValidationError or ConfigError when the plan breaks its invariants.
void validate_plan(const SweepPlan& plan);

/// Resolves one workload reference. Accepted forms are a kernel file path (relative to
/// base_dir), "archetype:scale:seed" and "suite:scale:seed" (scale and seed optional).
std::vector<KernelSpec> resolve_workloads(const std::string& spec, const std::filesystem::path& base_dir);

/// Plan file (JSON). See README for the format; relative paths resolve against the
/// plan's directory.
SweepPlan read_plan(const std::filesystem::path& path);
SweepPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// A configuration point: the overrides applied to the base, in plan axis order.
/// No overrides means the base point itself.
struct ConfigPoint {
    std::vector<std::pair<ParamAxis, std::uint64_t>> settings;

    bool is_base() const noexcept { return settings.empty(); }
    /// "base", "l2_size" or "l1_assoc+l1_size".
    std::string axis_key() const;
    /// "-", "131072" or "2+16384".
    std::string value_key() const;

    bool operator==(const ConfigPoint&) const = default;
};

/// Orders by axis key text, then by values numerically.
bool operator<(const ConfigPoint& a, const ConfigPoint& b);

struct SweepCell {
    std::optional<std::uint64_t> cycles;
    std::optional<double> slowdown;
    std::string flag;  // empty unless the cell could not be simulated

    bool flagged() const noexcept { return !slowdown.has_value(); }
    bool operator==(const SweepCell&) const = default;
};

struct SweepResult {
    GpuConfig base;
    SweepMode mode = SweepMode::single;
    std::vector<SweepAxis> axes;
    std::vector<std::string> workloads;  // labels in plan order
    std::map<std::string, std::uint64_t> baseline_cycles;
    std::map<ConfigPoint, std::map<std::string, SweepCell>> entries;
    std::map<ConfigPoint, std::optional<double>> geomean;  // none when every cell is flagged

    const SweepCell& cell(const ConfigPoint& point, const std::string& workload) const;

    bool operator==(const SweepResult&) const = default;
};

/// Geometric mean of the unflagged slowdowns; none when all are flagged.
std::optional<double> geomean_of(const std::map<std::string, SweepCell>& cells);

struct RunOptions {
    unsigned jobs = 1;
    SimOptions sim;
};

/// Simulates the baseline and every point for every workload. Points whose hardware
/// equals the base reuse the baseline run. Unschedulable or failing cells are flagged.
SweepResult run_sweep(const SweepPlan& plan, const RunOptions& options = {});

nlohmann::ordered_json to_json(const SweepResult& result);
SweepResult sweep_result_from_json(const nlohmann::json& j);
SweepResult read_sweep_result(const std::filesystem::path& path);

struct ParamClassification {
    ParamAxis param = ParamAxis::l1_size;
    int category = 1;  // 1: saturating, 2: needs software changes
    std::optional<std::uint64_t> limit;

    bool operator==(const ParamClassification&) const = default;
};

inline constexpr double kDefaultEpsilon = 0.02;

std::set<ParamAxis> default_software_axes();

/// Table-style classification of one swept axis. Throws ConfigError when the axis was
/// not swept on its own, or (category 1) has fewer than 3 values.
ParamClassification classify(const SweepResult& result, ParamAxis param, double epsilon = kDefaultEpsilon,
                             const std::set<ParamAxis>& sw_axes = default_software_axes());

/// classify() for every single-axis sweep present in the result, in axis order.
std::vector<ParamClassification> classify_all(const SweepResult& result, double epsilon = kDefaultEpsilon,
                                              const std::set<ParamAxis>& sw_axes = default_software_axes());

/// Geomean curve of a single-axis sweep, ascending by value. A value's entry is none
/// when any cell at that point is flagged.
std::vector<std::pair<std::uint64_t, std::optional<double>>> axis_curve(const SweepResult& result, ParamAxis axis);

/// Heuristic check for a software-limited axis: true when the best slowdown reached
/// over the axis improves by at least epsilon once the workloads are regranularized.
bool gains_after_regranularize(const SweepResult& as_is, const SweepResult& regranularized, ParamAxis axis,
                               double epsilon = kDefaultEpsilon);

enum class SetupName { reduced_die, increased_perf_a, increased_perf_b };

inline constexpr SetupName kAllSetups[] = {SetupName::reduced_die, SetupName::increased_perf_a,
                                           SetupName::increased_perf_b};

std::string_view to_string(SetupName name);

struct ImprovedSetup {
    SetupName name = SetupName::reduced_die;
    Platform platform = Platform::tx2;
    GpuConfig config;
};

std::vector<ImprovedSetup> improved_setups(Platform platform);

struct SetupRow {
    std::string name;  // "baseline" or a setup name
    GpuConfig config;
    std::map<std::string, SweepCell> cells;
    std::optional<double> geomean;
    double area_units = 0.0;
    double area_delta = 0.0;        // area_units minus the baseline's
    double area_delta_ratio = 0.0;  // area_delta / baseline area
};

struct SetupComparison {
    Platform platform = Platform::tx2;
    std::vector<std::string> workloads;
    std::vector<SetupRow> rows;  // baseline first, then kAllSetups order
};

SetupComparison compare_setups(Platform platform, const std::vector<KernelSpec>& workloads,
                               const AreaWeights& weights = {}, const RunOptions& options = {});

nlohmann::ordered_json to_json(const SetupComparison& comparison);

}  // namespace gpudse
