#pragma once

#include "gpudse/dse.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpudse {

/// One data row of a sweep CSV.
struct CsvRow {
    std::string axis;
    std::string value;
    std::string workload;
    std::optional<std::uint64_t> cycles;
    std::optional<double> slowdown;

    bool operator==(const CsvRow&) const = default;
};

inline constexpr const char* kCsvHeader = "axis,value,workload,cycles,slowdown";

/// Header plus one row per (point, workload). Flagged cells print NA. Slowdowns use the
/// shortest decimal that reads back to the same double.
std::string emit_csv(const SweepResult& result);
std::vector<CsvRow> read_csv(const std::string& text);
std::vector<CsvRow> csv_rows(const SweepResult& result);

std::string emit_json(const SweepResult& result);

struct FigureSpec {
    std::string id;
    std::vector<ParamAxis> axes;  // one axis, or the crossed axes in plan order
};

/// Every known figure id.
const std::vector<FigureSpec>& figure_catalog();
const FigureSpec& find_figure(const std::string& figure_id);

/// Figure ids whose axes are present in the result.
std::vector<std::string> figures_for(const SweepResult& result);

/// Whitespace-separated plot data: x value, one column per workload, then geomean.
/// Sizes are shown in KB and the register file in K registers. Throws ConfigError for an
/// unknown id or when the result lacks the figure's axes.
std::string emit_figure_data(const SweepResult& result, const std::string& figure_id);

/// Same layout for one group of points addressed by axis key ("l2_size", "l1_assoc+l1_size").
std::string emit_axis_data(const SweepResult& result, const std::string& axis_key);

/// Human-readable tables (6 significant digits).
std::string format_sweep_table(const SweepResult& result);
std::string format_classification(const std::vector<ParamClassification>& rows);
std::string format_setups(const SetupComparison& comparison);

/// Setup comparison as CSV (setup,workload,cycles,slowdown) plus geomean rows, and as
/// plot data (setup, workloads, geomean).
std::string emit_setups_csv(const SetupComparison& comparison);
std::string emit_setups_figure(const SetupComparison& comparison);

/// Shortest round-trip decimal for a double.
std::string format_exact(double value);
/// Six significant digits.
std::string format_short(double value);

}  // namespace gpudse
