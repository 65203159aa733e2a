#pragma once

#include "gpudse/arch.hpp"
#include "gpudse/memhier.hpp"
#include "gpudse/workload.hpp"

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gpudse {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnschedulableError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class CycleCapExceeded : public SimulationError {
public:
    using SimulationError::SimulationError;
};

struct OccupancyReport {
    std::uint32_t limit_threads = 0;
    std::uint32_t limit_registers = 0;
    std::uint32_t limit_shmem = 0;  // equals limit_blockcap when the kernel uses no shared memory
    std::uint32_t limit_blockcap = 0;
    std::uint32_t blocks_per_sm = 0;

    /// Name of the tightest limit ("threads", "registers", "shmem", "blockcap").
    std::string binding_limit() const;
};

/// Resident-block limits for one SM. Never throws; blocks_per_sm may be 0.
OccupancyReport occupancy(const SmConfig& sm, const KernelSpec& kernel);

/// Same as occupancy() but throws UnschedulableError when no block fits.
OccupancyReport max_blocks_per_sm(const SmConfig& sm, const KernelSpec& kernel);

enum class SchedulerPolicy { oldest_ready, round_robin };

inline constexpr std::uint64_t kDefaultCycleCap = 1'000'000'000;

/// Cycles between a block's dispatch and the first issue of its warps. A single warp
/// running one Compute(1) finishes at kLaunchLatency + 1.
inline constexpr std::uint64_t kLaunchLatency = 1;

struct SimOptions {
    std::uint64_t cycle_cap = kDefaultCycleCap;
    std::uint32_t mshr_per_sm = 32;
    SchedulerPolicy policy = SchedulerPolicy::oldest_ready;
    std::ostream* trace = nullptr;
};

/// Reads GPU_DSE_CYCLE_CAP when set; otherwise returns `fallback`.
std::uint64_t cycle_cap_from_env(std::uint64_t fallback = kDefaultCycleCap);

struct SmActivity {
    std::uint64_t busy_cycles = 0;         // at least one instruction issued
    std::uint64_t stall_cycles_mem = 0;    // no issue, some warp waiting on memory
    std::uint64_t stall_cycles_issue = 0;  // no issue although a warp was ready

    bool operator==(const SmActivity&) const = default;
};

struct SimResult {
    std::string kernel_label;
    std::string config_label;
    std::uint64_t kernel_digest = 0;  // identifies the simulated kernel
    std::uint64_t total_cycles = 0;
    double wall_time_estimate = 0.0;  // seconds
    std::uint64_t instructions_issued = 0;
    std::vector<SmActivity> per_sm;
    MemStats l1_stats;
    MemStats l2_stats;
    std::uint64_t blocks_executed = 0;
    OccupancyReport occupancy;

    bool operator==(const SimResult& o) const {
        return kernel_label == o.kernel_label && kernel_digest == o.kernel_digest && config_label == o.config_label &&
               total_cycles == o.total_cycles && wall_time_estimate == o.wall_time_estimate &&
               instructions_issued == o.instructions_issued && per_sm == o.per_sm &&
               l1_stats == o.l1_stats && l2_stats == o.l2_stats && blocks_executed == o.blocks_executed &&
               occupancy.blocks_per_sm == o.occupancy.blocks_per_sm;
    }
};

/// Cycle-level run of one kernel. Deterministic in (config, kernel, options).
SimResult simulate(const GpuConfig& config, const KernelSpec& kernel, const SimOptions& options = {});

/// variant.total_cycles / baseline.total_cycles; throws if the kernels differ.
double speedup(const SimResult& baseline, const SimResult& variant);

nlohmann::ordered_json to_json(const SimResult& result);

}  // namespace gpudse
