#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpudse {

inline constexpr std::uint32_t kWarpSize = 32;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One violated invariant, addressed by its dotted field path ("sm.l1.associativity").
struct Violation {
    std::string field;
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Raised when a configuration edit or loaded file breaks an invariant.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(std::vector<Violation> violations);

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

std::string format_violations(const std::vector<Violation>& violations);

struct CacheGeometry {
    std::uint64_t size_bytes = 0;
    std::uint32_t associativity = 1;
    std::uint32_t line_bytes = 64;
    std::uint32_t hit_latency = 1;  // GPU cycles

    /// Only meaningful for a validated geometry.
    std::uint64_t set_count() const noexcept {
        return size_bytes / (std::uint64_t{associativity} * line_bytes);
    }

    bool operator==(const CacheGeometry&) const = default;
};

struct SmConfig {
    std::uint32_t smb_per_sm = 4;
    std::uint32_t cores_per_smb = 32;
    std::uint32_t warp_schedulers = 4;
    std::uint32_t regfile_regs = 65536;  // 32-bit registers
    std::uint64_t shmem_bytes = 65536;
    std::uint32_t max_threads = 2048;
    std::uint32_t max_blocks = 32;
    std::uint32_t max_warps = 64;
    CacheGeometry l1;

    std::uint32_t cores_per_sm() const noexcept { return smb_per_sm * cores_per_smb; }

    bool operator==(const SmConfig&) const = default;
};

struct DramConfig {
    double bandwidth_bytes_per_cycle = 32.0;
    std::uint32_t latency_cycles = 220;
    std::uint32_t l2_banks = 16;

    bool operator==(const DramConfig&) const = default;
};

struct GpuConfig {
    std::uint32_t num_sms = 1;
    std::uint32_t sms_per_cluster = 1;
    SmConfig sm;
    CacheGeometry l2;
    DramConfig dram;
    double clock_ghz = 1.0;
    std::string label;

    std::uint32_t total_cuda_cores() const noexcept { return num_sms * sm.cores_per_sm(); }
    std::uint32_t num_clusters() const noexcept { return num_sms / sms_per_cluster; }

    bool operator==(const GpuConfig&) const = default;
};

/// Equality ignoring the free-text label.
bool same_hardware(const GpuConfig& a, const GpuConfig& b);

enum class Platform { tx2, xavier };

Platform parse_platform(std::string_view name);
std::string_view to_string(Platform platform);

/// Defaults used where the platform tables give no value.
inline constexpr std::uint32_t kDefaultL1Latency = 28;
inline constexpr std::uint32_t kDefaultL2Latency = 120;
inline constexpr std::uint32_t kDefaultDramLatency = 220;

/// Converts a DRAM bandwidth in GB/s to bytes per GPU cycle at the given clock.
double gbps_to_bytes_per_cycle(double gigabytes_per_second, double clock_ghz);

GpuConfig preset(Platform platform);
GpuConfig preset(std::string_view name);

/// Every violated invariant; empty means the config is valid.
std::vector<Violation> validate(const GpuConfig& config);
std::vector<Violation> validate(const CacheGeometry& geometry, std::string_view prefix);

enum class ParamAxis {
    l1_size,
    l1_assoc,
    l2_size,
    l2_assoc,
    cores_per_smb,
    regfile,
    shmem,
    warp_schedulers,
    smb_per_sm,
    sms_per_cluster,
    num_sms,
};

inline constexpr ParamAxis kAllAxes[] = {
    ParamAxis::l1_size,       ParamAxis::l1_assoc,        ParamAxis::l2_size,
    ParamAxis::l2_assoc,      ParamAxis::cores_per_smb,   ParamAxis::regfile,
    ParamAxis::shmem,         ParamAxis::warp_schedulers, ParamAxis::smb_per_sm,
    ParamAxis::sms_per_cluster, ParamAxis::num_sms,
};

std::string_view to_string(ParamAxis axis);
ParamAxis parse_axis(std::string_view name);

/// Current value of one axis (sizes in bytes, regfile in registers).
std::uint64_t axis_value(const GpuConfig& config, ParamAxis axis);

/// Returns a copy with exactly one parameter changed; throws ValidationError if the
/// result breaks an invariant. The label gets a "+axis=value" suffix.
GpuConfig apply_override(const GpuConfig& config, ParamAxis axis, std::uint64_t value);

struct AreaWeights {
    double per_cuda_core = 256.0;
    double per_regfile_byte = 1.0;
    double per_shmem_byte = 1.0;
    double per_l1_byte = 1.0;
    double per_l2_byte = 1.0;
    double per_scheduler = 512.0;
    double per_sm_fixed = 4096.0;

    static AreaWeights zero() { return {0, 0, 0, 0, 0, 0, 0}; }
    AreaWeights scaled(double factor) const;
};

struct AreaCost {
    double total_units = 0.0;
    std::map<std::string, double> per_component;
};

/// Linear stand-in for die area. Per-SM structures are multiplied by num_sms; the L2 is
/// counted once.
AreaCost area_cost(const GpuConfig& config, const AreaWeights& weights = {});

}  // namespace gpudse
