#include "gpudse/arch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gpudse {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::string join_path(std::string_view prefix, std::string_view field) {
    std::string out(prefix);
    if (!out.empty()) out += '.';
    out += field;
    return out;
}

void require(std::vector<Violation>& out, bool ok, std::string field, std::string message) {
    if (!ok) out.push_back({std::move(field), std::move(message)});
}

// Label tokens after the platform name, e.g. "tx2+l2_size=262144+num_sms=4". Kept in
// axis order so edits commute.
std::string relabel(const std::string& label, ParamAxis axis, std::uint64_t value) {
    std::vector<std::string> tokens;
    std::stringstream ss(label);
    std::string tok;
    while (std::getline(ss, tok, '+')) tokens.push_back(tok);
    if (tokens.empty()) tokens.emplace_back();

    std::string head = tokens.front();
    std::map<int, std::string> overrides;
    std::vector<std::string> other;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        bool known = false;
        if (eq != std::string::npos) {
            for (ParamAxis a : kAllAxes) {
                if (tokens[i].substr(0, eq) == to_string(a)) {
                    overrides[static_cast<int>(a)] = tokens[i];
                    known = true;
                }
            }
        }
        if (!known) other.push_back(tokens[i]);
    }
    overrides[static_cast<int>(axis)] = std::string(to_string(axis)) + "=" + std::to_string(value);

    std::string out = head;
    for (const auto& o : other) out += "+" + o;
    for (const auto& [_, o] : overrides) out += "+" + o;
    return out;
}

std::uint32_t narrow(std::uint64_t value, ParamAxis axis) {
    if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError(std::vector<Violation>{{std::string(to_string(axis)), "value out of range"}});
    }
    return static_cast<std::uint32_t>(value);
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : ConfigError("invalid configuration:\n" + format_violations(violations)),
      violations_(std::move(violations)) {}

std::string format_violations(const std::vector<Violation>& violations) {
    std::string out;
    for (const auto& v : violations) out += "  " + v.field + ": " + v.message + "\n";
    return out;
}

bool same_hardware(const GpuConfig& a, const GpuConfig& b) {
    GpuConfig lhs = a;
    lhs.label = b.label;
    return lhs == b;
}

Platform parse_platform(std::string_view name) {
    if (name == "tx2") return Platform::tx2;
    if (name == "xavier") return Platform::xavier;
    throw ConfigError("unknown platform '" + std::string(name) + "' (expected tx2 or xavier)");
}

std::string_view to_string(Platform platform) {
    return platform == Platform::tx2 ? "tx2" : "xavier";
}

double gbps_to_bytes_per_cycle(double gigabytes_per_second, double clock_ghz) {
    return gigabytes_per_second / clock_ghz;
}

GpuConfig preset(Platform platform) {
    GpuConfig c;
    c.sms_per_cluster = 1;
    c.sm.smb_per_sm = 4;
    c.sm.warp_schedulers = 4;
    c.sm.regfile_regs = 65536;
    c.sm.shmem_bytes = 64 * 1024;
    c.sm.max_threads = 2048;
    c.sm.max_blocks = 32;
    c.sm.max_warps = 64;
    c.sm.l1 = {0, 4, 64, kDefaultL1Latency};
    c.l2 = {512 * 1024, 4, 64, kDefaultL2Latency};
    c.dram.latency_cycles = kDefaultDramLatency;
    c.dram.l2_banks = 16;

    switch (platform) {
    case Platform::tx2:
        c.num_sms = 2;
        c.sm.cores_per_smb = 32;
        c.sm.l1.size_bytes = 48 * 1024;
        c.clock_ghz = 1.1;
        c.dram.bandwidth_bytes_per_cycle = gbps_to_bytes_per_cycle(59.7, c.clock_ghz);
        c.label = "tx2";
        break;
    case Platform::xavier:
        c.num_sms = 8;
        c.sm.cores_per_smb = 16;
        c.sm.l1.size_bytes = 64 * 1024;
        c.clock_ghz = 1.37;
        c.dram.bandwidth_bytes_per_cycle = gbps_to_bytes_per_cycle(137.0, c.clock_ghz);
        c.label = "xavier";
        break;
    }
    return c;
}

GpuConfig preset(std::string_view name) { return preset(parse_platform(name)); }

std::vector<Violation> validate(const CacheGeometry& g, std::string_view prefix) {
    std::vector<Violation> out;
    require(out, g.associativity >= 1, join_path(prefix, "associativity"), "must be >= 1");
    require(out, g.line_bytes >= 4 && is_pow2(g.line_bytes), join_path(prefix, "line_bytes"),
            "must be a power of two >= 4");
    require(out, g.hit_latency >= 1, join_path(prefix, "hit_latency"), "must be >= 1");
    require(out, g.size_bytes >= 1, join_path(prefix, "size_bytes"), "must be > 0");
    if (g.associativity >= 1 && g.line_bytes >= 1 && g.size_bytes >= 1) {
        const std::uint64_t way_bytes = std::uint64_t{g.associativity} * g.line_bytes;
        require(out, g.size_bytes % way_bytes == 0 && g.size_bytes >= way_bytes,
                join_path(prefix, "size_bytes"),
                "not divisible into whole sets (size " + std::to_string(g.size_bytes) + " / (" +
                    std::to_string(g.associativity) + " ways * " + std::to_string(g.line_bytes) +
                    " B))");
    }
    return out;
}

std::vector<Violation> validate(const GpuConfig& c) {
    std::vector<Violation> out;
    require(out, c.num_sms >= 1, "num_sms", "must be >= 1");
    require(out, c.sms_per_cluster >= 1, "sms_per_cluster", "must be >= 1");
    if (c.num_sms >= 1 && c.sms_per_cluster >= 1) {
        require(out, c.num_sms % c.sms_per_cluster == 0, "sms_per_cluster",
                "num_sms (" + std::to_string(c.num_sms) + ") is not a multiple of sms_per_cluster (" +
                    std::to_string(c.sms_per_cluster) + ")");
    }
    require(out, c.clock_ghz > 0 && std::isfinite(c.clock_ghz), "clock_ghz", "must be > 0");

    const SmConfig& sm = c.sm;
    require(out, sm.smb_per_sm >= 1, "sm.smb_per_sm", "must be >= 1");
    require(out, sm.cores_per_smb >= 1, "sm.cores_per_smb", "must be >= 1");
    require(out, sm.warp_schedulers >= 1, "sm.warp_schedulers", "must be >= 1");
    require(out, sm.regfile_regs >= 1, "sm.regfile_regs", "must be >= 1");
    require(out, sm.max_threads >= 1, "sm.max_threads", "must be >= 1");
    require(out, sm.max_blocks >= 1, "sm.max_blocks", "must be >= 1");
    require(out, sm.max_warps >= 1, "sm.max_warps", "must be >= 1");
    require(out, sm.max_threads / kWarpSize <= sm.max_warps, "sm.max_warps",
            "max_threads/32 exceeds max_warps");
    require(out, sm.warp_schedulers <= sm.smb_per_sm * 4, "sm.warp_schedulers",
            "more than 4 schedulers per SMB");

    auto l1 = validate(sm.l1, "sm.l1");
    out.insert(out.end(), l1.begin(), l1.end());
    auto l2 = validate(c.l2, "l2");
    out.insert(out.end(), l2.begin(), l2.end());
    require(out, c.l2.line_bytes == sm.l1.line_bytes, "l2.line_bytes",
            "must equal sm.l1.line_bytes");

    require(out, c.dram.bandwidth_bytes_per_cycle > 0 && std::isfinite(c.dram.bandwidth_bytes_per_cycle),
            "dram.bandwidth_bytes_per_cycle", "must be > 0");
    require(out, c.dram.latency_cycles >= 1, "dram.latency_cycles", "must be >= 1");
    require(out, is_pow2(c.dram.l2_banks), "dram.l2_banks", "must be a power of two >= 1");
    return out;
}

std::string_view to_string(ParamAxis axis) {
    switch (axis) {
    case ParamAxis::l1_size: return "l1_size";
    case ParamAxis::l1_assoc: return "l1_assoc";
    case ParamAxis::l2_size: return "l2_size";
    case ParamAxis::l2_assoc: return "l2_assoc";
    case ParamAxis::cores_per_smb: return "cores_per_smb";
    case ParamAxis::regfile: return "regfile";
    case ParamAxis::shmem: return "shmem";
    case ParamAxis::warp_schedulers: return "warp_schedulers";
    case ParamAxis::smb_per_sm: return "smb_per_sm";
    case ParamAxis::sms_per_cluster: return "sms_per_cluster";
    case ParamAxis::num_sms: return "num_sms";
    }
    return "?";
}

ParamAxis parse_axis(std::string_view name) {
    for (ParamAxis a : kAllAxes) {
        if (to_string(a) == name) return a;
    }
    throw ConfigError("unknown parameter axis '" + std::string(name) + "'");
}

std::uint64_t axis_value(const GpuConfig& c, ParamAxis axis) {
    switch (axis) {
    case ParamAxis::l1_size: return c.sm.l1.size_bytes;
    case ParamAxis::l1_assoc: return c.sm.l1.associativity;
    case ParamAxis::l2_size: return c.l2.size_bytes;
    case ParamAxis::l2_assoc: return c.l2.associativity;
    case ParamAxis::cores_per_smb: return c.sm.cores_per_smb;
    case ParamAxis::regfile: return c.sm.regfile_regs;
    case ParamAxis::shmem: return c.sm.shmem_bytes;
    case ParamAxis::warp_schedulers: return c.sm.warp_schedulers;
    case ParamAxis::smb_per_sm: return c.sm.smb_per_sm;
    case ParamAxis::sms_per_cluster: return c.sms_per_cluster;
    case ParamAxis::num_sms: return c.num_sms;
    }
    return 0;
}

GpuConfig apply_override(const GpuConfig& config, ParamAxis axis, std::uint64_t value) {
    GpuConfig c = config;
    switch (axis) {
    case ParamAxis::l1_size: c.sm.l1.size_bytes = value; break;
    case ParamAxis::l1_assoc: c.sm.l1.associativity = narrow(value, axis); break;
    case ParamAxis::l2_size: c.l2.size_bytes = value; break;
    case ParamAxis::l2_assoc: c.l2.associativity = narrow(value, axis); break;
    case ParamAxis::cores_per_smb: c.sm.cores_per_smb = narrow(value, axis); break;
    case ParamAxis::regfile: c.sm.regfile_regs = narrow(value, axis); break;
    case ParamAxis::shmem: c.sm.shmem_bytes = value; break;
    case ParamAxis::warp_schedulers: c.sm.warp_schedulers = narrow(value, axis); break;
    case ParamAxis::smb_per_sm: c.sm.smb_per_sm = narrow(value, axis); break;
    case ParamAxis::sms_per_cluster: c.sms_per_cluster = narrow(value, axis); break;
    case ParamAxis::num_sms: c.num_sms = narrow(value, axis); break;
    }
    if (auto v = validate(c); !v.empty()) throw ValidationError(std::move(v));
    c.label = relabel(config.label, axis, value);
    return c;
}

AreaWeights AreaWeights::scaled(double f) const {
    return {per_cuda_core * f, per_regfile_byte * f, per_shmem_byte * f, per_l1_byte * f,
            per_l2_byte * f,   per_scheduler * f,    per_sm_fixed * f};
}

AreaCost area_cost(const GpuConfig& c, const AreaWeights& w) {
    const double weights[] = {w.per_cuda_core, w.per_regfile_byte, w.per_shmem_byte, w.per_l1_byte,
                              w.per_l2_byte,   w.per_scheduler,    w.per_sm_fixed};
    for (double x : weights) {
        if (!(x >= 0) || !std::isfinite(x)) throw ConfigError("area weights must be finite and >= 0");
    }
    const double sms = c.num_sms;
    AreaCost cost;
    cost.per_component["cuda_cores"] = sms * c.sm.cores_per_sm() * w.per_cuda_core;
    cost.per_component["regfile"] = sms * (double(c.sm.regfile_regs) * 4.0) * w.per_regfile_byte;
    cost.per_component["shmem"] = sms * double(c.sm.shmem_bytes) * w.per_shmem_byte;
    cost.per_component["l1"] = sms * double(c.sm.l1.size_bytes) * w.per_l1_byte;
    cost.per_component["l2"] = double(c.l2.size_bytes) * w.per_l2_byte;
    cost.per_component["schedulers"] = sms * c.sm.warp_schedulers * w.per_scheduler;
    cost.per_component["sm_fixed"] = sms * w.per_sm_fixed;
    for (const auto& [_, v] : cost.per_component) cost.total_units += v;
    return cost;
}

}  // namespace gpudse
