#include "gpudse/config_io.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace gpudse {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace detail;

namespace {

ordered_json cache_to_json(const CacheGeometry& g) {
    ordered_json j;
    j["size_bytes"] = g.size_bytes;
    j["associativity"] = g.associativity;
    j["line_bytes"] = g.line_bytes;
    j["hit_latency"] = g.hit_latency;
    return j;
}

CacheGeometry cache_from_json(const json& j, const std::string& path) {
    CacheGeometry g;
    g.size_bytes = get_u64(j, "size_bytes", path);
    g.associativity = get_u32(j, "associativity", path);
    g.line_bytes = get_u32(j, "line_bytes", path);
    g.hit_latency = get_u32(j, "hit_latency", path);
    return g;
}

}  // namespace

ordered_json to_json(const GpuConfig& c) {
    ordered_json sm;
    sm["smb_per_sm"] = c.sm.smb_per_sm;
    sm["cores_per_smb"] = c.sm.cores_per_smb;
    sm["warp_schedulers"] = c.sm.warp_schedulers;
    sm["regfile_regs"] = c.sm.regfile_regs;
    sm["shmem_bytes"] = c.sm.shmem_bytes;
    sm["max_threads"] = c.sm.max_threads;
    sm["max_blocks"] = c.sm.max_blocks;
    sm["max_warps"] = c.sm.max_warps;
    sm["l1"] = cache_to_json(c.sm.l1);

    ordered_json dram;
    dram["bandwidth_bytes_per_cycle"] = c.dram.bandwidth_bytes_per_cycle;
    dram["latency_cycles"] = c.dram.latency_cycles;
    dram["l2_banks"] = c.dram.l2_banks;

    ordered_json j;
    j["label"] = c.label;
    j["num_sms"] = c.num_sms;
    j["sms_per_cluster"] = c.sms_per_cluster;
    j["sm"] = std::move(sm);
    j["l2"] = cache_to_json(c.l2);
    j["dram"] = std::move(dram);
    j["clock_ghz"] = c.clock_ghz;
    return j;
}

GpuConfig gpu_config_from_json(const json& j) {
    GpuConfig c;
    c.label = j.contains("label") ? get_string(j, "label", "") : std::string{};
    c.num_sms = get_u32(j, "num_sms", "");
    c.sms_per_cluster = get_u32(j, "sms_per_cluster", "");
    const json& sm = require_field(j, "sm", "");
    c.sm.smb_per_sm = get_u32(sm, "smb_per_sm", "sm");
    c.sm.cores_per_smb = get_u32(sm, "cores_per_smb", "sm");
    c.sm.warp_schedulers = get_u32(sm, "warp_schedulers", "sm");
    c.sm.regfile_regs = get_u32(sm, "regfile_regs", "sm");
    c.sm.shmem_bytes = get_u64(sm, "shmem_bytes", "sm");
    c.sm.max_threads = get_u32(sm, "max_threads", "sm");
    c.sm.max_blocks = get_u32(sm, "max_blocks", "sm");
    c.sm.max_warps = get_u32(sm, "max_warps", "sm");
    c.sm.l1 = cache_from_json(require_field(sm, "l1", "sm"), "sm.l1");
    c.l2 = cache_from_json(require_field(j, "l2", ""), "l2");
    const json& dram = require_field(j, "dram", "");
    c.dram.bandwidth_bytes_per_cycle = get_double(dram, "bandwidth_bytes_per_cycle", "dram");
    c.dram.latency_cycles = get_u32(dram, "latency_cycles", "dram");
    c.dram.l2_banks = get_u32(dram, "l2_banks", "dram");
    c.clock_ghz = get_double(j, "clock_ghz", "");
    return c;
}

ordered_json to_json(const AreaWeights& w) {
    ordered_json j;
    j["per_cuda_core"] = w.per_cuda_core;
    j["per_regfile_byte"] = w.per_regfile_byte;
    j["per_shmem_byte"] = w.per_shmem_byte;
    j["per_l1_byte"] = w.per_l1_byte;
    j["per_l2_byte"] = w.per_l2_byte;
    j["per_scheduler"] = w.per_scheduler;
    j["per_sm_fixed"] = w.per_sm_fixed;
    return j;
}

AreaWeights area_weights_from_json(const json& j) {
    // Missing keys keep their defaults so a file can override a single weight.
    AreaWeights w;
    if (!j.is_object()) throw ParseError("area weights: expected an object");
    auto take = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = get_double(j, key, "");
    };
    take("per_cuda_core", w.per_cuda_core);
    take("per_regfile_byte", w.per_regfile_byte);
    take("per_shmem_byte", w.per_shmem_byte);
    take("per_l1_byte", w.per_l1_byte);
    take("per_l2_byte", w.per_l2_byte);
    take("per_scheduler", w.per_scheduler);
    take("per_sm_fixed", w.per_sm_fixed);
    for (const auto& [key, _] : j.items()) {
        if (!to_json(AreaWeights{}).contains(key)) throw ParseError("area weights: unknown key '" + key + "'");
    }
    return w;
}

json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error");
    }
}

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

GpuConfig read_config(const std::filesystem::path& path) {
    json j = parse_json_file(path);
    GpuConfig c;
    try {
        c = gpu_config_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (auto v = validate(c); !v.empty()) throw ValidationError(std::move(v));
    return c;
}

void write_config(const GpuConfig& config, const std::filesystem::path& path) {
    write_text_file(path, to_json(config).dump(2) + "\n");
}

GpuConfig load_config_or_preset(const std::string& spec) {
    if (spec == "tx2" || spec == "xavier") return preset(spec);
    return read_config(spec);
}

AreaWeights read_area_weights(const std::filesystem::path& path) {
    try {
        return area_weights_from_json(parse_json_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace gpudse
