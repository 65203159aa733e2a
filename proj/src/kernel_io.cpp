#include "gpudse/config_io.hpp"
#include "gpudse/workload.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace gpudse {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace detail;

namespace {

ordered_json pattern_to_json(const AccessPattern& p) {
    ordered_json j;
    j["mode"] = std::string(to_string(p.mode));
    j["base_offset"] = p.base_offset;
    j["stride_bytes"] = p.stride_bytes;
    j["region_bytes"] = p.region_bytes;
    return j;
}

AccessPattern pattern_from_json(const json& j, const std::string& path) {
    AccessPattern p;
    const std::string mode = get_string(j, "mode", path);
    try {
        p.mode = parse_pattern_mode(mode);
    } catch (const KernelError& e) {
        throw ParseError(child_path(path, "mode") + ": " + e.what());
    }
    p.base_offset = get_u64(j, "base_offset", path);
    p.stride_bytes = get_u64(j, "stride_bytes", path);
    p.region_bytes = get_u64(j, "region_bytes", path);
    return p;
}

ordered_json instr_to_json(const WarpInstr& ins) {
    ordered_json j;
    std::visit(
        [&](const auto& i) {
            using T = std::decay_t<decltype(i)>;
            ordered_json args = ordered_json::object();
            if constexpr (std::is_same_v<T, instr::Compute>) {
                j["kind"] = "compute";
                args["issue_cycles"] = i.issue_cycles;
            } else if constexpr (std::is_same_v<T, instr::Load>) {
                j["kind"] = "load";
                args = pattern_to_json(i.pattern);
            } else if constexpr (std::is_same_v<T, instr::Store>) {
                j["kind"] = "store";
                args = pattern_to_json(i.pattern);
            } else if constexpr (std::is_same_v<T, instr::Shmem>) {
                j["kind"] = "shmem";
                args["latency"] = i.latency;
            } else {
                j["kind"] = "barrier";
            }
            j["args"] = std::move(args);
        },
        ins);
    return j;
}

WarpInstr instr_from_json(const json& j, const std::string& path) {
    const std::string kind = get_string(j, "kind", path);
    const json empty = json::object();
    const json& args = j.contains("args") ? j.at("args") : empty;
    const std::string apath = child_path(path, "args");
    if (kind == "compute") return instr::Compute{get_u32(args, "issue_cycles", apath)};
    if (kind == "load") return instr::Load{pattern_from_json(args, apath)};
    if (kind == "store") return instr::Store{pattern_from_json(args, apath)};
    if (kind == "shmem") return instr::Shmem{get_u32(args, "latency", apath)};
    if (kind == "barrier") return instr::Barrier{};
    throw ParseError("field '" + child_path(path, "kind") + "': unknown instruction kind '" + kind + "'");
}

}  // namespace

std::string kernel_to_text(const KernelSpec& k) {
    ordered_json j;
    j["label"] = k.label;
    j["grid_blocks"] = k.grid_blocks;
    j["threads_per_block"] = k.threads_per_block;
    j["regs_per_thread"] = k.regs_per_thread;
    j["shmem_per_block"] = k.shmem_per_block;
    j["footprint_bytes"] = k.footprint_bytes;
    j["seed"] = k.seed;
    ordered_json program;
    program["iterations"] = k.program.iterations;
    ordered_json list = ordered_json::array();
    for (const auto& ins : k.program.instructions) list.push_back(instr_to_json(ins));
    program["instructions"] = std::move(list);
    j["program"] = std::move(program);
    return j.dump(2) + "\n";
}

KernelSpec kernel_from_text(const std::string& text, const std::string& origin) {
    const json j = parse_json_text(text, origin);
    KernelSpec k;
    try {
        k.label = j.contains("label") ? get_string(j, "label", "") : std::string{};
        k.grid_blocks = get_u32(j, "grid_blocks", "");
        k.threads_per_block = get_u32(j, "threads_per_block", "");
        k.regs_per_thread = get_u32(j, "regs_per_thread", "");
        k.shmem_per_block = get_u64(j, "shmem_per_block", "");
        k.footprint_bytes = get_u64(j, "footprint_bytes", "");
        k.seed = get_u64(j, "seed", "");
        const json& program = require_field(j, "program", "");
        k.program.iterations = get_u32(program, "iterations", "program");
        const json& list = require_field(program, "instructions", "program");
        if (!list.is_array()) throw ParseError("field 'program.instructions' must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            k.program.instructions.push_back(
                instr_from_json(list[i], "program.instructions[" + std::to_string(i) + "]"));
        }
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (auto v = validate(k); !v.empty()) throw ValidationError(std::move(v));
    return k;
}

void write_kernel(const KernelSpec& kernel, const std::filesystem::path& path) {
    if (auto v = validate(kernel); !v.empty()) throw ValidationError(std::move(v));
    write_text_file(path, kernel_to_text(kernel));
}

KernelSpec read_kernel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return kernel_from_text(ss.str(), path.string());
}

}  // namespace gpudse
