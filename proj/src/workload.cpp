#include "gpudse/workload.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace gpudse {

namespace {

constexpr std::uint64_t KiB = 1024;
constexpr std::uint64_t MiB = 1024 * 1024;

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Portable draw in [0, n); std distributions are not reproducible across libraries.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

AccessPattern coalesced(std::uint64_t base, std::uint64_t region, std::uint64_t stride = 4) {
    return {PatternMode::coalesced_stride, base, stride, region};
}
AccessPattern strided(std::uint64_t base, std::uint64_t region, std::uint64_t stride) {
    return {PatternMode::strided, base, stride, region};
}
AccessPattern random_in(std::uint64_t region) {
    return {PatternMode::random_uniform, 0, 4, region};
}

struct ScaleShape {
    std::uint32_t grid_blocks;
    std::uint32_t iterations;
};

ScaleShape shape_for(Scale scale) {
    switch (scale) {
    case Scale::tiny: return {16, 4};
    case Scale::small: return {64, 4};
    case Scale::medium: return {256, 4};
    }
    return {64, 4};
}

void add_compute(BlockProgram& p, int count, std::uint32_t issue_cycles) {
    for (int i = 0; i < count; ++i) p.instructions.emplace_back(instr::Compute{issue_cycles});
}

// Line-aligned offset inside the first eighth of the footprint.
std::uint64_t jitter_offset(std::mt19937_64& rng, std::uint64_t footprint) {
    const std::uint64_t lines = std::max<std::uint64_t>(1, footprint / 8 / 128);
    return draw(rng, lines) * 128;
}

KernelSpec dense_linear_algebra(Scale scale, std::mt19937_64& rng) {
    const std::uint64_t f = scale_footprint(scale);
    const ScaleShape shape = shape_for(scale);
    KernelSpec k;
    k.grid_blocks = shape.grid_blocks;
    k.threads_per_block = 256;
    k.regs_per_thread = 32;
    k.shmem_per_block = 4 * KiB;
    k.footprint_bytes = f;
    BlockProgram& p = k.program;
    p.iterations = shape.iterations * 2;
    p.instructions.emplace_back(instr::Load{coalesced(jitter_offset(rng, f), f / 2)});
    p.instructions.emplace_back(instr::Shmem{24});
    add_compute(p, 8, 4);
    p.instructions.emplace_back(instr::Shmem{24});
    add_compute(p, 8, 4);
    p.instructions.emplace_back(instr::Store{coalesced(f / 2, f)});
    return k;
}

KernelSpec structured_grid(Scale scale, std::mt19937_64& rng) {
    const std::uint64_t f = scale_footprint(scale);
    const ScaleShape shape = shape_for(scale);
    const std::uint64_t row = 1 * KiB;
    const std::uint64_t in = f / 2;
    const std::uint64_t base = jitter_offset(rng, f);
    KernelSpec k;
    k.grid_blocks = shape.grid_blocks;
    k.threads_per_block = 256;
    k.regs_per_thread = 32;
    k.shmem_per_block = 2 * KiB;
    k.footprint_bytes = f;
    BlockProgram& p = k.program;
    p.iterations = shape.iterations;
    p.instructions.emplace_back(instr::Load{coalesced(base, in)});
    p.instructions.emplace_back(instr::Load{coalesced(base + row, in)});
    p.instructions.emplace_back(instr::Compute{2});
    p.instructions.emplace_back(instr::Load{strided(base, in, row)});
    add_compute(p, 3, 2);
    p.instructions.emplace_back(instr::Shmem{20});
    add_compute(p, 3, 2);
    p.instructions.emplace_back(instr::Store{coalesced(in, f)});
    return k;
}

KernelSpec graph_traversal(Scale scale, std::mt19937_64& rng) {
    const std::uint64_t f = scale_footprint(scale);
    const ScaleShape shape = shape_for(scale);
    const std::uint64_t nodes = f / 4;
    KernelSpec k;
    k.grid_blocks = shape.grid_blocks;
    k.threads_per_block = 256;
    k.regs_per_thread = 24;
    k.shmem_per_block = 0;
    k.footprint_bytes = f;
    BlockProgram& p = k.program;
    p.iterations = shape.iterations;
    p.instructions.emplace_back(instr::Load{coalesced(jitter_offset(rng, f), f)});
    p.instructions.emplace_back(instr::Compute{2});
    p.instructions.emplace_back(instr::Load{random_in(nodes)});
    p.instructions.emplace_back(instr::Compute{2});
    p.instructions.emplace_back(instr::Load{random_in(nodes)});
    p.instructions.emplace_back(instr::Compute{1});
    p.instructions.emplace_back(instr::Store{random_in(nodes)});
    p.instructions.emplace_back(instr::Compute{1});
    return k;
}

KernelSpec dynamic_programming(Scale scale, std::mt19937_64& rng) {
    const std::uint64_t f = scale_footprint(scale);
    const ScaleShape shape = shape_for(scale);
    KernelSpec k;
    k.grid_blocks = shape.grid_blocks;
    k.threads_per_block = 128;
    k.regs_per_thread = 32;
    k.shmem_per_block = 16 * KiB;
    k.footprint_bytes = f;
    BlockProgram& p = k.program;
    p.iterations = shape.iterations * 2;
    p.instructions.emplace_back(instr::Load{coalesced(jitter_offset(rng, f), f)});
    p.instructions.emplace_back(instr::Shmem{32});
    p.instructions.emplace_back(instr::Barrier{});
    for (int step = 0; step < 2; ++step) {
        p.instructions.emplace_back(instr::Shmem{32});
        add_compute(p, 2, 4);
        p.instructions.emplace_back(instr::Shmem{32});
        p.instructions.emplace_back(instr::Barrier{});
    }
    p.instructions.emplace_back(instr::Store{coalesced(0, f)});
    return k;
}

KernelSpec unstructured_grid(Scale scale, std::mt19937_64& rng) {
    const std::uint64_t f = scale_footprint(scale);
    const ScaleShape shape = shape_for(scale);
    KernelSpec k;
    k.grid_blocks = shape.grid_blocks;
    k.threads_per_block = 256;
    k.regs_per_thread = 28;
    k.shmem_per_block = 1 * KiB;
    k.footprint_bytes = f;
    BlockProgram& p = k.program;
    p.iterations = shape.iterations;
    p.instructions.emplace_back(instr::Load{coalesced(jitter_offset(rng, f), f)});
    p.instructions.emplace_back(instr::Load{random_in(f / 8)});
    add_compute(p, 3, 3);
    p.instructions.emplace_back(instr::Shmem{20});
    p.instructions.emplace_back(instr::Barrier{});
    add_compute(p, 3, 3);
    p.instructions.emplace_back(instr::Store{coalesced(f / 2, f)});
    return k;
}

}  // namespace

std::string_view to_string(PatternMode mode) {
    switch (mode) {
    case PatternMode::coalesced_stride: return "coalesced_stride";
    case PatternMode::strided: return "strided";
    case PatternMode::random_uniform: return "random_uniform";
    }
    return "?";
}

PatternMode parse_pattern_mode(std::string_view name) {
    for (PatternMode m : {PatternMode::coalesced_stride, PatternMode::strided, PatternMode::random_uniform}) {
        if (to_string(m) == name) return m;
    }
    throw KernelError("unknown access pattern mode '" + std::string(name) + "'");
}

std::string_view to_string(ArchetypeName name) {
    switch (name) {
    case ArchetypeName::dense_linear_algebra: return "dense_linear_algebra";
    case ArchetypeName::structured_grid: return "structured_grid";
    case ArchetypeName::graph_traversal: return "graph_traversal";
    case ArchetypeName::dynamic_programming: return "dynamic_programming";
    case ArchetypeName::unstructured_grid: return "unstructured_grid";
    }
    return "?";
}

std::string_view to_string(Scale scale) {
    switch (scale) {
    case Scale::tiny: return "tiny";
    case Scale::small: return "small";
    case Scale::medium: return "medium";
    }
    return "?";
}

ArchetypeName parse_archetype(std::string_view name) {
    for (ArchetypeName a : kAllArchetypes) {
        if (to_string(a) == name) return a;
    }
    throw KernelError("unknown archetype '" + std::string(name) + "'");
}

Scale parse_scale(std::string_view name) {
    for (Scale s : {Scale::tiny, Scale::small, Scale::medium}) {
        if (to_string(s) == name) return s;
    }
    throw KernelError("unknown scale '" + std::string(name) + "' (expected tiny, small or medium)");
}

std::uint64_t scale_footprint(Scale scale) {
    switch (scale) {
    case Scale::tiny: return 64 * KiB;
    case Scale::small: return 1 * MiB;
    case Scale::medium: return 8 * MiB;
    }
    return 1 * MiB;
}

KernelSpec gen_archetype(const Archetype& archetype, std::uint64_t seed) {
    std::mt19937_64 rng(mix64(seed ^ (std::uint64_t(archetype.name) << 32) ^ std::uint64_t(archetype.scale)));
    KernelSpec k;
    switch (archetype.name) {
    case ArchetypeName::dense_linear_algebra: k = dense_linear_algebra(archetype.scale, rng); break;
    case ArchetypeName::structured_grid: k = structured_grid(archetype.scale, rng); break;
    case ArchetypeName::graph_traversal: k = graph_traversal(archetype.scale, rng); break;
    case ArchetypeName::dynamic_programming: k = dynamic_programming(archetype.scale, rng); break;
    case ArchetypeName::unstructured_grid: k = unstructured_grid(archetype.scale, rng); break;
    }
    k.seed = rng();
    k.label = std::string(to_string(archetype.name)) + "." + std::string(to_string(archetype.scale)) + ".s" +
              std::to_string(seed);
    return k;
}

std::vector<KernelSpec> synthetic_suite(Scale scale, std::uint64_t base_seed) {
    std::vector<KernelSpec> out;
    for (ArchetypeName a : kAllArchetypes) out.push_back(gen_archetype({a, scale}, base_seed));
    return out;
}

std::uint64_t expand_address(const AccessPattern& p, std::uint64_t warp_index, std::uint32_t lane,
                             std::uint64_t instr_ordinal, std::uint64_t seed) {
    const std::uint64_t region = p.region_bytes;
    std::uint64_t addr = 0;
    switch (p.mode) {
    case PatternMode::coalesced_stride:
        addr = (p.base_offset + (warp_index * kWarpSize + lane) * p.stride_bytes) % region;
        break;
    case PatternMode::strided:
        addr = (p.base_offset + std::uint64_t{lane} * p.stride_bytes + warp_index * 4) % region;
        break;
    case PatternMode::random_uniform: {
        std::uint64_t h = mix64(seed);
        h = mix64(h ^ warp_index);
        h = mix64(h ^ (std::uint64_t{lane} << 40) ^ instr_ordinal);
        h = mix64(h ^ p.base_offset);
        const std::uint64_t words = std::max<std::uint64_t>(1, region / 4);
        addr = (h % words) * 4;
        break;
    }
    }
    return addr & ~std::uint64_t{3};
}

std::vector<Violation> validate(const KernelSpec& k) {
    std::vector<Violation> out;
    auto require = [&](bool ok, std::string field, std::string message) {
        if (!ok) out.push_back({std::move(field), std::move(message)});
    };
    require(k.threads_per_block >= kWarpSize && k.threads_per_block % kWarpSize == 0, "threads_per_block",
            "must be a positive multiple of 32 (got " + std::to_string(k.threads_per_block) + ")");
    require(k.grid_blocks >= 1, "grid_blocks", "must be >= 1");
    require(k.regs_per_thread >= 1, "regs_per_thread", "must be >= 1");
    require(k.footprint_bytes >= kMinFootprintBytes, "footprint_bytes",
            "must be >= " + std::to_string(kMinFootprintBytes));
    require(!k.program.instructions.empty(), "program.instructions", "must be nonempty");
    require(k.program.iterations >= 1, "program.iterations", "must be >= 1");

    for (std::size_t i = 0; i < k.program.instructions.size(); ++i) {
        const std::string at = "program.instructions[" + std::to_string(i) + "]";
        auto check_pattern = [&](const AccessPattern& p) {
            require(p.region_bytes >= 4, at + ".region_bytes", "must be >= 4");
            require(p.region_bytes <= k.footprint_bytes, at + ".region_bytes", "exceeds footprint_bytes");
            require(p.stride_bytes >= 4, at + ".stride_bytes", "must be >= 4");
        };
        std::visit(
            [&](const auto& ins) {
                using T = std::decay_t<decltype(ins)>;
                if constexpr (std::is_same_v<T, instr::Compute>) {
                    require(ins.issue_cycles >= 1, at + ".issue_cycles", "must be >= 1");
                } else if constexpr (std::is_same_v<T, instr::Shmem>) {
                    require(ins.latency >= 1, at + ".latency", "must be >= 1");
                } else if constexpr (std::is_same_v<T, instr::Load> || std::is_same_v<T, instr::Store>) {
                    check_pattern(ins.pattern);
                }
            },
            k.program.instructions[i]);
    }
    return out;
}

KernelSpec regranularize(const KernelSpec& kernel, std::uint32_t new_tpb) {
    if (new_tpb < kWarpSize || new_tpb % kWarpSize != 0) {
        throw KernelError("threads per block must be a positive multiple of 32 (got " + std::to_string(new_tpb) + ")");
    }
    const std::uint64_t total = kernel.total_threads();
    if (total % new_tpb != 0) {
        throw KernelError("total threads " + std::to_string(total) + " not divisible by " + std::to_string(new_tpb));
    }
    const std::uint64_t new_grid = total / new_tpb;
    const std::uint64_t total_shmem = kernel.shmem_per_block * kernel.grid_blocks;
    if (total_shmem % new_grid != 0) {
        throw KernelError("shared memory per block does not scale to an integral size for " +
                          std::to_string(new_tpb) + " threads per block");
    }
    if (new_grid > std::numeric_limits<std::uint32_t>::max()) throw KernelError("grid too large");

    KernelSpec out = kernel;
    out.grid_blocks = static_cast<std::uint32_t>(new_grid);
    out.threads_per_block = new_tpb;
    out.shmem_per_block = total_shmem / new_grid;
    if (new_tpb != kernel.threads_per_block) out.label = kernel.label + ".tpb" + std::to_string(new_tpb);
    return out;
}

InstrMix instruction_mix(const BlockProgram& program) {
    InstrMix m;
    for (const auto& ins : program.instructions) {
        std::visit(
            [&](const auto& i) {
                using T = std::decay_t<decltype(i)>;
                if constexpr (std::is_same_v<T, instr::Compute>) ++m.compute;
                if constexpr (std::is_same_v<T, instr::Load>) ++m.load;
                if constexpr (std::is_same_v<T, instr::Store>) ++m.store;
                if constexpr (std::is_same_v<T, instr::Shmem>) ++m.shmem;
                if constexpr (std::is_same_v<T, instr::Barrier>) ++m.barrier;
            },
            ins);
    }
    return m;
}

}  // namespace gpudse
