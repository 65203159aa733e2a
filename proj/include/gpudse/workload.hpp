#pragma once

#include "gpudse/arch.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gpudse {

enum class PatternMode { coalesced_stride, strided, random_uniform };

std::string_view to_string(PatternMode mode);
PatternMode parse_pattern_mode(std::string_view name);

/// Address stream of one memory instruction. Addresses wrap inside [0, region_bytes).
///
/// coalesced_stride: lane-contiguous, (base + (warp*32 + lane) * stride) mod region.
/// strided:          lane-transposed, (base + lane * stride + warp * 4) mod region, so
///                   neighbouring warps touch the same lines (reuse through the cache).
/// random_uniform:   hash(seed, warp, lane, ordinal) mod region, 4-byte aligned.
struct AccessPattern {
    PatternMode mode = PatternMode::coalesced_stride;
    std::uint64_t base_offset = 0;
    std::uint64_t stride_bytes = 4;
    std::uint64_t region_bytes = 0;

    bool operator==(const AccessPattern&) const = default;
};

namespace instr {
struct Compute {
    std::uint32_t issue_cycles = 1;
    bool operator==(const Compute&) const = default;
};
struct Load {
    AccessPattern pattern;
    bool operator==(const Load&) const = default;
};
struct Store {
    AccessPattern pattern;
    bool operator==(const Store&) const = default;
};
struct Shmem {
    std::uint32_t latency = 1;
    bool operator==(const Shmem&) const = default;
};
struct Barrier {
    bool operator==(const Barrier&) const = default;
};
}  // namespace instr

using WarpInstr = std::variant<instr::Compute, instr::Load, instr::Store, instr::Shmem, instr::Barrier>;

struct BlockProgram {
    std::vector<WarpInstr> instructions;
    std::uint32_t iterations = 1;

    bool operator==(const BlockProgram&) const = default;
};

struct KernelSpec {
    std::uint32_t grid_blocks = 1;
    std::uint32_t threads_per_block = kWarpSize;
    std::uint32_t regs_per_thread = 1;
    std::uint64_t shmem_per_block = 0;
    BlockProgram program;
    std::uint64_t footprint_bytes = 0;
    std::uint64_t seed = 0;
    std::string label;

    std::uint32_t warps_per_block() const noexcept { return threads_per_block / kWarpSize; }
    std::uint64_t total_threads() const noexcept {
        return std::uint64_t{grid_blocks} * threads_per_block;
    }
    /// Warp instructions executed over the whole grid.
    std::uint64_t total_warp_instructions() const noexcept {
        return std::uint64_t{grid_blocks} * warps_per_block() * program.instructions.size() *
               program.iterations;
    }

    bool operator==(const KernelSpec&) const = default;
};

/// Smallest footprint a kernel may declare.
inline constexpr std::uint64_t kMinFootprintBytes = 64;

class KernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<Violation> validate(const KernelSpec& kernel);

enum class ArchetypeName {
    dense_linear_algebra,
    structured_grid,
    graph_traversal,
    dynamic_programming,
    unstructured_grid,
};

enum class Scale { tiny, small, medium };

inline constexpr ArchetypeName kAllArchetypes[] = {
    ArchetypeName::dense_linear_algebra, ArchetypeName::structured_grid,
    ArchetypeName::graph_traversal,      ArchetypeName::dynamic_programming,
    ArchetypeName::unstructured_grid,
};

struct Archetype {
    ArchetypeName name = ArchetypeName::dense_linear_algebra;
    Scale scale = Scale::small;
};

std::string_view to_string(ArchetypeName name);
std::string_view to_string(Scale scale);
ArchetypeName parse_archetype(std::string_view name);
Scale parse_scale(std::string_view name);

/// Footprint fixed by the scale tier: 64KB, 1MB, 8MB.
std::uint64_t scale_footprint(Scale scale);

/// Pure function of (archetype, seed).
KernelSpec gen_archetype(const Archetype& archetype, std::uint64_t seed);

/// One kernel per archetype at the given scale, seeds derived from base_seed.
std::vector<KernelSpec> synthetic_suite(Scale scale, std::uint64_t base_seed = 1);

/// Byte address touched by one lane. ordinal is the warp's dynamic instruction count.
std::uint64_t expand_address(const AccessPattern& pattern, std::uint64_t warp_index,
                             std::uint32_t lane, std::uint64_t instr_ordinal, std::uint64_t seed);

/// Same grid-wide work split into blocks of a different size.
KernelSpec regranularize(const KernelSpec& kernel, std::uint32_t new_threads_per_block);

struct InstrMix {
    std::uint64_t compute = 0;
    std::uint64_t load = 0;
    std::uint64_t store = 0;
    std::uint64_t shmem = 0;
    std::uint64_t barrier = 0;
};
InstrMix instruction_mix(const BlockProgram& program);

/// Text form (JSON). read_kernel validates and throws ParseError / ValidationError.
std::string kernel_to_text(const KernelSpec& kernel);
KernelSpec kernel_from_text(const std::string& text, const std::string& origin = "<kernel>");
void write_kernel(const KernelSpec& kernel, const std::filesystem::path& path);
KernelSpec read_kernel(const std::filesystem::path& path);

}  // namespace gpudse
