#pragma once

#include "gpudse/arch.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace gpudse {

struct MemStats {
    std::uint64_t accesses = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t dirty_writebacks = 0;
    /// Off-chip traffic caused by this level; only the last-level cache reports it.
    std::uint64_t dram_bytes = 0;

    bool operator==(const MemStats&) const = default;
};

struct AccessOutcome {
    bool hit = false;
    std::optional<std::uint64_t> evicted_line;  // byte address of the victim
    bool evicted_dirty = false;
};

/// Set-associative, LRU, write-back write-allocate cache.
///
/// Set index is (line / line_bytes) mod set_count. Each set keeps its ways ordered
/// MRU first. The per-line ready cycle lets the timing model merge hits onto an
/// in-flight fill.
class Cache {
public:
    explicit Cache(const CacheGeometry& geometry);

    AccessOutcome access(std::uint64_t line_address, bool is_write);

    /// True if the line is resident. Does not touch LRU order or stats.
    bool probe(std::uint64_t line_address) const;

    std::uint64_t ready_cycle(std::uint64_t line_address) const;
    void set_ready_cycle(std::uint64_t line_address, std::uint64_t cycle);

    /// Resident line addresses of one set, MRU first.
    std::vector<std::uint64_t> set_contents(std::uint64_t set_index) const;

    std::uint64_t set_index(std::uint64_t line_address) const noexcept {
        return (line_address / geometry_.line_bytes) % set_count_;
    }

    const CacheGeometry& geometry() const noexcept { return geometry_; }
    const MemStats& stats() const noexcept { return stats_; }
    std::uint64_t set_count() const noexcept { return set_count_; }

private:
    struct Way {
        std::uint64_t line_number = 0;
        std::uint64_t ready = 0;
        bool dirty = false;
    };

    // Ways of set s are ways_[s*assoc, s*assoc + fill_[s]), MRU first.
    Way* find(std::uint64_t line_number, std::uint64_t set);
    const Way* find(std::uint64_t line_number, std::uint64_t set) const;

    CacheGeometry geometry_;
    std::uint64_t set_count_;
    std::vector<Way> ways_;
    std::vector<std::uint32_t> fill_;
    MemStats stats_;
};

/// Unique line-aligned addresses touched by one warp, ascending.
std::vector<std::uint64_t> coalesce(std::span<const std::uint64_t> addresses, std::uint32_t line_bytes);

struct MemRequest {
    std::uint64_t line_address = 0;
    bool is_write = false;
    std::uint32_t sm_id = 0;
    std::uint64_t ready_cycle = 0;  // cycle the request reaches the memory controller
};

/// Single FIFO memory channel. A request completes at the later of issue + latency and
/// the previous completion + line_bytes / bandwidth.
class DramChannel {
public:
    static constexpr std::uint64_t kFixedPointOne = 1ULL << 16;

    DramChannel(const DramConfig& dram, std::uint32_t line_bytes);

    std::uint64_t service(std::uint64_t issue_cycle);

    /// Spacing between completions in 1/65536 cycle units.
    std::uint64_t spacing_fixed() const noexcept { return spacing_; }

private:
    std::uint64_t latency_;
    std::uint64_t spacing_;
    std::optional<std::uint64_t> last_;  // fixed point
};

/// Completion cycle of every request, served in queue order.
std::vector<std::uint64_t> dram_service(std::span<const MemRequest> queue, const DramConfig& dram,
                                        std::uint32_t line_bytes);

enum class MemLevel { l1, l2 };

struct LineTiming {
    std::uint64_t ready_cycle = 0;
    bool l1_hit = false;
};

/// Per-SM L1s, the shared banked L2 behind one request port per cluster, and DRAM.
///
/// Each L2 bank and each cluster port accepts one request per cycle; requests are
/// reserved in call order. Writebacks use the same ports and banks and the DRAM
/// channel but nothing waits on them.
class MemorySystem {
public:
    explicit MemorySystem(const GpuConfig& config);

    LineTiming access(std::uint32_t sm_id, std::uint64_t line_address, bool is_write, std::uint64_t cycle);

    bool l1_probe(std::uint32_t sm_id, std::uint64_t line_address) const {
        return l1_[sm_id].probe(line_address);
    }

    /// One line per cache access: cycle, sm, level, line, hit|miss.
    void set_trace(std::ostream* out) noexcept { trace_ = out; }

    MemStats l1_stats() const;
    const MemStats& l1_stats(std::uint32_t sm_id) const { return l1_[sm_id].stats(); }
    MemStats l2_stats() const;
    std::uint32_t line_bytes() const noexcept { return line_bytes_; }

private:
    std::uint64_t l2_access(std::uint32_t sm_id, std::uint64_t line_address, bool is_write,
                            std::uint64_t arrival);
    void trace(std::uint64_t cycle, std::uint32_t sm, MemLevel level, std::uint64_t line, bool hit);

    std::uint32_t line_bytes_;
    std::uint32_t l1_latency_;
    std::uint32_t l2_latency_;
    std::uint32_t sms_per_cluster_;
    std::vector<Cache> l1_;
    Cache l2_;
    DramChannel dram_;
    std::vector<std::uint64_t> bank_free_;
    std::vector<std::uint64_t> port_free_;
    std::uint64_t dram_bytes_ = 0;
    std::ostream* trace_ = nullptr;
};

}  // namespace gpudse
