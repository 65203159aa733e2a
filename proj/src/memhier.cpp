#include "gpudse/memhier.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gpudse {

Cache::Cache(const CacheGeometry& geometry)
    : geometry_(geometry),
      set_count_(geometry.set_count()),
      ways_(set_count_ * geometry.associativity),
      fill_(set_count_, 0) {
    if (set_count_ == 0) throw ConfigError("cache geometry has no sets");
}

Cache::Way* Cache::find(std::uint64_t line_number, std::uint64_t set) {
    Way* first = ways_.data() + set * geometry_.associativity;
    for (std::uint32_t i = 0; i < fill_[set]; ++i) {
        if (first[i].line_number == line_number) return first + i;
    }
    return nullptr;
}

const Cache::Way* Cache::find(std::uint64_t line_number, std::uint64_t set) const {
    return const_cast<Cache*>(this)->find(line_number, set);
}

AccessOutcome Cache::access(std::uint64_t line_address, bool is_write) {
    const std::uint64_t line = line_address / geometry_.line_bytes;
    const std::uint64_t set = line % set_count_;
    Way* first = ways_.data() + set * geometry_.associativity;
    ++stats_.accesses;

    AccessOutcome out;
    if (Way* w = find(line, set)) {
        ++stats_.hits;
        out.hit = true;
        std::rotate(first, w, w + 1);
        first->dirty = first->dirty || is_write;
        return out;
    }

    ++stats_.misses;
    std::uint32_t& fill = fill_[set];
    if (fill == geometry_.associativity) {
        const Way& victim = first[fill - 1];
        out.evicted_line = victim.line_number * geometry_.line_bytes;
        out.evicted_dirty = victim.dirty;
        ++stats_.evictions;
        if (victim.dirty) ++stats_.dirty_writebacks;
    } else {
        ++fill;
    }
    std::rotate(first, first + fill - 1, first + fill);
    *first = Way{line, 0, is_write};
    return out;
}

bool Cache::probe(std::uint64_t line_address) const {
    const std::uint64_t line = line_address / geometry_.line_bytes;
    return find(line, line % set_count_) != nullptr;
}

std::uint64_t Cache::ready_cycle(std::uint64_t line_address) const {
    const std::uint64_t line = line_address / geometry_.line_bytes;
    const Way* w = find(line, line % set_count_);
    return w ? w->ready : 0;
}

void Cache::set_ready_cycle(std::uint64_t line_address, std::uint64_t cycle) {
    const std::uint64_t line = line_address / geometry_.line_bytes;
    if (Way* w = find(line, line % set_count_)) w->ready = cycle;
}

std::vector<std::uint64_t> Cache::set_contents(std::uint64_t set) const {
    std::vector<std::uint64_t> out;
    const Way* first = ways_.data() + set * geometry_.associativity;
    for (std::uint32_t i = 0; i < fill_[set]; ++i) out.push_back(first[i].line_number * geometry_.line_bytes);
    return out;
}

std::vector<std::uint64_t> coalesce(std::span<const std::uint64_t> addresses, std::uint32_t line_bytes) {
    std::vector<std::uint64_t> lines;
    lines.reserve(addresses.size());
    for (std::uint64_t a : addresses) lines.push_back(a - a % line_bytes);
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    return lines;
}

DramChannel::DramChannel(const DramConfig& dram, std::uint32_t line_bytes)
    : latency_(dram.latency_cycles),
      spacing_(std::max<std::uint64_t>(
          1, std::llround(double(line_bytes) * double(kFixedPointOne) / dram.bandwidth_bytes_per_cycle))) {}

std::uint64_t DramChannel::service(std::uint64_t issue_cycle) {
    std::uint64_t t = (issue_cycle + latency_) * kFixedPointOne;
    if (last_) t = std::max(t, *last_ + spacing_);
    last_ = t;
    return (t + kFixedPointOne - 1) / kFixedPointOne;
}

std::vector<std::uint64_t> dram_service(std::span<const MemRequest> queue, const DramConfig& dram,
                                        std::uint32_t line_bytes) {
    DramChannel channel(dram, line_bytes);
    std::vector<std::uint64_t> done;
    done.reserve(queue.size());
    for (const MemRequest& r : queue) done.push_back(channel.service(r.ready_cycle));
    return done;
}

MemorySystem::MemorySystem(const GpuConfig& c)
    : line_bytes_(c.sm.l1.line_bytes),
      l1_latency_(c.sm.l1.hit_latency),
      l2_latency_(c.l2.hit_latency),
      sms_per_cluster_(c.sms_per_cluster),
      l1_(c.num_sms, Cache(c.sm.l1)),
      l2_(c.l2),
      dram_(c.dram, c.l2.line_bytes),
      bank_free_(c.dram.l2_banks, 0),
      port_free_(c.num_clusters(), 0) {}

void MemorySystem::trace(std::uint64_t cycle, std::uint32_t sm, MemLevel level, std::uint64_t line, bool hit) {
    if (!trace_) return;
    *trace_ << cycle << ' ' << sm << ' ' << (level == MemLevel::l1 ? "L1" : "L2") << ' ' << line << ' '
            << (hit ? "hit" : "miss") << '\n';
}

std::uint64_t MemorySystem::l2_access(std::uint32_t sm_id, std::uint64_t line, bool is_write,
                                      std::uint64_t arrival) {
    std::uint64_t& port = port_free_[sm_id / sms_per_cluster_];
    const std::uint64_t at_port = std::max(arrival, port);
    port = at_port + 1;
    std::uint64_t& bank = bank_free_[(line / line_bytes_) % bank_free_.size()];
    const std::uint64_t at_bank = std::max(at_port, bank);
    bank = at_bank + 1;

    const AccessOutcome out = l2_.access(line, is_write);
    trace(at_bank, sm_id, MemLevel::l2, line, out.hit);
    if (out.hit) return std::max<std::uint64_t>(at_bank + l2_latency_, l2_.ready_cycle(line));

    const std::uint64_t issue = at_bank + l2_latency_;
    const std::uint64_t ready = dram_.service(issue);
    dram_bytes_ += line_bytes_;
    l2_.set_ready_cycle(line, ready);
    if (out.evicted_dirty) {
        dram_.service(issue);
        dram_bytes_ += line_bytes_;
    }
    return ready;
}

LineTiming MemorySystem::access(std::uint32_t sm_id, std::uint64_t line, bool is_write, std::uint64_t cycle) {
    Cache& l1 = l1_[sm_id];
    const AccessOutcome out = l1.access(line, is_write);
    trace(cycle, sm_id, MemLevel::l1, line, out.hit);
    const std::uint64_t arrival = cycle + l1_latency_;
    LineTiming t;
    t.l1_hit = out.hit;
    if (out.hit) {
        t.ready_cycle = std::max(arrival, l1.ready_cycle(line));
    } else {
        t.ready_cycle = l2_access(sm_id, line, false, arrival);
        l1.set_ready_cycle(line, t.ready_cycle);
    }
    if (out.evicted_dirty) l2_access(sm_id, *out.evicted_line, true, arrival);
    return t;
}

MemStats MemorySystem::l1_stats() const {
    MemStats s;
    for (const Cache& c : l1_) {
        s.accesses += c.stats().accesses;
        s.hits += c.stats().hits;
        s.misses += c.stats().misses;
        s.evictions += c.stats().evictions;
        s.dirty_writebacks += c.stats().dirty_writebacks;
    }
    return s;
}

MemStats MemorySystem::l2_stats() const {
    MemStats s = l2_.stats();
    s.dram_bytes = dram_bytes_;
    return s;
}

}  // namespace gpudse
