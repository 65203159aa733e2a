#include "gpudse/simcore.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <functional>
#include <limits>
#include <queue>

namespace gpudse {

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

std::uint64_t kernel_digest(const KernelSpec& k) {
    // FNV-1a over the canonical text form.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : kernel_to_text(k)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

enum class WarpState { active, at_barrier, done };

struct Warp {
    std::uint64_t global_index = 0;
    std::uint32_t block_slot = 0;
    std::uint32_t pc = 0;
    std::uint32_t iteration = 0;
    std::uint64_t ordinal = 0;
    std::uint64_t ready = 0;
    WarpState state = WarpState::active;
    bool waiting_mem = false;
    bool finished_program = false;
};

struct Block {
    bool live = false;
    std::uint32_t live_warps = 0;
    std::uint32_t at_barrier = 0;
    std::uint64_t finish = 0;
    std::vector<std::uint32_t> warps;
};

struct Scheduler {
    std::vector<std::uint32_t> warps;  // age order
    std::vector<std::uint32_t> smbs;
    std::uint32_t smb_cursor = 0;
    std::uint32_t warp_cursor = 0;     // round-robin policy only
    std::uint64_t ready_hint = 0;      // lower bound on the earliest ready active warp
};

struct Sm {
    std::vector<Warp> warps;
    std::vector<std::uint32_t> free_warps;
    std::vector<Block> blocks;
    std::vector<Scheduler> schedulers;
    std::vector<std::uint64_t> smb_free;
    std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> mshr;
    std::uint32_t resident = 0;
    std::uint32_t next_scheduler = 0;
};

struct RetireEvent {
    std::uint64_t cycle;
    std::uint32_t sm;
    std::uint32_t slot;
    bool operator>(const RetireEvent& o) const {
        return std::tie(cycle, sm, slot) > std::tie(o.cycle, o.sm, o.slot);
    }
};

class Engine {
public:
    Engine(const GpuConfig& config, const KernelSpec& kernel, const SimOptions& options,
           std::uint32_t blocks_per_sm)
        : config_(config),
          kernel_(kernel),
          options_(options),
          blocks_per_sm_(blocks_per_sm),
          memory_(config),
          compute_occupancy_((kWarpSize + config.sm.cores_per_smb - 1) / config.sm.cores_per_smb),
          sms_(config.num_sms),
          activity_(config.num_sms) {
        memory_.set_trace(options.trace);
        const std::uint32_t S = config.sm.warp_schedulers;
        const std::uint32_t B = config.sm.smb_per_sm;
        for (Sm& sm : sms_) {
            sm.blocks.resize(blocks_per_sm);
            sm.smb_free.assign(B, 0);
            sm.schedulers.resize(S);
            for (std::uint32_t s = 0; s < S; ++s) {
                if (S <= B) {
                    for (std::uint32_t b = s; b < B; b += S) sm.schedulers[s].smbs.push_back(b);
                } else {
                    sm.schedulers[s].smbs.push_back(s % B);
                }
            }
        }
    }

    SimResult run() {
        std::uint64_t t = 0;
        while (blocks_retired_ < kernel_.grid_blocks) {
            if (t > options_.cycle_cap) {
                throw CycleCapExceeded("simulation exceeded the cycle cap of " +
                                       std::to_string(options_.cycle_cap) + " cycles");
            }
            retire_until(t);
            dispatch(t);

            bool issued_any = false;
            std::uint64_t next = kNever;
            for (std::uint32_t id = 0; id < sms_.size(); ++id) {
                SmCycle c = step_sm(id, t);
                issued_any = issued_any || c.issued;
                next = std::min(next, c.next_event);
                cycle_kind_[id] = c.kind;
            }
            if (!retire_.empty()) next = std::min(next, retire_.top().cycle);

            std::uint64_t advance = 1;
            if (!issued_any && next != kNever && next > t + 1) advance = next - t;
            if (!issued_any && next == kNever && blocks_retired_ < kernel_.grid_blocks && retire_.empty() &&
                next_block_ >= kernel_.grid_blocks) {
                throw SimulationError("simulation deadlocked at cycle " + std::to_string(t));
            }
            for (std::uint32_t id = 0; id < sms_.size(); ++id) {
                record(id, cycle_kind_[id], 1);
                if (advance > 1 && cycle_kind_[id] != Kind::busy) record(id, cycle_kind_[id], advance - 1);
            }
            t += advance;
        }

        SimResult r;
        r.kernel_label = kernel_.label;
        r.config_label = config_.label;
        r.total_cycles = total_cycles_;
        r.wall_time_estimate = double(total_cycles_) / (config_.clock_ghz * 1e9);
        r.instructions_issued = instructions_;
        r.per_sm = activity_;
        r.l1_stats = memory_.l1_stats();
        r.l2_stats = memory_.l2_stats();
        r.blocks_executed = blocks_retired_;
        return r;
    }

private:
    enum class Kind { busy, stall_issue, stall_mem, idle };

    struct SmCycle {
        bool issued = false;
        std::uint64_t next_event = kNever;
        Kind kind = Kind::idle;
    };

    void record(std::uint32_t id, Kind kind, std::uint64_t n) {
        SmActivity& a = activity_[id];
        switch (kind) {
        case Kind::busy: a.busy_cycles += n; break;
        case Kind::stall_issue: a.stall_cycles_issue += n; break;
        case Kind::stall_mem: a.stall_cycles_mem += n; break;
        case Kind::idle: break;
        }
    }

    void retire_until(std::uint64_t t) {
        while (!retire_.empty() && retire_.top().cycle <= t) {
            const RetireEvent e = retire_.top();
            retire_.pop();
            Sm& sm = sms_[e.sm];
            Block& b = sm.blocks[e.slot];
            for (std::uint32_t w : b.warps) sm.free_warps.push_back(w);
            b = Block{};
            --sm.resident;
            ++blocks_retired_;
            total_cycles_ = std::max(total_cycles_, e.cycle);
        }
    }

    void dispatch(std::uint64_t t) {
        const std::uint32_t n = static_cast<std::uint32_t>(sms_.size());
        while (next_block_ < kernel_.grid_blocks) {
            std::uint32_t chosen = n;
            for (std::uint32_t k = 0; k < n; ++k) {
                const std::uint32_t id = (dispatch_cursor_ + k) % n;
                if (sms_[id].resident < blocks_per_sm_) {
                    chosen = id;
                    break;
                }
            }
            if (chosen == n) return;
            launch(chosen, next_block_++, t);
            dispatch_cursor_ = (chosen + 1) % n;
        }
    }

    void launch(std::uint32_t id, std::uint32_t block_id, std::uint64_t t) {
        Sm& sm = sms_[id];
        std::uint32_t slot = 0;
        while (sm.blocks[slot].live) ++slot;
        Block& b = sm.blocks[slot];
        b.live = true;
        b.live_warps = kernel_.warps_per_block();
        const std::uint64_t ready = t + kLaunchLatency;
        for (std::uint32_t w = 0; w < kernel_.warps_per_block(); ++w) {
            std::uint32_t wid;
            if (!sm.free_warps.empty()) {
                wid = sm.free_warps.back();
                sm.free_warps.pop_back();
            } else {
                wid = static_cast<std::uint32_t>(sm.warps.size());
                sm.warps.emplace_back();
            }
            Warp& warp = sm.warps[wid];
            warp = Warp{};
            warp.global_index = std::uint64_t{block_id} * kernel_.warps_per_block() + w;
            warp.block_slot = slot;
            warp.ready = ready;
            b.warps.push_back(wid);
            Scheduler& s = sm.schedulers[sm.next_scheduler];
            sm.next_scheduler = (sm.next_scheduler + 1) % sm.schedulers.size();
            s.warps.push_back(wid);
            s.ready_hint = std::min(s.ready_hint, ready);
        }
        ++sm.resident;
    }

    // Lines touched by the warp's current memory instruction.
    const std::vector<std::uint64_t>& lines_for(const Warp& w, const AccessPattern& p) {
        std::array<std::uint64_t, kWarpSize> addr{};
        for (std::uint32_t lane = 0; lane < kWarpSize; ++lane) {
            addr[lane] = expand_address(p, w.global_index, lane, w.ordinal, kernel_.seed);
        }
        scratch_lines_ = coalesce(addr, memory_.line_bytes());
        return scratch_lines_;
    }

    SmCycle step_sm(std::uint32_t id, std::uint64_t t) {
        Sm& sm = sms_[id];
        SmCycle out;
        while (!sm.mshr.empty() && sm.mshr.top() <= t) sm.mshr.pop();
        mem_blocked_ = false;

        bool any_ready = false;
        bool mem_wait = false;
        for (Scheduler& s : sm.schedulers) {
            if (s.warps.empty()) continue;
            if (t < s.ready_hint) {
                out.next_event = std::min(out.next_event, s.ready_hint);
                for (std::uint32_t wid : s.warps) mem_wait = mem_wait || sm.warps[wid].waiting_mem;
                continue;
            }

            std::int32_t smb = -1;
            std::uint32_t smb_step = 0;
            std::uint64_t smb_next = kNever;
            for (std::uint32_t k = 0; k < s.smbs.size(); ++k) {
                const std::uint32_t b = s.smbs[(s.smb_cursor + k) % s.smbs.size()];
                if (sm.smb_free[b] <= t) {
                    smb = static_cast<std::int32_t>(b);
                    smb_step = k + 1;
                    break;
                }
                smb_next = std::min(smb_next, sm.smb_free[b]);
            }

            std::uint64_t min_future = kNever;
            bool local_ready = false;
            bool issued = false;
            const std::size_t n = s.warps.size();
            const std::size_t start = options_.policy == SchedulerPolicy::round_robin ? s.warp_cursor % n : 0;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t pos = (start + k) % n;
                Warp& w = sm.warps[s.warps[pos]];
                if (w.state != WarpState::active) continue;
                if (w.ready > t) {
                    min_future = std::min(min_future, w.ready);
                    mem_wait = mem_wait || w.waiting_mem;
                    continue;
                }
                w.waiting_mem = false;
                local_ready = true;
                if (smb < 0) {
                    out.next_event = std::min(out.next_event, smb_next);
                    break;
                }
                if (!try_issue(id, sm, w, static_cast<std::uint32_t>(smb), t, out)) continue;
                issued = true;
                s.smb_cursor = static_cast<std::uint32_t>((s.smb_cursor + smb_step) % s.smbs.size());
                s.warp_cursor = static_cast<std::uint32_t>(pos + 1);
                break;
            }
            any_ready = any_ready || local_ready;
            if (issued) {
                out.issued = true;
                // The issuing warp's ready time moved; rescan next cycle.
                s.ready_hint = t + 1;
            } else {
                // Ready-but-blocked warps keep the hint at t; otherwise nothing is ready
                // before the earliest future warp.
                s.ready_hint = local_ready ? t : min_future;
                if (min_future != kNever) out.next_event = std::min(out.next_event, min_future);
            }
            compact(sm, s);
        }

        if (out.issued) {
            out.kind = Kind::busy;
            out.next_event = t + 1;
        } else if (any_ready) {
            out.kind = Kind::stall_issue;
        } else if (mem_wait) {
            out.kind = Kind::stall_mem;
        }
        return out;
    }

    void compact(Sm& sm, Scheduler& s) {
        auto it = std::remove_if(s.warps.begin(), s.warps.end(),
                                 [&](std::uint32_t wid) { return sm.warps[wid].state == WarpState::done; });
        s.warps.erase(it, s.warps.end());
    }

    bool mshr_allows(const Sm& sm, std::uint32_t id, const std::vector<std::uint64_t>& lines) const {
        if (sm.mshr.empty()) return true;
        std::uint32_t misses = 0;
        for (std::uint64_t line : lines) misses += memory_.l1_probe(id, line) ? 0 : 1;
        return sm.mshr.size() + misses <= options_.mshr_per_sm;
    }

    bool try_issue(std::uint32_t id, Sm& sm, Warp& w, std::uint32_t smb, std::uint64_t t, SmCycle& out) {
        const WarpInstr& ins = kernel_.program.instructions[w.pc];
        std::uint64_t smb_busy = 1;
        bool barrier = false;

        if (const auto* c = std::get_if<instr::Compute>(&ins)) {
            smb_busy = compute_occupancy_;
            w.ready = t + std::max<std::uint64_t>(c->issue_cycles, compute_occupancy_);
        } else if (const auto* s = std::get_if<instr::Shmem>(&ins)) {
            w.ready = t + s->latency;
        } else if (std::holds_alternative<instr::Barrier>(ins)) {
            barrier = true;
            w.ready = t + 1;
        } else {
            const bool is_store = std::holds_alternative<instr::Store>(ins);
            const AccessPattern& p =
                is_store ? std::get<instr::Store>(ins).pattern : std::get<instr::Load>(ins).pattern;
            // The load/store path is in order: once one access cannot get its MSHRs,
            // later memory instructions on this SM wait for the next cycle too.
            if (mem_blocked_) return false;
            const std::vector<std::uint64_t>& lines = lines_for(w, p);
            if (!mshr_allows(sm, id, lines)) {
                mem_blocked_ = true;
                out.next_event = std::min(out.next_event, sm.mshr.top());
                return false;
            }
            std::uint64_t ready = t + 1;
            for (std::uint64_t line : lines) {
                const LineTiming lt = memory_.access(id, line, is_store, t);
                if (!lt.l1_hit) sm.mshr.push(lt.ready_cycle);
                ready = std::max(ready, lt.ready_cycle);
            }
            w.ready = ready;
            w.waiting_mem = true;
        }

        sm.smb_free[smb] = t + smb_busy;
        ++instructions_;
        ++w.ordinal;
        if (++w.pc == kernel_.program.instructions.size()) {
            w.pc = 0;
            if (++w.iteration == kernel_.program.iterations) w.finished_program = true;
        }

        Block& b = sm.blocks[w.block_slot];
        if (barrier) {
            w.state = WarpState::at_barrier;
            if (++b.at_barrier == b.live_warps) release_barrier(id, sm, b, t + 1);
        } else if (w.finished_program) {
            finish_warp(id, sm, w, w.ready);
        }
        return true;
    }

    void release_barrier(std::uint32_t id, Sm& sm, Block& b, std::uint64_t ready) {
        b.at_barrier = 0;
        for (std::uint32_t wid : b.warps) {
            Warp& w = sm.warps[wid];
            if (w.state != WarpState::at_barrier) continue;
            w.state = WarpState::active;
            w.ready = ready;
            w.waiting_mem = false;
            if (w.finished_program) finish_warp(id, sm, w, ready);
        }
        for (Scheduler& s : sm.schedulers) s.ready_hint = std::min(s.ready_hint, ready);
    }

    void finish_warp(std::uint32_t id, Sm& sm, Warp& w, std::uint64_t when) {
        w.state = WarpState::done;
        Block& b = sm.blocks[w.block_slot];
        b.finish = std::max(b.finish, when);
        if (--b.live_warps == 0) retire_.push({b.finish, id, w.block_slot});
    }

    const GpuConfig& config_;
    const KernelSpec& kernel_;
    const SimOptions& options_;
    std::uint32_t blocks_per_sm_;
    MemorySystem memory_;
    std::uint64_t compute_occupancy_;
    std::vector<Sm> sms_;
    std::vector<SmActivity> activity_;
    std::vector<Kind> cycle_kind_ = std::vector<Kind>(config_.num_sms, Kind::idle);
    std::priority_queue<RetireEvent, std::vector<RetireEvent>, std::greater<>> retire_;
    std::vector<std::uint64_t> scratch_lines_;
    bool mem_blocked_ = false;
    std::uint32_t next_block_ = 0;
    std::uint32_t dispatch_cursor_ = 0;
    std::uint64_t blocks_retired_ = 0;
    std::uint64_t total_cycles_ = 0;
    std::uint64_t instructions_ = 0;
};

}  // namespace

std::string OccupancyReport::binding_limit() const {
    const std::pair<std::uint32_t, const char*> limits[] = {
        {limit_threads, "threads"}, {limit_registers, "registers"}, {limit_blockcap, "blockcap"}, {limit_shmem, "shmem"}};
    const auto* best = std::min_element(std::begin(limits), std::end(limits),
                                        [](const auto& a, const auto& b) { return a.first < b.first; });
    return best->second;
}

OccupancyReport occupancy(const SmConfig& sm, const KernelSpec& k) {
    OccupancyReport r;
    const std::uint64_t tpb = k.threads_per_block;
    const std::uint64_t thread_cap = std::min<std::uint64_t>(sm.max_threads, std::uint64_t{sm.max_warps} * kWarpSize);
    r.limit_threads = static_cast<std::uint32_t>(thread_cap / tpb);
    r.limit_registers = static_cast<std::uint32_t>(sm.regfile_regs / (std::uint64_t{k.regs_per_thread} * tpb));
    r.limit_blockcap = sm.max_blocks;
    r.limit_shmem = k.shmem_per_block == 0
                        ? r.limit_blockcap
                        : static_cast<std::uint32_t>(std::min<std::uint64_t>(sm.shmem_bytes / k.shmem_per_block,
                                                                              std::numeric_limits<std::uint32_t>::max()));
    r.blocks_per_sm = std::min({r.limit_threads, r.limit_registers, r.limit_shmem, r.limit_blockcap});
    return r;
}

OccupancyReport max_blocks_per_sm(const SmConfig& sm, const KernelSpec& kernel) {
    OccupancyReport r = occupancy(sm, kernel);
    if (r.blocks_per_sm == 0) {
        throw UnschedulableError("kernel '" + kernel.label + "' is unschedulable: one block exceeds the SM's " +
                                 r.binding_limit() + " limit");
    }
    return r;
}

std::uint64_t cycle_cap_from_env(std::uint64_t fallback) {
    const char* v = std::getenv("GPU_DSE_CYCLE_CAP");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v, &end, 10);
    if (end == v || *end != '\0' || x == 0) {
        throw ConfigError(std::string("GPU_DSE_CYCLE_CAP must be a positive integer (got '") + v + "')");
    }
    return x;
}

SimResult simulate(const GpuConfig& config, const KernelSpec& kernel, const SimOptions& options) {
    if (auto v = validate(config); !v.empty()) throw ValidationError(std::move(v));
    if (auto v = validate(kernel); !v.empty()) throw ValidationError(std::move(v));
    if (kernel.footprint_bytes < config.sm.l1.line_bytes) {
        throw ValidationError(std::vector<Violation>{{"footprint_bytes", "smaller than one cache line"}});
    }
    if (options.mshr_per_sm == 0) throw ConfigError("mshr_per_sm must be >= 1");
    const OccupancyReport occ = max_blocks_per_sm(config.sm, kernel);
    Engine engine(config, kernel, options, occ.blocks_per_sm);
    SimResult r = engine.run();
    r.occupancy = occ;
    r.kernel_digest = kernel_digest(kernel);
    return r;
}

double speedup(const SimResult& baseline, const SimResult& variant) {
    if (baseline.kernel_digest != variant.kernel_digest) {
        throw SimulationError("results come from different kernels ('" + baseline.kernel_label + "' vs '" +
                              variant.kernel_label + "')");
    }
    if (baseline.total_cycles == 0) throw SimulationError("baseline has zero cycles");
    return double(variant.total_cycles) / double(baseline.total_cycles);
}

nlohmann::ordered_json to_json(const SimResult& r) {
    auto stats = [](const MemStats& s) {
        nlohmann::ordered_json j;
        j["accesses"] = s.accesses;
        j["hits"] = s.hits;
        j["misses"] = s.misses;
        j["evictions"] = s.evictions;
        j["dirty_writebacks"] = s.dirty_writebacks;
        j["dram_bytes"] = s.dram_bytes;
        return j;
    };
    nlohmann::ordered_json j;
    j["kernel"] = r.kernel_label;
    j["config"] = r.config_label;
    j["total_cycles"] = r.total_cycles;
    j["wall_time_estimate"] = r.wall_time_estimate;
    j["instructions_issued"] = r.instructions_issued;
    j["blocks_executed"] = r.blocks_executed;
    nlohmann::ordered_json occ;
    occ["limit_threads"] = r.occupancy.limit_threads;
    occ["limit_registers"] = r.occupancy.limit_registers;
    occ["limit_shmem"] = r.occupancy.limit_shmem;
    occ["limit_blockcap"] = r.occupancy.limit_blockcap;
    occ["blocks_per_sm"] = r.occupancy.blocks_per_sm;
    j["occupancy"] = std::move(occ);
    nlohmann::ordered_json per_sm = nlohmann::ordered_json::array();
    for (const SmActivity& a : r.per_sm) {
        nlohmann::ordered_json s;
        s["busy_cycles"] = a.busy_cycles;
        s["stall_cycles_mem"] = a.stall_cycles_mem;
        s["stall_cycles_issue"] = a.stall_cycles_issue;
        per_sm.push_back(std::move(s));
    }
    j["per_sm"] = std::move(per_sm);
    j["l1_stats"] = stats(r.l1_stats);
    j["l2_stats"] = stats(r.l2_stats);
    return j;
}

}  // namespace gpudse
