// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero on any
// failure. Tolerances and time limits are fixed below.

#include "gpudse/config_io.hpp"
#include "gpudse/dse.hpp"
#include "gpudse/memhier.hpp"
#include "gpudse/report.hpp"
#include "gpudse/simcore.hpp"
#include "gpudse/workload.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace gpudse;

namespace {

constexpr std::uint64_t KB = 1024;

// Pinned tolerances.
constexpr double kOccupancySeconds = 5.0;
constexpr double kCacheSeconds = 30.0;
constexpr double kL2TrendSeconds = 60.0;
constexpr double kL2SmallMinSlowdown = 1.05;
constexpr double kL2LargeMaxChange = 0.01;
constexpr double kCoresDoubleMaxChange = 0.02;
constexpr double kCoresHalfMinSlowdown = 1.20;
constexpr double kSchedOneMinSlowdown = 1.05;
constexpr double kSchedTwoMaxSlowdown = 1.02;
constexpr double kSmFlatTolerance = 0.01;
constexpr double kRegranularizeMinGain = 1.5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

double ratio(std::uint64_t variant, std::uint64_t baseline) { return double(variant) / double(baseline); }

std::uint64_t cycles(const GpuConfig& c, const KernelSpec& k) { return simulate(c, k).total_cycles; }

// --- 1 ---------------------------------------------------------------------------------

Outcome preset_fidelity() {
    const GpuConfig t = preset(Platform::tx2);
    const GpuConfig x = preset(Platform::xavier);
    std::string bad;
    auto check = [&](bool ok, const char* what) {
        if (!ok) bad += std::string(bad.empty() ? "" : ", ") + what;
    };
    check(t.total_cuda_cores() == 256, "tx2 cores");
    check(t.num_sms == 2, "tx2 sms");
    check(t.sm.cores_per_smb * t.sm.smb_per_sm == 128, "tx2 cores/sm");
    check(t.sm.l1.size_bytes == 48 * KB, "tx2 l1");
    check(t.l2.size_bytes == 512 * KB, "tx2 l2");
    check(t.sm.regfile_regs == 65536, "tx2 regfile");
    check(t.sm.shmem_bytes == 64 * KB, "tx2 shmem");
    check(t.sm.warp_schedulers == 4, "tx2 schedulers");
    check(t.sm.max_threads == 2048, "tx2 threads/sm");
    check(t.sm.max_blocks == 32, "tx2 blocks/sm");
    check(t.clock_ghz == 1.1, "tx2 clock");
    check(x.total_cuda_cores() == 512, "xavier cores");
    check(x.num_sms == 8, "xavier sms");
    check(x.sm.cores_per_smb * x.sm.smb_per_sm == 64, "xavier cores/sm");
    check(x.sm.l1.size_bytes == 64 * KB, "xavier l1");
    check(x.l2.size_bytes == 512 * KB, "xavier l2");
    check(x.sm.regfile_regs == 65536, "xavier regfile");
    check(x.sm.warp_schedulers == 4, "xavier schedulers");
    check(x.clock_ghz == 1.37, "xavier clock");
    check(validate(t).empty() && validate(x).empty(), "validate");
    return {bad.empty(), bad.empty() ? "all fields match" : "mismatch: " + bad};
}

// --- 2 ---------------------------------------------------------------------------------

Outcome setup_fidelity() {
    std::string bad;
    auto expect = [&](Platform p, SetupName n, GpuConfig want) {
        for (const ImprovedSetup& s : improved_setups(p)) {
            if (s.name != n) continue;
            if (!same_hardware(s.config, want) || !validate(s.config).empty()) {
                bad += std::string(bad.empty() ? "" : ", ") + std::string(to_string(p)) + "." + std::string(to_string(n));
            }
            return;
        }
        bad += " missing " + std::string(to_string(n));
    };
    {
        const GpuConfig b = preset(Platform::tx2);
        GpuConfig r = b;
        r.sm.warp_schedulers = 2;
        r.sm.regfile_regs = 32768;
        r.sm.shmem_bytes = 16 * KB;
        expect(Platform::tx2, SetupName::reduced_die, r);
        GpuConfig a = b;
        a.num_sms = 4;
        a.sm.l1.size_bytes = 96 * KB;
        a.l2.size_bytes = 256 * KB;
        expect(Platform::tx2, SetupName::increased_perf_a, a);
        a.l2.size_bytes = 128 * KB;
        expect(Platform::tx2, SetupName::increased_perf_b, a);
    }
    {
        const GpuConfig b = preset(Platform::xavier);
        GpuConfig r = b;
        r.sm.warp_schedulers = 2;
        r.sm.regfile_regs = 32768;
        expect(Platform::xavier, SetupName::reduced_die, r);
        GpuConfig a = b;
        a.num_sms = 16;
        a.sm.l1.size_bytes = 256 * KB;
        a.l2.size_bytes = 256 * KB;
        expect(Platform::xavier, SetupName::increased_perf_a, a);
        a.l2.size_bytes = 128 * KB;
        expect(Platform::xavier, SetupName::increased_perf_b, a);
    }
    return {bad.empty(), bad.empty() ? "6 setups match field-for-field" : "mismatch: " + bad};
}

// --- 3 ---------------------------------------------------------------------------------

Outcome occupancy_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); };
    std::size_t mismatches = 0;
    constexpr int kPairs = 2000;
    for (int i = 0; i < kPairs; ++i) {
        SmConfig sm;
        sm.max_warps = static_cast<std::uint32_t>(pick(1, 64));
        sm.max_threads = static_cast<std::uint32_t>(pick(32, std::uint64_t{sm.max_warps} * 32));
        sm.max_blocks = static_cast<std::uint32_t>(pick(1, 32));
        sm.regfile_regs = static_cast<std::uint32_t>(pick(512, 131072));
        sm.shmem_bytes = pick(0, 4) == 0 ? 0 : pick(1024, 192 * KB);
        KernelSpec k;
        k.label = "k";
        k.grid_blocks = 1;
        k.threads_per_block = static_cast<std::uint32_t>(32 * pick(1, 32));
        k.regs_per_thread = static_cast<std::uint32_t>(pick(1, 255));
        k.shmem_per_block = pick(0, 3) == 0 ? 0 : pick(1, 96 * KB);
        k.footprint_bytes = 4096;
        k.program.instructions.emplace_back(instr::Compute{1});
        std::uint32_t got = 0;
        try {
            got = max_blocks_per_sm(sm, k).blocks_per_sm;
        } catch (const UnschedulableError&) {
            got = 0;
        }
        if (got != oracle::pack_blocks(sm, k)) ++mismatches;
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < kOccupancySeconds,
            std::to_string(kPairs) + " pairs, " + std::to_string(mismatches) + " mismatches, " + fmt(s) + " s"};
}

// --- 4 ---------------------------------------------------------------------------------

std::vector<CacheGeometry> default_geometries() {
    std::vector<CacheGeometry> out;
    auto add = [&](const CacheGeometry& g) {
        if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    };
    for (Platform p : {Platform::tx2, Platform::xavier}) {
        const GpuConfig base = preset(p);
        for (std::uint64_t size : default_grid(ParamAxis::l1_size, base)) {
            for (std::uint64_t assoc : default_grid(ParamAxis::l1_assoc, base)) {
                GpuConfig c = base;
                c.sm.l1.size_bytes = size;
                c.sm.l1.associativity = static_cast<std::uint32_t>(assoc);
                if (validate(c).empty()) add(c.sm.l1);
            }
        }
        for (std::uint64_t size : default_grid(ParamAxis::l2_size, base)) {
            for (std::uint64_t assoc : default_grid(ParamAxis::l2_assoc, base)) {
                GpuConfig c = base;
                c.l2.size_bytes = size;
                c.l2.associativity = static_cast<std::uint32_t>(assoc);
                if (validate(c).empty()) add(c.l2);
            }
        }
    }
    return out;
}

Outcome cache_oracle() {
    const auto t0 = Clock::now();
    const auto geoms = default_geometries();
    constexpr std::size_t kAccesses = 100000;
    std::size_t mismatches = 0;
    std::uint64_t seed = 0;
    for (const CacheGeometry& g : geoms) {
        Cache cache(g);
        oracle::NaiveLru ref(g.set_count(), g.associativity, g.line_bytes);
        std::mt19937_64 rng(++seed);
        // Span of four cache capacities, with a hot quarter, so hit rates are mid-range.
        std::uniform_int_distribution<std::uint64_t> cold(0, 4 * g.size_bytes), hot(0, g.size_bytes / 4);
        std::bernoulli_distribution pick_hot(0.5), write(0.3);
        for (std::size_t i = 0; i < kAccesses; ++i) {
            const std::uint64_t a = pick_hot(rng) ? hot(rng) : cold(rng);
            if (cache.access(a, write(rng)).hit != ref.access(a)) ++mismatches;
        }
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < kCacheSeconds, std::to_string(geoms.size()) + " geometries x " +
                                                      std::to_string(kAccesses) + " accesses, " +
                                                      std::to_string(mismatches) + " mismatches, " + fmt(s) + " s"};
}

// --- 5 ---------------------------------------------------------------------------------

Outcome lru_stack() {
    std::size_t violations = 0;
    constexpr int kTraces = 100;
    constexpr std::uint64_t kSets = 64;
    for (int t = 0; t < kTraces; ++t) {
        std::mt19937_64 rng(1000 + t);
        std::uniform_int_distribution<std::uint64_t> addr(0, kSets * 64 * 16 * (1 + t % 4));
        std::vector<std::uint64_t> trace(20000);
        for (auto& a : trace) a = addr(rng);
        std::uint64_t prev = ~0ULL;
        for (std::uint32_t ways : {1u, 2u, 4u, 8u}) {
            Cache c({kSets * ways * 64, ways, 64, 1});
            for (std::uint64_t a : trace) c.access(a, false);
            if (c.stats().misses > prev) ++violations;
            prev = c.stats().misses;
        }
    }
    return {violations == 0, std::to_string(kTraces) + " traces, " + std::to_string(violations) + " violations"};
}

// --- 6 ---------------------------------------------------------------------------------

Outcome determinism() {
    std::size_t diffs = 0;
    for (Platform p : {Platform::tx2, Platform::xavier}) {
        for (ArchetypeName a : kAllArchetypes) {
            for (std::uint64_t seed : {1u, 77u}) {
                const KernelSpec k = gen_archetype({a, Scale::tiny}, seed);
                if (!(simulate(preset(p), k) == simulate(preset(p), k))) ++diffs;
            }
        }
    }
    SweepPlan plan = default_plan(Platform::tx2, synthetic_suite(Scale::tiny, 5));
    RunOptions one, many;
    many.jobs = 4;
    const bool same_sweep = emit_json(run_sweep(plan, one)) == emit_json(run_sweep(plan, many));
    return {diffs == 0 && same_sweep, std::to_string(diffs) + " differing SimResults; sweep jobs=1 vs jobs=4 " +
                                          (same_sweep ? "identical" : "DIFFERENT")};
}

// --- 7 ---------------------------------------------------------------------------------

Outcome l2_trend() {
    const auto t0 = Clock::now();
    const KernelSpec k = gen_archetype({ArchetypeName::graph_traversal, Scale::small}, 1);
    const GpuConfig base = preset(Platform::tx2);
    const auto c_base = cycles(base, k);
    const auto c_128 = cycles(apply_override(base, ParamAxis::l2_size, 128 * KB), k);
    const auto c_1024 = cycles(apply_override(base, ParamAxis::l2_size, 1024 * KB), k);
    const double s_small = ratio(c_128, c_base);
    const double change = std::abs(ratio(c_1024, c_base) - 1.0);
    const double s = seconds_since(t0);
    return {s_small >= kL2SmallMinSlowdown && change <= kL2LargeMaxChange && s < kL2TrendSeconds,
            "footprint " + std::to_string(k.footprint_bytes / KB) + " KB; 128KB slowdown " + fmt(s_small) +
                "; 1024KB vs 512KB change " + fmt(change) + "; " + fmt(s) + " s"};
}

// --- 8 ---------------------------------------------------------------------------------

Outcome cores_trend() {
    const KernelSpec k = gen_archetype({ArchetypeName::dense_linear_algebra, Scale::small}, 1);
    const GpuConfig base = preset(Platform::tx2);
    const auto c32 = cycles(base, k);
    const double d64 = std::abs(ratio(cycles(apply_override(base, ParamAxis::cores_per_smb, 64), k), c32) - 1.0);
    const double s16 = ratio(cycles(apply_override(base, ParamAxis::cores_per_smb, 16), k), c32);
    return {d64 <= kCoresDoubleMaxChange && s16 >= kCoresHalfMinSlowdown,
            "32->64 change " + fmt(d64) + "; 32->16 slowdown " + fmt(s16)};
}

// --- 9 ---------------------------------------------------------------------------------

Outcome scheduler_trend() {
    const KernelSpec k = gen_archetype({ArchetypeName::dynamic_programming, Scale::small}, 1);
    const GpuConfig base = preset(Platform::tx2);
    const auto c4 = cycles(base, k);
    const double s1 = ratio(cycles(apply_override(base, ParamAxis::warp_schedulers, 1), k), c4);
    const double s2 = ratio(cycles(apply_override(base, ParamAxis::warp_schedulers, 2), k), c4);
    return {s1 >= kSchedOneMinSlowdown && s2 <= kSchedTwoMaxSlowdown,
            "4->1 slowdown " + fmt(s1) + "; 4->2 slowdown " + fmt(s2)};
}

// --- 10 --------------------------------------------------------------------------------

KernelSpec compute_kernel(std::uint32_t blocks, std::uint32_t tpb, std::uint32_t iterations, std::uint32_t issue) {
    KernelSpec k;
    k.label = "compute_bound";
    k.grid_blocks = blocks;
    k.threads_per_block = tpb;
    k.regs_per_thread = 16;
    k.footprint_bytes = 64 * KB;
    k.program.iterations = iterations;
    k.program.instructions = {instr::Compute{issue}, instr::Compute{issue}, instr::Compute{issue}};
    return k;
}

Outcome sm_saturation() {
    // One warp per SMB and a compute latency longer than the issue slot, so a second
    // resident block does not compete with the first. Shared memory caps residency at 2.
    KernelSpec k = compute_kernel(8, 128, 40, 8);
    k.shmem_per_block = 32 * KB;
    const GpuConfig base = preset(Platform::tx2);
    const std::uint32_t per_sm = occupancy(base.sm, k).blocks_per_sm;
    std::vector<std::uint64_t> c;
    std::string detail = "blocks_per_sm " + std::to_string(per_sm) + "; cycles";
    for (std::uint64_t n : {1u, 2u, 4u, 8u, 16u}) {
        c.push_back(cycles(apply_override(base, ParamAxis::num_sms, n), k));
        detail += " " + std::to_string(n) + ":" + std::to_string(c.back());
    }
    const bool decreasing = c[0] > c[1] && c[1] > c[2];
    bool flat = true;
    for (std::size_t i = 3; i < c.size(); ++i) flat = flat && std::abs(ratio(c[i], c[2]) - 1.0) <= kSmFlatTolerance;
    return {per_sm == 2 && decreasing && flat, detail};
}

// --- 11 --------------------------------------------------------------------------------

Outcome regranularization() {
    const KernelSpec k = compute_kernel(2, 1024, 40, 1);
    const KernelSpec r = regranularize(k, 64);
    const GpuConfig c = apply_override(preset(Platform::tx2), ParamAxis::num_sms, 16);
    const SimResult before = simulate(c, k);
    const SimResult after = simulate(c, r);
    const double gain = ratio(before.total_cycles, after.total_cycles);
    const bool conserved = before.instructions_issued == after.instructions_issued;
    return {r.grid_blocks >= 16 && gain >= kRegranularizeMinGain && conserved,
            std::to_string(k.grid_blocks) + " -> " + std::to_string(r.grid_blocks) + " blocks; gain " + fmt(gain) +
                "x; instructions " + std::to_string(before.instructions_issued) + " vs " +
                std::to_string(after.instructions_issued)};
}

// --- 12 and 13 -------------------------------------------------------------------------

const SweepResult& default_sweep() {
    static const SweepResult r = run_sweep(default_plan(Platform::tx2, synthetic_suite(Scale::small, 1)));
    return r;
}

Outcome classification_shape() {
    const auto t0 = Clock::now();
    const SweepResult& r = default_sweep();
    const auto rows = classify_all(r);
    const auto axes = default_axes(Platform::tx2);
    bool ok = rows.size() == axes.size();
    std::size_t cat1 = 0;
    for (std::size_t i = 0; ok && i < rows.size(); ++i) {
        ok = rows[i].param == axes[i];
        if (rows[i].category == 1) {
            ++cat1;
            ok = ok && rows[i].limit.has_value();
        } else {
            ok = ok && !rows[i].limit.has_value();
        }
    }
    std::printf("%s", format_classification(rows).c_str());
    return {ok, std::to_string(rows.size()) + "/" + std::to_string(axes.size()) + " axes classified, " +
                    std::to_string(cat1) + " category-1 with limits; " + fmt(seconds_since(t0)) + " s"};
}

Outcome normalization() {
    const SweepResult& r = default_sweep();
    bool base_exact = true;
    for (const auto& [_, cell] : r.entries.at(ConfigPoint{})) base_exact = base_exact && cell.slowdown == 1.0;
    base_exact = base_exact && r.geomean.at(ConfigPoint{}) == 1.0;

    std::map<std::string, SweepCell> ones;
    for (int i = 0; i < 13; ++i) ones["w" + std::to_string(i)] = SweepCell{1, 1.0, ""};
    const bool geomean_one = geomean_of(ones) == 1.0;

    const auto rows = csv_rows(r);
    const bool lossless = read_csv(emit_csv(r)) == rows;
    return {base_exact && geomean_one && lossless, std::string("baseline ") + (base_exact ? "1.0" : "NOT 1.0") +
                                                       "; all-ones geomean " + (geomean_one ? "1.0" : "NOT 1.0") +
                                                       "; csv round-trip of " + std::to_string(rows.size()) +
                                                       " rows " + (lossless ? "lossless" : "LOSSY")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"preset fidelity", preset_fidelity},
        {"improved-setup fidelity", setup_fidelity},
        {"occupancy oracle", occupancy_oracle},
        {"cache oracle", cache_oracle},
        {"lru stack property", lru_stack},
        {"determinism", determinism},
        {"trend l2 size", l2_trend},
        {"trend cuda cores", cores_trend},
        {"trend warp schedulers", scheduler_trend},
        {"saturation sms", sm_saturation},
        {"regranularization", regranularization},
        {"classification shape", classification_shape},
        {"normalization invariants", normalization},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
