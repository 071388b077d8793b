#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ramzzz/arch.hpp"
#include "ramzzz/demotion.hpp"
#include "ramzzz/engine.hpp"
#include "ramzzz/idle_histogram.hpp"
#include "ramzzz/placement.hpp"
#include "ramzzz/predictor.hpp"
#include "ramzzz/trace.hpp"

using namespace ramzzz;

namespace {

// Roughly geometric idle lengths, the shape a Poisson-ish rank produces.
std::vector<std::uint64_t> sample_idle_lengths(std::size_t n, double mean, std::uint64_t cap,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> dist(1.0 / mean);
    std::vector<std::uint64_t> lengths(n);
    for (auto& len : lengths) {
        len = std::min(static_cast<std::uint64_t>(dist(rng)) + 1, cap);
    }
    return lengths;
}

IdleHistogram sample_hist(std::uint64_t slot, std::size_t n, double mean, std::uint64_t seed) {
    IdleHistogram hist(slot);
    for (auto len : sample_idle_lengths(n, mean, slot, seed)) hist.record_idle(len);
    return hist;
}

struct MatchingFixture {
    Placement prev;
    std::vector<std::vector<std::uint64_t>> groups;

    MatchingFixture(std::size_t ranks, std::size_t per_rank)
        : prev(ranks, per_rank) {
        std::vector<std::uint64_t> pages(ranks * per_rank);
        std::iota(pages.begin(), pages.end(), 0);
        std::mt19937_64 rng(17);
        std::shuffle(pages.begin(), pages.end(), rng);
        for (std::size_t i = 0; i < pages.size(); ++i) prev.place(pages[i], i / per_rank);
        std::shuffle(pages.begin(), pages.end(), rng);
        groups = group_pages(pages, ranks, per_rank);
    }
};

void bm_record_idle(benchmark::State& state) {
    const std::uint64_t slot = 100'000'000;
    const auto lengths = sample_idle_lengths(4096, 5000.0, slot, 11);
    for (auto _ : state) {
        IdleHistogram hist(slot);
        for (auto len : lengths) hist.record_idle(len);
        benchmark::DoNotOptimize(hist.total_count());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lengths.size()));
}
BENCHMARK(bm_record_idle);

void bm_total_energy(benchmark::State& state) {
    const auto spec = load_arch_spec("ddr3");
    const auto cfg = DemotionConfig::break_even(spec);
    const auto hist = sample_hist(100'000'000, 4096, 5000.0, 12);
    for (auto _ : state) {
        benchmark::DoNotOptimize(total_energy(cfg, hist, spec));
    }
}
BENCHMARK(bm_total_energy);

void bm_greedy_solve(benchmark::State& state) {
    const auto spec = load_arch_spec("ddr3");
    const std::uint64_t slot = 100'000'000;
    const auto hist =
        sample_hist(slot, static_cast<std::size_t>(state.range(0)), 5000.0, 13);
    SolveOptions options;
    options.objective = Objective::kEd2;
    options.delay_budget = 0.04 * static_cast<double>(slot);
    options.base_delay = static_cast<double>(slot);
    for (auto _ : state) {
        benchmark::DoNotOptimize(greedy_config(hist, spec, options).timeouts.data());
    }
}
BENCHMARK(bm_greedy_solve)->Arg(64)->Arg(512)->Arg(4096);

void bm_exhaustive_solve(benchmark::State& state) {
    const auto spec = load_arch_spec("lpddr2");
    IdleHistogram hist(1'000'000);
    std::mt19937_64 rng(14);
    for (int i = 0; i < 20; ++i) {
        hist.add(rng() % 100'000 + 1, static_cast<double>(rng() % 50 + 1));
    }
    SolveOptions options;
    options.objective = Objective::kEd2;
    options.delay_budget = 40'000.0;
    options.base_delay = 1'000'000.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(exhaustive_config(hist, spec, options).timeouts.data());
    }
}
BENCHMARK(bm_exhaustive_solve);

void bm_match_groups(benchmark::State& state) {
    const MatchingFixture fx(static_cast<std::size_t>(state.range(0)), 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(match_groups_to_ranks(fx.prev, fx.groups).data());
    }
}
BENCHMARK(bm_match_groups)->Arg(4)->Arg(16)->Arg(64);

void bm_eulerian_schedule(benchmark::State& state) {
    const std::size_t ranks = static_cast<std::size_t>(state.range(0));
    const MatchingFixture fx(ranks, 64);
    const auto mapping = match_groups_to_ranks(fx.prev, fx.groups);
    const auto edges = build_migration_graph(fx.prev, fx.groups, mapping);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eulerian_schedule(edges, ranks).total_edges());
    }
}
BENCHMARK(bm_eulerian_schedule)->Arg(4)->Arg(16)->Arg(64);

void bm_predict_rescale(benchmark::State& state) {
    const auto hist = sample_hist(100'000'000, 4096, 5000.0, 15);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_after_migration(hist, 0.9995, 0.9990, 200.0).total_count());
    }
}
BENCHMARK(bm_predict_rescale);

const std::vector<MemoryAccess>& bench_trace() {
    static const auto trace = [] {
        SyntheticTraceParams params;
        params.total_cycles = 10'000'000;
        params.num_pages = 256;
        params.access_rate = 2e-4;
        params.seed = 7;
        return generate_synthetic_trace(params);
    }();
    return trace;
}

void run_policy(benchmark::State& state, Policy policy) {
    const auto spec = load_arch_spec("ddr3");
    const auto& trace = bench_trace();
    SimParams params;
    params.policy = policy;
    params.slot_cycles = 1'000'000;
    params.slots_per_epoch = 10;
    params.ranks = 4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_simulation(trace, spec, params).total_energy);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace.size()));
}

void bm_simulate_static(benchmark::State& state) { run_policy(state, Policy::kBase); }
BENCHMARK(bm_simulate_static);

void bm_simulate_full(benchmark::State& state) { run_policy(state, Policy::kRamzzz); }
BENCHMARK(bm_simulate_full);

}  // namespace

BENCHMARK_MAIN();
