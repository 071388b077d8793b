#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ramzzz/arch.hpp"
#include "ramzzz/demotion.hpp"
#include "ramzzz/metrics.hpp"
#include "ramzzz/placement.hpp"
#include "ramzzz/trace.hpp"

namespace ramzzz {

enum class Policy { kBase, kOracle, kRamzzz, kRzSp, kRzSd };

Policy parse_policy(const std::string& name);
std::string policy_name(Policy policy);

/// Initial page-interleaved home of a page before any migration.
std::size_t interleave_rank(std::uint64_t page, std::size_t num_ranks);

struct SimParams {
    Policy policy = Policy::kRamzzz;
    std::uint64_t slot_cycles = 100'000'000;
    std::uint64_t slots_per_epoch = 10;
    double delay_budget_fraction = 0.04;
    std::size_t ranks = 4;
    std::size_t capacity_pages = 0;  // 0: tight fit around the trace footprint
    Objective objective = Objective::kEd2;
    std::size_t rzsd_state = SIZE_MAX;  // timeout index of the single allowed state

    std::uint64_t access_cycles = 200;       // service latency per request
    std::uint64_t remap_penalty_cycles = 1;  // lookup cost for migrated pages
    std::uint64_t mq_update_cycles = 0;      // hotness bookkeeping per access
    std::size_t mq_queues = 16;
    std::uint64_t mq_lifetime = 100'000'000;
    MigrationCostModel migration;

    bool exponential_search = false;
    bool record_slots = false;      // keep per-slot histograms and configs
    std::uint64_t horizon_slots = 1;  // minimum slots to simulate

    // Debug sink: when set, every epoch's migration schedule is appended.
    std::vector<MigrationSchedule>* schedule_sink = nullptr;
};

void validate_params(const SimParams& params, const DramArchSpec& spec);

/// Trace-driven simulation of one policy over one architecture.
/// Deterministic for fixed inputs; ORACLE internally runs a recording pass
/// first and then replays with per-slot configs solved from the actuals.
SimMetrics run_simulation(const std::vector<MemoryAccess>& trace, const DramArchSpec& spec,
                          const SimParams& params);

}  // namespace ramzzz
