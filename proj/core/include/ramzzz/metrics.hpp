#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ramzzz/demotion.hpp"
#include "ramzzz/idle_histogram.hpp"

namespace ramzzz {

struct DelayBreakdown {
    double resync = 0.0;
    double migration = 0.0;
    double remap = 0.0;

    double total() const { return resync + migration + remap; }
};

struct RankMetrics {
    // Cycles per power state over the horizon; [0] is idle-at-ACT, [j] is
    // low-power state j. Occupancy buckets below complete the partition.
    std::vector<double> state_residency;
    double servicing_cycles = 0.0;
    double resync_occupied_cycles = 0.0;
    double migration_occupied_cycles = 0.0;
    double remap_occupied_cycles = 0.0;

    double background_energy = 0.0;
    double resync_energy = 0.0;
    double migration_energy = 0.0;
    DelayBreakdown delay;

    std::uint64_t accesses = 0;
    std::uint64_t resync_count = 0;
};

struct SlotRankRecord {
    std::vector<std::pair<std::uint64_t, double>> actual;  // idle-length buckets
    DemotionConfig config;                                 // config the slot ran with
};

struct SlotRecord {
    std::vector<SlotRankRecord> ranks;
};

struct SimMetrics {
    std::string policy;
    std::string arch;
    std::vector<std::string> state_names;  // ACT first, then the chain

    std::uint64_t ranks = 0;
    std::uint64_t slot_cycles = 0;
    std::uint64_t slots_per_epoch = 0;
    std::uint64_t num_slots = 0;
    std::uint64_t horizon_cycles = 0;
    std::uint64_t trace_span = 0;
    std::uint64_t accesses = 0;
    std::uint64_t migrated_pages = 0;
    std::uint64_t migration_segments = 0;

    double total_energy = 0.0;
    double background_energy = 0.0;
    double resync_energy = 0.0;
    double migration_energy = 0.0;
    DelayBreakdown delay;  // migration counted once per segment, not per rank
    double exec_time = 0.0;
    double ed2 = 0.0;

    std::vector<RankMetrics> per_rank;
    std::vector<double> prediction_error;  // per slot; -1 where undefined
    std::vector<std::pair<std::size_t, double>> mq_levels;  // queue -> mean counter

    std::vector<SlotRecord> slots;  // populated when slot recording is on
};

struct NormalizedMetrics {
    double energy = 1.0;
    double exec_time = 1.0;
    double ed2 = 1.0;
};

/// Ratios of a run against its BASE baseline on the same trace and spec.
NormalizedMetrics compute_ed2(const SimMetrics& metrics, const SimMetrics& baseline);

struct SystemMetrics {
    double energy = 1.0;
    double ed2 = 1.0;
};

/// Whole-system view: memory contributes `mem_power_ratio` of total power,
/// the rest scales with execution time.
SystemMetrics full_system_energy(const SimMetrics& metrics, const SimMetrics& baseline,
                                 double mem_power_ratio);

/// L1 distance between the histograms over power-of-two length bins,
/// normalized by the actual total count. Throws when `actual` is empty.
double prediction_error(const IdleHistogram& predicted, const IdleHistogram& actual);

std::string metrics_to_json(const SimMetrics& metrics, int indent = 2);
SimMetrics metrics_from_json(const std::string& text);
void save_metrics(const SimMetrics& metrics, const std::string& path);
SimMetrics load_metrics(const std::string& path);

}  // namespace ramzzz
