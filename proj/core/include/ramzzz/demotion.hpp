#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ramzzz/arch.hpp"
#include "ramzzz/idle_histogram.hpp"

namespace ramzzz {

// Timeout sentinel for a state that never demotes.
inline constexpr std::uint64_t kNever = UINT64_MAX;

// Per-rank demotion timeouts, one per low-power state in chain order
// (timeouts[0] belongs to the first low-power state). Active timeouts must be
// non-decreasing with depth; kNever disables a state and the chain skips it.
struct DemotionConfig {
    std::vector<std::uint64_t> timeouts;

    std::size_t num_states() const { return timeouts.size(); }
    bool enabled(std::size_t i) const { return timeouts[i] != kNever; }
    bool all_disabled() const;

    static DemotionConfig disabled(std::size_t num_states);
    // Immediate-payback thresholds, forced non-decreasing along the chain.
    static DemotionConfig break_even(const DramArchSpec& spec);
    static DemotionConfig single(std::size_t num_states, std::size_t state, std::uint64_t timeout);

    friend bool operator==(const DemotionConfig&, const DemotionConfig&) = default;
};

void validate_config(const DemotionConfig& cfg);

enum class Objective { kEnergy, kEd2 };

// energy -> E; ed2 -> E * (base_delay + D)^2
double objective_value(double energy, double delay, double base_delay, Objective objective);

// How one idle period of `length` cycles plays out under cfg when the rank
// enters it already in `start_state` (0 = ACT, j = low-power state j).
// background_energy excludes the wake-up resynchronization energy.
struct PeriodBreakdown {
    std::vector<std::uint64_t> state_cycles;  // [0] = ACT-idle, [j] = state j
    std::size_t end_state = 0;
    double background_energy = 0.0;
};
PeriodBreakdown evaluate_period(const DemotionConfig& cfg, std::uint64_t length,
                                const DramArchSpec& spec, std::size_t start_state = 0);

// Energy of one idle period of t cycles that demotes at least once,
// including the final resynchronization energy.
double idle_energy(const DemotionConfig& cfg, std::uint64_t t, const DramArchSpec& spec);

double total_energy(const DemotionConfig& cfg, const IdleHistogram& hist, const DramArchSpec& spec);
double total_delay(const DemotionConfig& cfg, const IdleHistogram& hist, const DramArchSpec& spec);

struct SolveOptions {
    double delay_budget = std::numeric_limits<double>::infinity();  // cycles
    Objective objective = Objective::kEnergy;
    bool exponential_search = false;
    double base_delay = 0.0;  // ed2 baseline; 0 = use the slot length
    std::optional<std::size_t> only_state;  // restrict the chain to one state
};

// One state per round at its best in-budget timeout; candidates are 0, the
// observed lengths, and optionally the power-of-two ladder, bounded by the
// already-selected neighbors.
DemotionConfig greedy_config(const IdleHistogram& hist, const DramArchSpec& spec,
                             const SolveOptions& options = {});

// True optimum over monotone timeout vectors drawn from the candidate grid;
// guarded to small instances.
DemotionConfig exhaustive_config(const IdleHistogram& hist, const DramArchSpec& spec,
                                 const SolveOptions& options = {});

}  // namespace ramzzz
