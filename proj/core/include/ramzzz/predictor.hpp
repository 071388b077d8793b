#pragma once

#include <cstdint>
#include <vector>

#include "ramzzz/idle_histogram.hpp"

namespace ramzzz {

struct RankAccessProfile {
    std::vector<double> page_probs;  // per-page access probability per cycle
    double idle_prob = 1.0;          // Q = product of (1 - p_i)
    double access_latency = 200.0;   // g, cycles
};

// p = min(1, g * f / T) for a page with f accesses over a T-cycle slot.
double page_access_prob(double accesses_per_slot, double latency_cycles, std::uint64_t slot_cycles);

// Q = product over pages of (1 - p_i); empty rank gives 1.
double rank_idle_prob(const std::vector<double>& page_probs);

RankAccessProfile make_rank_profile(const std::vector<double>& accesses_per_slot,
                                    double latency_cycles, std::uint64_t slot_cycles);

// W_k = Q^k * (1 - Q), the probability of an idle period of exactly k cycles.
double idle_length_prob(double idle_prob, std::uint64_t k);

IdleHistogram predict_carry_forward(const IdleHistogram& prev);

// Rescales each bucket by W_new/W_old in log space, then normalizes so busy
// plus idle time sums back to the slot length. Buckets whose old weight
// underflows keep their counts; a degenerate rescale falls back to
// carry-forward.
IdleHistogram predict_after_migration(const IdleHistogram& prev, double q_old, double q_new,
                                      double latency_cycles);

// Weighted least-squares fit of ln(count) against length; returns R^2.
double geometric_fit_r2(const IdleHistogram& hist);

}  // namespace ramzzz
