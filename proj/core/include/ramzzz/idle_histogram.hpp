#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace ramzzz {

// Per-rank histogram of idle-period lengths within one slot of T cycles.
// Lengths 1..ceil(sqrt(T)) go to an indexed counter array; longer periods are
// kept as exact (length, count) entries. Counts are double so rescaled
// predictions can carry fractional weight.
class IdleHistogram {
  public:
    explicit IdleHistogram(std::uint64_t slot_cycles);

    void record_idle(std::uint64_t length) { add(length, 1.0); }
    void add(std::uint64_t length, double count);
    void reset();

    // Sparse ascending (length, count) sequence; zero counts omitted,
    // duplicate long entries aggregated.
    std::vector<std::pair<std::uint64_t, double>> iter_buckets() const;

    std::uint64_t slot_cycles() const { return slot_; }
    std::uint64_t short_limit() const { return root_; }
    double total_count() const;
    double total_idle_cycles() const;
    // Sum of count * (length + gap) over all periods; the engine keeps this
    // at most T plus one truncated remainder.
    double weighted_total(double gap) const;

    std::size_t storage_entries() const { return root_ + long_entries_.size(); }
    bool spilled() const { return !spill_.empty(); }

  private:
    std::uint64_t slot_ = 0;
    std::uint64_t root_ = 0;
    std::vector<double> short_counts_;                          // index 1..root_
    std::vector<std::pair<std::uint64_t, double>> long_entries_;  // length > root_
    std::map<std::uint64_t, double> spill_;                     // beyond capacity
};

}  // namespace ramzzz
