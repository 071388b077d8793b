#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ramzzz/mq.hpp"

namespace ramzzz {

// Page-to-rank assignment; ranks hold at most `capacity` pages outside of
// in-flight segment application.
class Placement {
  public:
    Placement(std::size_t num_ranks, std::size_t capacity);

    std::size_t num_ranks() const { return ranks_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return rank_of_.size(); }

    void place(std::uint64_t page, std::size_t rank);
    void move(std::uint64_t page, std::size_t rank);
    bool contains(std::uint64_t page) const { return rank_of_.count(page) != 0; }
    std::size_t rank_of(std::uint64_t page) const;
    const std::vector<std::uint64_t>& pages_in(std::size_t rank) const;

    // Consistency + capacity check; throws on violation.
    void validate() const;

  private:
    std::vector<std::vector<std::uint64_t>> ranks_;
    std::unordered_map<std::uint64_t, std::size_t> rank_of_;
    std::size_t capacity_;
};

struct MigrationEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::uint64_t page = 0;

    friend bool operator==(const MigrationEdge&, const MigrationEdge&) = default;
};

// Segments execute in order; moves within a segment overlap because each rank
// appears at most once as source and once as destination.
struct MigrationSchedule {
    std::vector<std::vector<MigrationEdge>> segments;

    std::size_t total_edges() const;
    bool empty() const { return segments.empty(); }
};

struct MigrationCostModel {
    std::uint64_t per_page_cycles = 2048;
    double per_page_energy = 4096.0;  // page read + write at full power
    bool serialize_moves = false;     // charge every move individually
};

struct MigrationOutcome {
    std::uint64_t delay_cycles = 0;
    double energy = 0.0;
};

// Original page address -> current rank; absent key means the page still
// lives at its original location.
class RemapTable {
  public:
    void set(std::uint64_t page, std::size_t rank) { map_[page] = rank; }
    std::optional<std::size_t> lookup(std::uint64_t page) const;
    std::size_t lookup_or(std::uint64_t page, std::size_t identity_rank) const;
    std::size_t size() const { return map_.size(); }

  private:
    std::unordered_map<std::uint64_t, std::size_t> map_;
};

// Fills groups from the given hotness order (hottest first); group 0 is the
// hottest. Exactly num_ranks groups are returned, trailing ones may be empty.
std::vector<std::vector<std::uint64_t>> group_pages(const std::vector<std::uint64_t>& hotness,
                                                    std::size_t num_ranks, std::size_t capacity);
std::vector<std::vector<std::uint64_t>> group_pages(const MultiQueue& mq, std::size_t num_ranks,
                                                    std::size_t capacity);

// Exact maximum-weight assignment of groups to ranks; weight = page overlap
// with the previous placement. Returns mapping[group] = rank.
std::vector<std::size_t> match_groups_to_ranks(const Placement& prev,
                                               const std::vector<std::vector<std::uint64_t>>& groups);

std::vector<MigrationEdge> build_migration_graph(const Placement& prev,
                                                 const std::vector<std::vector<std::uint64_t>>& groups,
                                                 const std::vector<std::size_t>& mapping);

MigrationSchedule eulerian_schedule(const std::vector<MigrationEdge>& edges, std::size_t num_ranks);

MigrationOutcome apply_segment(Placement& placement, RemapTable& remap,
                               const std::vector<MigrationEdge>& segment,
                               const MigrationCostModel& cost);
MigrationOutcome apply_schedule(Placement& placement, RemapTable& remap,
                                const MigrationSchedule& schedule, const MigrationCostModel& cost);

void dump_schedule_csv(const MigrationSchedule& schedule, std::ostream& out);

}  // namespace ramzzz
