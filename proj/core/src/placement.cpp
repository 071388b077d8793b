#include "ramzzz/placement.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ramzzz {

namespace {

// Exact min-cost assignment on a square matrix (Jonker-style potentials,
// O(n^3)); ties resolve deterministically by scan order.
std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<long long>>& cost) {
    const int n = static_cast<int>(cost.size());
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0), minv(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            long long delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (int j = 1; j <= n; ++j) {
        row_to_col[static_cast<std::size_t>(p[j] - 1)] = static_cast<std::size_t>(j - 1);
    }
    return row_to_col;
}

}  // namespace

Placement::Placement(std::size_t num_ranks, std::size_t capacity) : capacity_(capacity) {
    if (num_ranks == 0 || capacity == 0) {
        throw std::invalid_argument("placement needs at least one rank and one slot");
    }
    ranks_.resize(num_ranks);
}

void Placement::place(std::uint64_t page, std::size_t rank) {
    if (rank >= ranks_.size()) {
        throw std::invalid_argument("rank index out of range");
    }
    if (contains(page)) {
        throw std::invalid_argument("page already placed: " + std::to_string(page));
    }
    if (ranks_[rank].size() >= capacity_) {
        throw std::runtime_error("rank " + std::to_string(rank) + " is full");
    }
    ranks_[rank].push_back(page);
    rank_of_.emplace(page, rank);
}

void Placement::move(std::uint64_t page, std::size_t rank) {
    if (rank >= ranks_.size()) {
        throw std::invalid_argument("rank index out of range");
    }
    auto it = rank_of_.find(page);
    if (it == rank_of_.end()) {
        throw std::invalid_argument("page not placed: " + std::to_string(page));
    }
    auto& from = ranks_[it->second];
    from.erase(std::find(from.begin(), from.end(), page));
    ranks_[rank].push_back(page);
    it->second = rank;
}

std::size_t Placement::rank_of(std::uint64_t page) const {
    auto it = rank_of_.find(page);
    if (it == rank_of_.end()) {
        throw std::invalid_argument("page not placed: " + std::to_string(page));
    }
    return it->second;
}

const std::vector<std::uint64_t>& Placement::pages_in(std::size_t rank) const {
    if (rank >= ranks_.size()) {
        throw std::invalid_argument("rank index out of range");
    }
    return ranks_[rank];
}

void Placement::validate() const {
    std::size_t total = 0;
    for (std::size_t r = 0; r < ranks_.size(); ++r) {
        if (ranks_[r].size() > capacity_) {
            throw std::runtime_error("rank " + std::to_string(r) + " exceeds capacity");
        }
        for (std::uint64_t page : ranks_[r]) {
            auto it = rank_of_.find(page);
            if (it == rank_of_.end() || it->second != r) {
                throw std::runtime_error("placement maps are inconsistent for page " + std::to_string(page));
            }
        }
        total += ranks_[r].size();
    }
    if (total != rank_of_.size()) {
        throw std::runtime_error("placement maps disagree on page count");
    }
}

std::size_t MigrationSchedule::total_edges() const {
    std::size_t n = 0;
    for (const auto& seg : segments) {
        n += seg.size();
    }
    return n;
}

std::optional<std::size_t> RemapTable::lookup(std::uint64_t page) const {
    auto it = map_.find(page);
    if (it == map_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t RemapTable::lookup_or(std::uint64_t page, std::size_t identity_rank) const {
    auto it = map_.find(page);
    return it == map_.end() ? identity_rank : it->second;
}

std::vector<std::vector<std::uint64_t>> group_pages(const std::vector<std::uint64_t>& hotness,
                                                    std::size_t num_ranks, std::size_t capacity) {
    if (hotness.size() > num_ranks * capacity) {
        throw std::runtime_error("page footprint exceeds total rank capacity");
    }
    std::vector<std::vector<std::uint64_t>> groups(num_ranks);
    std::size_t cur = 0;
    for (std::uint64_t page : hotness) {
        if (groups[cur].size() == capacity) {
            ++cur;
        }
        groups[cur].push_back(page);
    }
    return groups;
}

std::vector<std::vector<std::uint64_t>> group_pages(const MultiQueue& mq, std::size_t num_ranks,
                                                    std::size_t capacity) {
    return group_pages(mq.hotness_order(), num_ranks, capacity);
}

std::vector<std::size_t> match_groups_to_ranks(const Placement& prev,
                                               const std::vector<std::vector<std::uint64_t>>& groups) {
    const std::size_t n = prev.num_ranks();
    if (groups.size() != n) {
        throw std::invalid_argument("need exactly one group per rank");
    }
    // weight[g][r] = pages shared between group g and rank r's current content
    std::vector<std::vector<long long>> weight(n, std::vector<long long>(n, 0));
    long long max_w = 0;
    for (std::size_t g = 0; g < n; ++g) {
        for (std::uint64_t page : groups[g]) {
            if (!prev.contains(page)) {
                throw std::invalid_argument("grouped page missing from previous placement");
            }
            ++weight[g][prev.rank_of(page)];
        }
        for (std::size_t r = 0; r < n; ++r) {
            max_w = std::max(max_w, weight[g][r]);
        }
    }
    std::vector<std::vector<long long>> cost(n, std::vector<long long>(n, 0));
    for (std::size_t g = 0; g < n; ++g) {
        for (std::size_t r = 0; r < n; ++r) {
            cost[g][r] = max_w - weight[g][r];
        }
    }
    return min_cost_assignment(cost);
}

std::vector<MigrationEdge> build_migration_graph(const Placement& prev,
                                                 const std::vector<std::vector<std::uint64_t>>& groups,
                                                 const std::vector<std::size_t>& mapping) {
    if (mapping.size() != groups.size()) {
        throw std::invalid_argument("mapping must cover every group");
    }
    std::vector<MigrationEdge> edges;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::size_t dst = mapping[g];
        for (std::uint64_t page : groups[g]) {
            std::size_t src = prev.rank_of(page);
            if (src != dst) {
                edges.push_back({src, dst, page});
            }
        }
    }
    return edges;
}

MigrationSchedule eulerian_schedule(const std::vector<MigrationEdge>& edges, std::size_t num_ranks) {
    MigrationSchedule schedule;
    if (edges.empty()) {
        return schedule;
    }
    std::vector<std::vector<std::size_t>> adj(num_ranks);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].src >= num_ranks || edges[e].dst >= num_ranks || edges[e].src == edges[e].dst) {
            throw std::invalid_argument("bad migration edge");
        }
        adj[edges[e].src].push_back(e);
    }
    std::vector<std::size_t> next(num_ranks, 0);
    std::vector<char> used(edges.size(), 0);
    std::size_t remaining = edges.size();

    std::vector<std::vector<std::size_t>> trails;
    while (remaining > 0) {
        // out-degree minus in-degree over the edges not yet covered
        std::vector<long long> balance(num_ranks, 0);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (!used[e]) {
                ++balance[edges[e].src];
                --balance[edges[e].dst];
            }
        }
        // Surplus sources first so unbalanced residue comes out as paths.
        std::size_t start = num_ranks;
        for (std::size_t v = 0; v < num_ranks; ++v) {
            if (next[v] < adj[v].size() && balance[v] > 0) {
                start = v;
                break;
            }
        }
        if (start == num_ranks) {
            for (std::size_t v = 0; v < num_ranks; ++v) {
                if (next[v] < adj[v].size()) {
                    start = v;
                    break;
                }
            }
        }
        std::vector<std::size_t> trail;
        std::vector<std::size_t> vstack{start};
        std::vector<std::size_t> estack;
        while (!vstack.empty()) {
            std::size_t v = vstack.back();
            while (next[v] < adj[v].size() && used[adj[v][next[v]]]) {
                ++next[v];
            }
            if (next[v] < adj[v].size()) {
                std::size_t e = adj[v][next[v]++];
                used[e] = 1;
                --remaining;
                vstack.push_back(edges[e].dst);
                estack.push_back(e);
            } else {
                vstack.pop_back();
                if (!estack.empty()) {
                    trail.push_back(estack.back());
                    estack.pop_back();
                }
            }
        }
        std::reverse(trail.begin(), trail.end());
        trails.push_back(std::move(trail));
    }

    // Cut each trail where a rank would repeat as source or destination.
    for (const auto& trail : trails) {
        std::vector<MigrationEdge> segment;
        std::vector<char> used_src(num_ranks, 0), used_dst(num_ranks, 0);
        for (std::size_t e : trail) {
            const MigrationEdge& edge = edges[e];
            if (used_src[edge.src] || used_dst[edge.dst]) {
                schedule.segments.push_back(std::move(segment));
                segment.clear();
                std::fill(used_src.begin(), used_src.end(), 0);
                std::fill(used_dst.begin(), used_dst.end(), 0);
            }
            segment.push_back(edge);
            used_src[edge.src] = 1;
            used_dst[edge.dst] = 1;
        }
        if (!segment.empty()) {
            schedule.segments.push_back(std::move(segment));
        }
    }
    std::stable_sort(schedule.segments.begin(), schedule.segments.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return schedule;
}

MigrationOutcome apply_segment(Placement& placement, RemapTable& remap,
                               const std::vector<MigrationEdge>& segment,
                               const MigrationCostModel& cost) {
    MigrationOutcome out;
    for (const MigrationEdge& edge : segment) {
        if (placement.rank_of(edge.page) != edge.src) {
            throw std::runtime_error("schedule disagrees with placement for page " +
                                     std::to_string(edge.page));
        }
        placement.move(edge.page, edge.dst);
        remap.set(edge.page, edge.dst);
        out.energy += cost.per_page_energy;
    }
    if (!segment.empty()) {
        out.delay_cycles = cost.per_page_cycles * (cost.serialize_moves ? segment.size() : 1);
    }
    return out;
}

MigrationOutcome apply_schedule(Placement& placement, RemapTable& remap,
                                const MigrationSchedule& schedule, const MigrationCostModel& cost) {
    MigrationOutcome total;
    for (const auto& segment : schedule.segments) {
        MigrationOutcome part = apply_segment(placement, remap, segment, cost);
        total.delay_cycles += part.delay_cycles;
        total.energy += part.energy;
    }
    placement.validate();
    return total;
}

void dump_schedule_csv(const MigrationSchedule& schedule, std::ostream& out) {
    out << "segment,src,dst,page\n";
    for (std::size_t s = 0; s < schedule.segments.size(); ++s) {
        for (const MigrationEdge& edge : schedule.segments[s]) {
            out << s << ',' << edge.src << ',' << edge.dst << ',' << edge.page << '\n';
        }
    }
}

}  // namespace ramzzz
