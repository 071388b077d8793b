#include "ramzzz/engine.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ramzzz/mq.hpp"
#include "ramzzz/predictor.hpp"

namespace ramzzz {
namespace {

struct RankRuntime {
    std::uint64_t busy_until = 0;
    std::uint64_t idle_since = 0;
    std::size_t carried_state = 0;  // 0 = ACT, j = low-power state j
    DemotionConfig config;
    IdleHistogram hist;
    IdleHistogram predicted;
    bool has_prediction = false;
    RankMetrics metrics;

    RankRuntime(std::uint64_t slot_cycles, std::size_t chain_states, std::size_t total_states)
        : config(DemotionConfig::disabled(chain_states)),
          hist(slot_cycles),
          predicted(slot_cycles) {
        metrics.state_residency.assign(total_states, 0.0);
    }
};

std::vector<std::uint64_t> distinct_pages(const std::vector<MemoryAccess>& trace) {
    std::vector<std::uint64_t> pages;
    pages.reserve(trace.size());
    for (const MemoryAccess& a : trace) pages.push_back(a.page);
    std::sort(pages.begin(), pages.end());
    pages.erase(std::unique(pages.begin(), pages.end()), pages.end());
    return pages;
}

class Engine {
  public:
    Engine(const std::vector<MemoryAccess>& trace, const DramArchSpec& spec,
           const SimParams& params, const std::vector<SlotRecord>* oracle_slots)
        : trace_(trace),
          spec_(spec),
          params_(params),
          oracle_(oracle_slots),
          footprint_(distinct_pages(trace)),
          capacity_(params.capacity_pages != 0
                        ? params.capacity_pages
                        : std::max<std::size_t>(
                              1, (footprint_.size() + params.ranks - 1) / params.ranks)),
          placement_(params.ranks, capacity_),
          mq_(params.mq_queues, params.mq_lifetime),
          act_power_(spec.act().normalized_power) {
        if (footprint_.size() > params.ranks * capacity_) {
            throw std::invalid_argument("trace footprint exceeds the configured rank capacity");
        }
        uses_mq_ = params.policy == Policy::kRamzzz || params.policy == Policy::kRzSd ||
                   params.policy == Policy::kOracle;
        res_cycles_.assign(spec.states.size(), 0);
        res_energy_.assign(spec.states.size(), 0.0);
        for (std::size_t s = 1; s < spec.states.size(); ++s) {
            res_cycles_[s] = resync_cycles(spec, spec.states[s]);
            res_energy_[s] = resync_energy(spec, spec.states[s]);
        }
        for (const std::uint64_t page : footprint_) {
            std::size_t rank = interleave_rank(page, params.ranks);
            while (placement_.pages_in(rank).size() >= capacity_) {
                rank = (rank + 1) % params.ranks;
            }
            placement_.place(page, rank);
        }
        ranks_.reserve(params.ranks);
        for (std::size_t r = 0; r < params.ranks; ++r) {
            ranks_.emplace_back(params.slot_cycles, spec.low_power_count(), spec.states.size());
        }
    }

    SimMetrics run() {
        apply_initial_configs();
        const std::uint64_t slot = params_.slot_cycles;
        std::uint64_t next_boundary = slot;
        std::uint64_t prev_cycle = 0;
        for (const MemoryAccess& a : trace_) {
            if (a.cycle < prev_cycle) {
                throw std::invalid_argument("trace is not cycle-ordered");
            }
            prev_cycle = a.cycle;
            while (next_boundary <= a.cycle) {
                process_boundary(next_boundary, false);
                next_boundary += slot;
            }
            process_access(a);
        }
        // Drain: keep closing full slots while anything is still busy, then
        // cut the horizon at the exact cycle the last rank goes quiet (or at
        // the requested minimum), so no policy is billed for padding.
        while (true) {
            const std::uint64_t target = horizon_target();
            if (next_boundary < target) {
                process_boundary(next_boundary, false);
                next_boundary += slot;
            } else {
                process_boundary(target, true);
                horizon_ = target;
                break;
            }
        }
        return finalize();
    }

  private:
    void apply_initial_configs() {
        for (std::size_t r = 0; r < ranks_.size(); ++r) {
            RankRuntime& rt = ranks_[r];
            switch (params_.policy) {
                case Policy::kBase:
                    break;  // stays all-disabled
                case Policy::kRzSd:
                    rt.config = DemotionConfig::single(
                        spec_.low_power_count(), params_.rzsd_state,
                        break_even_threshold(spec_, spec_.states[params_.rzsd_state + 1]));
                    break;
                default:
                    rt.config = oracle_ ? oracle_config(0, r)
                                        : DemotionConfig::break_even(spec_);
                    break;
            }
        }
    }

    std::uint64_t horizon_target() const {
        std::uint64_t busy_max = 0;
        for (const RankRuntime& rt : ranks_) busy_max = std::max(busy_max, rt.busy_until);
        return std::max(busy_max, params_.horizon_slots * params_.slot_cycles);
    }

    // Settle the idle stretch [idle_since, now): charge per-state residency,
    // record the length, and leave the rank parked in the state it reached.
    std::size_t close_idle(RankRuntime& rt, std::uint64_t now) {
        if (now <= rt.idle_since) return rt.carried_state;
        const std::uint64_t len = now - rt.idle_since;
        const PeriodBreakdown breakdown =
            evaluate_period(rt.config, len, spec_, rt.carried_state);
        for (std::size_t s = 0; s < breakdown.state_cycles.size(); ++s) {
            rt.metrics.state_residency[s] += static_cast<double>(breakdown.state_cycles[s]);
        }
        rt.metrics.background_energy += breakdown.background_energy;
        rt.hist.add(len, 1.0);
        rt.carried_state = breakdown.end_state;
        rt.idle_since = now;
        return rt.carried_state;
    }

    void charge_wake(RankRuntime& rt, std::size_t state) {
        const double cycles = static_cast<double>(res_cycles_[state]);
        rt.metrics.delay.resync += cycles;
        rt.metrics.resync_occupied_cycles += cycles;
        rt.metrics.resync_energy += res_energy_[state];
        rt.metrics.resync_count += 1;
    }

    void process_access(const MemoryAccess& a) {
        const std::size_t r = placement_.rank_of(a.page);
        ++counts_[a.page];
        if (uses_mq_) mq_.on_access(a.page, a.cycle);
        RankRuntime& rt = ranks_[r];
        rt.metrics.accesses += 1;
        std::uint64_t start;
        if (a.cycle >= rt.busy_until) {
            const std::size_t woke = close_idle(rt, a.cycle);
            start = a.cycle;
            // The remap lookup is only on the critical path when nothing is
            // queued in front of the request.
            if (params_.remap_penalty_cycles > 0 && remap_.lookup(a.page)) {
                const double pen = static_cast<double>(params_.remap_penalty_cycles);
                rt.metrics.delay.remap += pen;
                rt.metrics.remap_occupied_cycles += pen;
                start += params_.remap_penalty_cycles;
            }
            if (woke >= 1) {
                charge_wake(rt, woke);
                start += res_cycles_[woke];
            }
            rt.carried_state = 0;
        } else {
            start = rt.busy_until;
        }
        const std::uint64_t duration =
            params_.access_cycles + (uses_mq_ ? params_.mq_update_cycles : 0);
        rt.metrics.servicing_cycles += static_cast<double>(duration);
        rt.busy_until = start + duration;
        rt.idle_since = rt.busy_until;
    }

    void process_boundary(std::uint64_t boundary, bool final) {
        for (RankRuntime& rt : ranks_) {
            if (rt.busy_until <= boundary) close_idle(rt, boundary);
        }
        double err_sum = 0.0;
        int err_count = 0;
        for (RankRuntime& rt : ranks_) {
            if (rt.has_prediction && rt.hist.total_count() > 0.0) {
                err_sum += prediction_error(rt.predicted, rt.hist);
                ++err_count;
            }
        }
        prediction_error_.push_back(err_count > 0 ? err_sum / err_count : -1.0);
        if (params_.record_slots) {
            SlotRecord record;
            record.ranks.reserve(ranks_.size());
            for (const RankRuntime& rt : ranks_) {
                record.ranks.push_back(SlotRankRecord{rt.hist.iter_buckets(), rt.config});
            }
            slots_.push_back(std::move(record));
        }
        if (final) return;

        const std::uint64_t slot_index = boundary / params_.slot_cycles;
        const bool migrates = uses_mq_;  // BASE and RZ-SP never move pages
        std::vector<double> q_old;
        std::vector<double> q_new;
        bool migrated = false;
        if (migrates && slot_index % params_.slots_per_epoch == 0) {
            q_old = rank_idle_probs();
            run_migration(boundary);
            q_new = rank_idle_probs();
            migrated = true;
        }
        if (params_.policy != Policy::kBase) {
            for (std::size_t r = 0; r < ranks_.size(); ++r) {
                RankRuntime& rt = ranks_[r];
                if (oracle_) {
                    rt.config = oracle_config(slot_index, r);
                    continue;
                }
                rt.predicted = migrated
                                   ? predict_after_migration(rt.hist, q_old[r], q_new[r],
                                                             static_cast<double>(
                                                                 params_.access_cycles))
                                   : predict_carry_forward(rt.hist);
                rt.has_prediction = true;
                rt.config = solve_config(rt.predicted);
            }
        }
        for (RankRuntime& rt : ranks_) rt.hist.reset();
        counts_.clear();
    }

    std::vector<double> rank_idle_probs() const {
        std::vector<double> q(ranks_.size(), 1.0);
        for (std::size_t r = 0; r < ranks_.size(); ++r) {
            for (const std::uint64_t page : placement_.pages_in(r)) {
                const auto it = counts_.find(page);
                if (it == counts_.end()) continue;
                const double p =
                    page_access_prob(static_cast<double>(it->second),
                                     static_cast<double>(params_.access_cycles),
                                     params_.slot_cycles);
                q[r] *= 1.0 - p;
            }
        }
        return q;
    }

    void run_migration(std::uint64_t boundary) {
        mq_.expire(boundary);
        std::vector<std::uint64_t> hotness = mq_.hotness_order();
        std::unordered_set<std::uint64_t> listed(hotness.begin(), hotness.end());
        for (const std::uint64_t page : footprint_) {
            if (listed.count(page) == 0) hotness.push_back(page);
        }
        const auto groups = group_pages(hotness, params_.ranks, capacity_);
        const auto mapping = match_groups_to_ranks(placement_, groups);
        const auto edges = build_migration_graph(placement_, groups, mapping);
        if (edges.empty()) return;
        const MigrationSchedule schedule = eulerian_schedule(edges, params_.ranks);
        if (params_.schedule_sink != nullptr) params_.schedule_sink->push_back(schedule);
        for (const auto& segment : schedule.segments) {
            std::vector<std::size_t> involved;
            involved.reserve(segment.size() * 2);
            for (const MigrationEdge& e : segment) {
                involved.push_back(e.src);
                involved.push_back(e.dst);
            }
            std::sort(involved.begin(), involved.end());
            involved.erase(std::unique(involved.begin(), involved.end()), involved.end());

            std::uint64_t start = boundary;
            std::uint64_t max_wake = 0;
            for (const std::size_t r : involved) {
                start = std::max(start, ranks_[r].busy_until);
                if (ranks_[r].carried_state >= 1) {
                    max_wake = std::max(max_wake, res_cycles_[ranks_[r].carried_state]);
                }
            }
            const MigrationOutcome outcome =
                apply_segment(placement_, remap_, segment, params_.migration);
            const std::uint64_t completion = start + max_wake + outcome.delay_cycles;
            for (const std::size_t r : involved) {
                RankRuntime& rt = ranks_[r];
                const std::uint64_t from = std::max(rt.busy_until, boundary);
                std::uint64_t wake = 0;
                if (rt.carried_state >= 1) {
                    wake = res_cycles_[rt.carried_state];
                    charge_wake(rt, rt.carried_state);
                    rt.carried_state = 0;
                }
                rt.metrics.migration_occupied_cycles +=
                    static_cast<double>(completion - from - wake);
                rt.metrics.delay.migration += static_cast<double>(outcome.delay_cycles);
                rt.busy_until = completion;
                rt.idle_since = completion;
            }
            for (const MigrationEdge& e : segment) {
                ranks_[e.dst].metrics.migration_energy += params_.migration.per_page_energy;
            }
            migration_delay_ += static_cast<double>(outcome.delay_cycles);
            migrated_pages_ += segment.size();
            ++migration_segments_;
        }
        placement_.validate();
    }

    SolveOptions solve_options() const {
        SolveOptions opts;
        opts.delay_budget =
            params_.delay_budget_fraction * static_cast<double>(params_.slot_cycles);
        opts.objective = params_.objective;
        opts.exponential_search = params_.exponential_search;
        opts.base_delay = static_cast<double>(params_.slot_cycles);
        return opts;
    }

    DemotionConfig solve_config(const IdleHistogram& hist) const {
        SolveOptions opts = solve_options();
        if (params_.policy == Policy::kRzSd) opts.only_state = params_.rzsd_state;
        return greedy_config(hist, spec_, opts);
    }

    DemotionConfig oracle_config(std::uint64_t slot_index, std::size_t rank) const {
        const auto& records = *oracle_;
        if (records.empty()) return DemotionConfig::break_even(spec_);
        const SlotRecord& record =
            records[std::min<std::size_t>(slot_index, records.size() - 1)];
        IdleHistogram actual(params_.slot_cycles);
        for (const auto& [len, cnt] : record.ranks.at(rank).actual) actual.add(len, cnt);
        const SolveOptions opts = solve_options();
        if (spec_.low_power_count() <= 3 && actual.iter_buckets().size() <= 30) {
            return exhaustive_config(actual, spec_, opts);
        }
        return greedy_config(actual, spec_, opts);
    }

    SimMetrics finalize() {
        SimMetrics m;
        m.policy = policy_name(params_.policy);
        m.arch = spec_.name;
        for (const PowerStateSpec& st : spec_.states) m.state_names.push_back(st.name);
        m.ranks = params_.ranks;
        m.slot_cycles = params_.slot_cycles;
        m.slots_per_epoch = params_.slots_per_epoch;
        m.horizon_cycles = horizon_;
        m.num_slots = (horizon_ + params_.slot_cycles - 1) / params_.slot_cycles;
        m.trace_span = trace_.empty() ? 0 : trace_.back().cycle;
        m.accesses = trace_.size();
        m.migrated_pages = migrated_pages_;
        m.migration_segments = migration_segments_;
        m.prediction_error = std::move(prediction_error_);
        if (uses_mq_) m.mq_levels = mq_.level_report();
        for (RankRuntime& rt : ranks_) {
            RankMetrics& rm = rt.metrics;
            rm.background_energy +=
                act_power_ * (rm.servicing_cycles + rm.remap_occupied_cycles);
            m.background_energy += rm.background_energy;
            m.resync_energy += rm.resync_energy;
            m.migration_energy += rm.migration_energy;
            m.delay.resync += rm.delay.resync;
            m.delay.remap += rm.delay.remap;
            m.per_rank.push_back(std::move(rm));
        }
        m.delay.migration = migration_delay_;
        m.total_energy = m.background_energy + m.resync_energy + m.migration_energy;
        m.exec_time = static_cast<double>(horizon_) + m.delay.total();
        m.ed2 = m.total_energy * m.exec_time * m.exec_time;
        m.slots = std::move(slots_);
        return m;
    }

    const std::vector<MemoryAccess>& trace_;
    const DramArchSpec& spec_;
    const SimParams& params_;
    const std::vector<SlotRecord>* oracle_;

    std::vector<std::uint64_t> footprint_;
    std::size_t capacity_;
    Placement placement_;
    RemapTable remap_;
    MultiQueue mq_;
    double act_power_;
    bool uses_mq_ = false;
    std::vector<std::uint64_t> res_cycles_;
    std::vector<double> res_energy_;
    std::vector<RankRuntime> ranks_;
    std::unordered_map<std::uint64_t, std::uint64_t> counts_;  // per-slot page accesses

    std::uint64_t horizon_ = 0;
    double migration_delay_ = 0.0;
    std::uint64_t migrated_pages_ = 0;
    std::uint64_t migration_segments_ = 0;
    std::vector<double> prediction_error_;
    std::vector<SlotRecord> slots_;
};

}  // namespace

Policy parse_policy(const std::string& name) {
    if (name == "base") return Policy::kBase;
    if (name == "oracle") return Policy::kOracle;
    if (name == "ramzzz") return Policy::kRamzzz;
    if (name == "rzsp") return Policy::kRzSp;
    if (name == "rzsd") return Policy::kRzSd;
    throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(Policy policy) {
    switch (policy) {
        case Policy::kBase: return "base";
        case Policy::kOracle: return "oracle";
        case Policy::kRamzzz: return "ramzzz";
        case Policy::kRzSp: return "rzsp";
        case Policy::kRzSd: return "rzsd";
    }
    throw std::invalid_argument("unknown policy value");
}

std::size_t interleave_rank(std::uint64_t page, std::size_t num_ranks) {
    if (num_ranks == 0) throw std::invalid_argument("need at least one rank");
    return static_cast<std::size_t>(page % num_ranks);
}

void validate_params(const SimParams& params, const DramArchSpec& spec) {
    validate_arch_spec(spec);
    if (params.slot_cycles == 0) throw std::invalid_argument("slot_cycles must be positive");
    if (params.slots_per_epoch == 0) {
        throw std::invalid_argument("slots_per_epoch must be positive");
    }
    if (!(params.delay_budget_fraction >= 0.0) || params.delay_budget_fraction >= 1.0) {
        throw std::invalid_argument("delay budget fraction must lie in [0, 1)");
    }
    if (params.ranks == 0) throw std::invalid_argument("need at least one rank");
    if (params.access_cycles == 0) throw std::invalid_argument("access_cycles must be positive");
    if (params.mq_queues == 0) throw std::invalid_argument("mq_queues must be positive");
    if (params.horizon_slots == 0) throw std::invalid_argument("horizon_slots must be positive");
    if (params.policy == Policy::kRzSd && params.rzsd_state >= spec.low_power_count()) {
        throw std::invalid_argument("rzsd needs a pre-selected low-power state index");
    }
}

SimMetrics run_simulation(const std::vector<MemoryAccess>& trace, const DramArchSpec& spec,
                          const SimParams& params) {
    validate_params(params, spec);
    if (params.policy == Policy::kOracle) {
        SimParams recording = params;
        recording.policy = Policy::kRamzzz;
        recording.record_slots = true;
        recording.schedule_sink = nullptr;  // only the replayed pass is reported
        Engine first(trace, spec, recording, nullptr);
        const SimMetrics recorded = first.run();
        Engine second(trace, spec, params, &recorded.slots);
        return second.run();
    }
    Engine engine(trace, spec, params, nullptr);
    return engine.run();
}

}  // namespace ramzzz
