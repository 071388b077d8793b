#include "ramzzz/demotion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

namespace ramzzz {
namespace {

struct ChainModel {
    double p_act = 1.0;
    std::vector<double> power;        // low-power states, chain order
    std::vector<double> res_energy;
    std::vector<std::uint64_t> res_cycles;
};

ChainModel make_chain(const DramArchSpec& spec) {
    validate_arch_spec(spec);
    ChainModel chain;
    chain.p_act = spec.act().normalized_power;
    for (std::size_t i = 1; i < spec.states.size(); ++i) {
        const PowerStateSpec& st = spec.states[i];
        chain.power.push_back(st.normalized_power);
        chain.res_energy.push_back(resync_energy(spec, st));
        chain.res_cycles.push_back(resync_cycles(spec, st));
    }
    return chain;
}

void check_config(const DemotionConfig& cfg, const ChainModel& chain) {
    if (cfg.timeouts.size() != chain.power.size()) {
        throw std::invalid_argument("demotion config has " + std::to_string(cfg.timeouts.size()) +
                                    " timeouts but the architecture has " +
                                    std::to_string(chain.power.size()) + " low-power states");
    }
    validate_config(cfg);
}

// Active states in chain order with their timeouts.
struct ActiveChain {
    std::vector<std::size_t> state;   // index into chain.power
    std::vector<std::uint64_t> delta;

    void rebuild(const DemotionConfig& cfg) {
        state.clear();
        delta.clear();
        for (std::size_t i = 0; i < cfg.timeouts.size(); ++i) {
            if (cfg.timeouts[i] != kNever) {
                state.push_back(i);
                delta.push_back(cfg.timeouts[i]);
            }
        }
    }
};

// Sorted histogram with prefix sums so a config evaluation costs
// O(active states * log buckets) instead of a pass over every bucket.
struct HistView {
    std::vector<std::uint64_t> length;
    std::vector<double> count_prefix;    // count_prefix[i] = sum of counts of length[0..i)
    std::vector<double> weighted_prefix; // same for length*count

    explicit HistView(const IdleHistogram& hist) {
        const auto buckets = hist.iter_buckets();
        length.reserve(buckets.size());
        count_prefix.reserve(buckets.size() + 1);
        weighted_prefix.reserve(buckets.size() + 1);
        count_prefix.push_back(0.0);
        weighted_prefix.push_back(0.0);
        for (const auto& [len, cnt] : buckets) {
            length.push_back(len);
            count_prefix.push_back(count_prefix.back() + cnt);
            weighted_prefix.push_back(weighted_prefix.back() + static_cast<double>(len) * cnt);
        }
    }

    std::size_t upper_index(std::uint64_t x) const {
        return static_cast<std::size_t>(
            std::upper_bound(length.begin(), length.end(), x) - length.begin());
    }
    // Periods with length in (lo, hi].
    double count_in(std::uint64_t lo, std::uint64_t hi) const {
        return count_prefix[upper_index(hi)] - count_prefix[upper_index(lo)];
    }
    double weighted_in(std::uint64_t lo, std::uint64_t hi) const {
        return weighted_prefix[upper_index(hi)] - weighted_prefix[upper_index(lo)];
    }
    double total_weighted() const { return weighted_prefix.back(); }
    std::uint64_t max_length() const { return length.empty() ? 0 : length.back(); }
};

// Eq. over the histogram: periods no longer than the first timeout stay fully
// active; the rest are grouped by the deepest state they reach.
double eval_energy(const ActiveChain& ac, const ChainModel& chain, const HistView& view) {
    if (ac.state.empty()) return chain.p_act * view.total_weighted();
    double energy = chain.p_act * view.weighted_in(0, ac.delta[0]);
    double chain_prefix = chain.p_act * static_cast<double>(ac.delta[0]);
    for (std::size_t j = 0; j < ac.state.size(); ++j) {
        const std::uint64_t lo = ac.delta[j];
        const std::uint64_t hi = (j + 1 < ac.state.size()) ? ac.delta[j + 1] : kNever;
        const std::size_t st = ac.state[j];
        const double n = view.count_in(lo, hi);
        if (n > 0.0) {
            energy += n * (chain_prefix - chain.power[st] * static_cast<double>(lo) +
                           chain.res_energy[st]) +
                      chain.power[st] * view.weighted_in(lo, hi);
        }
        if (j + 1 < ac.state.size()) {
            chain_prefix += chain.power[st] * static_cast<double>(ac.delta[j + 1] - lo);
        }
    }
    return energy;
}

double eval_delay(const ActiveChain& ac, const ChainModel& chain, const HistView& view) {
    double delay = 0.0;
    for (std::size_t j = 0; j < ac.state.size(); ++j) {
        const std::uint64_t lo = ac.delta[j];
        const std::uint64_t hi = (j + 1 < ac.state.size()) ? ac.delta[j + 1] : kNever;
        delay += static_cast<double>(chain.res_cycles[ac.state[j]]) * view.count_in(lo, hi);
    }
    return delay;
}

std::vector<std::uint64_t> candidate_pool(const HistView& view, std::uint64_t slot_cycles,
                                          bool exponential_search) {
    std::set<std::uint64_t> pool;
    pool.insert(0);
    pool.insert(view.length.begin(), view.length.end());
    if (exponential_search) {
        for (std::uint64_t v = 1; v <= slot_cycles; v *= 2) {
            pool.insert(v);
            if (v > slot_cycles / 2) break;
        }
    }
    return {pool.begin(), pool.end()};
}

double resolve_base_delay(const SolveOptions& options, const IdleHistogram& hist) {
    return options.base_delay > 0.0 ? options.base_delay
                                    : static_cast<double>(hist.slot_cycles());
}

}  // namespace

bool DemotionConfig::all_disabled() const {
    return std::all_of(timeouts.begin(), timeouts.end(),
                       [](std::uint64_t t) { return t == kNever; });
}

DemotionConfig DemotionConfig::disabled(std::size_t num_states) {
    return DemotionConfig{std::vector<std::uint64_t>(num_states, kNever)};
}

DemotionConfig DemotionConfig::break_even(const DramArchSpec& spec) {
    validate_arch_spec(spec);
    DemotionConfig cfg = disabled(spec.low_power_count());
    std::uint64_t floor = 0;
    for (std::size_t i = 0; i < cfg.timeouts.size(); ++i) {
        const std::uint64_t be = break_even_threshold(spec, spec.states[i + 1]);
        if (be == kUnboundedThreshold) continue;  // state can never pay off
        floor = std::max(floor, be);
        cfg.timeouts[i] = floor;
    }
    return cfg;
}

DemotionConfig DemotionConfig::single(std::size_t num_states, std::size_t state,
                                      std::uint64_t timeout) {
    if (state >= num_states) throw std::invalid_argument("state index out of range");
    DemotionConfig cfg = disabled(num_states);
    cfg.timeouts[state] = timeout;
    return cfg;
}

void validate_config(const DemotionConfig& cfg) {
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < cfg.timeouts.size(); ++i) {
        if (cfg.timeouts[i] == kNever) continue;
        if (cfg.timeouts[i] < prev) {
            throw std::invalid_argument("demotion timeouts must be non-decreasing with depth");
        }
        prev = cfg.timeouts[i];
    }
}

double objective_value(double energy, double delay, double base_delay, Objective objective) {
    switch (objective) {
        case Objective::kEnergy:
            return energy;
        case Objective::kEd2: {
            const double t = base_delay + delay;
            return energy * t * t;
        }
    }
    throw std::invalid_argument("unknown objective");
}

PeriodBreakdown evaluate_period(const DemotionConfig& cfg, std::uint64_t length,
                                const DramArchSpec& spec, std::size_t start_state) {
    const ChainModel chain = make_chain(spec);
    check_config(cfg, chain);
    if (start_state > chain.power.size()) {
        throw std::invalid_argument("start state out of range");
    }
    PeriodBreakdown out;
    out.state_cycles.assign(chain.power.size() + 1, 0);
    if (length == 0) {
        out.end_state = start_state;
        return out;
    }
    // Cycle u sits in max(start_state, deepest j with timeout <= u); walking
    // the chain's entry points in depth order partitions [0, length).
    std::size_t cur = start_state;
    std::uint64_t cursor = 0;
    for (std::size_t i = start_state; i < cfg.timeouts.size() && cursor < length; ++i) {
        if (cfg.timeouts[i] == kNever) continue;
        const std::uint64_t entry = std::min(cfg.timeouts[i], length);
        if (entry > cursor) {
            out.state_cycles[cur] += entry - cursor;
            cursor = entry;
        }
        if (cfg.timeouts[i] < length) cur = i + 1;  // states are 1-based in the breakdown
    }
    if (cursor < length) out.state_cycles[cur] += length - cursor;
    out.end_state = cur;
    out.background_energy = chain.p_act * static_cast<double>(out.state_cycles[0]);
    for (std::size_t j = 1; j < out.state_cycles.size(); ++j) {
        out.background_energy += chain.power[j - 1] * static_cast<double>(out.state_cycles[j]);
    }
    return out;
}

double idle_energy(const DemotionConfig& cfg, std::uint64_t t, const DramArchSpec& spec) {
    const PeriodBreakdown breakdown = evaluate_period(cfg, t, spec, 0);
    if (breakdown.end_state == 0) {
        throw std::invalid_argument("idle period never demotes under this config");
    }
    const ChainModel chain = make_chain(spec);
    return breakdown.background_energy + chain.res_energy[breakdown.end_state - 1];
}

double total_energy(const DemotionConfig& cfg, const IdleHistogram& hist,
                    const DramArchSpec& spec) {
    const ChainModel chain = make_chain(spec);
    check_config(cfg, chain);
    const HistView view(hist);
    ActiveChain ac;
    ac.rebuild(cfg);
    return eval_energy(ac, chain, view);
}

double total_delay(const DemotionConfig& cfg, const IdleHistogram& hist,
                   const DramArchSpec& spec) {
    const ChainModel chain = make_chain(spec);
    check_config(cfg, chain);
    const HistView view(hist);
    ActiveChain ac;
    ac.rebuild(cfg);
    return eval_delay(ac, chain, view);
}

DemotionConfig greedy_config(const IdleHistogram& hist, const DramArchSpec& spec,
                             const SolveOptions& options) {
    const ChainModel chain = make_chain(spec);
    const HistView view(hist);
    const std::size_t m = chain.power.size();
    if (options.only_state && *options.only_state >= m) {
        throw std::invalid_argument("restricted state index out of range");
    }
    if (view.length.empty()) return DemotionConfig::disabled(m);
    const double base_delay = resolve_base_delay(options, hist);
    const std::vector<std::uint64_t> pool =
        candidate_pool(view, hist.slot_cycles(), options.exponential_search);

    DemotionConfig cfg = DemotionConfig::disabled(m);
    ActiveChain ac;
    std::vector<bool> committed(m, false);

    for (std::size_t round = 0; round < m; ++round) {
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t best_state = m;
        std::uint64_t best_delta = kNever;
        for (std::size_t i = 0; i < m; ++i) {
            if (committed[i]) continue;
            if (options.only_state && *options.only_state != i) continue;
            std::uint64_t lo = 0;
            std::uint64_t hi = kNever;
            for (std::size_t j = 0; j < i; ++j) {
                if (committed[j] && cfg.timeouts[j] != kNever) lo = std::max(lo, cfg.timeouts[j]);
            }
            for (std::size_t j = i + 1; j < m; ++j) {
                if (committed[j] && cfg.timeouts[j] != kNever) hi = std::min(hi, cfg.timeouts[j]);
            }
            // Highest candidate first: delay only grows as the timeout
            // shrinks, so the first budget violation ends the scan.
            const auto begin = std::lower_bound(pool.begin(), pool.end(), lo);
            auto it = std::upper_bound(pool.begin(), pool.end(),
                                       hi == kNever ? pool.back() : hi);
            while (it != begin) {
                --it;
                cfg.timeouts[i] = *it;
                ac.rebuild(cfg);
                const double delay = eval_delay(ac, chain, view);
                if (delay > options.delay_budget) break;
                const double energy = eval_energy(ac, chain, view);
                const double obj = objective_value(energy, delay, base_delay, options.objective);
                if (obj < best_obj) {
                    best_obj = obj;
                    best_state = i;
                    best_delta = *it;
                }
            }
            cfg.timeouts[i] = kNever;
        }
        if (best_state == m) break;  // nothing fits the budget; the rest stay disabled
        cfg.timeouts[best_state] = best_delta;
        committed[best_state] = true;
    }
    return cfg;
}

DemotionConfig exhaustive_config(const IdleHistogram& hist, const DramArchSpec& spec,
                                 const SolveOptions& options) {
    const ChainModel chain = make_chain(spec);
    const HistView view(hist);
    const std::size_t m = chain.power.size();
    if (options.only_state && *options.only_state >= m) {
        throw std::invalid_argument("restricted state index out of range");
    }
    if (m > 3) {
        throw std::runtime_error("exhaustive search is limited to chains of at most 3 states");
    }
    if (view.length.size() > 30) {
        throw std::runtime_error("exhaustive search is limited to 30 distinct idle lengths");
    }
    const double base_delay = resolve_base_delay(options, hist);
    std::vector<std::uint64_t> pool =
        candidate_pool(view, hist.slot_cycles(), options.exponential_search);
    // kNever first so ties resolve toward disabling states.
    std::sort(pool.begin(), pool.end(), std::greater<>());
    pool.insert(pool.begin(), kNever);

    DemotionConfig best = DemotionConfig::disabled(m);
    double best_obj = std::numeric_limits<double>::infinity();
    DemotionConfig cur = DemotionConfig::disabled(m);
    ActiveChain ac;

    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == m) {
            ac.rebuild(cur);
            const double delay = eval_delay(ac, chain, view);
            if (delay > options.delay_budget) return;
            const double energy = eval_energy(ac, chain, view);
            const double obj = objective_value(energy, delay, base_delay, options.objective);
            if (obj < best_obj) {
                best_obj = obj;
                best = cur;
            }
            return;
        }
        for (const std::uint64_t cand : pool) {
            if (cand != kNever) {
                if (options.only_state && *options.only_state != i) continue;
                std::uint64_t prev = 0;
                for (std::size_t j = 0; j < i; ++j) {
                    if (cur.timeouts[j] != kNever) prev = std::max(prev, cur.timeouts[j]);
                }
                if (cand < prev) continue;
            }
            cur.timeouts[i] = cand;
            self(self, i + 1);
        }
        cur.timeouts[i] = kNever;
    };
    recurse(recurse, 0);
    return best;
}

}  // namespace ramzzz
