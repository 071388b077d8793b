#include "ramzzz/demotion.hpp"

#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ramzzz/arch.hpp"
#include "ramzzz/idle_histogram.hpp"

using namespace ramzzz;

namespace {

DramArchSpec one_state_arch(double power = 0.5, double resync_ns = 4.0, double energy = 2.0) {
    DramArchSpec spec;
    spec.name = "unit1";
    spec.cpu_freq_ghz = 1.0;
    spec.states = {{"ACT", 1.0, 0.0, -1.0}, {"S1", power, resync_ns, energy}};
    return spec;
}

DramArchSpec two_state_arch() {
    DramArchSpec spec;
    spec.name = "unit2";
    spec.cpu_freq_ghz = 1.0;
    spec.states = {{"ACT", 1.0, 0.0, -1.0},
                   {"S1", 0.6, 2.0, 1.0},
                   {"S2", 0.2, 10.0, 5.0}};
    return spec;
}

IdleHistogram make_hist(std::uint64_t slot, const std::vector<std::pair<std::uint64_t, double>>& buckets) {
    IdleHistogram hist(slot);
    for (const auto& [len, cnt] : buckets) hist.add(len, cnt);
    return hist;
}

struct Reference {
    double energy = 0.0;
    double delay = 0.0;
};

// Cycle-by-cycle walk of the demotion chain over every bucket.
Reference dense_reference(const DemotionConfig& cfg, const IdleHistogram& hist,
                          const DramArchSpec& spec) {
    Reference ref;
    for (const auto& [len, cnt] : hist.iter_buckets()) {
        double energy = 0.0;
        std::size_t state = 0;
        for (std::uint64_t u = 0; u < len; ++u) {
            state = 0;
            for (std::size_t j = 0; j < cfg.timeouts.size(); ++j) {
                if (cfg.timeouts[j] != kNever && cfg.timeouts[j] <= u) state = j + 1;
            }
            energy += spec.states[state].normalized_power;
        }
        if (state > 0) {
            energy += resync_energy(spec, spec.states[state]);
            ref.delay += static_cast<double>(resync_cycles(spec, spec.states[state])) * cnt;
        }
        ref.energy += energy * cnt;
    }
    return ref;
}

double all_active_energy(const IdleHistogram& hist, const DramArchSpec& spec) {
    double total = 0.0;
    for (const auto& [len, cnt] : hist.iter_buckets()) {
        total += spec.act().normalized_power * static_cast<double>(len) * cnt;
    }
    return total;
}

}  // namespace

TEST_CASE("single period energy follows the chain") {
    const DramArchSpec spec = one_state_arch();
    DemotionConfig cfg{{5}};
    CHECK(idle_energy(cfg, 9, spec) == doctest::Approx(9.0));

    const DramArchSpec two = two_state_arch();
    DemotionConfig chain{{2, 6}};
    CHECK(idle_energy(chain, 10, two) == doctest::Approx(10.2));
    // A period ending exactly at a timeout never enters the deeper state.
    CHECK(idle_energy(chain, 6, two) == doctest::Approx(5.4));

    CHECK_THROWS_AS(idle_energy(chain, 2, two), std::invalid_argument);
    CHECK_THROWS_AS(idle_energy(DemotionConfig::disabled(2), 100, two), std::invalid_argument);
}

TEST_CASE("histogram energy and delay match the worked values") {
    const DramArchSpec spec = one_state_arch();
    const IdleHistogram hist = make_hist(100, {{3, 2.0}, {9, 1.0}});

    CHECK(total_energy(DemotionConfig{{5}}, hist, spec) == doctest::Approx(15.0));
    CHECK(total_delay(DemotionConfig{{5}}, hist, spec) == doctest::Approx(4.0));

    CHECK(total_energy(DemotionConfig{{0}}, hist, spec) == doctest::Approx(13.5));
    CHECK(total_delay(DemotionConfig{{0}}, hist, spec) == doctest::Approx(12.0));

    CHECK(total_energy(DemotionConfig::disabled(1), hist, spec) == doctest::Approx(15.0));
    CHECK(total_delay(DemotionConfig::disabled(1), hist, spec) == doctest::Approx(0.0));
}

TEST_CASE("period breakdown partitions the cycles") {
    const DramArchSpec two = two_state_arch();
    const PeriodBreakdown full = evaluate_period(DemotionConfig{{2, 6}}, 10, two);
    CHECK(full.state_cycles == std::vector<std::uint64_t>{2, 4, 4});
    CHECK(full.end_state == 2);
    CHECK(full.background_energy == doctest::Approx(5.2));

    // Resuming a truncated period in a deep state stays there.
    const PeriodBreakdown resumed = evaluate_period(DemotionConfig{{2, 6}}, 4, two, 2);
    CHECK(resumed.state_cycles == std::vector<std::uint64_t>{0, 0, 4});
    CHECK(resumed.end_state == 2);
    CHECK(resumed.background_energy == doctest::Approx(0.8));

    // A carried state shallower than the chain tail demotes onward.
    const PeriodBreakdown onward = evaluate_period(DemotionConfig{{kNever, 3}}, 5, two, 1);
    CHECK(onward.state_cycles == std::vector<std::uint64_t>{0, 3, 2});
    CHECK(onward.end_state == 2);
    CHECK(onward.background_energy == doctest::Approx(0.6 * 3 + 0.2 * 2));

    const DramArchSpec lp = load_arch_spec("lpddr2");
    const PeriodBreakdown skip = evaluate_period(DemotionConfig{{2, kNever, 5}}, 8, lp);
    CHECK(skip.state_cycles == std::vector<std::uint64_t>{2, 3, 0, 3});
    CHECK(skip.end_state == 3);
    CHECK(skip.background_energy == doctest::Approx(2.0 + 0.523 * 3 + 0.194 * 3));

    const PeriodBreakdown shallow = evaluate_period(DemotionConfig{{2, kNever, 5}}, 4, lp, 2);
    CHECK(shallow.state_cycles == std::vector<std::uint64_t>{0, 0, 4, 0});
    CHECK(shallow.end_state == 2);

    const PeriodBreakdown empty = evaluate_period(DemotionConfig{{2, 6}}, 0, two, 1);
    CHECK(empty.state_cycles == std::vector<std::uint64_t>{0, 0, 0});
    CHECK(empty.end_state == 1);
    CHECK(empty.background_energy == doctest::Approx(0.0));
}

TEST_CASE("histogram evaluation matches a cycle-by-cycle walk") {
    std::mt19937_64 rng(11);
    const DramArchSpec specs[] = {two_state_arch(), load_arch_spec("lpddr2"),
                                  load_arch_spec("ddr3")};
    for (int trial = 0; trial < 60; ++trial) {
        const DramArchSpec& spec = specs[trial % 3];
        const std::uint64_t slot = 2000;
        IdleHistogram hist(slot);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, slot);
        std::uniform_int_distribution<int> cnt_dist(1, 3);
        const int buckets = 1 + static_cast<int>(rng() % 12);
        for (int b = 0; b < buckets; ++b) hist.add(len_dist(rng), cnt_dist(rng));

        const std::size_t m = spec.low_power_count();
        DemotionConfig cfg = DemotionConfig::disabled(m);
        std::uint64_t floor = 0;
        std::uniform_int_distribution<std::uint64_t> delta_dist(0, slot + 100);
        for (std::size_t i = 0; i < m; ++i) {
            if (rng() % 10 < 7) {
                floor = std::max(floor, delta_dist(rng));
                cfg.timeouts[i] = floor;
            }
        }

        const Reference ref = dense_reference(cfg, hist, spec);
        CHECK(total_energy(cfg, hist, spec) == doctest::Approx(ref.energy).epsilon(1e-9));
        CHECK(total_delay(cfg, hist, spec) == doctest::Approx(ref.delay).epsilon(1e-9));
    }
}

TEST_CASE("objective arithmetic") {
    CHECK(objective_value(5.0, 99.0, 0.0, Objective::kEnergy) == doctest::Approx(5.0));
    CHECK(objective_value(2.0, 3.0, 10.0, Objective::kEd2) == doctest::Approx(338.0));
}

TEST_CASE("config helpers and validation") {
    CHECK(DemotionConfig::disabled(3).all_disabled());
    CHECK(DemotionConfig::single(3, 1, 40).timeouts ==
          std::vector<std::uint64_t>{kNever, 40, kNever});
    CHECK_THROWS_AS(DemotionConfig::single(2, 2, 1), std::invalid_argument);

    // Chain demotion needs non-decreasing timeouts, so the raw break-even
    // points get lifted where a deeper state pays off sooner.
    const DemotionConfig be = DemotionConfig::break_even(load_arch_spec("ddr3"));
    CHECK(be.timeouts == std::vector<std::uint64_t>{42, 100, 100, 2462, 20093});
    CHECK_NOTHROW(validate_config(be));

    CHECK_THROWS_AS(validate_config(DemotionConfig{{9, 4}}), std::invalid_argument);
    CHECK_NOTHROW(validate_config(DemotionConfig{{9, kNever, 9}}));

    const IdleHistogram hist = make_hist(100, {{10, 1.0}});
    CHECK_THROWS_AS(total_energy(DemotionConfig{{1, 2}}, hist, one_state_arch()),
                    std::invalid_argument);
}

TEST_CASE("greedy picks the energy-optimal timeout without a budget") {
    const DramArchSpec spec = one_state_arch();
    const IdleHistogram hist = make_hist(100, {{3, 2.0}, {9, 1.0}});
    const DemotionConfig cfg = greedy_config(hist, spec);
    CHECK(cfg.timeouts == std::vector<std::uint64_t>{0});
    CHECK(total_energy(cfg, hist, spec) == doctest::Approx(13.5));
}

TEST_CASE("delay budget steers both solvers") {
    const DramArchSpec spec = one_state_arch();
    const IdleHistogram hist = make_hist(100, {{3, 2.0}, {9, 1.0}});

    SolveOptions opts;
    opts.delay_budget = 4.0;
    const DemotionConfig greedy = greedy_config(hist, spec, opts);
    CHECK(greedy.timeouts == std::vector<std::uint64_t>{3});
    CHECK(total_energy(greedy, hist, spec) == doctest::Approx(14.0));
    CHECK(total_delay(greedy, hist, spec) == doctest::Approx(4.0));
    const DemotionConfig exh = exhaustive_config(hist, spec, opts);
    CHECK(total_energy(exh, hist, spec) == doctest::Approx(14.0));

    opts.delay_budget = 0.0;
    CHECK(exhaustive_config(hist, spec, opts).all_disabled());
    const DemotionConfig frozen = greedy_config(hist, spec, opts);
    CHECK(total_delay(frozen, hist, spec) == doctest::Approx(0.0));
    CHECK(total_energy(frozen, hist, spec) == doctest::Approx(15.0));
}

TEST_CASE("a single long period drives the chain to its deepest state") {
    const DramArchSpec lp = load_arch_spec("lpddr2");
    const IdleHistogram hist = make_hist(10000, {{10000, 1.0}});
    const DemotionConfig cfg = greedy_config(hist, lp);
    CHECK(evaluate_period(cfg, 10000, lp).end_state == 3);
    CHECK(total_energy(cfg, hist, lp) == doctest::Approx(0.194 * 10000 + 266));
}

TEST_CASE("ed2 keeps a rank awake when resync would hurt runtime more") {
    const DramArchSpec slow = one_state_arch(0.5, 60.0, 2.0);
    const IdleHistogram hist = make_hist(100, {{90, 1.0}});

    SolveOptions energy_opts;
    CHECK(greedy_config(hist, slow, energy_opts).timeouts == std::vector<std::uint64_t>{0});

    SolveOptions ed2_opts;
    ed2_opts.objective = Objective::kEd2;
    const DemotionConfig greedy = greedy_config(hist, slow, ed2_opts);
    CHECK(total_delay(greedy, hist, slow) == doctest::Approx(0.0));
    CHECK(total_energy(greedy, hist, slow) == doctest::Approx(90.0));
    const DemotionConfig exh = exhaustive_config(hist, slow, ed2_opts);
    CHECK(exh.all_disabled());
}

TEST_CASE("single state restriction leaves the rest of the chain disabled") {
    const DramArchSpec lp = load_arch_spec("lpddr2");
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        IdleHistogram hist(4000);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, 4000);
        for (int b = 0; b < 8; ++b) hist.add(len_dist(rng), 1.0 + rng() % 3);

        SolveOptions opts;
        opts.only_state = 1;
        opts.delay_budget = 600.0;
        const DemotionConfig greedy = greedy_config(hist, lp, opts);
        CHECK(greedy.timeouts[0] == kNever);
        CHECK(greedy.timeouts[2] == kNever);
        CHECK(total_delay(greedy, hist, lp) <= 600.0 + 1e-9);

        const DemotionConfig exh = exhaustive_config(hist, lp, opts);
        CHECK(total_energy(greedy, hist, lp) ==
              doctest::Approx(total_energy(exh, hist, lp)).epsilon(1e-9));
    }

    SolveOptions bad;
    bad.only_state = 7;
    const IdleHistogram hist = make_hist(100, {{10, 1.0}});
    CHECK_THROWS_AS(greedy_config(hist, lp, bad), std::invalid_argument);
}

TEST_CASE("exhaustive search refuses oversized instances") {
    const IdleHistogram small = make_hist(100, {{10, 1.0}});
    CHECK_THROWS_AS(exhaustive_config(small, load_arch_spec("ddr3")), std::runtime_error);

    IdleHistogram wide(100000);
    for (std::uint64_t len = 1; len <= 31; ++len) wide.add(len, 1.0);
    CHECK_THROWS_AS(exhaustive_config(wide, load_arch_spec("lpddr2")), std::runtime_error);
}

TEST_CASE("candidate grid search equals the full integer optimum") {
    // Every breakpoint of the piecewise-linear energy lies on an observed
    // length, so the grid restricted to {0, lengths, never} is exact.
    const DramArchSpec two = two_state_arch();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t slot = 12;
        IdleHistogram hist(slot);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, slot);
        for (int b = 0; b < 5; ++b) hist.add(len_dist(rng), 1.0 + rng() % 2);

        SolveOptions opts;
        if (trial % 3 == 1) opts.delay_budget = static_cast<double>(rng() % 40);
        if (trial % 3 == 2) opts.objective = Objective::kEd2;

        double best = std::numeric_limits<double>::infinity();
        std::vector<std::uint64_t> grid;
        for (std::uint64_t v = 0; v <= slot; ++v) grid.push_back(v);
        grid.push_back(kNever);
        for (const std::uint64_t d1 : grid) {
            for (const std::uint64_t d2 : grid) {
                if (d1 != kNever && d2 != kNever && d2 < d1) continue;
                const DemotionConfig cfg{{d1, d2}};
                const double delay = total_delay(cfg, hist, two);
                if (delay > opts.delay_budget) continue;
                best = std::min(best, objective_value(total_energy(cfg, hist, two), delay,
                                                      static_cast<double>(slot), opts.objective));
            }
        }

        const DemotionConfig exh = exhaustive_config(hist, two, opts);
        const double exh_delay = total_delay(exh, hist, two);
        const double exh_obj = objective_value(total_energy(exh, hist, two), exh_delay,
                                               static_cast<double>(slot), opts.objective);
        CHECK(exh_obj == doctest::Approx(best).epsilon(1e-9));
        CHECK(exh_delay <= opts.delay_budget + 1e-9);
    }
}

TEST_CASE("greedy tracks the exhaustive optimum closely") {
    const DramArchSpec two = two_state_arch();
    std::mt19937_64 rng(7);
    int within = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const std::uint64_t slot = 2000;
        IdleHistogram hist(slot);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, slot);
        std::uniform_int_distribution<int> cnt_dist(1, 4);
        const int buckets = 2 + static_cast<int>(rng() % 11);
        for (int b = 0; b < buckets; ++b) hist.add(len_dist(rng), cnt_dist(rng));

        SolveOptions opts;
        const int mode = trial % 3;
        if (mode == 1) opts.delay_budget = 0.0;
        if (mode == 2) opts.delay_budget = static_cast<double>(rng() % 200);

        const DemotionConfig greedy = greedy_config(hist, two, opts);
        CHECK_NOTHROW(validate_config(greedy));
        CHECK(total_delay(greedy, hist, two) <= opts.delay_budget + 1e-9);
        const double greedy_energy = total_energy(greedy, hist, two);
        CHECK(greedy_energy <= all_active_energy(hist, two) + 1e-9);

        const double exh_energy = total_energy(exhaustive_config(hist, two, opts), hist, two);
        if (greedy_energy <= 1.05 * exh_energy + 1e-9) ++within;
        CHECK(greedy_energy >= exh_energy - 1e-6);
    }
    CHECK(within >= 950);
}

TEST_CASE("adding a state never hurts the optimum") {
    const DramArchSpec lp = load_arch_spec("lpddr2");
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        IdleHistogram hist(100000);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, 100000);
        for (int b = 0; b < 10; ++b) hist.add(len_dist(rng), 1.0 + rng() % 3);

        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m <= 3; ++m) {
            const DramArchSpec sub = lp.with_first_low_power_states(m);
            const double opt = total_energy(exhaustive_config(hist, sub), hist, sub);
            CHECK(opt <= prev + 1e-9);
            prev = opt;
        }
    }
}

TEST_CASE("exponential ladder only widens the candidate set") {
    const DramArchSpec spec = one_state_arch();
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        IdleHistogram hist(8192);
        std::uniform_int_distribution<std::uint64_t> len_dist(1, 8192);
        for (int b = 0; b < 6; ++b) hist.add(len_dist(rng), 1.0 + rng() % 2);

        SolveOptions plain;
        SolveOptions ladder;
        ladder.exponential_search = true;
        const double e_plain = total_energy(greedy_config(hist, spec, plain), hist, spec);
        const double e_ladder = total_energy(greedy_config(hist, spec, ladder), hist, spec);
        // One state means greedy is exhaustive over its candidates, so a
        // superset can only match or improve.
        CHECK(e_ladder <= e_plain + 1e-9);
    }
}

TEST_CASE("empty histogram solves without demotion pressure") {
    const DramArchSpec two = two_state_arch();
    const IdleHistogram empty(1000);
    const DemotionConfig exh = exhaustive_config(empty, two);
    CHECK(exh.all_disabled());
    const DemotionConfig greedy = greedy_config(empty, two);
    CHECK(greedy.all_disabled());
    CHECK(total_energy(greedy, empty, two) == doctest::Approx(0.0));
    CHECK(total_delay(greedy, empty, two) == doctest::Approx(0.0));
}
