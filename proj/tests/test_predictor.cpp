#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ramzzz/predictor.hpp"

using namespace ramzzz;

namespace {

bool buckets_equal(const IdleHistogram& a, const IdleHistogram& b, double tol = 1e-9) {
    auto ba = a.iter_buckets();
    auto bb = b.iter_buckets();
    if (ba.size() != bb.size()) return false;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        if (ba[i].first != bb[i].first) return false;
        if (std::abs(ba[i].second - bb[i].second) > tol * (1.0 + std::abs(bb[i].second))) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("page access probability") {
    CHECK(page_access_prob(5.0, 4.0, 1000) == doctest::Approx(0.02));
    CHECK(page_access_prob(0.0, 4.0, 1000) == doctest::Approx(0.0));
    CHECK(page_access_prob(1000.0, 4.0, 1000) == doctest::Approx(1.0));  // clamp
    CHECK_THROWS_AS(page_access_prob(1.0, 4.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(page_access_prob(-1.0, 4.0, 10), std::invalid_argument);
}

TEST_CASE("rank idle probability is the product of complements") {
    CHECK(rank_idle_prob({0.5, 0.5}) == doctest::Approx(0.25));
    CHECK(rank_idle_prob({}) == doctest::Approx(1.0));
    CHECK(rank_idle_prob({0.3, 1.0, 0.1}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(rank_idle_prob({1.5}), std::invalid_argument);
}

TEST_CASE("profile builder composes rate, latency, and slot length") {
    auto profile = make_rank_profile({5.0, 5.0}, 4.0, 1000);
    REQUIRE(profile.page_probs.size() == 2);
    CHECK(profile.page_probs[0] == doctest::Approx(0.02));
    CHECK(profile.idle_prob == doctest::Approx(0.98 * 0.98));
}

TEST_CASE("idle length probability is geometric") {
    CHECK(idle_length_prob(0.5, 2) == doctest::Approx(0.125));
    CHECK(idle_length_prob(0.0, 0) == doctest::Approx(1.0));
    CHECK(idle_length_prob(0.0, 3) == doctest::Approx(0.0));
    double total = 0.0;
    for (std::uint64_t k = 0; k < 500; ++k) {
        total += idle_length_prob(0.9, k);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("carry-forward copies the previous histogram") {
    IdleHistogram prev(10000);
    prev.record_idle(10);
    prev.record_idle(10);
    prev.record_idle(5000);
    auto out = predict_carry_forward(prev);
    CHECK(buckets_equal(out, prev));

    IdleHistogram empty(10000);
    CHECK(predict_carry_forward(empty).iter_buckets().empty());
}

TEST_CASE("identity rescale reproduces a slot-filling histogram") {
    IdleHistogram prev(1000);
    prev.record_idle(490);
    prev.record_idle(490);  // 2 * (490 + 10) = 1000 occupies the slot exactly
    auto out = predict_after_migration(prev, 0.9, 0.9, 10.0);
    CHECK(buckets_equal(out, prev, 1e-9));
}

TEST_CASE("rescale normalizes occupancy back to the slot length") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        std::uint64_t T = 1000 + rng() % 100000;
        IdleHistogram prev(T);
        int n = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            prev.record_idle(1 + rng() % T);
        }
        double q_old = 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0);
        double q_new = 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0);
        double g = 200.0;
        auto out = predict_after_migration(prev, q_old, q_new, g);
        double occupied = out.weighted_total(g);
        CHECK(occupied == doctest::Approx(static_cast<double>(T)).epsilon(1e-6));
        for (const auto& [len, cnt] : out.iter_buckets()) {
            CHECK(cnt >= 0.0);
        }
    }
}

TEST_CASE("normalization makes the prediction scale-invariant") {
    IdleHistogram a(50000);
    IdleHistogram b(50000);
    a.add(100, 1.0);
    a.add(900, 3.0);
    a.add(12000, 0.5);
    b.add(100, 2.5);
    b.add(900, 7.5);
    b.add(12000, 1.25);
    auto pa = predict_after_migration(a, 0.8, 0.4, 200.0);
    auto pb = predict_after_migration(b, 0.8, 0.4, 200.0);
    CHECK(buckets_equal(pa, pb, 1e-9));
}

TEST_CASE("a busier rank shifts predicted mass toward short periods") {
    IdleHistogram prev(100000);
    for (std::uint64_t len = 50; len <= 5000; len += 50) {
        prev.add(len, 10.0);
    }
    auto busier = predict_after_migration(prev, 0.999, 0.99, 200.0);
    auto calmer = predict_after_migration(prev, 0.99, 0.999, 200.0);
    auto mean_len = [](const IdleHistogram& h) {
        return h.total_idle_cycles() / h.total_count();
    };
    CHECK(mean_len(busier) < mean_len(prev));
    CHECK(mean_len(calmer) > mean_len(prev));
}

TEST_CASE("degenerate rescale falls back to carry-forward") {
    IdleHistogram empty(10000);
    auto out = predict_after_migration(empty, 0.9, 0.5, 200.0);
    CHECK(out.iter_buckets().empty());

    IdleHistogram prev(10000);
    prev.record_idle(100);
    // q_new = 1 zeroes every bucket; prediction falls back to the previous slot.
    auto fallback = predict_after_migration(prev, 0.9, 1.0, 200.0);
    CHECK(buckets_equal(fallback, prev));
}

TEST_CASE("underflowing old weights pass counts through without NaNs") {
    IdleHistogram prev(100000000);
    prev.record_idle(50000000);
    prev.record_idle(70000000);
    auto out = predict_after_migration(prev, 1e-20, 0.5, 200.0);
    double occupied = out.weighted_total(200.0);
    CHECK(std::isfinite(occupied));
    CHECK(occupied == doctest::Approx(1e8).epsilon(1e-6));
    REQUIRE(out.iter_buckets().size() == 2);
}

TEST_CASE("geometric idle lengths fit an exponential curve tightly") {
    std::mt19937_64 rng(7);
    IdleHistogram hist(1000000);
    std::geometric_distribution<std::uint64_t> geo(0.01);  // Q = 0.99
    for (int i = 0; i < 20000; ++i) {
        hist.record_idle(1 + geo(rng));
    }
    CHECK(geometric_fit_r2(hist) >= 0.85);
}

TEST_CASE("probability bounds are validated") {
    IdleHistogram prev(1000);
    prev.record_idle(5);
    CHECK_THROWS_AS(predict_after_migration(prev, -0.1, 0.5, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(predict_after_migration(prev, 0.5, 1.1, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(idle_length_prob(1.0001, 1), std::invalid_argument);
}
