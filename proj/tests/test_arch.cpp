#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ramzzz/arch.hpp"

using namespace ramzzz;

TEST_CASE("builtin ddr3 state table") {
    DramArchSpec spec = load_arch_spec("ddr3");
    REQUIRE(spec.states.size() == 6);
    CHECK(spec.low_power_count() == 5);
    CHECK(spec.act().name == "ACT");
    CHECK(spec.act().normalized_power == 1.0);
    CHECK(spec.states[1].name == "ACT_PDN");
    CHECK(spec.states[1].normalized_power == doctest::Approx(0.612));
    CHECK(spec.states[1].resync_time_ns == doctest::Approx(6.0));
    CHECK(spec.states[2].name == "PRE_PDN_FAST");
    CHECK(spec.states[2].normalized_power == doctest::Approx(0.520));
    CHECK(spec.states[2].resync_time_ns == doctest::Approx(18.0));
    CHECK(spec.states[3].name == "PRE_PDN_SLOW");
    CHECK(spec.states[3].normalized_power == doctest::Approx(0.299));
    CHECK(spec.states[3].resync_time_ns == doctest::Approx(24.0));
    CHECK(spec.states[4].name == "SR_FAST");
    CHECK(spec.states[4].normalized_power == doctest::Approx(0.170));
    CHECK(spec.states[4].resync_time_ns == doctest::Approx(768.0));
    CHECK(spec.states[5].name == "SR_SLOW");
    CHECK(spec.states[5].normalized_power == doctest::Approx(0.104));
    CHECK(spec.states[5].resync_time_ns == doctest::Approx(6768.0));
    CHECK(spec.cpu_freq_ghz == doctest::Approx(2.66));
}

TEST_CASE("builtin ddr2 state table") {
    DramArchSpec spec = load_arch_spec("ddr2");
    REQUIRE(spec.states.size() == 5);
    CHECK(spec.states[1].name == "ACT_PDN_FAST");
    CHECK(spec.states[1].normalized_power == doctest::Approx(0.619));
    CHECK(spec.states[1].resync_time_ns == doctest::Approx(5.0));
    CHECK(spec.states[2].name == "ACT_PDN_SLOW");
    CHECK(spec.states[2].normalized_power == doctest::Approx(0.325));
    CHECK(spec.states[2].resync_time_ns == doctest::Approx(18.0));
    CHECK(spec.states[3].name == "PRE_PDN");
    CHECK(spec.states[3].normalized_power == doctest::Approx(0.237));
    CHECK(spec.states[3].resync_time_ns == doctest::Approx(25.0));
    CHECK(spec.states[4].name == "SR");
    CHECK(spec.states[4].normalized_power == doctest::Approx(0.178));
    CHECK(spec.states[4].resync_time_ns == doctest::Approx(500.0));
}

TEST_CASE("builtin lpddr2 state table") {
    DramArchSpec spec = load_arch_spec("lpddr2");
    REQUIRE(spec.states.size() == 4);
    CHECK(spec.states[1].name == "ACT_PDN");
    CHECK(spec.states[1].normalized_power == doctest::Approx(0.523));
    CHECK(spec.states[1].resync_time_ns == doctest::Approx(8.0));
    CHECK(spec.states[2].name == "PRE_PDN");
    CHECK(spec.states[2].normalized_power == doctest::Approx(0.303));
    CHECK(spec.states[2].resync_time_ns == doctest::Approx(26.0));
    CHECK(spec.states[3].name == "SR");
    CHECK(spec.states[3].normalized_power == doctest::Approx(0.194));
    CHECK(spec.states[3].resync_time_ns == doctest::Approx(100.0));
}

TEST_CASE("builtin names cover all architectures") {
    auto names = builtin_arch_names();
    REQUIRE(names.size() == 3);
    for (const auto& n : names) {
        DramArchSpec spec = load_arch_spec(n);
        CHECK(spec.states.size() >= 2);
    }
}

TEST_CASE("resync cycle conversion rounds up at 2.66 GHz") {
    DramArchSpec spec = load_arch_spec("ddr3");
    CHECK(resync_cycles(spec, spec.states[5]) == 18003);  // ceil(6768 * 2.66)
    CHECK(resync_cycles(spec, spec.states[1]) == 16);     // ceil(6 * 2.66)
    CHECK(resync_cycles(spec, spec.states[4]) == 2043);   // ceil(768 * 2.66)
    CHECK(resync_cycles(spec, spec.act()) == 0);
}

TEST_CASE("resync energy defaults to full-power resync occupancy") {
    DramArchSpec spec = load_arch_spec("ddr3");
    CHECK(resync_energy(spec, spec.states[5]) == doctest::Approx(18003.0));
    CHECK(resync_energy(spec, spec.act()) == doctest::Approx(0.0));

    PowerStateSpec custom{"X", 0.5, 10.0, 3.25};
    spec.states[1] = custom;
    CHECK(resync_energy(spec, spec.states[1]) == doctest::Approx(3.25));
}

TEST_CASE("break-even thresholds") {
    DramArchSpec spec = load_arch_spec("ddr3");
    // SR_FAST: ceil(2043 / (1 - 0.17)) = ceil(2461.4...) = 2462
    CHECK(break_even_threshold(spec, spec.states[4]) == 2462);
    // SR_SLOW: ceil(18003 / 0.896) = 20093
    CHECK(break_even_threshold(spec, spec.states[5]) == 20093);
    CHECK_THROWS_AS(break_even_threshold(spec, spec.act()), std::invalid_argument);

    PowerStateSpec flat{"FLAT", 1.0, 10.0, -1.0};
    DramArchSpec tweaked = spec;
    tweaked.states[1] = flat;
    CHECK(break_even_threshold(tweaked, tweaked.states[1]) == kUnboundedThreshold);

    PowerStateSpec half{"HALF", 0.5, 0.0, 2.0};
    half.resync_time_ns = 1.0;  // keep it a low-power state
    tweaked.states[1] = half;
    // ceil(2 / (1 - 0.5)) = 4
    CHECK(break_even_threshold(tweaked, tweaked.states[1]) == 4);
}

TEST_CASE("break-even values along the ddr3 chain") {
    // Not monotone: PRE_PDN_SLOW crosses over earlier than PRE_PDN_FAST.
    DramArchSpec spec = load_arch_spec("ddr3");
    const std::uint64_t expected[] = {42, 100, 92, 2462, 20093};
    for (std::size_t i = 1; i < spec.states.size(); ++i) {
        std::uint64_t be = break_even_threshold(spec, spec.states[i]);
        CHECK(be >= resync_cycles(spec, spec.states[i]));
        CHECK(be == expected[i - 1]);
    }
}

TEST_CASE("state chain prefix restriction") {
    DramArchSpec spec = load_arch_spec("ddr3");
    DramArchSpec two = spec.with_first_low_power_states(2);
    REQUIRE(two.states.size() == 3);
    CHECK(two.states[2].name == "PRE_PDN_FAST");
    validate_arch_spec(two);

    DramArchSpec full = spec.with_first_low_power_states(5);
    CHECK(full.states.size() == spec.states.size());

    CHECK_THROWS_AS(spec.with_first_low_power_states(0), std::invalid_argument);
    CHECK_THROWS_AS(spec.with_first_low_power_states(6), std::invalid_argument);
}

TEST_CASE("unknown architecture name is rejected") {
    CHECK_THROWS_AS(load_arch_spec("ddr9"), std::invalid_argument);
}

TEST_CASE("arch spec file round trip") {
    const char* path = "arch_roundtrip.json";
    {
        std::ofstream out(path);
        out << R"({
            "name": "custom",
            "cpu_freq_ghz": 2.0,
            "states": [
                {"name": "ACT", "normalized_power": 1.0, "resync_time_ns": 0.0},
                {"name": "NAP", "normalized_power": 0.4, "resync_time_ns": 10.0},
                {"name": "SLEEP", "normalized_power": 0.1, "resync_time_ns": 100.0, "resync_energy": 55.0}
            ]
        })";
    }
    DramArchSpec spec = load_arch_spec(path);
    CHECK(spec.name == "custom");
    CHECK(spec.low_power_count() == 2);
    CHECK(resync_cycles(spec, spec.states[1]) == 20);
    CHECK(resync_energy(spec, spec.states[2]) == doctest::Approx(55.0));
    // ceil(55 / 0.9) = 62
    CHECK(break_even_threshold(spec, spec.states[2]) == 62);
    std::remove(path);
}

TEST_CASE("malformed arch spec files are rejected") {
    const char* path = "arch_bad.json";
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_arch_spec(path), std::runtime_error);

    {
        std::ofstream out(path);
        out << R"({"name": "x", "states": []})";
    }
    CHECK_THROWS_AS(load_arch_spec(path), std::runtime_error);

    // Powers must strictly descend along the chain.
    {
        std::ofstream out(path);
        out << R"({
            "name": "x",
            "states": [
                {"name": "ACT", "normalized_power": 1.0, "resync_time_ns": 0.0},
                {"name": "A", "normalized_power": 0.5, "resync_time_ns": 10.0},
                {"name": "B", "normalized_power": 0.6, "resync_time_ns": 20.0}
            ]
        })";
    }
    CHECK_THROWS_AS(load_arch_spec(path), std::runtime_error);

    // Resync times must not decrease along the chain.
    {
        std::ofstream out(path);
        out << R"({
            "name": "x",
            "states": [
                {"name": "ACT", "normalized_power": 1.0, "resync_time_ns": 0.0},
                {"name": "A", "normalized_power": 0.5, "resync_time_ns": 30.0},
                {"name": "B", "normalized_power": 0.3, "resync_time_ns": 20.0}
            ]
        })";
    }
    CHECK_THROWS_AS(load_arch_spec(path), std::runtime_error);

    // First state must be ACT.
    {
        std::ofstream out(path);
        out << R"({
            "name": "x",
            "states": [
                {"name": "ACT", "normalized_power": 0.9, "resync_time_ns": 0.0},
                {"name": "A", "normalized_power": 0.5, "resync_time_ns": 30.0}
            ]
        })";
    }
    CHECK_THROWS_AS(load_arch_spec(path), std::runtime_error);

    CHECK_THROWS_AS(load_arch_spec("no_such_file.json"), std::runtime_error);
    std::remove(path);
}
