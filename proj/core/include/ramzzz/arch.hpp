#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ramzzz {

/// One power state of a DRAM rank. Powers are normalized to the active
/// state; energies are expressed in ACT-power * CPU-cycle units.
struct PowerStateSpec {
    std::string name;
    double normalized_power = 1.0;   // fraction of ACT power, (0, 1]
    double resync_time_ns = 0.0;     // time to return to ACT
    double resync_energy = -1.0;     // < 0: default to P_ACT * resync cycles

    bool is_active() const { return resync_time_ns == 0.0; }
};

/// A DRAM architecture: the active state followed by its low-power chain
/// S1..SM in descending power, plus the clock used to convert ns to cycles.
struct DramArchSpec {
    std::string name;
    std::vector<PowerStateSpec> states;  // states[0] is ACT
    double cpu_freq_ghz = 2.66;

    std::size_t low_power_count() const { return states.size() - 1; }
    const PowerStateSpec& act() const { return states.front(); }

    /// Low-power state i in 1..M.
    const PowerStateSpec& low_power(std::size_t i) const { return states.at(i); }

    /// Copy of this spec restricted to the first `m` low-power states.
    DramArchSpec with_first_low_power_states(std::size_t m) const;
};

/// Sentinel returned by break_even_threshold when demotion never pays off.
inline constexpr std::uint64_t kUnboundedThreshold = UINT64_MAX;

/// Built-in architecture names: "ddr3", "ddr2", "lpddr2".
std::vector<std::string> builtin_arch_names();

/// Loads a built-in spec by name or a JSON spec file by path.
/// Throws std::invalid_argument for unknown names, std::runtime_error for
/// unreadable/malformed files or ordering-invariant violations.
DramArchSpec load_arch_spec(const std::string& source);

/// Validates the state-chain invariants; throws std::runtime_error.
void validate_arch_spec(const DramArchSpec& spec);

/// Resynchronization latency in CPU cycles: ceil(ns * GHz).
std::uint64_t resync_cycles(const DramArchSpec& spec, const PowerStateSpec& state);

/// Resynchronization energy in ACT-power*cycle units; defaults to
/// P_ACT * resync_cycles when the spec does not override it.
double resync_energy(const DramArchSpec& spec, const PowerStateSpec& state);

/// Smallest idle length (cycles) at which an immediate demotion to `state`
/// consumes no more energy than staying active: ceil(E_S / (P_ACT - P_S)).
/// Returns kUnboundedThreshold when P_S >= P_ACT. Throws for the ACT state.
std::uint64_t break_even_threshold(const DramArchSpec& spec, const PowerStateSpec& state);

}  // namespace ramzzz
