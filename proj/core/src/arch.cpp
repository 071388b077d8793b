#include "ramzzz/arch.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ramzzz {

namespace {

DramArchSpec make_builtin(std::string name, std::vector<PowerStateSpec> states) {
    DramArchSpec spec;
    spec.name = std::move(name);
    spec.states = std::move(states);
    spec.cpu_freq_ghz = 2.66;
    return spec;
}

// DDR3 DRx4 at 1333 MHz
DramArchSpec builtin_ddr3() {
    return make_builtin("ddr3", {
        {"ACT", 1.0, 0.0, -1.0},
        {"ACT_PDN", 0.612, 6.0, -1.0},
        {"PRE_PDN_FAST", 0.520, 18.0, -1.0},
        {"PRE_PDN_SLOW", 0.299, 24.0, -1.0},
        {"SR_FAST", 0.170, 768.0, -1.0},
        {"SR_SLOW", 0.104, 6768.0, -1.0},
    });
}

// DDR2 DRx8 at 800 MHz
DramArchSpec builtin_ddr2() {
    return make_builtin("ddr2", {
        {"ACT", 1.0, 0.0, -1.0},
        {"ACT_PDN_FAST", 0.619, 5.0, -1.0},
        {"ACT_PDN_SLOW", 0.325, 18.0, -1.0},
        {"PRE_PDN", 0.237, 25.0, -1.0},
        {"SR", 0.178, 500.0, -1.0},
    });
}

// LPDDR2 DRx16 at 800 MHz
DramArchSpec builtin_lpddr2() {
    return make_builtin("lpddr2", {
        {"ACT", 1.0, 0.0, -1.0},
        {"ACT_PDN", 0.523, 8.0, -1.0},
        {"PRE_PDN", 0.303, 26.0, -1.0},
        {"SR", 0.194, 100.0, -1.0},
    });
}

DramArchSpec parse_spec_json(const nlohmann::json& j) {
    DramArchSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.cpu_freq_ghz = j.value("cpu_freq_ghz", 2.66);
    for (const auto& js : j.at("states")) {
        PowerStateSpec s;
        s.name = js.at("name").get<std::string>();
        s.normalized_power = js.at("normalized_power").get<double>();
        s.resync_time_ns = js.at("resync_time_ns").get<double>();
        s.resync_energy = js.value("resync_energy", -1.0);
        spec.states.push_back(std::move(s));
    }
    return spec;
}

}  // namespace

DramArchSpec DramArchSpec::with_first_low_power_states(std::size_t m) const {
    if (m < 1 || m > low_power_count()) {
        throw std::invalid_argument("state count out of range for " + name);
    }
    DramArchSpec out = *this;
    out.states.resize(m + 1);
    return out;
}

std::vector<std::string> builtin_arch_names() { return {"ddr3", "ddr2", "lpddr2"}; }

void validate_arch_spec(const DramArchSpec& spec) {
    if (spec.cpu_freq_ghz <= 0.0) {
        throw std::runtime_error("arch spec '" + spec.name + "': cpu_freq_ghz must be positive");
    }
    if (spec.states.size() < 2) {
        throw std::runtime_error("arch spec '" + spec.name + "': need ACT plus at least one low-power state");
    }
    const PowerStateSpec& act = spec.states.front();
    if (act.normalized_power != 1.0 || act.resync_time_ns != 0.0) {
        throw std::runtime_error("arch spec '" + spec.name + "': first state must be ACT with power 1.0 and resync 0");
    }
    for (std::size_t i = 1; i < spec.states.size(); ++i) {
        const PowerStateSpec& s = spec.states[i];
        if (s.normalized_power <= 0.0 || s.normalized_power > 1.0) {
            throw std::runtime_error("arch spec '" + spec.name + "': state " + s.name + " power out of (0,1]");
        }
        if (s.normalized_power >= spec.states[i - 1].normalized_power) {
            throw std::runtime_error("arch spec '" + spec.name + "': powers not strictly descending at " + s.name);
        }
        if (s.resync_time_ns < spec.states[i - 1].resync_time_ns) {
            throw std::runtime_error("arch spec '" + spec.name + "': resync times decrease at " + s.name);
        }
    }
}

DramArchSpec load_arch_spec(const std::string& source) {
    DramArchSpec spec;
    if (source == "ddr3") {
        spec = builtin_ddr3();
    } else if (source == "ddr2") {
        spec = builtin_ddr2();
    } else if (source == "lpddr2") {
        spec = builtin_lpddr2();
    } else if (source.find('.') != std::string::npos || source.find('/') != std::string::npos) {
        std::ifstream in(source);
        if (!in) {
            throw std::runtime_error("cannot open arch spec file: " + source);
        }
        nlohmann::json j;
        try {
            in >> j;
            spec = parse_spec_json(j);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("malformed arch spec file " + source + ": " + e.what());
        }
    } else {
        throw std::invalid_argument("unknown architecture: " + source);
    }
    validate_arch_spec(spec);
    return spec;
}

std::uint64_t resync_cycles(const DramArchSpec& spec, const PowerStateSpec& state) {
    bool found = false;
    for (const auto& s : spec.states) {
        if (&s == &state || (s.name == state.name && s.normalized_power == state.normalized_power)) {
            found = true;
            break;
        }
    }
    if (!found) {
        throw std::invalid_argument("state " + state.name + " not part of arch " + spec.name);
    }
    return static_cast<std::uint64_t>(std::ceil(state.resync_time_ns * spec.cpu_freq_ghz));
}

double resync_energy(const DramArchSpec& spec, const PowerStateSpec& state) {
    if (state.resync_energy >= 0.0) {
        return state.resync_energy;
    }
    return spec.act().normalized_power * static_cast<double>(resync_cycles(spec, state));
}

std::uint64_t break_even_threshold(const DramArchSpec& spec, const PowerStateSpec& state) {
    if (state.is_active()) {
        throw std::invalid_argument("break-even threshold undefined for the active state");
    }
    const double p_act = spec.act().normalized_power;
    if (state.normalized_power >= p_act) {
        return kUnboundedThreshold;
    }
    const double energy = resync_energy(spec, state);
    return static_cast<std::uint64_t>(std::ceil(energy / (p_act - state.normalized_power)));
}

}  // namespace ramzzz
