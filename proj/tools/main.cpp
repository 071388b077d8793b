#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramzzz/arch.hpp"
#include "ramzzz/demotion.hpp"
#include "ramzzz/engine.hpp"
#include "ramzzz/idle_histogram.hpp"
#include "ramzzz/metrics.hpp"
#include "ramzzz/trace.hpp"

namespace {

using namespace ramzzz;

// Config files are JSON: top-level keys feed the main app, nested objects
// feed the matching subcommand. Arrays collapse to comma-separated lists.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json doc;
        input >> doc;
        if (!doc.is_object()) {
            throw CLI::ConversionError("config file must hold a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        flatten({}, doc, items);
        return items;
    }

  private:
    static std::string scalar(const nlohmann::json& value) {
        if (value.is_string()) return value.get<std::string>();
        if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
        return value.dump();
    }

    static void flatten(const std::vector<std::string>& parents, const nlohmann::json& obj,
                        std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                std::vector<std::string> next = parents;
                next.push_back(key);
                flatten(next, value, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                std::string joined;
                for (const auto& element : value) {
                    if (!joined.empty()) joined += ',';
                    joined += scalar(element);
                }
                item.inputs = {joined};
            } else {
                item.inputs = {scalar(value)};
            }
            out.push_back(item);
        }
    }
};

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::string current;
    for (const char c : text) {
        if (c == ',') {
            if (!current.empty()) parts.push_back(current);
            current.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            current += c;
        }
    }
    if (!current.empty()) parts.push_back(current);
    return parts;
}

std::uint64_t to_cycles(double value, const std::string& what) {
    if (!(value >= 0.0) || value > 1.8e19) {
        throw CLI::ValidationError(what + " must be a non-negative cycle count");
    }
    return static_cast<std::uint64_t>(std::llround(value));
}

Objective parse_objective(const std::string& name) {
    if (name == "energy") return Objective::kEnergy;
    if (name == "ed2") return Objective::kEd2;
    throw CLI::ValidationError("objective must be 'energy' or 'ed2', got '" + name + "'");
}

std::size_t resolve_rzsd_state(const DramArchSpec& spec, const std::string& token) {
    if (token.empty()) {
        throw CLI::ValidationError("--policy rzsd requires --rzsd-state (name or index)");
    }
    try {
        std::size_t pos = 0;
        const unsigned long long index = std::stoull(token, &pos);
        if (pos == token.size()) {
            if (index >= spec.low_power_count()) {
                throw CLI::ValidationError("--rzsd-state index out of range for " + spec.name);
            }
            return static_cast<std::size_t>(index);
        }
    } catch (const CLI::ValidationError&) {
        throw;
    } catch (const std::exception&) {
        // fall through to name lookup
    }
    std::string known;
    for (std::size_t i = 0; i + 1 < spec.states.size(); ++i) {
        const std::string& name = spec.states[i + 1].name;
        if (name == token) return i;
        if (!known.empty()) known += ", ";
        known += name;
    }
    throw CLI::ValidationError("--rzsd-state '" + token + "' not in {" + known + "}");
}

std::string default_out_dir() {
    const char* env = std::getenv("RAMZZZ_OUT_DIR");
    return env != nullptr && *env != '\0' ? env : ".";
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
    const std::filesystem::path path = dir.empty() ? default_out_dir() : dir;
    std::filesystem::create_directories(path);
    return path;
}

// The checks mirror the accounting identities the engine maintains; a
// violation means a result file cannot be trusted.
std::vector<std::string> check_invariants(const SimMetrics& m, const DramArchSpec& spec) {
    std::vector<std::string> problems;
    const double horizon = static_cast<double>(m.horizon_cycles);
    if (m.per_rank.size() != m.ranks) problems.push_back("per-rank records missing");
    double energy = 0.0;
    for (std::size_t r = 0; r < m.per_rank.size(); ++r) {
        const RankMetrics& rm = m.per_rank[r];
        double occupied = rm.servicing_cycles + rm.resync_occupied_cycles +
                          rm.migration_occupied_cycles + rm.remap_occupied_cycles;
        for (const double cycles : rm.state_residency) {
            if (cycles < 0.0) problems.push_back("negative residency on rank " + std::to_string(r));
            occupied += cycles;
        }
        if (std::abs(occupied - horizon) > 1e-6 * std::max(1.0, horizon)) {
            problems.push_back("rank " + std::to_string(r) + " cycles do not tile the horizon");
        }
        double rank_energy = spec.act().normalized_power *
                             (rm.state_residency.at(0) + rm.servicing_cycles +
                              rm.remap_occupied_cycles);
        for (std::size_t s = 1; s < spec.states.size(); ++s) {
            rank_energy += spec.states[s].normalized_power * rm.state_residency.at(s);
        }
        if (std::abs(rank_energy - rm.background_energy) >
            1e-6 * std::max(1.0, rm.background_energy)) {
            problems.push_back("rank " + std::to_string(r) + " background energy mismatch");
        }
        energy += rm.background_energy + rm.resync_energy + rm.migration_energy;
    }
    if (std::abs(energy - m.total_energy) > 1e-6 * std::max(1.0, m.total_energy)) {
        problems.push_back("energy breakdown does not add up");
    }
    if (m.delay.resync < 0.0 || m.delay.migration < 0.0 || m.delay.remap < 0.0) {
        problems.push_back("negative delay component");
    }
    if (std::abs(m.exec_time - (horizon + m.delay.total())) > 1e-6 * std::max(1.0, m.exec_time)) {
        problems.push_back("exec_time != horizon + delays");
    }
    return problems;
}

// ---------------------------------------------------------------------------
// simulate

struct SynthFlags {
    double cycles = 0.0;
    std::uint64_t pages = 1024;
    double hot_fraction = 0.1;
    double hot_share = 0.9;
    double rate = 0.001;
    double phase = 0.0;
    double write_fraction = 0.25;
    std::uint64_t seed = 1;
};

SyntheticTraceParams make_synth_params(const SynthFlags& f) {
    SyntheticTraceParams p;
    p.total_cycles = to_cycles(f.cycles, "--cycles");
    p.num_pages = f.pages;
    p.hot_fraction = f.hot_fraction;
    p.hot_share = f.hot_share;
    p.access_rate = f.rate;
    p.phase_length = to_cycles(f.phase, "--phase");
    p.write_fraction = f.write_fraction;
    p.seed = f.seed;
    return p;
}

struct SimulateFlags {
    std::string trace_path;
    bool synthetic = false;
    SynthFlags synth;

    std::string archs = "ddr3";
    std::string policies = "base,ramzzz";
    std::string budgets = "0.04";
    std::string objective = "ed2";
    std::string rzsd_state;

    double slot = 1e8;
    std::uint64_t epoch_slots = 10;
    std::uint64_t ranks = 4;
    std::uint64_t capacity = 0;
    std::uint64_t access_cycles = 200;
    std::uint64_t remap_penalty = 1;
    std::uint64_t mq_update_cycles = 0;
    std::uint64_t mq_queues = 16;
    double mq_lifetime = 1e8;
    std::uint64_t migration_cycles = 2048;
    double migration_energy = 4096.0;
    bool serialize_moves = false;
    bool exp_search = false;
    bool record_slots = false;
    std::uint64_t horizon_slots = 1;

    std::string out_dir;
    std::string prefix;
    bool dump_hist = false;
    bool dump_schedules = false;
    std::uint64_t jobs = 1;
};

struct RunSpec {
    std::string arch_name;
    const DramArchSpec* spec = nullptr;
    Policy policy = Policy::kBase;
    double budget = 0.0;
    std::string tag;
};

void print_normalized_table(std::ostream& out,
                            const std::vector<std::pair<std::string, const SimMetrics*>>& rows,
                            const std::map<std::string, const SimMetrics*>& baselines) {
    out << std::left << std::setw(10) << "arch" << std::setw(9) << "policy" << std::setw(9)
        << "budget" << std::right << std::setw(14) << "norm_energy" << std::setw(14)
        << "norm_exec" << std::setw(14) << "norm_ed2" << '\n';
    for (const auto& [budget_text, m] : rows) {
        out << std::left << std::setw(10) << m->arch << std::setw(9) << m->policy
            << std::setw(9) << budget_text << std::right;
        const auto base = baselines.find(m->arch);
        if (base != baselines.end()) {
            const NormalizedMetrics norm = compute_ed2(*m, *base->second);
            out << std::setw(14) << fmt(norm.energy) << std::setw(14) << fmt(norm.exec_time)
                << std::setw(14) << fmt(norm.ed2) << '\n';
        } else {
            out << std::setw(14) << "-" << std::setw(14) << "-" << std::setw(14) << "-" << '\n';
        }
    }
}

int cmd_simulate(const SimulateFlags& f) {
    if (f.trace_path.empty() == !f.synthetic) {
        throw CLI::ValidationError("pick exactly one trace source: --trace or --synthetic");
    }
    const std::vector<MemoryAccess> trace = f.trace_path.empty()
                                                ? generate_synthetic_trace(make_synth_params(f.synth))
                                                : load_trace(f.trace_path);

    const std::vector<std::string> arch_names = split_csv(f.archs);
    std::vector<std::string> policy_names = split_csv(f.policies);
    if (arch_names.empty() || policy_names.empty()) {
        throw CLI::ValidationError("--arch and --policy must not be empty");
    }
    std::vector<double> budgets;
    for (const std::string& token : split_csv(f.budgets)) {
        budgets.push_back(std::stod(token));
    }
    if (budgets.empty()) budgets.push_back(0.04);

    // Each architecture is always simulated under BASE as well: every other
    // policy is reported normalized against it.
    std::vector<Policy> policies{Policy::kBase};
    for (const std::string& name : policy_names) {
        Policy p;
        try {
            p = parse_policy(name);
        } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError(e.what());
        }
        if (std::find(policies.begin(), policies.end(), p) == policies.end()) {
            policies.push_back(p);
        }
    }

    std::map<std::string, DramArchSpec> specs;
    std::map<std::string, std::string> name_sources;
    std::vector<RunSpec> runs;
    for (const std::string& arch : arch_names) {
        if (specs.count(arch) == 0) specs.emplace(arch, load_arch_spec(arch));
        const DramArchSpec& spec = specs.at(arch);
        const auto [it, fresh] = name_sources.emplace(spec.name, arch);
        if (!fresh && it->second != arch) {
            throw CLI::ValidationError("architectures '" + it->second + "' and '" + arch +
                                       "' both name themselves '" + spec.name + "'");
        }
        if (std::find(policies.begin(), policies.end(), Policy::kRzSd) != policies.end()) {
            resolve_rzsd_state(spec, f.rzsd_state);  // fail before any run starts
        }
        // Runs and result files are keyed by the loaded spec's name so that
        // spec-file paths never leak into tags or baseline lookups.
        for (const Policy policy : policies) {
            if (policy == Policy::kBase) {
                runs.push_back(
                    {spec.name, &spec, policy, budgets.front(), f.prefix + spec.name + "_base"});
                continue;
            }
            for (const double budget : budgets) {
                std::string tag = f.prefix + spec.name + "_" + policy_name(policy);
                if (policy == Policy::kRzSd) tag += "-" + f.rzsd_state;
                if (budgets.size() > 1) tag += "_b" + fmt(budget);
                runs.push_back({spec.name, &spec, policy, budget, tag});
            }
        }
    }

    std::vector<SimMetrics> results(runs.size());
    std::vector<std::vector<MigrationSchedule>> schedules(runs.size());
    auto execute = [&](std::size_t i) {
        const RunSpec& run = runs[i];
        SimParams params;
        params.policy = run.policy;
        params.slot_cycles = to_cycles(f.slot, "--slot");
        params.slots_per_epoch = f.epoch_slots;
        params.delay_budget_fraction = run.budget;
        params.ranks = f.ranks;
        params.capacity_pages = f.capacity;
        params.objective = parse_objective(f.objective);
        if (run.policy == Policy::kRzSd) {
            params.rzsd_state = resolve_rzsd_state(*run.spec, f.rzsd_state);
        }
        params.access_cycles = f.access_cycles;
        params.remap_penalty_cycles = f.remap_penalty;
        params.mq_update_cycles = f.mq_update_cycles;
        params.mq_queues = f.mq_queues;
        params.mq_lifetime = to_cycles(f.mq_lifetime, "--mq-lifetime");
        params.migration.per_page_cycles = f.migration_cycles;
        params.migration.per_page_energy = f.migration_energy;
        params.migration.serialize_moves = f.serialize_moves;
        params.exponential_search = f.exp_search;
        params.record_slots = f.record_slots || f.dump_hist;
        params.horizon_slots = f.horizon_slots;
        if (f.dump_schedules) params.schedule_sink = &schedules[i];
        results[i] = run_simulation(trace, *run.spec, params);
    };

    const std::size_t jobs = std::max<std::uint64_t>(1, f.jobs);
    for (std::size_t i = 0; i < runs.size(); i += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t k = i; k < std::min(i + jobs, runs.size()); ++k) {
            batch.push_back(std::async(std::launch::async, execute, k));
        }
        for (auto& f_ : batch) f_.get();
    }

    const std::filesystem::path out_dir = prepare_out_dir(f.out_dir);
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        save_metrics(results[i], (out_dir / (runs[i].tag + ".json")).string());
        for (const std::string& p : check_invariants(results[i], *runs[i].spec)) {
            problems.push_back(runs[i].tag + ": " + p);
        }
        if (f.dump_hist) {
            std::ofstream hist_out(out_dir / (runs[i].tag + "_hist.csv"));
            hist_out << "slot,rank,length,count\n";
            for (std::size_t s = 0; s < results[i].slots.size(); ++s) {
                const SlotRecord& record = results[i].slots[s];
                for (std::size_t r = 0; r < record.ranks.size(); ++r) {
                    for (const auto& [len, cnt] : record.ranks[r].actual) {
                        hist_out << s << ',' << r << ',' << len << ',' << fmt(cnt) << '\n';
                    }
                }
            }
        }
        if (f.dump_schedules) {
            std::ofstream sched_out(out_dir / (runs[i].tag + "_schedules.csv"));
            sched_out << "epoch,segment,src,dst,page\n";
            for (std::size_t e = 0; e < schedules[i].size(); ++e) {
                const MigrationSchedule& schedule = schedules[i][e];
                for (std::size_t seg = 0; seg < schedule.segments.size(); ++seg) {
                    for (const MigrationEdge& edge : schedule.segments[seg]) {
                        sched_out << e << ',' << seg << ',' << edge.src << ',' << edge.dst
                                  << ',' << edge.page << '\n';
                    }
                }
            }
        }
    }

    std::map<std::string, const SimMetrics*> baselines;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].policy == Policy::kBase) baselines[runs[i].arch_name] = &results[i];
    }

    std::ofstream summary(out_dir / "summary.csv");
    summary << "arch,policy,delay_budget,energy,exec_time,ed2,norm_energy,norm_exec_time,"
               "norm_ed2,resync_delay,migration_delay,remap_delay,migrated_pages,"
               "migration_segments,accesses,num_slots\n";
    std::vector<std::pair<std::string, const SimMetrics*>> table_rows;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const SimMetrics& m = results[i];
        const std::string budget_text =
            runs[i].policy == Policy::kBase ? "-" : fmt(runs[i].budget);
        const NormalizedMetrics norm = compute_ed2(m, *baselines.at(runs[i].arch_name));
        summary << m.arch << ',' << m.policy << ',' << budget_text << ',' << fmt(m.total_energy)
                << ',' << fmt(m.exec_time) << ',' << fmt(m.ed2) << ',' << fmt(norm.energy) << ','
                << fmt(norm.exec_time) << ',' << fmt(norm.ed2) << ',' << fmt(m.delay.resync)
                << ',' << fmt(m.delay.migration) << ',' << fmt(m.delay.remap) << ','
                << m.migrated_pages << ',' << m.migration_segments << ',' << m.accesses << ','
                << m.num_slots << '\n';
        table_rows.push_back({budget_text, &m});
    }
    summary.close();

    print_normalized_table(std::cout, table_rows, baselines);
    std::cout << "wrote " << runs.size() << " result file(s) and summary.csv to "
              << out_dir.string() << '\n';

    if (!problems.empty()) {
        for (const std::string& p : problems) std::cerr << "invariant violation: " << p << '\n';
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// gen-trace

struct GenTraceFlags {
    std::string out_path;
    SynthFlags synth;
    double window = 0.0;
};

int cmd_gen_trace(const GenTraceFlags& f) {
    const SyntheticTraceParams params = make_synth_params(f.synth);
    const std::vector<MemoryAccess> trace = generate_synthetic_trace(params);
    save_trace(trace, f.out_path);
    std::cout << "accesses " << trace.size() << '\n';
    std::cout << "wrote " << f.out_path << '\n';
    if (trace.empty()) return 0;
    std::uint64_t window = to_cycles(f.window, "--window");
    if (window == 0) window = std::max<std::uint64_t>(1, params.total_cycles / 10);
    const TraceStats stats = trace_stats(trace, window);
    std::cout << "footprint_pages " << stats.footprint_pages << '\n';
    std::cout << "window_cycles " << window << '\n';
    std::cout << "mean_accesses_per_window " << fmt(stats.mean_accesses_per_window) << '\n';
    std::cout << "stdev_over_mean " << fmt(stats.stdev_over_mean) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// solve-demotion

struct SolveFlags {
    std::string hist_path;
    std::string arch = "ddr3";
    double slot = 1e8;
    double budget = -1.0;  // < 0: derive from fraction
    double budget_fraction = 0.04;
    std::string objective = "energy";
    bool exhaustive = false;
    bool exp_search = false;
};

IdleHistogram load_histogram(const std::string& path, std::uint64_t slot_cycles) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open histogram file: " + path);
    IdleHistogram hist(slot_cycles);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.find_first_not_of("0123456789") != std::string::npos &&
            line.find("length") != std::string::npos) {
            continue;  // header row
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error("histogram line " + std::to_string(line_no) +
                                     ": expected 'length,count'");
        }
        try {
            const std::uint64_t length = std::stoull(line.substr(0, comma));
            const double count = std::stod(line.substr(comma + 1));
            if (count < 0.0) throw std::invalid_argument("negative count");
            if (count > 0.0) hist.add(length, count);
        } catch (const std::exception& e) {
            throw std::runtime_error("histogram line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return hist;
}

int cmd_solve_demotion(const SolveFlags& f) {
    const DramArchSpec spec = load_arch_spec(f.arch);
    const std::uint64_t slot_cycles = to_cycles(f.slot, "--slot");
    const IdleHistogram hist = load_histogram(f.hist_path, slot_cycles);

    SolveOptions options;
    options.delay_budget = f.budget >= 0.0
                               ? f.budget
                               : f.budget_fraction * static_cast<double>(slot_cycles);
    options.objective = parse_objective(f.objective);
    options.exponential_search = f.exp_search;
    options.base_delay = static_cast<double>(slot_cycles);
    const DemotionConfig config = f.exhaustive ? exhaustive_config(hist, spec, options)
                                               : greedy_config(hist, spec, options);

    for (std::size_t i = 0; i < config.num_states(); ++i) {
        std::cout << "state " << spec.states[i + 1].name << " timeout ";
        if (config.enabled(i)) {
            std::cout << config.timeouts[i] << '\n';
        } else {
            std::cout << "disabled" << '\n';
        }
    }
    std::cout << "energy " << fmt(total_energy(config, hist, spec)) << '\n';
    std::cout << "delay " << fmt(total_delay(config, hist, spec)) << '\n';
    std::cout << "budget " << fmt(options.delay_budget) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportFlags {
    std::vector<std::string> inputs;
    std::string out_dir;
    double mem_power_ratio = 0.4;
};

int cmd_report(const ReportFlags& f) {
    struct Entry {
        std::string name;
        SimMetrics metrics;
    };
    std::vector<Entry> entries;
    for (const std::string& path : f.inputs) {
        Entry entry;
        entry.name = std::filesystem::path(path).stem().string();
        entry.metrics = load_metrics(path);
        entries.push_back(std::move(entry));
    }
    const std::filesystem::path out_dir = prepare_out_dir(f.out_dir);

    // Union of state names, in first-seen order, so mixed architectures fit
    // one table; absent states read as zero.
    std::vector<std::string> state_columns;
    for (const Entry& e : entries) {
        for (const std::string& name : e.metrics.state_names) {
            if (std::find(state_columns.begin(), state_columns.end(), name) ==
                state_columns.end()) {
                state_columns.push_back(name);
            }
        }
    }

    std::ofstream residency(out_dir / "residency.csv");
    residency << "file,arch,policy,rank";
    for (const std::string& name : state_columns) residency << ',' << name;
    residency << ",others\n";
    for (const Entry& e : entries) {
        const SimMetrics& m = e.metrics;
        const double horizon = static_cast<double>(m.horizon_cycles);
        std::vector<double> totals(state_columns.size() + 1, 0.0);
        for (std::size_t r = 0; r < m.per_rank.size(); ++r) {
            const RankMetrics& rm = m.per_rank[r];
            residency << e.name << ',' << m.arch << ',' << m.policy << ',' << r;
            for (std::size_t c = 0; c < state_columns.size(); ++c) {
                double fraction = 0.0;
                for (std::size_t s = 0; s < m.state_names.size(); ++s) {
                    if (m.state_names[s] == state_columns[c]) {
                        fraction = rm.state_residency.at(s) / horizon;
                    }
                }
                totals[c] += fraction;
                residency << ',' << fmt(fraction);
            }
            const double others = (rm.servicing_cycles + rm.resync_occupied_cycles +
                                   rm.migration_occupied_cycles + rm.remap_occupied_cycles) /
                                  horizon;
            totals.back() += others;
            residency << ',' << fmt(others) << '\n';
        }
        residency << e.name << ',' << m.arch << ',' << m.policy << ",all";
        const double ranks = static_cast<double>(std::max<std::size_t>(1, m.per_rank.size()));
        for (const double total : totals) residency << ',' << fmt(total / ranks);
        residency << '\n';
    }
    residency.close();

    std::ofstream delay(out_dir / "delay.csv");
    delay << "file,arch,policy,resync_delay,migration_delay,remap_delay,total_delay,"
             "horizon_cycles,exec_time\n";
    for (const Entry& e : entries) {
        const SimMetrics& m = e.metrics;
        delay << e.name << ',' << m.arch << ',' << m.policy << ',' << fmt(m.delay.resync) << ','
              << fmt(m.delay.migration) << ',' << fmt(m.delay.remap) << ','
              << fmt(m.delay.total()) << ',' << m.horizon_cycles << ',' << fmt(m.exec_time)
              << '\n';
    }
    delay.close();

    std::map<std::string, const SimMetrics*> baselines;
    for (const Entry& e : entries) {
        if (e.metrics.policy == "base" && baselines.count(e.metrics.arch) == 0) {
            baselines[e.metrics.arch] = &e.metrics;
        }
    }

    std::ofstream summary(out_dir / "summary.csv");
    summary << "file,arch,policy,energy,exec_time,ed2,norm_energy,norm_exec_time,norm_ed2,"
               "system_energy,system_ed2\n";
    std::vector<std::pair<std::string, const SimMetrics*>> table_rows;
    for (const Entry& e : entries) {
        const SimMetrics& m = e.metrics;
        summary << e.name << ',' << m.arch << ',' << m.policy << ',' << fmt(m.total_energy)
                << ',' << fmt(m.exec_time) << ',' << fmt(m.ed2);
        const auto base = baselines.find(m.arch);
        if (base != baselines.end()) {
            const NormalizedMetrics norm = compute_ed2(m, *base->second);
            summary << ',' << fmt(norm.energy) << ',' << fmt(norm.exec_time) << ','
                    << fmt(norm.ed2);
            if (f.mem_power_ratio > 0.0 && f.mem_power_ratio < 1.0) {
                const SystemMetrics sys =
                    full_system_energy(m, *base->second, f.mem_power_ratio);
                summary << ',' << fmt(sys.energy) << ',' << fmt(sys.ed2);
            } else {
                summary << ",,";
            }
        } else {
            summary << ",,,,,";
        }
        summary << '\n';
        table_rows.push_back({"-", &m});
    }
    summary.close();

    std::ofstream prediction(out_dir / "prediction_error.csv");
    prediction << "file,slot,error\n";
    for (const Entry& e : entries) {
        for (std::size_t s = 0; s < e.metrics.prediction_error.size(); ++s) {
            prediction << e.name << ',' << s << ',' << fmt(e.metrics.prediction_error[s])
                       << '\n';
        }
    }
    prediction.close();

    std::ofstream mq(out_dir / "mq_levels.csv");
    mq << "file,queue,mean_counter\n";
    for (const Entry& e : entries) {
        for (const auto& [queue, mean] : e.metrics.mq_levels) {
            mq << e.name << ',' << queue << ',' << fmt(mean) << '\n';
        }
    }
    mq.close();

    print_normalized_table(std::cout, table_rows, baselines);
    std::cout << "wrote residency.csv, delay.csv, summary.csv, prediction_error.csv, "
                 "mq_levels.csv to "
              << out_dir.string() << '\n';
    return 0;
}

void add_synth_options(CLI::App* cmd, SynthFlags& f, bool require_cycles) {
    auto* cycles = cmd->add_option("--cycles", f.cycles, "Trace length in cycles (e.g. 5e8)");
    if (require_cycles) cycles->required();
    cmd->add_option("--pages", f.pages, "Number of distinct pages");
    cmd->add_option("--hot-fraction", f.hot_fraction, "Fraction of pages forming the hot set");
    cmd->add_option("--hot-share", f.hot_share, "Share of accesses landing in the hot set");
    cmd->add_option("--rate", f.rate, "Expected accesses per cycle");
    cmd->add_option("--phase", f.phase, "Cycles between hot-set rotations (0 = static)");
    cmd->add_option("--write-fraction", f.write_fraction, "Probability an access is a write");
    cmd->add_option("--seed", f.seed, "RNG seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DRAM power-management simulator: rank-aware page migration "
                 "plus adaptive multi-state demotion"};
    app.require_subcommand(1);
    app.set_config("--config", "", "JSON file with option defaults (CLI flags win)");
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_version_flag("--version", "ramzzz 1.0.0");

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Run a policy/arch/budget matrix over a trace");
    simulate->configurable(true);
    simulate->add_option("--trace", sim.trace_path, "Trace CSV (plain or gzip)");
    simulate->add_flag("--synthetic", sim.synthetic, "Generate the trace in-process instead");
    add_synth_options(simulate, sim.synth, false);
    simulate->add_option("--arch", sim.archs, "Architectures (comma list: names or spec files)");
    simulate->add_option("--policy", sim.policies,
                         "Policies (comma list of base,oracle,ramzzz,rzsp,rzsd)");
    simulate->add_option("--delay-budget", sim.budgets,
                         "Slot delay budget fractions (comma list)");
    simulate->add_option("--objective", sim.objective, "Solver objective: energy or ed2");
    simulate->add_option("--rzsd-state", sim.rzsd_state,
                         "Low-power state for rzsd (name or index)");
    simulate->add_option("--slot", sim.slot, "Slot length in cycles (e.g. 1e8)");
    simulate->add_option("--epoch-slots", sim.epoch_slots, "Slots per migration epoch");
    simulate->add_option("--ranks", sim.ranks, "Number of ranks");
    simulate->add_option("--capacity", sim.capacity, "Pages per rank (0 = fit footprint)");
    simulate->add_option("--access-cycles", sim.access_cycles, "Service latency per access");
    simulate->add_option("--remap-penalty", sim.remap_penalty,
                         "Extra lookup cycles for migrated pages");
    simulate->add_option("--mq-update-cycles", sim.mq_update_cycles,
                         "Hotness bookkeeping cycles per access");
    simulate->add_option("--mq-queues", sim.mq_queues, "Hotness queue count");
    simulate->add_option("--mq-lifetime", sim.mq_lifetime, "Hotness expiration in cycles");
    simulate->add_option("--migration-cycles", sim.migration_cycles,
                         "Cycles to move one page");
    simulate->add_option("--migration-energy", sim.migration_energy,
                         "Energy to move one page");
    simulate->add_flag("--serialize-moves", sim.serialize_moves,
                       "Move pages one at a time inside a segment");
    simulate->add_flag("--exp-search", sim.exp_search, "Add power-of-two timeout candidates");
    simulate->add_flag("--record-slots", sim.record_slots,
                       "Keep per-slot histograms in the result JSON");
    simulate->add_option("--horizon-slots", sim.horizon_slots, "Minimum slots to simulate");
    simulate->add_option("--out-dir", sim.out_dir,
                         "Output directory (default $RAMZZZ_OUT_DIR or .)");
    simulate->add_option("--prefix", sim.prefix, "Prefix for result file names");
    simulate->add_flag("--dump-hist", sim.dump_hist, "Write per-slot idle histograms as CSV");
    simulate->add_flag("--dump-schedules", sim.dump_schedules,
                       "Write migration schedules as CSV");
    simulate->add_option("--jobs", sim.jobs, "Concurrent runs");

    GenTraceFlags gen;
    auto* gen_trace = app.add_subcommand("gen-trace", "Write a synthetic trace file");
    gen_trace->configurable(true);
    gen_trace->add_option("--out", gen.out_path, "Output path (.csv or .csv.gz)")->required();
    add_synth_options(gen_trace, gen.synth, true);
    gen_trace->add_option("--window", gen.window,
                          "Stats window in cycles (0 = a tenth of the trace)");

    SolveFlags solve;
    auto* solve_demotion =
        app.add_subcommand("solve-demotion", "Pick timeouts for one idle-length histogram");
    solve_demotion->configurable(true);
    solve_demotion->add_option("--hist", solve.hist_path, "Histogram CSV: length,count")
        ->required();
    solve_demotion->add_option("--arch", solve.arch, "Architecture name or spec file");
    solve_demotion->add_option("--slot", solve.slot, "Slot length in cycles");
    solve_demotion->add_option("--budget", solve.budget,
                               "Delay budget in cycles (overrides --budget-fraction)");
    solve_demotion->add_option("--budget-fraction", solve.budget_fraction,
                               "Delay budget as a fraction of the slot");
    solve_demotion->add_option("--objective", solve.objective, "energy or ed2");
    solve_demotion->add_flag("--exhaustive", solve.exhaustive,
                             "Exact search (small instances only)");
    solve_demotion->add_flag("--exp-search", solve.exp_search,
                             "Add power-of-two timeout candidates");

    ReportFlags report;
    auto* report_cmd = app.add_subcommand("report", "Turn result JSON files into plot tables");
    report_cmd->configurable(true);
    report_cmd->add_option("results", report.inputs, "Result JSON files")
        ->required()
        ->expected(-1);
    report_cmd->add_option("--out-dir", report.out_dir,
                           "Output directory (default $RAMZZZ_OUT_DIR or .)");
    report_cmd->add_option("--mem-power-ratio", report.mem_power_ratio,
                           "Memory share of system power for the system rollup");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (gen_trace->parsed()) return cmd_gen_trace(gen);
        if (solve_demotion->parsed()) return cmd_solve_demotion(solve);
        if (report_cmd->parsed()) return cmd_report(report);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
