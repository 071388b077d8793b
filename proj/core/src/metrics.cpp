#include "ramzzz/metrics.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ramzzz {
namespace {

using ordered_json = nlohmann::ordered_json;

void require_baseline(const SimMetrics& baseline) {
    if (baseline.total_energy <= 0.0 || baseline.exec_time <= 0.0) {
        throw std::invalid_argument("baseline metrics are missing or degenerate");
    }
}

ordered_json delay_to_json(const DelayBreakdown& d) {
    return ordered_json{{"resync", d.resync},
                        {"migration", d.migration},
                        {"remap", d.remap},
                        {"total", d.total()}};
}

DelayBreakdown delay_from_json(const ordered_json& j) {
    DelayBreakdown d;
    d.resync = j.at("resync").get<double>();
    d.migration = j.at("migration").get<double>();
    d.remap = j.at("remap").get<double>();
    return d;
}

ordered_json config_to_json(const DemotionConfig& cfg) {
    ordered_json arr = ordered_json::array();
    for (const std::uint64_t t : cfg.timeouts) {
        if (t == kNever) {
            arr.push_back(nullptr);
        } else {
            arr.push_back(t);
        }
    }
    return arr;
}

DemotionConfig config_from_json(const ordered_json& j) {
    DemotionConfig cfg;
    for (const auto& v : j) {
        cfg.timeouts.push_back(v.is_null() ? kNever : v.get<std::uint64_t>());
    }
    return cfg;
}

}  // namespace

NormalizedMetrics compute_ed2(const SimMetrics& metrics, const SimMetrics& baseline) {
    require_baseline(baseline);
    NormalizedMetrics out;
    out.energy = metrics.total_energy / baseline.total_energy;
    out.exec_time = metrics.exec_time / baseline.exec_time;
    out.ed2 = metrics.ed2 / baseline.ed2;
    return out;
}

SystemMetrics full_system_energy(const SimMetrics& metrics, const SimMetrics& baseline,
                                 double mem_power_ratio) {
    if (!(mem_power_ratio > 0.0) || !(mem_power_ratio < 1.0)) {
        throw std::invalid_argument("memory power ratio must lie in (0, 1)");
    }
    const NormalizedMetrics norm = compute_ed2(metrics, baseline);
    SystemMetrics out;
    out.energy = mem_power_ratio * norm.energy + (1.0 - mem_power_ratio) * norm.exec_time;
    out.ed2 = out.energy * norm.exec_time * norm.exec_time;
    return out;
}

double prediction_error(const IdleHistogram& predicted, const IdleHistogram& actual) {
    constexpr int kBins = 64;
    double pred_mass[kBins] = {};
    double act_mass[kBins] = {};
    for (const auto& [len, cnt] : predicted.iter_buckets()) {
        pred_mass[63 - std::countl_zero(len)] += cnt;
    }
    double act_total = 0.0;
    for (const auto& [len, cnt] : actual.iter_buckets()) {
        act_mass[63 - std::countl_zero(len)] += cnt;
        act_total += cnt;
    }
    if (act_total <= 0.0) {
        throw std::invalid_argument("actual histogram is empty");
    }
    double l1 = 0.0;
    for (int b = 0; b < kBins; ++b) l1 += std::abs(pred_mass[b] - act_mass[b]);
    return l1 / act_total;
}

std::string metrics_to_json(const SimMetrics& m, int indent) {
    ordered_json j;
    j["schema"] = "ramzzz-result-v1";
    j["policy"] = m.policy;
    j["arch"] = m.arch;
    j["state_names"] = m.state_names;
    j["params"] = ordered_json{{"ranks", m.ranks},
                               {"slot_cycles", m.slot_cycles},
                               {"slots_per_epoch", m.slots_per_epoch},
                               {"num_slots", m.num_slots},
                               {"horizon_cycles", m.horizon_cycles},
                               {"trace_span", m.trace_span},
                               {"accesses", m.accesses}};
    j["energy"] = ordered_json{{"total", m.total_energy},
                               {"background", m.background_energy},
                               {"resync", m.resync_energy},
                               {"migration", m.migration_energy}};
    j["time"] = ordered_json{{"exec_time", m.exec_time},
                             {"horizon_cycles", m.horizon_cycles},
                             {"delay", delay_to_json(m.delay)}};
    j["ed2"] = m.ed2;
    j["migration"] = ordered_json{{"pages", m.migrated_pages},
                                  {"segments", m.migration_segments}};
    j["prediction_error"] = m.prediction_error;
    ordered_json levels = ordered_json::array();
    for (const auto& [queue, mean] : m.mq_levels) {
        levels.push_back(ordered_json{{"queue", queue}, {"mean_counter", mean}});
    }
    j["mq_levels"] = levels;

    ordered_json ranks = ordered_json::array();
    for (std::size_t r = 0; r < m.per_rank.size(); ++r) {
        const RankMetrics& rm = m.per_rank[r];
        ordered_json residency;
        for (std::size_t s = 0; s < rm.state_residency.size(); ++s) {
            const std::string name =
                s < m.state_names.size() ? m.state_names[s] : "STATE_" + std::to_string(s);
            residency[name] = rm.state_residency[s];
        }
        ranks.push_back(ordered_json{
            {"rank", r},
            {"residency", residency},
            {"occupancy", ordered_json{{"servicing", rm.servicing_cycles},
                                       {"resync", rm.resync_occupied_cycles},
                                       {"migration", rm.migration_occupied_cycles},
                                       {"remap", rm.remap_occupied_cycles}}},
            {"energy", ordered_json{{"background", rm.background_energy},
                                    {"resync", rm.resync_energy},
                                    {"migration", rm.migration_energy}}},
            {"delay", delay_to_json(rm.delay)},
            {"accesses", rm.accesses},
            {"resync_count", rm.resync_count}});
    }
    j["per_rank"] = ranks;

    if (!m.slots.empty()) {
        ordered_json slots = ordered_json::array();
        for (const SlotRecord& slot : m.slots) {
            ordered_json per_rank = ordered_json::array();
            for (const SlotRankRecord& rec : slot.ranks) {
                ordered_json buckets = ordered_json::array();
                for (const auto& [len, cnt] : rec.actual) {
                    buckets.push_back(ordered_json::array({len, cnt}));
                }
                per_rank.push_back(
                    ordered_json{{"actual", buckets}, {"config", config_to_json(rec.config)}});
            }
            slots.push_back(ordered_json{{"ranks", per_rank}});
        }
        j["slots"] = slots;
    }
    return j.dump(indent) + "\n";
}

SimMetrics metrics_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed result JSON: ") + e.what());
    }
    if (j.value("schema", "") != "ramzzz-result-v1") {
        throw std::runtime_error("unrecognized result schema");
    }
    SimMetrics m;
    m.policy = j.at("policy").get<std::string>();
    m.arch = j.at("arch").get<std::string>();
    m.state_names = j.at("state_names").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    m.ranks = p.at("ranks").get<std::uint64_t>();
    m.slot_cycles = p.at("slot_cycles").get<std::uint64_t>();
    m.slots_per_epoch = p.at("slots_per_epoch").get<std::uint64_t>();
    m.num_slots = p.at("num_slots").get<std::uint64_t>();
    m.horizon_cycles = p.at("horizon_cycles").get<std::uint64_t>();
    m.trace_span = p.at("trace_span").get<std::uint64_t>();
    m.accesses = p.at("accesses").get<std::uint64_t>();
    const auto& e = j.at("energy");
    m.total_energy = e.at("total").get<double>();
    m.background_energy = e.at("background").get<double>();
    m.resync_energy = e.at("resync").get<double>();
    m.migration_energy = e.at("migration").get<double>();
    const auto& t = j.at("time");
    m.exec_time = t.at("exec_time").get<double>();
    m.delay = delay_from_json(t.at("delay"));
    m.ed2 = j.at("ed2").get<double>();
    m.migrated_pages = j.at("migration").at("pages").get<std::uint64_t>();
    m.migration_segments = j.at("migration").at("segments").get<std::uint64_t>();
    m.prediction_error = j.at("prediction_error").get<std::vector<double>>();
    for (const auto& level : j.at("mq_levels")) {
        m.mq_levels.emplace_back(level.at("queue").get<std::size_t>(),
                                 level.at("mean_counter").get<double>());
    }
    for (const auto& rank : j.at("per_rank")) {
        RankMetrics rm;
        const auto& residency = rank.at("residency");
        for (const std::string& name : m.state_names) {
            rm.state_residency.push_back(residency.at(name).get<double>());
        }
        const auto& occ = rank.at("occupancy");
        rm.servicing_cycles = occ.at("servicing").get<double>();
        rm.resync_occupied_cycles = occ.at("resync").get<double>();
        rm.migration_occupied_cycles = occ.at("migration").get<double>();
        rm.remap_occupied_cycles = occ.at("remap").get<double>();
        const auto& re = rank.at("energy");
        rm.background_energy = re.at("background").get<double>();
        rm.resync_energy = re.at("resync").get<double>();
        rm.migration_energy = re.at("migration").get<double>();
        rm.delay = delay_from_json(rank.at("delay"));
        rm.accesses = rank.at("accesses").get<std::uint64_t>();
        rm.resync_count = rank.at("resync_count").get<std::uint64_t>();
        m.per_rank.push_back(std::move(rm));
    }
    if (j.contains("slots")) {
        for (const auto& slot : j.at("slots")) {
            SlotRecord record;
            for (const auto& rank : slot.at("ranks")) {
                SlotRankRecord rec;
                for (const auto& bucket : rank.at("actual")) {
                    rec.actual.emplace_back(bucket.at(0).get<std::uint64_t>(),
                                            bucket.at(1).get<double>());
                }
                rec.config = config_from_json(rank.at("config"));
                record.ranks.push_back(std::move(rec));
            }
            m.slots.push_back(std::move(record));
        }
    }
    return m;
}

void save_metrics(const SimMetrics& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << metrics_to_json(metrics);
    if (!out) throw std::runtime_error("failed writing " + path);
}

SimMetrics load_metrics(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return metrics_from_json(buf.str());
}

}  // namespace ramzzz
