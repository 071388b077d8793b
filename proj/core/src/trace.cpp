#include "ramzzz/trace.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ramzzz {

namespace {

std::uint64_t parse_u64_field(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    std::uint64_t value = 0;
    try {
        value = std::stoull(field, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
    if (pos != field.size()) {
        throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
    return value;
}

std::string read_gzip_file(const std::string& path) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) {
        throw std::runtime_error("cannot open trace file: " + path);
    }
    std::string content;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(gz, buf, sizeof(buf))) > 0) {
        content.append(buf, static_cast<std::size_t>(n));
    }
    bool ok = n == 0;
    gzclose(gz);
    if (!ok) {
        throw std::runtime_error("gzip read error in trace file: " + path);
    }
    return content;
}

}  // namespace

std::vector<MemoryAccess> parse_trace(std::istream& in) {
    std::vector<MemoryAccess> trace;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!saw_header) {
            if (line != "cycle,page,op") {
                throw std::runtime_error("trace header must be 'cycle,page,op', got '" + line + "'");
            }
            saw_header = true;
            continue;
        }
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": expected 3 fields");
        }
        MemoryAccess acc;
        acc.cycle = parse_u64_field(line.substr(0, c1), line_no);
        acc.page = parse_u64_field(line.substr(c1 + 1, c2 - c1 - 1), line_no);
        std::string op = line.substr(c2 + 1);
        if (op == "R") {
            acc.is_write = false;
        } else if (op == "W") {
            acc.is_write = true;
        } else {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": op must be R or W");
        }
        if (!trace.empty() && acc.cycle < trace.back().cycle) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": cycle decreases");
        }
        trace.push_back(acc);
    }
    return trace;
}

std::vector<MemoryAccess> load_trace(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
        throw std::runtime_error("cannot open trace file: " + path);
    }
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    bool gzipped = probe.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
    probe.close();
    if (gzipped) {
        std::istringstream in(read_gzip_file(path));
        return parse_trace(in);
    }
    std::ifstream in(path);
    return parse_trace(in);
}

void serialize_trace(const std::vector<MemoryAccess>& trace, std::ostream& out) {
    out << "cycle,page,op\n";
    for (const auto& acc : trace) {
        out << acc.cycle << ',' << acc.page << ',' << (acc.is_write ? 'W' : 'R') << '\n';
    }
}

void save_trace(const std::vector<MemoryAccess>& trace, const std::string& path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        std::ostringstream buffer;
        serialize_trace(trace, buffer);
        const std::string content = buffer.str();
        gzFile gz = gzopen(path.c_str(), "wb");
        if (!gz) {
            throw std::runtime_error("cannot write trace file: " + path);
        }
        const int written =
            gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
        const bool ok = written == static_cast<int>(content.size());
        gzclose(gz);
        if (!ok) {
            throw std::runtime_error("gzip write error in trace file: " + path);
        }
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write trace file: " + path);
    }
    serialize_trace(trace, out);
}

std::vector<MemoryAccess> generate_synthetic_trace(const SyntheticTraceParams& params) {
    if (params.num_pages == 0) {
        throw std::invalid_argument("num_pages must be positive");
    }
    if (params.hot_fraction <= 0.0 || params.hot_fraction >= 1.0) {
        throw std::invalid_argument("hot_fraction must be in (0,1)");
    }
    if (params.hot_share < 0.0 || params.hot_share > 1.0) {
        throw std::invalid_argument("hot_share must be in [0,1]");
    }
    if (params.access_rate < 0.0) {
        throw std::invalid_argument("access_rate must be non-negative");
    }
    std::vector<MemoryAccess> trace;
    if (params.access_rate == 0.0 || params.total_cycles == 0) {
        return trace;
    }

    std::mt19937_64 rng(params.seed);
    std::exponential_distribution<double> gap(params.access_rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::uint64_t hot_count = static_cast<std::uint64_t>(
        std::llround(params.hot_fraction * static_cast<double>(params.num_pages)));
    hot_count = std::min(std::max<std::uint64_t>(hot_count, 1), params.num_pages);
    const std::uint64_t cold_count = params.num_pages - hot_count;

    double t = gap(rng);
    while (t < static_cast<double>(params.total_cycles)) {
        std::uint64_t cycle = static_cast<std::uint64_t>(t);
        // Hot set rotates by one hot-set width each phase.
        std::uint64_t phase = params.phase_length ? cycle / params.phase_length : 0;
        std::uint64_t hot_base = (phase * hot_count) % params.num_pages;
        MemoryAccess acc;
        acc.cycle = cycle;
        bool pick_hot = cold_count == 0 || unit(rng) < params.hot_share;
        if (pick_hot) {
            acc.page = (hot_base + rng() % hot_count) % params.num_pages;
        } else {
            acc.page = (hot_base + hot_count + rng() % cold_count) % params.num_pages;
        }
        acc.is_write = unit(rng) < params.write_fraction;
        trace.push_back(acc);
        t += gap(rng);
    }
    return trace;
}

TraceStats trace_stats(const std::vector<MemoryAccess>& trace, std::uint64_t window_cycles) {
    if (trace.empty()) {
        throw std::invalid_argument("trace_stats requires a non-empty trace");
    }
    if (window_cycles == 0) {
        throw std::invalid_argument("window_cycles must be positive");
    }
    std::unordered_set<std::uint64_t> pages;
    std::uint64_t span = trace.back().cycle + 1;
    std::uint64_t num_windows = (span + window_cycles - 1) / window_cycles;
    std::vector<double> per_window(num_windows, 0.0);
    for (const auto& acc : trace) {
        pages.insert(acc.page);
        per_window[acc.cycle / window_cycles] += 1.0;
    }
    double mean = static_cast<double>(trace.size()) / static_cast<double>(num_windows);
    double var = 0.0;
    for (double c : per_window) {
        var += (c - mean) * (c - mean);
    }
    var /= static_cast<double>(num_windows);
    TraceStats stats;
    stats.footprint_pages = pages.size();
    stats.mean_accesses_per_window = mean;
    stats.stdev_over_mean = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    return stats;
}

}  // namespace ramzzz
