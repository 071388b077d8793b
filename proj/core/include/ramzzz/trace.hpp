#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ramzzz {

struct MemoryAccess {
    std::uint64_t cycle = 0;
    std::uint64_t page = 0;
    bool is_write = false;

    friend bool operator==(const MemoryAccess&, const MemoryAccess&) = default;
};

struct SyntheticTraceParams {
    std::uint64_t total_cycles = 0;
    std::uint64_t num_pages = 1;
    double hot_fraction = 0.1;   // share of pages in the hot set
    double hot_share = 0.9;      // share of accesses going to the hot set
    double access_rate = 0.0;    // expected accesses per cycle
    std::uint64_t phase_length = 0;  // cycles between hot-set rotations; 0 = static
    double write_fraction = 0.25;
    std::uint64_t seed = 1;
};

struct TraceStats {
    std::uint64_t footprint_pages = 0;
    double mean_accesses_per_window = 0.0;
    double stdev_over_mean = 0.0;
};

std::vector<MemoryAccess> parse_trace(std::istream& in);
// Reads a trace file; gzip input is detected by magic bytes.
std::vector<MemoryAccess> load_trace(const std::string& path);
void serialize_trace(const std::vector<MemoryAccess>& trace, std::ostream& out);
void save_trace(const std::vector<MemoryAccess>& trace, const std::string& path);

std::vector<MemoryAccess> generate_synthetic_trace(const SyntheticTraceParams& params);
TraceStats trace_stats(const std::vector<MemoryAccess>& trace, std::uint64_t window_cycles);

}  // namespace ramzzz
