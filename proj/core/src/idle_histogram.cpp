#include "ramzzz/idle_histogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ramzzz {

IdleHistogram::IdleHistogram(std::uint64_t slot_cycles) : slot_(slot_cycles) {
    if (slot_ == 0) {
        throw std::invalid_argument("slot length must be positive");
    }
    root_ = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(slot_))));
    short_counts_.assign(root_ + 1, 0.0);
    long_entries_.reserve(root_);
}

void IdleHistogram::add(std::uint64_t length, double count) {
    if (length == 0 || length > slot_) {
        throw std::invalid_argument("idle period length outside (0, T]");
    }
    if (count <= 0.0) {
        return;
    }
    if (length <= root_) {
        short_counts_[length] += count;
        return;
    }
    if (long_entries_.size() < root_) {
        long_entries_.emplace_back(length, count);
    } else {
        spill_[length] += count;
    }
}

void IdleHistogram::reset() {
    std::fill(short_counts_.begin(), short_counts_.end(), 0.0);
    long_entries_.clear();
    spill_.clear();
}

std::vector<std::pair<std::uint64_t, double>> IdleHistogram::iter_buckets() const {
    std::map<std::uint64_t, double> merged;
    for (std::uint64_t len = 1; len <= root_; ++len) {
        if (short_counts_[len] > 0.0) {
            merged[len] = short_counts_[len];
        }
    }
    for (const auto& [len, cnt] : long_entries_) {
        merged[len] += cnt;
    }
    for (const auto& [len, cnt] : spill_) {
        merged[len] += cnt;
    }
    return {merged.begin(), merged.end()};
}

double IdleHistogram::total_count() const {
    double sum = 0.0;
    for (const auto& [len, cnt] : iter_buckets()) {
        sum += cnt;
    }
    return sum;
}

double IdleHistogram::total_idle_cycles() const {
    double sum = 0.0;
    for (const auto& [len, cnt] : iter_buckets()) {
        sum += static_cast<double>(len) * cnt;
    }
    return sum;
}

double IdleHistogram::weighted_total(double gap) const {
    double sum = 0.0;
    for (const auto& [len, cnt] : iter_buckets()) {
        sum += (static_cast<double>(len) + gap) * cnt;
    }
    return sum;
}

}  // namespace ramzzz
