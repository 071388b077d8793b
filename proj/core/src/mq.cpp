#include "ramzzz/mq.hpp"

#include <stdexcept>

namespace ramzzz {

MultiQueue::MultiQueue(std::size_t num_queues, std::uint64_t lifetime) : lifetime_(lifetime) {
    if (num_queues == 0) {
        throw std::invalid_argument("MultiQueue needs at least one queue");
    }
    if (num_queues >= 63) {
        throw std::invalid_argument("queue count would overflow the counter ladder");
    }
    queues_.resize(num_queues);
    counter_cap_ = std::uint64_t{1} << num_queues;
}

void MultiQueue::move_to_head(Entry& e, std::size_t queue) {
    queues_[e.desc.queue_index].erase(e.pos);
    e.desc.queue_index = queue;
    queues_[queue].push_front(e.desc.page);
    e.pos = queues_[queue].begin();
}

void MultiQueue::on_access(std::uint64_t page, std::uint64_t now) {
    auto it = pages_.find(page);
    if (it == pages_.end()) {
        Entry e;
        e.desc.page = page;
        e.desc.freq_counter = 1;
        e.desc.queue_index = 0;
        e.desc.expiration_time = now + lifetime_;
        e.desc.last_access = now;
        queues_[0].push_front(page);
        e.pos = queues_[0].begin();
        pages_.emplace(page, std::move(e));
        return;
    }
    Entry& e = it->second;
    if (e.desc.freq_counter < counter_cap_) {
        ++e.desc.freq_counter;
    }
    std::size_t queue = e.desc.queue_index;
    if (queue + 1 < queues_.size() && e.desc.freq_counter >= (std::uint64_t{1} << (queue + 1))) {
        ++queue;
    }
    move_to_head(e, queue);
    e.desc.expiration_time = now + lifetime_;
    e.desc.last_access = now;
}

void MultiQueue::expire(std::uint64_t now) {
    // Scan top-down, tail to head, so demoted descriptors keep their relative
    // recency order at the head of the queue below.
    for (std::size_t q = queues_.size(); q-- > 1;) {
        std::vector<std::uint64_t> stale;
        for (auto it = queues_[q].rbegin(); it != queues_[q].rend(); ++it) {
            if (pages_.at(*it).desc.expiration_time < now) {
                stale.push_back(*it);
            }
        }
        for (std::uint64_t page : stale) {
            Entry& e = pages_.at(page);
            move_to_head(e, q - 1);
            e.desc.expiration_time = now + lifetime_;
        }
    }
    for (std::uint64_t page : queues_[0]) {
        Entry& e = pages_.at(page);
        if (e.desc.expiration_time < now) {
            e.desc.expiration_time = now + lifetime_;
        }
    }
}

std::vector<std::uint64_t> MultiQueue::hotness_order() const {
    std::vector<std::uint64_t> order;
    order.reserve(pages_.size());
    for (std::size_t q = queues_.size(); q-- > 0;) {
        for (std::uint64_t page : queues_[q]) {
            order.push_back(page);
        }
    }
    return order;
}

std::vector<std::pair<std::size_t, double>> MultiQueue::level_report() const {
    std::vector<std::pair<std::size_t, double>> report;
    for (std::size_t q = 0; q < queues_.size(); ++q) {
        if (queues_[q].empty()) {
            continue;
        }
        double sum = 0.0;
        for (std::uint64_t page : queues_[q]) {
            sum += static_cast<double>(pages_.at(page).desc.freq_counter);
        }
        report.emplace_back(q, sum / static_cast<double>(queues_[q].size()));
    }
    return report;
}

const PageDescriptor& MultiQueue::descriptor(std::uint64_t page) const {
    auto it = pages_.find(page);
    if (it == pages_.end()) {
        throw std::invalid_argument("page not tracked: " + std::to_string(page));
    }
    return it->second.desc;
}

}  // namespace ramzzz
