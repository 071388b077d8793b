#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ramzzz {

struct PageDescriptor {
    std::uint64_t page = 0;
    std::uint64_t freq_counter = 0;
    std::size_t queue_index = 0;
    std::uint64_t expiration_time = 0;
    std::uint64_t last_access = 0;
};

// Multi-Queue page hotness tracker: M LRU queues, promotion on frequency
// thresholds 2^(i+1), demotion on expiration. Queue M-1 head is hottest.
class MultiQueue {
  public:
    explicit MultiQueue(std::size_t num_queues = 16, std::uint64_t lifetime = 100000000);

    void on_access(std::uint64_t page, std::uint64_t now);
    void expire(std::uint64_t now);

    // All tracked pages, hottest first: queue M-1 down to 0, head to tail.
    std::vector<std::uint64_t> hotness_order() const;
    // (queue_index, mean freq_counter) for non-empty queues, ascending index.
    std::vector<std::pair<std::size_t, double>> level_report() const;

    std::size_t num_queues() const { return queues_.size(); }
    std::uint64_t lifetime() const { return lifetime_; }
    std::size_t size() const { return pages_.size(); }
    bool contains(std::uint64_t page) const { return pages_.count(page) != 0; }
    const PageDescriptor& descriptor(std::uint64_t page) const;

  private:
    struct Entry {
        PageDescriptor desc;
        std::list<std::uint64_t>::iterator pos;
    };

    void move_to_head(Entry& e, std::size_t queue);

    std::vector<std::list<std::uint64_t>> queues_;  // front = head (most recent)
    std::unordered_map<std::uint64_t, Entry> pages_;
    std::uint64_t lifetime_;
    std::uint64_t counter_cap_;
};

}  // namespace ramzzz
