#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace nmcprof {

// Order-statistics treap over distinct uint64 keys (last-access timestamps).
// insert/erase/count_greater run in O(log size). Priorities are a fixed hash
// of the key, so the structure is fully deterministic.
class OrderStatisticTree {
 public:
  void insert(std::uint64_t key);         // key must not be present
  void erase(std::uint64_t key);          // key must be present
  std::size_t count_greater(std::uint64_t key) const;
  std::size_t size() const { return root_ == kNil ? 0 : pool_[root_].size; }

 private:
  static constexpr std::uint32_t kNil = 0xffffffff;

  struct Node {
    std::uint64_t key;
    std::uint64_t prio;
    std::uint32_t left = kNil;
    std::uint32_t right = kNil;
    std::uint32_t size = 1;
  };

  std::uint32_t node_size(std::uint32_t n) const {
    return n == kNil ? 0 : pool_[n].size;
  }
  void pull(std::uint32_t n) {
    pool_[n].size = 1 + node_size(pool_[n].left) + node_size(pool_[n].right);
  }
  std::uint32_t merge(std::uint32_t a, std::uint32_t b);
  // splits into keys < key and keys >= key
  void split(std::uint32_t t, std::uint64_t key, std::uint32_t& left,
             std::uint32_t& right);

  std::vector<Node> pool_;
  std::vector<std::uint32_t> free_list_;
  std::uint32_t root_ = kNil;
};

}  // namespace nmcprof
