#include "nmcprof/order_statistic_tree.hpp"

#include <cassert>

namespace nmcprof {

namespace {

// splitmix64 finalizer; decorrelates sequential timestamps into priorities
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint32_t OrderStatisticTree::merge(std::uint32_t a, std::uint32_t b) {
  if (a == kNil) return b;
  if (b == kNil) return a;
  if (pool_[a].prio >= pool_[b].prio) {
    pool_[a].right = merge(pool_[a].right, b);
    pull(a);
    return a;
  }
  pool_[b].left = merge(a, pool_[b].left);
  pull(b);
  return b;
}

void OrderStatisticTree::split(std::uint32_t t, std::uint64_t key,
                               std::uint32_t& left, std::uint32_t& right) {
  if (t == kNil) {
    left = right = kNil;
    return;
  }
  if (pool_[t].key < key) {
    split(pool_[t].right, key, pool_[t].right, right);
    left = t;
    pull(t);
  } else {
    split(pool_[t].left, key, left, pool_[t].left);
    right = t;
    pull(t);
  }
}

void OrderStatisticTree::insert(std::uint64_t key) {
  std::uint32_t idx;
  if (!free_list_.empty()) {
    idx = free_list_.back();
    free_list_.pop_back();
    pool_[idx] = Node{key, mix(key)};
  } else {
    idx = static_cast<std::uint32_t>(pool_.size());
    pool_.push_back(Node{key, mix(key)});
  }
  std::uint32_t left, right;
  split(root_, key, left, right);
  root_ = merge(merge(left, idx), right);
}

void OrderStatisticTree::erase(std::uint64_t key) {
  std::uint32_t left, mid, right;
  split(root_, key, left, mid);
  split(mid, key + 1, mid, right);
  assert(mid != kNil && pool_[mid].left == kNil && pool_[mid].right == kNil);
  free_list_.push_back(mid);
  root_ = merge(left, right);
}

std::size_t OrderStatisticTree::count_greater(std::uint64_t key) const {
  std::size_t count = 0;
  std::uint32_t t = root_;
  while (t != kNil) {
    if (pool_[t].key > key) {
      count += 1 + node_size(pool_[t].right);
      t = pool_[t].left;
    } else {
      t = pool_[t].right;
    }
  }
  return count;
}

}  // namespace nmcprof
