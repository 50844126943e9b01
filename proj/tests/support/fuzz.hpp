#pragma once

// Seeded random traces for property and oracle-equivalence tests. Every
// generated trace is SSA-valid: uses only reference registers already defined
// in the same thread, each register is defined once, seq strictly increases
// per thread and block instances are contiguous.

#include <cstdint>

#include "nmcprof/trace.hpp"

namespace nmcprof::test {

struct FuzzConfig {
  std::uint64_t seed = 1;
  std::size_t n_events = 500;
  unsigned n_bbs = 6;            // static basic blocks to draw from
  unsigned max_block_len = 6;    // instructions per dynamic instance
  std::uint64_t addr_space = 1 << 16;  // byte footprint for memory refs
  double mem_prob = 0.4;         // chance an event is a load/store
  double use_prob = 0.7;         // chance an event consumes earlier defs
  double index_prob = 0.1;       // chance an int op is flagged is_index_update
  unsigned threads = 1;
};

Trace fuzz_trace(const FuzzConfig& config);

}  // namespace nmcprof::test
