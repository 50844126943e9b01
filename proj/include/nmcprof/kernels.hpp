#pragma once

#include <cstdint>
#include <string>

#include "nmcprof/trace.hpp"

// Deterministic synthetic kernels with analytically known metric values.
// They stand in for an instrumented front-end and double as the test corpus.

namespace nmcprof {

enum class KernelKind { Stream, Random, Chain, Parallel, Matmul, Dploop };

struct KernelSpec {
  KernelKind kind = KernelKind::Stream;
  std::uint64_t n = 1;            // stream/random/chain/parallel: event count
  std::uint64_t stride_bytes = 8; // stream
  std::uint64_t base_addr = 0;    // stream
  std::uint64_t space_bytes = 1 << 20;  // random: footprint, multiple of word size
  std::uint64_t seed = 1;         // random
  std::uint64_t instances = 1;    // dploop
  std::uint64_t body_len = 2;     // dploop: instructions per instance
  bool carried = false;           // dploop: loop-carried value dependence
  std::uint64_t dim = 1;          // matmul
  std::string app_name;           // optional override of the per-kind default

  void check() const;  // throws std::invalid_argument on bad parameters
};

// seeded xorshift64* stream; the recurrence is documented in the README so
// traces stay reproducible across implementations
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// n loads at base, base+stride, ...; one-instruction block per load, no
// register dependencies.
Trace gen_stream(std::uint64_t n, std::uint64_t stride_bytes,
                 std::uint64_t base_addr);

// n loads at word-aligned addresses drawn uniformly from [0, space_bytes).
Trace gen_random(std::uint64_t n, std::uint64_t space_bytes, std::uint64_t seed);

// n integer adds where instruction i consumes the def of instruction i-1;
// single basic block. ILP is exactly 1.
Trace gen_chain(std::uint64_t n);

// n mutually independent adds in one basic block. ILP is exactly n.
Trace gen_parallel(std::uint64_t n);

// `instances` dynamic instances of one loop block, body_len instructions
// each, plus a one-instruction index-init block. The index update is the
// last body instruction and is flagged is_index_update. With carried=false
// the only cross-instance dependence is the index chain; with carried=true
// each instance also consumes an accumulator defined by the previous one.
// Non-index body slots are loads over a sequential array.
Trace gen_dploop(std::uint64_t instances, std::uint64_t body_len, bool carried);

// Naive triple-loop dim x dim matrix multiply: loads of A and B, fmul/fadd
// accumulator chain per output element, store of C, loop-index updates
// flagged. dim=1 degenerates to exactly load,load,fmul,fadd,store.
Trace gen_matmul(std::uint64_t dim);

Trace generate(const KernelSpec& spec);

KernelKind kernel_kind_from_string(const std::string& s);  // throws on unknown
std::string_view to_string(KernelKind kind);

}  // namespace nmcprof
