#include "nmcprof/kernels.hpp"

#include <stdexcept>

namespace nmcprof {

namespace {

constexpr std::uint32_t kWordBytes = 8;
constexpr std::uint32_t kAddressBits = 48;

TraceHeader make_header(std::string app) {
  TraceHeader h;
  h.app_name = std::move(app);
  h.word_size_bytes = kWordBytes;
  h.address_bits = kAddressBits;
  h.thread_count = 1;
  return h;
}

// Appends events with automatic seq numbering and per-block instance counters.
class TraceBuilder {
 public:
  explicit TraceBuilder(std::string app) { trace_.header = make_header(std::move(app)); }

  std::uint64_t fresh_reg() { return next_reg_++; }

  TraceEvent& emit(std::uint64_t bb_id, std::uint64_t bb_instance, Opcode op) {
    TraceEvent ev;
    ev.seq = next_seq_++;
    ev.thread_id = 0;
    ev.bb_id = bb_id;
    ev.bb_instance = bb_instance;
    ev.opcode = op;
    trace_.events.push_back(std::move(ev));
    return trace_.events.back();
  }

  Trace take() && { return std::move(trace_); }

 private:
  Trace trace_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_reg_ = 1;
};

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Xorshift64Star::Xorshift64Star(std::uint64_t seed)
    // xorshift64* needs nonzero state; remap seed 0 to a fixed odd constant
    : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

std::uint64_t Xorshift64Star::next() {
  std::uint64_t x = state_;
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  state_ = x;
  return x * 0x2545f4914f6cdd1dull;
}

void KernelSpec::check() const {
  switch (kind) {
    case KernelKind::Stream:
      require(n >= 1, "stream: n must be >= 1");
      require(stride_bytes >= 1 && stride_bytes % kWordBytes == 0,
              "stream: stride must be a positive multiple of the word size");
      break;
    case KernelKind::Random:
      require(n >= 1, "random: n must be >= 1");
      require(space_bytes >= kWordBytes && space_bytes % kWordBytes == 0,
              "random: space must be a positive multiple of the word size");
      break;
    case KernelKind::Chain:
      require(n >= 1, "chain: n must be >= 1");
      break;
    case KernelKind::Parallel:
      require(n >= 1, "parallel: n must be >= 1");
      break;
    case KernelKind::Dploop:
      require(instances >= 1, "dploop: instances must be >= 1");
      require(body_len >= 1, "dploop: body_len must be >= 1");
      require(!carried || body_len >= 2,
              "dploop: carried dependence needs body_len >= 2");
      break;
    case KernelKind::Matmul:
      require(dim >= 1, "matmul: dim must be >= 1");
      break;
  }
}

Trace gen_stream(std::uint64_t n, std::uint64_t stride_bytes,
                 std::uint64_t base_addr) {
  KernelSpec spec;
  spec.kind = KernelKind::Stream;
  spec.n = n;
  spec.stride_bytes = stride_bytes;
  spec.base_addr = base_addr;
  spec.check();

  const std::uint64_t space = std::uint64_t{1} << kAddressBits;
  if (base_addr >= space || (n - 1) > (space - kWordBytes - base_addr) / stride_bytes)
    throw std::invalid_argument("stream: footprint overflows the address space");

  TraceBuilder b("stream");
  for (std::uint64_t i = 0; i < n; ++i) {
    TraceEvent& ev = b.emit(1, i, Opcode::Load);
    ev.def = b.fresh_reg();
    ev.mem = MemRef{base_addr + i * stride_bytes, kWordBytes, MemKind::Load};
  }
  return std::move(b).take();
}

Trace gen_random(std::uint64_t n, std::uint64_t space_bytes, std::uint64_t seed) {
  KernelSpec spec;
  spec.kind = KernelKind::Random;
  spec.n = n;
  spec.space_bytes = space_bytes;
  spec.seed = seed;
  spec.check();

  Xorshift64Star rng(seed);
  const std::uint64_t words = space_bytes / kWordBytes;
  TraceBuilder b("random");
  for (std::uint64_t i = 0; i < n; ++i) {
    TraceEvent& ev = b.emit(1, i, Opcode::Load);
    ev.def = b.fresh_reg();
    ev.mem = MemRef{(rng.next() % words) * kWordBytes, kWordBytes, MemKind::Load};
  }
  return std::move(b).take();
}

Trace gen_chain(std::uint64_t n) {
  require(n >= 1, "chain: n must be >= 1");
  TraceBuilder b("chain");
  std::uint64_t prev = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    TraceEvent& ev = b.emit(1, 0, Opcode::Add);
    ev.def = b.fresh_reg();
    if (i > 0) ev.uses = {prev};
    prev = *ev.def;
  }
  return std::move(b).take();
}

Trace gen_parallel(std::uint64_t n) {
  require(n >= 1, "parallel: n must be >= 1");
  TraceBuilder b("parallel");
  for (std::uint64_t i = 0; i < n; ++i) {
    TraceEvent& ev = b.emit(1, 0, Opcode::Add);
    ev.def = b.fresh_reg();
  }
  return std::move(b).take();
}

Trace gen_dploop(std::uint64_t instances, std::uint64_t body_len, bool carried) {
  KernelSpec spec;
  spec.kind = KernelKind::Dploop;
  spec.instances = instances;
  spec.body_len = body_len;
  spec.carried = carried;
  spec.check();

  TraceBuilder b("dploop");

  // init block: index seed, plus the accumulator seed for the carried variant
  TraceEvent& init = b.emit(0, 0, Opcode::Add);
  init.def = b.fresh_reg();
  init.is_index_update = true;
  std::uint64_t idx = *init.def;

  std::uint64_t acc = 0;
  if (carried) {
    TraceEvent& seed = b.emit(0, 0, Opcode::Mov);
    seed.def = b.fresh_reg();
    acc = *seed.def;
  }

  constexpr std::uint64_t kArrayBase = 0x10000;
  std::uint64_t load_idx = 0;
  for (std::uint64_t i = 0; i < instances; ++i) {
    std::uint64_t slot = 0;
    if (carried) {
      TraceEvent& ev = b.emit(1, i, Opcode::FAdd);
      ev.def = b.fresh_reg();
      ev.uses = {acc};
      acc = *ev.def;
      ++slot;
    }
    for (; slot + 1 < body_len; ++slot) {
      TraceEvent& ev = b.emit(1, i, Opcode::Load);
      ev.def = b.fresh_reg();
      ev.uses = {idx};
      ev.mem = MemRef{kArrayBase + load_idx++ * kWordBytes, kWordBytes, MemKind::Load};
    }
    TraceEvent& upd = b.emit(1, i, Opcode::Add);
    upd.def = b.fresh_reg();
    upd.uses = {idx};
    upd.is_index_update = true;
    idx = *upd.def;
  }
  return std::move(b).take();
}

Trace gen_matmul(std::uint64_t dim) {
  require(dim >= 1, "matmul: dim must be >= 1");

  const std::uint64_t d = dim;
  const std::uint64_t base_a = 0x100000;
  const std::uint64_t base_b = base_a + d * d * kWordBytes;
  const std::uint64_t base_c = base_b + d * d * kWordBytes;

  TraceBuilder b("matmul");

  // Block map: 4 = k-body (loads, fmul, fadd, k-increment), 6 = store block
  // (store plus j-increment), 8 = i-increment block. Increments execute on
  // every iteration the way compiled loop latches do; each chain starts
  // fresh at its loop entry (a constant needs no register). dim=1 loops
  // never advance, so no index instruction appears at all.
  //
  // emit() references go stale on vector growth; register ids live in locals.
  const bool indexed = d >= 2;
  std::uint64_t i_idx = 0;  // 0 = no def yet
  std::uint64_t inst_kbody = 0, inst_store = 0, inst_iinc = 0;

  auto uses_of = [](std::initializer_list<std::uint64_t> regs) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t r : regs)
      if (r) out.push_back(r);
    return out;
  };

  for (std::uint64_t i = 0; i < d; ++i) {
    std::uint64_t j_idx = 0;
    for (std::uint64_t j = 0; j < d; ++j) {
      std::uint64_t k_idx = 0;
      std::uint64_t acc = 0;
      for (std::uint64_t k = 0; k < d; ++k) {
        const std::uint64_t inst = inst_kbody++;
        std::uint64_t a_reg, b_reg, t_reg;
        {
          TraceEvent& la = b.emit(4, inst, Opcode::Load);
          la.def = a_reg = b.fresh_reg();
          la.uses = uses_of({i_idx, k_idx});
          la.mem = MemRef{base_a + (i * d + k) * kWordBytes, kWordBytes, MemKind::Load};
        }
        {
          TraceEvent& lb = b.emit(4, inst, Opcode::Load);
          lb.def = b_reg = b.fresh_reg();
          lb.uses = uses_of({k_idx, j_idx});
          lb.mem = MemRef{base_b + (k * d + j) * kWordBytes, kWordBytes, MemKind::Load};
        }
        {
          TraceEvent& mul = b.emit(4, inst, Opcode::FMul);
          mul.def = t_reg = b.fresh_reg();
          mul.uses = {a_reg, b_reg};
        }
        {
          TraceEvent& add = b.emit(4, inst, Opcode::FAdd);
          add.def = b.fresh_reg();
          add.uses = k == 0 ? std::vector<std::uint64_t>{t_reg}
                            : std::vector<std::uint64_t>{acc, t_reg};
          acc = *add.def;
        }
        if (indexed) {
          TraceEvent& inc = b.emit(4, inst, Opcode::Add);
          inc.def = b.fresh_reg();
          inc.uses = uses_of({k_idx});
          inc.is_index_update = true;
          k_idx = *inc.def;
        }
      }
      {
        const std::uint64_t inst = inst_store++;
        {
          TraceEvent& st = b.emit(6, inst, Opcode::Store);
          st.uses = {acc};
          st.mem =
              MemRef{base_c + (i * d + j) * kWordBytes, kWordBytes, MemKind::Store};
        }
        if (indexed) {
          TraceEvent& inc = b.emit(6, inst, Opcode::Add);
          inc.def = b.fresh_reg();
          inc.uses = uses_of({j_idx});
          inc.is_index_update = true;
          j_idx = *inc.def;
        }
      }
    }
    if (indexed) {
      TraceEvent& inc = b.emit(8, inst_iinc++, Opcode::Add);
      inc.def = b.fresh_reg();
      inc.uses = uses_of({i_idx});
      inc.is_index_update = true;
      i_idx = *inc.def;
    }
  }
  return std::move(b).take();
}

Trace generate(const KernelSpec& spec) {
  spec.check();
  Trace trace;
  switch (spec.kind) {
    case KernelKind::Stream:
      trace = gen_stream(spec.n, spec.stride_bytes, spec.base_addr);
      break;
    case KernelKind::Random:
      trace = gen_random(spec.n, spec.space_bytes, spec.seed);
      break;
    case KernelKind::Chain:
      trace = gen_chain(spec.n);
      break;
    case KernelKind::Parallel:
      trace = gen_parallel(spec.n);
      break;
    case KernelKind::Dploop:
      trace = gen_dploop(spec.instances, spec.body_len, spec.carried);
      break;
    case KernelKind::Matmul:
      trace = gen_matmul(spec.dim);
      break;
  }
  if (!spec.app_name.empty()) trace.header.app_name = spec.app_name;
  return trace;
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "stream") return KernelKind::Stream;
  if (s == "random") return KernelKind::Random;
  if (s == "chain") return KernelKind::Chain;
  if (s == "parallel") return KernelKind::Parallel;
  if (s == "matmul") return KernelKind::Matmul;
  if (s == "dploop") return KernelKind::Dploop;
  throw std::invalid_argument("unknown kernel kind '" + s + "'");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Stream: return "stream";
    case KernelKind::Random: return "random";
    case KernelKind::Chain: return "chain";
    case KernelKind::Parallel: return "parallel";
    case KernelKind::Matmul: return "matmul";
    case KernelKind::Dploop: return "dploop";
  }
  return "?";
}

}  // namespace nmcprof
