#include "nmcprof/trace.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace nmcprof {

namespace {

struct OpcodeInfo {
  Opcode op;
  std::string_view name;
  OpcodeCategory cat;
};

constexpr OpcodeInfo kOpcodeTable[kOpcodeCount] = {
    {Opcode::Add, "add", OpcodeCategory::ComputeInt},
    {Opcode::Sub, "sub", OpcodeCategory::ComputeInt},
    {Opcode::Mul, "mul", OpcodeCategory::ComputeInt},
    {Opcode::Div, "div", OpcodeCategory::ComputeInt},
    {Opcode::Cmp, "cmp", OpcodeCategory::ComputeInt},
    {Opcode::FAdd, "fadd", OpcodeCategory::ComputeFp},
    {Opcode::FSub, "fsub", OpcodeCategory::ComputeFp},
    {Opcode::FMul, "fmul", OpcodeCategory::ComputeFp},
    {Opcode::FDiv, "fdiv", OpcodeCategory::ComputeFp},
    {Opcode::Load, "load", OpcodeCategory::Memory},
    {Opcode::Store, "store", OpcodeCategory::Memory},
    {Opcode::Br, "br", OpcodeCategory::Control},
    {Opcode::Call, "call", OpcodeCategory::Control},
    {Opcode::Phi, "phi", OpcodeCategory::Other},
    {Opcode::Mov, "mov", OpcodeCategory::Other},
};

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
}

}  // namespace

std::string_view mnemonic(Opcode op) {
  return kOpcodeTable[static_cast<std::size_t>(op)].name;
}

OpcodeCategory category(Opcode op) {
  return kOpcodeTable[static_cast<std::size_t>(op)].cat;
}

std::optional<Opcode> opcode_from_mnemonic(std::string_view s) {
  for (const auto& info : kOpcodeTable)
    if (info.name == s) return info.op;
  return std::nullopt;
}

void TraceHeader::check() const {
  if (app_name.empty() ||
      !std::all_of(app_name.begin(), app_name.end(), is_token_char))
    throw TraceError("header: app name must be a non-empty bare token, got '" +
                     app_name + "'");
  if (word_size_bytes == 0 || !std::has_single_bit(word_size_bytes))
    throw TraceError("header: word_size_bytes must be a power of two >= 1");
  if (address_bits < 1 || address_bits > 64)
    throw TraceError("header: address_bits must be in 1..64");
  if (thread_count == 0) throw TraceError("header: thread_count must be >= 1");
}

TraceFormatError::TraceFormatError(std::size_t line, std::string fld,
                                   const std::string& what,
                                   std::optional<std::uint64_t> last_seq)
    : TraceError("trace parse error at line " + std::to_string(line) +
                 ", field '" + fld + "': " + what +
                 (last_seq ? " (last valid seq " + std::to_string(*last_seq) + ")"
                           : std::string{})),
      line_no(line),
      field(std::move(fld)),
      last_valid_seq(last_seq) {}

void check_event(const TraceHeader& header, const TraceEvent& ev) {
  if (ev.mem) {
    if (ev.mem->size_bytes == 0)
      throw TraceError("event seq " + std::to_string(ev.seq) +
                       ": memory ref size must be >= 1");
    // address + size <= 2^address_bits, without overflowing uint64
    const unsigned bits = header.address_bits;
    bool in_range;
    if (bits == 64) {
      in_range = ev.mem->address <=
                 (std::numeric_limits<std::uint64_t>::max() - ev.mem->size_bytes) + 1;
    } else {
      const std::uint64_t space = std::uint64_t{1} << bits;
      in_range = ev.mem->address < space &&
                 ev.mem->size_bytes <= space - ev.mem->address;
    }
    if (!in_range)
      throw TraceError("event seq " + std::to_string(ev.seq) +
                       ": memory ref outside the " + std::to_string(bits) +
                       "-bit address space");
  }
}

namespace {

// One event line:
//   <seq> <thread> <bb_id>:<bb_instance> <mnemonic> d=<reg|-> u=<reg,..|-> m=<L|S>:<hexaddr>:<size>|- ix=<0|1>
std::size_t format_event(const TraceEvent& ev, char* buf, std::size_t cap) {
  char defs[24];
  if (ev.def)
    std::snprintf(defs, sizeof defs, "%" PRIu64, *ev.def);
  else {
    defs[0] = '-';
    defs[1] = '\0';
  }

  std::string uses;
  if (ev.uses.empty()) {
    uses = "-";
  } else {
    char tmp[24];
    for (std::size_t i = 0; i < ev.uses.size(); ++i) {
      std::snprintf(tmp, sizeof tmp, "%s%" PRIu64, i ? "," : "", ev.uses[i]);
      uses += tmp;
    }
  }

  char mem[48];
  if (ev.mem)
    std::snprintf(mem, sizeof mem, "%c:%" PRIx64 ":%u",
                  ev.mem->kind == MemKind::Load ? 'L' : 'S', ev.mem->address,
                  ev.mem->size_bytes);
  else {
    mem[0] = '-';
    mem[1] = '\0';
  }

  int n = std::snprintf(buf, cap,
                        "%" PRIu64 " %u %" PRIu64 ":%" PRIu64
                        " %s d=%s u=%s m=%s ix=%d\n",
                        ev.seq, ev.thread_id, ev.bb_id, ev.bb_instance,
                        std::string(mnemonic(ev.opcode)).c_str(), defs,
                        uses.c_str(), mem, ev.is_index_update ? 1 : 0);
  return n > 0 ? static_cast<std::size_t>(n) : 0;
}

}  // namespace

std::uint64_t write_trace(const TraceHeader& header,
                          std::span<const TraceEvent> events,
                          std::ostream& out) {
  header.check();
  char buf[512];
  int n = std::snprintf(buf, sizeof buf,
                        "#TRACE v1 app=%s word=%u addrbits=%u threads=%u\n",
                        header.app_name.c_str(), header.word_size_bytes,
                        header.address_bits, header.thread_count);
  std::uint64_t bytes = static_cast<std::uint64_t>(n);
  out.write(buf, n);
  for (const TraceEvent& ev : events) {
    check_event(header, ev);
    std::string line;
    std::size_t len = format_event(ev, buf, sizeof buf);
    if (len >= sizeof buf - 1) {
      // very long use list; fall back to a heap buffer
      std::size_t need = 64 + 24 * (ev.uses.size() + 4);
      line.resize(need);
      len = format_event(ev, line.data(), need);
      out.write(line.data(), static_cast<std::streamsize>(len));
    } else {
      out.write(buf, static_cast<std::streamsize>(len));
    }
    bytes += len;
  }
  if (!out) throw TraceError("trace write failed");
  return bytes;
}

std::uint64_t write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot open '" + path + "' for writing");
  return write_trace(trace.header, trace.events, out);
}

namespace {

std::uint64_t parse_u64(std::string_view tok, int base, std::size_t line,
                        const char* field,
                        std::optional<std::uint64_t> last_seq) {
  std::uint64_t value = 0;
  if (!tok.empty() && tok.front() == '-')
    throw TraceFormatError(line, field, "negative value '" + std::string(tok) + "'",
                           last_seq);
  auto [ptr, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), value, base);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty())
    throw TraceFormatError(line, field, "bad integer '" + std::string(tok) + "'",
                           last_seq);
  return value;
}

// Splits on single spaces; the format never emits repeated separators.
std::vector<std::string_view> split_tokens(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    start = end + 1;
    if (end == s.size()) break;
  }
  return out;
}

std::string_view expect_prefix(std::string_view tok, std::string_view prefix,
                               std::size_t line, const char* field,
                               std::optional<std::uint64_t> last_seq) {
  if (tok.substr(0, prefix.size()) != prefix)
    throw TraceFormatError(line, field,
                           "expected '" + std::string(prefix) + "...', got '" +
                               std::string(tok) + "'",
                           last_seq);
  return tok.substr(prefix.size());
}

}  // namespace

TraceReader::TraceReader(std::istream& in) : in_(in) {
  if (!std::getline(in_, line_))
    throw TraceFormatError(1, "header", "missing header line", std::nullopt);
  std::vector<std::string_view> tok = split_tokens(line_, ' ');
  if (tok.size() != 6 || tok[0] != "#TRACE")
    throw TraceFormatError(1, "header", "malformed header line", std::nullopt);
  if (tok[1] != "v1")
    throw TraceFormatError(
        1, "version", "unsupported trace version '" + std::string(tok[1]) + "'",
        std::nullopt);
  header_.app_name = std::string(expect_prefix(tok[2], "app=", 1, "app", {}));
  header_.word_size_bytes = static_cast<std::uint32_t>(
      parse_u64(expect_prefix(tok[3], "word=", 1, "word", {}), 10, 1, "word", {}));
  header_.address_bits = static_cast<std::uint32_t>(parse_u64(
      expect_prefix(tok[4], "addrbits=", 1, "addrbits", {}), 10, 1, "addrbits", {}));
  header_.thread_count = static_cast<std::uint32_t>(parse_u64(
      expect_prefix(tok[5], "threads=", 1, "threads", {}), 10, 1, "threads", {}));
  try {
    header_.check();
  } catch (const TraceError& e) {
    throw TraceFormatError(1, "header", e.what(), std::nullopt);
  }
}

std::optional<TraceEvent> TraceReader::next() {
  if (!std::getline(in_, line_)) return std::nullopt;
  ++line_no_;
  const std::size_t ln = line_no_;

  std::vector<std::string_view> tok = split_tokens(line_, ' ');
  if (tok.size() != 8)
    throw TraceFormatError(ln, "line",
                           "expected 8 fields, got " + std::to_string(tok.size()),
                           last_seq_);

  TraceEvent ev;
  ev.seq = parse_u64(tok[0], 10, ln, "seq", last_seq_);
  ev.thread_id =
      static_cast<std::uint32_t>(parse_u64(tok[1], 10, ln, "thread", last_seq_));

  std::vector<std::string_view> bb = split_tokens(tok[2], ':');
  if (bb.size() != 2)
    throw TraceFormatError(ln, "bb", "expected <bb_id>:<bb_instance>", last_seq_);
  ev.bb_id = parse_u64(bb[0], 10, ln, "bb_id", last_seq_);
  ev.bb_instance = parse_u64(bb[1], 10, ln, "bb_instance", last_seq_);

  std::optional<Opcode> op = opcode_from_mnemonic(tok[3]);
  if (!op)
    throw TraceFormatError(
        ln, "mnemonic", "unknown mnemonic '" + std::string(tok[3]) + "'", last_seq_);
  ev.opcode = *op;

  std::string_view d = expect_prefix(tok[4], "d=", ln, "defs", last_seq_);
  if (d != "-") ev.def = parse_u64(d, 10, ln, "defs", last_seq_);

  std::string_view u = expect_prefix(tok[5], "u=", ln, "uses", last_seq_);
  if (u != "-") {
    for (std::string_view reg : split_tokens(u, ','))
      ev.uses.push_back(parse_u64(reg, 10, ln, "uses", last_seq_));
  }

  std::string_view m = expect_prefix(tok[6], "m=", ln, "mem", last_seq_);
  if (m != "-") {
    std::vector<std::string_view> parts = split_tokens(m, ':');
    if (parts.size() != 3 || parts[0].size() != 1 ||
        (parts[0][0] != 'L' && parts[0][0] != 'S'))
      throw TraceFormatError(ln, "mem", "expected <L|S>:<hexaddr>:<size>",
                             last_seq_);
    MemRef ref;
    ref.kind = parts[0][0] == 'L' ? MemKind::Load : MemKind::Store;
    ref.address = parse_u64(parts[1], 16, ln, "mem.address", last_seq_);
    ref.size_bytes = static_cast<std::uint32_t>(
        parse_u64(parts[2], 10, ln, "mem.size", last_seq_));
    ev.mem = ref;
  }

  std::string_view ix = expect_prefix(tok[7], "ix=", ln, "ix", last_seq_);
  if (ix == "0")
    ev.is_index_update = false;
  else if (ix == "1")
    ev.is_index_update = true;
  else
    throw TraceFormatError(ln, "ix", "expected 0 or 1", last_seq_);

  try {
    check_event(header_, ev);
  } catch (const TraceError& e) {
    throw TraceFormatError(ln, "mem", e.what(), last_seq_);
  }
  last_seq_ = ev.seq;
  return ev;
}

Trace read_trace(std::istream& in) {
  TraceReader reader(in);
  Trace trace;
  trace.header = reader.header();
  while (std::optional<TraceEvent> ev = reader.next())
    trace.events.push_back(std::move(*ev));
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open '" + path + "' for reading");
  return read_trace(in);
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UseBeforeDef: return "use-before-def";
    case ViolationKind::SsaViolation: return "ssa-violation";
    case ViolationKind::NonMonotoneSeq: return "non-monotone-seq";
    case ViolationKind::AddressRange: return "address-range";
  }
  return "unknown";
}

ValidationReport validate_trace(const TraceHeader& header,
                                std::span<const TraceEvent> events) {
  ValidationReport report;
  struct ThreadState {
    std::unordered_set<std::uint64_t> defined;
    std::optional<std::uint64_t> last_seq;
  };
  std::unordered_map<std::uint32_t, ThreadState> threads;

  for (const TraceEvent& ev : events) {
    ThreadState& ts = threads[ev.thread_id];

    if (ts.last_seq && ev.seq <= *ts.last_seq)
      report.violations.push_back(
          {ViolationKind::NonMonotoneSeq, ev.seq, ev.thread_id,
           "seq " + std::to_string(ev.seq) + " after " +
               std::to_string(*ts.last_seq)});
    ts.last_seq = ev.seq;

    for (std::uint64_t reg : ev.uses) {
      if (!ts.defined.count(reg))
        report.violations.push_back({ViolationKind::UseBeforeDef, ev.seq,
                                     ev.thread_id,
                                     "r" + std::to_string(reg) + " used before def"});
    }
    if (ev.def) {
      if (!ts.defined.insert(*ev.def).second)
        report.violations.push_back(
            {ViolationKind::SsaViolation, ev.seq, ev.thread_id,
             "second def of r" + std::to_string(*ev.def)});
    }
    try {
      check_event(header, ev);
    } catch (const TraceError& e) {
      report.violations.push_back(
          {ViolationKind::AddressRange, ev.seq, ev.thread_id, e.what()});
    }
  }
  return report;
}

std::map<std::uint32_t, std::vector<TraceEvent>> split_by_thread(
    std::span<const TraceEvent> events) {
  std::map<std::uint32_t, std::vector<TraceEvent>> out;
  for (const TraceEvent& ev : events) out[ev.thread_id].push_back(ev);
  return out;
}

}  // namespace nmcprof
