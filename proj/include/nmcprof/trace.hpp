#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Dynamic trace model: an SSA, RISC-like instruction stream with explicit
// register dataflow, basic-block identity and optional memory references.
// Serialized as a line-delimited UTF-8 text file (see README for the grammar).

namespace nmcprof {

enum class OpcodeCategory { ComputeInt, ComputeFp, Memory, Control, Other };

// Fixed mnemonic set. The mnemonic -> category mapping is total.
enum class Opcode : std::uint8_t {
  Add, Sub, Mul, Div, Cmp,      // compute-int
  FAdd, FSub, FMul, FDiv,       // compute-fp
  Load, Store,                  // memory
  Br, Call,                     // control
  Phi, Mov,                     // other
};

inline constexpr std::size_t kOpcodeCount = 15;

std::string_view mnemonic(Opcode op);
OpcodeCategory category(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view s);

enum class MemKind : std::uint8_t { Load, Store };

struct MemRef {
  std::uint64_t address = 0;
  std::uint32_t size_bytes = 0;
  MemKind kind = MemKind::Load;

  bool operator==(const MemRef&) const = default;
};

struct TraceHeader {
  std::string app_name = "app";
  std::uint32_t word_size_bytes = 8;  // smallest addressable datum
  std::uint32_t address_bits = 48;    // address space is [0, 2^address_bits)
  std::uint32_t thread_count = 1;

  // Throws TraceError when an invariant is broken (word size not a power of
  // two, address_bits outside 1..64, zero threads, app name not a bare token).
  void check() const;

  bool operator==(const TraceHeader&) const = default;
};

struct TraceEvent {
  std::uint64_t seq = 0;
  std::uint32_t thread_id = 0;
  std::uint64_t bb_id = 0;
  std::uint64_t bb_instance = 0;
  Opcode opcode = Opcode::Add;
  std::optional<std::uint64_t> def;    // at most one def per instruction
  std::vector<std::uint64_t> uses;
  std::optional<MemRef> mem;
  bool is_index_update = false;        // loop-index-update marker from the generator

  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse failure: carries the 1-based line number, the offending field and the
// last event sequence number that parsed cleanly (useful for truncated files).
struct TraceFormatError : TraceError {
  TraceFormatError(std::size_t line, std::string fld, const std::string& what,
                   std::optional<std::uint64_t> last_seq);
  std::size_t line_no;
  std::string field;
  std::optional<std::uint64_t> last_valid_seq;
};

// Structural checks that do not need whole-trace state (address range, memory
// ref size). Throws TraceError; used by the writer to reject bad events early.
void check_event(const TraceHeader& header, const TraceEvent& ev);

// Writes the header line plus one line per event; returns bytes written.
std::uint64_t write_trace(const TraceHeader& header,
                          std::span<const TraceEvent> events, std::ostream& out);
std::uint64_t write_trace_file(const Trace& trace, const std::string& path);

// Streaming reader: O(1) memory in the event count.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in);  // consumes and checks the header line

  const TraceHeader& header() const { return header_; }

  // Next event in file order, or nullopt at end of stream.
  std::optional<TraceEvent> next();

 private:
  std::istream& in_;
  TraceHeader header_;
  std::size_t line_no_ = 1;
  std::optional<std::uint64_t> last_seq_;
  std::string line_;
};

Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

enum class ViolationKind {
  UseBeforeDef,    // a use names a register never defined earlier in its thread
  SsaViolation,    // second def of the same register id within a thread
  NonMonotoneSeq,  // seq did not strictly increase within a thread
  AddressRange,    // memory ref outside [0, 2^address_bits)
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::uint64_t seq;
  std::uint32_t thread_id;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
};

// Violations are data, not errors: always returns a report.
ValidationReport validate_trace(const TraceHeader& header,
                                std::span<const TraceEvent> events);

// Per-thread views in trace order. Thread ids come out sorted.
std::map<std::uint32_t, std::vector<TraceEvent>> split_by_thread(
    std::span<const TraceEvent> events);

}  // namespace nmcprof
