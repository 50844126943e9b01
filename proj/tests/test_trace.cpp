#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "nmcprof/kernels.hpp"
#include "nmcprof/trace.hpp"
#include "support/fuzz.hpp"

using namespace nmcprof;

namespace {

Trace chain3() {
  Trace t;
  t.header.app_name = "t3";
  t.events.push_back(TraceEvent{0, 0, 1, 0, Opcode::Load, 1, {}, MemRef{0x40, 8, MemKind::Load}, false});
  t.events.push_back(TraceEvent{1, 0, 1, 0, Opcode::Add, 2, {1}, std::nullopt, false});
  t.events.push_back(TraceEvent{2, 0, 2, 0, Opcode::Store, std::nullopt, {2}, MemRef{0x48, 8, MemKind::Store}, true});
  return t;
}

std::string to_text(const Trace& t) {
  std::ostringstream out;
  write_trace(t.header, t.events, out);
  return out.str();
}

}  // namespace

TEST_CASE("opcode table is total and round-trips") {
  for (std::size_t i = 0; i < kOpcodeCount; ++i) {
    const Opcode op = static_cast<Opcode>(i);
    auto back = opcode_from_mnemonic(mnemonic(op));
    REQUIRE(back.has_value());
    CHECK(*back == op);
  }
  CHECK(!opcode_from_mnemonic("bogus").has_value());
  CHECK(category(Opcode::Add) == OpcodeCategory::ComputeInt);
  CHECK(category(Opcode::FMul) == OpcodeCategory::ComputeFp);
  CHECK(category(Opcode::Load) == OpcodeCategory::Memory);
  CHECK(category(Opcode::Br) == OpcodeCategory::Control);
  CHECK(category(Opcode::Phi) == OpcodeCategory::Other);
}

TEST_CASE("empty event list round-trips as a header-only file") {
  Trace t;
  t.header.app_name = "empty";
  std::string text = to_text(t);
  CHECK(text == "#TRACE v1 app=empty word=8 addrbits=48 threads=1\n");
  std::istringstream in(text);
  Trace back = read_trace(in);
  CHECK(back.header == t.header);
  CHECK(back.events.empty());
}

TEST_CASE("three-event trace round-trips field for field") {
  Trace t = chain3();
  std::istringstream in(to_text(t));
  Trace back = read_trace(in);
  CHECK(back.header == t.header);
  REQUIRE(back.events.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.events[i] == t.events[i]);
}

TEST_CASE("event at the top of the address space is rejected before writing") {
  Trace t;
  t.header.address_bits = 16;
  TraceEvent ev;
  ev.opcode = Opcode::Load;
  ev.def = 1;
  ev.mem = MemRef{1 << 16, 8, MemKind::Load};
  t.events.push_back(ev);
  std::ostringstream out;
  CHECK_THROWS_AS(write_trace(t.header, t.events, out), TraceError);

  t.events[0].mem->address = (1 << 16) - 8;  // last full word still fits
  std::ostringstream ok;
  CHECK_NOTHROW(write_trace(t.header, t.events, ok));
}

TEST_CASE("write_trace reports byte count") {
  Trace t = chain3();
  std::ostringstream out;
  const std::uint64_t bytes = write_trace(t.header, t.events, out);
  CHECK(bytes == out.str().size());
}

TEST_CASE("negative seq is rejected naming the field") {
  std::istringstream in(
      "#TRACE v1 app=x word=8 addrbits=48 threads=1\n"
      "-3 0 1:0 add d=1 u=- m=- ix=0\n");
  TraceReader reader(in);
  try {
    reader.next();
    FAIL("expected parse error");
  } catch (const TraceFormatError& e) {
    CHECK(e.field == "seq");
    CHECK(e.line_no == 2);
  }
}

TEST_CASE("missing header and version mismatch are reported") {
  std::istringstream empty("");
  CHECK_THROWS_AS(TraceReader{empty}, TraceFormatError);

  std::istringstream v2("#TRACE v2 app=x word=8 addrbits=48 threads=1\n");
  try {
    TraceReader reader(v2);
    FAIL("expected version error");
  } catch (const TraceFormatError& e) {
    CHECK(e.field == "version");
  }
}

TEST_CASE("truncated final line reports the last valid seq") {
  Trace t = gen_stream(4, 8, 0);
  std::string text = to_text(t);
  text.resize(text.size() - 12);  // cut into the final event line
  std::istringstream in(text);
  TraceReader reader(in);
  std::optional<std::uint64_t> last;
  try {
    while (auto ev = reader.next()) last = ev->seq;
    FAIL("expected parse error");
  } catch (const TraceFormatError& e) {
    REQUIRE(last.has_value());
    CHECK(e.last_valid_seq == last);
    CHECK(std::string(e.what()).find("last valid seq 2") != std::string::npos);
  }
}

TEST_CASE("unknown mnemonic and malformed fields are parse errors") {
  auto read_line = [](const std::string& line) {
    std::istringstream in("#TRACE v1 app=x word=8 addrbits=48 threads=1\n" + line +
                          "\n");
    TraceReader reader(in);
    return reader.next();
  };
  CHECK_THROWS_AS(read_line("0 0 1:0 nosuch d=1 u=- m=- ix=0"), TraceFormatError);
  CHECK_THROWS_AS(read_line("0 0 1 add d=1 u=- m=- ix=0"), TraceFormatError);
  CHECK_THROWS_AS(read_line("0 0 1:0 add d=1 u=- m=X:0:8 ix=0"), TraceFormatError);
  CHECK_THROWS_AS(read_line("0 0 1:0 add d=1 u=- m=- ix=7"), TraceFormatError);
  CHECK_THROWS_AS(read_line("0 0 1:0 add d=1 u=-"), TraceFormatError);
}

TEST_CASE("hex addresses parse without leading zeros") {
  std::istringstream in(
      "#TRACE v1 app=x word=8 addrbits=48 threads=1\n"
      "0 0 1:0 load d=1 u=- m=L:ff8:8 ix=0\n");
  TraceReader reader(in);
  auto ev = reader.next();
  REQUIRE(ev.has_value());
  CHECK(ev->mem->address == 0xff8);
}

TEST_CASE("validate_trace flags use-before-def") {
  Trace t;
  TraceEvent ev;
  ev.opcode = Opcode::Add;
  ev.def = 2;
  ev.uses = {7};
  t.events.push_back(ev);
  ValidationReport report = validate_trace(t.header, t.events);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == ViolationKind::UseBeforeDef);
  CHECK(to_string(report.violations[0].kind) == "use-before-def");
}

TEST_CASE("validate_trace flags a double def at the second seq") {
  Trace t;
  t.events.push_back(TraceEvent{0, 0, 1, 0, Opcode::Add, 7, {}, std::nullopt, false});
  t.events.push_back(TraceEvent{1, 0, 1, 0, Opcode::Add, 7, {}, std::nullopt, false});
  ValidationReport report = validate_trace(t.header, t.events);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == ViolationKind::SsaViolation);
  CHECK(report.violations[0].seq == 1);
}

TEST_CASE("validate_trace flags non-monotone seq per thread") {
  Trace t;
  t.events.push_back(TraceEvent{5, 0, 1, 0, Opcode::Add, 1, {}, std::nullopt, false});
  t.events.push_back(TraceEvent{5, 0, 1, 0, Opcode::Add, 2, {}, std::nullopt, false});
  t.events.push_back(TraceEvent{0, 1, 1, 0, Opcode::Add, 3, {}, std::nullopt, false});
  ValidationReport report = validate_trace(t.header, t.events);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].kind == ViolationKind::NonMonotoneSeq);
}

TEST_CASE("write/read identity over every generator") {
  const Trace traces[] = {
      gen_stream(100, 16, 0x1000), gen_random(100, 1 << 16, 7),  gen_chain(20),
      gen_parallel(20),            gen_dploop(5, 4, false),      gen_dploop(5, 4, true),
      gen_matmul(3),
  };
  for (const Trace& t : traces) {
    std::istringstream in(to_text(t));
    Trace back = read_trace(in);
    CHECK(back.header == t.header);
    REQUIRE(back.events.size() == t.events.size());
    CHECK(back.events == t.events);
    CHECK(validate_trace(t.header, t.events).clean());
  }
}

TEST_CASE("fuzz traces validate and round-trip") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    test::FuzzConfig cfg;
    cfg.seed = seed;
    cfg.n_events = 300;
    cfg.threads = 1 + seed % 3;
    Trace t = test::fuzz_trace(cfg);
    CHECK(validate_trace(t.header, t.events).clean());
    std::istringstream in(to_text(t));
    Trace back = read_trace(in);
    CHECK(back.events == t.events);
  }
}

TEST_CASE("split_by_thread partitions in order") {
  test::FuzzConfig cfg;
  cfg.threads = 3;
  cfg.n_events = 200;
  Trace t = test::fuzz_trace(cfg);
  auto parts = split_by_thread(t.events);
  std::size_t total = 0;
  for (const auto& [tid, events] : parts) {
    total += events.size();
    for (std::size_t i = 1; i < events.size(); ++i)
      CHECK(events[i].seq > events[i - 1].seq);
  }
  CHECK(total == t.events.size());
}
