#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "nmcprof/kernels.hpp"
#include "nmcprof/memory_metrics.hpp"
#include "nmcprof/parallelism.hpp"
#include "nmcprof/trace.hpp"
#include "support/oracles.hpp"

using namespace nmcprof;

namespace {

std::vector<std::uint64_t> addresses_of(const Trace& t) {
  std::vector<std::uint64_t> out;
  for (const TraceEvent& ev : t.events)
    if (ev.mem) out.push_back(ev.mem->address);
  return out;
}

std::string serialized(const Trace& t) {
  std::ostringstream out;
  write_trace(t.header, t.events, out);
  return out.str();
}

}  // namespace

TEST_CASE("gen_stream lays out strided loads") {
  Trace t = gen_stream(4, 8, 0);
  REQUIRE(t.events.size() == 4);
  const std::uint64_t expect[] = {0x0, 0x8, 0x10, 0x18};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.events[i].opcode == Opcode::Load);
    CHECK(t.events[i].mem->address == expect[i]);
    CHECK(t.events[i].bb_id == 1);
    CHECK(t.events[i].bb_instance == i);
    CHECK(t.events[i].uses.empty());
  }
}

TEST_CASE("single-access stream has zero memory entropy") {
  Trace t = gen_stream(1, 8, 0x100);
  CHECK(memory_entropy(addresses_of(t), 0) == 0.0);
}

TEST_CASE("2^k distinct uniform addresses carry exactly k bits") {
  for (unsigned k : {3u, 7u, 10u}) {
    Trace t = gen_stream(std::uint64_t{1} << k, 8, 0);
    const auto addrs = addresses_of(t);
    const double h = memory_entropy(addrs, 0);
    CHECK(h == doctest::Approx(k).epsilon(1e-12));
    CHECK(h == doctest::Approx(test::shannon_entropy_oracle(addrs, 0)).epsilon(1e-12));
  }
}

TEST_CASE("stream entropy collapses once the cut covers the footprint") {
  Trace t = gen_stream(16, 8, 0);  // footprint 128 bytes = 2^7
  const auto addrs = addresses_of(t);
  CHECK(memory_entropy(addrs, 7) == 0.0);
  CHECK(memory_entropy(addrs, 0) == doctest::Approx(4.0));
}

TEST_CASE("gen_random is reproducible per seed") {
  Trace a = gen_random(2000, 1 << 20, 42);
  Trace b = gen_random(2000, 1 << 20, 42);
  Trace c = gen_random(2000, 1 << 20, 43);
  CHECK(serialized(a) == serialized(b));
  CHECK(serialized(a) != serialized(c));
}

TEST_CASE("gen_random empirical entropy matches the direct frequency oracle") {
  Trace t = gen_random(10000, 1 << 20, 7);
  const auto addrs = addresses_of(t);
  const double h = memory_entropy(addrs, 0);
  const double oracle = test::shannon_entropy_oracle(addrs, 0);
  CHECK(h == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::fabs(h - oracle) < 0.1);
}

TEST_CASE("gen_random over a single word has zero entropy") {
  Trace t = gen_random(100, 8, 3);
  CHECK(memory_entropy(addresses_of(t), 0) == 0.0);
}

TEST_CASE("gen_random addresses stay word-aligned and in range") {
  Trace t = gen_random(5000, 1 << 16, 11);
  for (const TraceEvent& ev : t.events) {
    CHECK(ev.mem->address % 8 == 0);
    CHECK(ev.mem->address < (1u << 16));
  }
}

TEST_CASE("gen_chain is fully serial") {
  CHECK(ilp_overall(gen_chain(5).events) == 1.0);
  CHECK(ilp_overall(gen_chain(1).events) == 1.0);
}

TEST_CASE("gen_chain(5) max issue cycle is 5 by the list-schedule oracle") {
  Trace t = gen_chain(5);
  test::OracleSchedule oracle = test::dataflow_schedule_oracle(t.events);
  CHECK(oracle.max_cycle == 5);
  DataflowSchedule sched = dataflow_schedule(t.events);
  CHECK(sched.max_cycle == 5);
  CHECK(sched.cycles == oracle.cycles);
}

TEST_CASE("gen_parallel(8) is fully parallel") {
  Trace t = gen_parallel(8);
  CHECK(ilp_overall(t.events) == 8.0);
  auto spec = ilp_specialized(t.events);
  REQUIRE(spec.count(Opcode::Add));
  CHECK(spec[Opcode::Add] == 8.0);
  // a single block still runs serially under block scheduling
  CHECK(bblp(t.events, DependencyPolicy::Full) == 1.0);
  test::OracleSchedule oracle =
      test::block_schedule_oracle(t.events, DependencyPolicy::Full);
  CHECK(static_cast<double>(oracle.counted) / oracle.max_cycle == 1.0);
}

TEST_CASE("gen_dploop hits its pinned PBBLP values") {
  SUBCASE("two instances with only the index dependence score 2") {
    Trace t = gen_dploop(2, 5, false);
    PbblpResult r = pbblp(t.events);
    REQUIRE(r.per_bb.count(1));
    CHECK(r.per_bb.at(1) == 2.0);
    CHECK(r.average == 2.0);  // the init block is index-only and omitted
  }
  SUBCASE("carried instances score 1") {
    Trace t = gen_dploop(6, 4, true);
    PbblpResult r = pbblp(t.events);
    REQUIRE(r.per_bb.count(1));
    CHECK(r.per_bb.at(1) == 1.0);
    CHECK(r.average == 1.0);
  }
  SUBCASE("independent instances score the instance count") {
    Trace t = gen_dploop(7, 3, false);
    PbblpResult r = pbblp(t.events);
    CHECK(r.per_bb.at(1) == 7.0);
  }
}

TEST_CASE("gen_dploop yields serial full scheduling and parallel smart scheduling") {
  const std::uint64_t k = 6, m = 4;
  Trace t = gen_dploop(k, m, false);
  CHECK(bblp(t.events, DependencyPolicy::Full) == doctest::Approx(1.0));
  CHECK(bblp(t.events, DependencyPolicy::SkipIndexUpdates) ==
        doctest::Approx(static_cast<double>(k)));
}

TEST_CASE("gen_matmul(1) is the bare multiply-accumulate") {
  Trace t = gen_matmul(1);
  REQUIRE(t.events.size() == 5);
  CHECK(t.events[0].opcode == Opcode::Load);
  CHECK(t.events[1].opcode == Opcode::Load);
  CHECK(t.events[2].opcode == Opcode::FMul);
  CHECK(t.events[3].opcode == Opcode::FAdd);
  CHECK(t.events[4].opcode == Opcode::Store);
  CHECK(validate_trace(t.header, t.events).clean());
}

TEST_CASE("gen_matmul(4) validates and beats random spatial locality at 8B->16B") {
  Trace mm = gen_matmul(4);
  CHECK(validate_trace(mm.header, mm.events).clean());

  const auto mm_addrs = addresses_of(mm);
  Trace rnd = gen_random(mm_addrs.size(), 1 << 24, 5);
  const auto rnd_addrs = addresses_of(rnd);

  auto pair_score = [](const std::vector<std::uint64_t>& addrs) {
    auto d8 = reuse_distances(addrs, 8);
    auto d16 = reuse_distances(addrs, 16);
    LinePairStats pair{distribution_map_from_distances(d8, d16, 8),
                       reuse_signature(d8, 8)};
    return slq_pair_score(pair);
  };
  CHECK(pair_score(mm_addrs) > pair_score(rnd_addrs));
}

TEST_CASE("generators are pure functions of their spec") {
  KernelSpec specs[6];
  specs[0].kind = KernelKind::Stream;
  specs[0].n = 64;
  specs[1].kind = KernelKind::Random;
  specs[1].n = 64;
  specs[1].seed = 9;
  specs[2].kind = KernelKind::Chain;
  specs[2].n = 32;
  specs[3].kind = KernelKind::Parallel;
  specs[3].n = 32;
  specs[4].kind = KernelKind::Dploop;
  specs[4].instances = 8;
  specs[4].body_len = 3;
  specs[5].kind = KernelKind::Matmul;
  specs[5].dim = 3;
  for (const KernelSpec& spec : specs)
    CHECK(serialized(generate(spec)) == serialized(generate(spec)));
}

TEST_CASE("kernel parameter validation") {
  CHECK_THROWS_AS(gen_stream(0, 8, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_stream(4, 12, 0), std::invalid_argument);  // not a word multiple
  CHECK_THROWS_AS(gen_random(10, 12, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_dploop(3, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(gen_matmul(0), std::invalid_argument);
  // footprint overflow past the 48-bit space
  CHECK_THROWS_AS(gen_stream(std::uint64_t{1} << 46, 8, 0), std::invalid_argument);
}

TEST_CASE("every generator trace passes validation") {
  const Trace traces[] = {
      gen_stream(256, 8, 0),   gen_random(256, 1 << 18, 3), gen_chain(64),
      gen_parallel(64),        gen_dploop(16, 4, false),    gen_dploop(16, 4, true),
      gen_dploop(1, 2, false), gen_matmul(1),               gen_matmul(5),
  };
  for (const Trace& t : traces) {
    ValidationReport report = validate_trace(t.header, t.events);
    CHECK(report.clean());
  }
}
