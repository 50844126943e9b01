#pragma once

// Independent oracles the test suites check the library against. Everything
// here is deliberately naive: direct formulas, full rescans and cycle-by-cycle
// simulation instead of the incremental structures used by the library.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "nmcprof/parallelism.hpp"
#include "nmcprof/trace.hpp"

namespace nmcprof::test {

// Literal -sum p log2 p over a frequency table built with std::map.
double shannon_entropy_oracle(std::span<const std::uint64_t> addresses,
                              unsigned lsb_cut);

// Naive set-scan reuse distances: a line -> last-access-index map, distance
// counted by scanning the whole map. O(N * M).
std::vector<std::uint64_t> reuse_distance_oracle(
    std::span<const std::uint64_t> addresses, std::uint64_t line_size_bytes);

struct OracleSchedule {
  std::vector<std::uint64_t> cycles;  // 0 = omitted from the schedule
  std::uint64_t max_cycle = 0;
  std::uint64_t counted = 0;
};

// Cycle-stepping earliest-issue list schedule: at every cycle, issue each
// pending instruction whose producers all issued on earlier cycles.
OracleSchedule dataflow_schedule_oracle(std::span<const TraceEvent> events);

// Same stepping with the block-serial constraint (instructions of a dynamic
// block instance issue in order, one per cycle at most) and the index-update
// policy handling.
OracleSchedule block_schedule_oracle(std::span<const TraceEvent> events,
                                     DependencyPolicy policy);

std::map<Opcode, double> specialized_from_cycles(
    std::span<const TraceEvent> events, std::span<const std::uint64_t> cycles);

struct EigenPair {
  double value;
  std::vector<double> vector;  // unit norm, sign unspecified
};

// Closed-form eigen decomposition, descending by eigenvalue.
std::vector<EigenPair> analytic_eigen_2x2(double a00, double a01, double a11);
std::vector<EigenPair> analytic_eigen_3x3(const double m[9]);

}  // namespace nmcprof::test
