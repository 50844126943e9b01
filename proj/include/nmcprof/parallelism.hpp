#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "nmcprof/trace.hpp"

// Idealized dependence-based scheduling over a single thread's event stream:
// ILP from pure register dataflow, per-opcode specialized ILP, the DLP
// aggregates, block-serial scheduling for BBLP under two policies, and the
// per-block PBBLP estimate for data-parallel loops.

namespace nmcprof {

struct ScheduleOptions {
  // store->load ordering on overlapping words (off: register dataflow only,
  // the default view of the trace model)
  bool memory_carried_deps = false;
  std::uint32_t word_size_bytes = 8;
  // treat uses of never-defined registers as ready at cycle 0 instead of
  // throwing; used when analyzing invalid traces under --force
  bool tolerate_undefined = false;
};

struct DataflowSchedule {
  std::vector<std::uint64_t> cycles;  // issue cycle per event, 1-based
  std::uint64_t max_cycle = 0;
};

// Earliest-issue schedule: an instruction issues one cycle after the latest
// producer of its register operands (cycle 1 when unconstrained).
DataflowSchedule dataflow_schedule(std::span<const TraceEvent> events,
                                   const ScheduleOptions& opts = {});

double ilp_overall(std::span<const TraceEvent> events,
                   const ScheduleOptions& opts = {});

// Per opcode: instruction count divided by the number of distinct issue
// cycles that opcode occupies in the global schedule.
std::map<Opcode, double> ilp_specialized(std::span<const TraceEvent> events,
                                         const ScheduleOptions& opts = {});

// Opcode-frequency-weighted mean of the specialized ILP scores.
double dlp_avg(std::span<const TraceEvent> events, const ScheduleOptions& opts = {});

struct DlpVariants {
  double dlp1 = 0.0;  // co-issued same-opcode memory ops form one group
  double dlp2 = 0.0;  // only address-consecutive runs coalesce
};

DlpVariants dlp_variants(std::span<const TraceEvent> events,
                         const ScheduleOptions& opts = {});

enum class DependencyPolicy {
  Full,              // honor every register dependence
  SkipIndexUpdates,  // ignore flagged index-update producers, drop index-only blocks
};

struct BlockSchedule {
  std::vector<std::uint64_t> cycles;  // 0 for events omitted from the schedule
  std::uint64_t max_cycle = 0;
  std::uint64_t counted = 0;  // instructions contributing to the score
};

// Block-serial schedule: instructions of one dynamic block instance issue on
// consecutive cycles, no earlier than one cycle after their producers.
BlockSchedule block_schedule(std::span<const TraceEvent> events,
                             DependencyPolicy policy,
                             const ScheduleOptions& opts = {});

// counted instructions / last issue cycle. When the skip policy omits every
// instance there is nothing left to measure and the full-policy value is
// returned unchanged.
double bblp(std::span<const TraceEvent> events, DependencyPolicy policy,
            const ScheduleOptions& opts = {});

struct PbblpResult {
  std::map<std::uint64_t, double> per_bb;  // index-only blocks omitted
  double average = 1.0;                    // instance-frequency weighted
};

// Per static block: instance count divided by the length of the longest
// chain of instances linked by (non-index) cross-instance value uses. 1 when
// every instance depends on its predecessor, instance count when none do.
PbblpResult pbblp(std::span<const TraceEvent> events,
                  const ScheduleOptions& opts = {});

// True when at least one event carries an is_index_update flag.
bool has_index_flags(std::span<const TraceEvent> events);

// Approximate classifier for traces without flags: marks loop-counter
// machinery so the smart policy and pbblp still have something to work
// with. An integer cmp whose def only feeds branches, an integer add whose
// def only feeds the same block's next instance, branches or such cmps, and
// the branches tied to them. Flagged traces should bypass this entirely.
std::vector<TraceEvent> infer_index_updates(std::span<const TraceEvent> events);

struct ParallelismMetrics {
  double ilp = 0.0;
  std::map<Opcode, double> ilp_spec;
  double dlp1 = 0.0;
  double dlp2 = 0.0;
  double bblp_full = 0.0;
  double bblp_smart = 0.0;
  double pbblp_avg = 1.0;
  std::map<std::uint64_t, double> pbblp_per_bb;
};

ParallelismMetrics analyze_parallelism(std::span<const TraceEvent> events,
                                       const ScheduleOptions& opts = {});

}  // namespace nmcprof
