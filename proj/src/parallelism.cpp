#include "nmcprof/parallelism.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace nmcprof {

namespace {

struct DefInfo {
  std::uint64_t cycle;
  bool is_index_update;
};

[[noreturn]] void undefined_register(std::uint64_t reg, std::uint64_t seq) {
  throw std::invalid_argument("use of undefined register r" + std::to_string(reg) +
                              " at seq " + std::to_string(seq));
}

// store->load ordering at word granularity, covering every word a ref touches
class StoreDepTracker {
 public:
  StoreDepTracker(bool enabled, std::uint32_t word_bytes)
      : enabled_(enabled),
        shift_(static_cast<unsigned>(std::countr_zero(
            std::bit_ceil(std::uint64_t{word_bytes ? word_bytes : 1})))) {}

  std::uint64_t constraint(const MemRef& ref) const {
    if (!enabled_ || ref.kind != MemKind::Load) return 0;
    std::uint64_t latest = 0;
    for (std::uint64_t w = ref.address >> shift_;
         w <= (ref.address + ref.size_bytes - 1) >> shift_; ++w) {
      auto it = last_store_.find(w);
      if (it != last_store_.end()) latest = std::max(latest, it->second);
    }
    return latest;
  }

  void record(const MemRef& ref, std::uint64_t cycle) {
    if (!enabled_ || ref.kind != MemKind::Store) return;
    for (std::uint64_t w = ref.address >> shift_;
         w <= (ref.address + ref.size_bytes - 1) >> shift_; ++w) {
      std::uint64_t& slot = last_store_[w];
      slot = std::max(slot, cycle);
    }
  }

 private:
  bool enabled_;
  unsigned shift_;
  std::unordered_map<std::uint64_t, std::uint64_t> last_store_;
};

struct BlockKey {
  std::uint64_t bb_id;
  std::uint64_t bb_instance;
  bool operator==(const BlockKey&) const = default;
};

struct BlockKeyHash {
  std::size_t operator()(const BlockKey& k) const {
    std::uint64_t x = k.bb_id * 0x9e3779b97f4a7c15ull ^ k.bb_instance;
    x ^= x >> 32;
    x *= 0xd6e8feb86659fd93ull;
    x ^= x >> 32;
    return static_cast<std::size_t>(x);
  }
};

}  // namespace

DataflowSchedule dataflow_schedule(std::span<const TraceEvent> events,
                                   const ScheduleOptions& opts) {
  DataflowSchedule sched;
  sched.cycles.reserve(events.size());
  std::unordered_map<std::uint64_t, std::uint64_t> reg_ready;
  reg_ready.reserve(events.size());
  StoreDepTracker stores(opts.memory_carried_deps, opts.word_size_bytes);

  for (const TraceEvent& ev : events) {
    std::uint64_t cycle = 1;
    for (std::uint64_t reg : ev.uses) {
      auto it = reg_ready.find(reg);
      if (it == reg_ready.end()) {
        if (!opts.tolerate_undefined) undefined_register(reg, ev.seq);
        continue;
      }
      cycle = std::max(cycle, it->second + 1);
    }
    if (ev.mem) {
      cycle = std::max(cycle, stores.constraint(*ev.mem) + 1);
      stores.record(*ev.mem, cycle);
    }
    if (ev.def) reg_ready[*ev.def] = cycle;
    sched.cycles.push_back(cycle);
    sched.max_cycle = std::max(sched.max_cycle, cycle);
  }
  return sched;
}

double ilp_overall(std::span<const TraceEvent> events, const ScheduleOptions& opts) {
  DataflowSchedule sched = dataflow_schedule(events, opts);
  if (sched.max_cycle == 0) return 0.0;
  return static_cast<double>(events.size()) / static_cast<double>(sched.max_cycle);
}

namespace {

std::map<Opcode, double> specialized_from_schedule(
    std::span<const TraceEvent> events, const DataflowSchedule& sched) {
  std::map<Opcode, std::unordered_set<std::uint64_t>> cycles_of;
  std::map<Opcode, std::uint64_t> count_of;
  for (std::size_t i = 0; i < events.size(); ++i) {
    cycles_of[events[i].opcode].insert(sched.cycles[i]);
    ++count_of[events[i].opcode];
  }
  std::map<Opcode, double> out;
  for (const auto& [op, cycles] : cycles_of)
    out[op] = static_cast<double>(count_of[op]) / static_cast<double>(cycles.size());
  return out;
}

double weighted_dlp(const std::map<Opcode, double>& spec,
                    const std::map<Opcode, std::uint64_t>& counts,
                    std::uint64_t total) {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (const auto& [op, score] : spec)
    sum += score * static_cast<double>(counts.at(op));
  return sum / static_cast<double>(total);
}

}  // namespace

std::map<Opcode, double> ilp_specialized(std::span<const TraceEvent> events,
                                         const ScheduleOptions& opts) {
  return specialized_from_schedule(events, dataflow_schedule(events, opts));
}

double dlp_avg(std::span<const TraceEvent> events, const ScheduleOptions& opts) {
  DataflowSchedule sched = dataflow_schedule(events, opts);
  std::map<Opcode, double> spec = specialized_from_schedule(events, sched);
  std::map<Opcode, std::uint64_t> counts;
  for (const TraceEvent& ev : events) ++counts[ev.opcode];
  return weighted_dlp(spec, counts, events.size());
}

namespace {

DlpVariants dlp_from_schedule(std::span<const TraceEvent> events,
                              const DataflowSchedule& sched) {
  std::map<Opcode, double> spec = specialized_from_schedule(events, sched);
  std::map<Opcode, std::uint64_t> counts;
  for (const TraceEvent& ev : events) ++counts[ev.opcode];

  DlpVariants out;
  out.dlp1 = weighted_dlp(spec, counts, events.size());

  // rescore loads and stores: within one issue cycle the single longest
  // address-consecutive run (next = prev + size) coalesces into one vector
  // group, every other access costs a group of its own
  std::map<Opcode, double> spec2 = spec;
  for (Opcode op : {Opcode::Load, Opcode::Store}) {
    auto cnt = counts.find(op);
    if (cnt == counts.end()) continue;

    std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint64_t, std::uint32_t>>>
        per_cycle;
    std::uint64_t groups = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].opcode != op) continue;
      if (!events[i].mem) {
        ++groups;  // no address to coalesce on
        continue;
      }
      const MemRef& ref = *events[i].mem;
      per_cycle[sched.cycles[i]].emplace_back(ref.address, ref.size_bytes);
    }

    for (auto& [cycle, accesses] : per_cycle) {
      std::sort(accesses.begin(), accesses.end());
      std::uint64_t longest = 1, run = 1;
      for (std::size_t i = 1; i < accesses.size(); ++i) {
        if (accesses[i].first == accesses[i - 1].first + accesses[i - 1].second)
          ++run;
        else
          run = 1;
        longest = std::max(longest, run);
      }
      groups += accesses.size() - longest + 1;
    }
    spec2[op] = static_cast<double>(cnt->second) / static_cast<double>(groups);
  }
  out.dlp2 = weighted_dlp(spec2, counts, events.size());
  return out;
}

}  // namespace

DlpVariants dlp_variants(std::span<const TraceEvent> events,
                         const ScheduleOptions& opts) {
  return dlp_from_schedule(events, dataflow_schedule(events, opts));
}

BlockSchedule block_schedule(std::span<const TraceEvent> events,
                             DependencyPolicy policy, const ScheduleOptions& opts) {
  const bool skip_index = policy == DependencyPolicy::SkipIndexUpdates;

  // instances in which every instruction is an index update disappear from
  // the schedule under the skip policy
  std::unordered_map<BlockKey, bool, BlockKeyHash> index_only;
  if (skip_index) {
    for (const TraceEvent& ev : events) {
      auto [it, inserted] =
          index_only.try_emplace(BlockKey{ev.bb_id, ev.bb_instance}, true);
      it->second = it->second && ev.is_index_update;
    }
  }

  BlockSchedule sched;
  sched.cycles.assign(events.size(), 0);
  std::unordered_map<std::uint64_t, DefInfo> reg_ready;
  reg_ready.reserve(events.size());
  std::unordered_map<BlockKey, std::uint64_t, BlockKeyHash> last_in_instance;
  StoreDepTracker stores(opts.memory_carried_deps, opts.word_size_bytes);

  for (std::size_t i = 0; i < events.size(); ++i) {
    const TraceEvent& ev = events[i];
    const BlockKey key{ev.bb_id, ev.bb_instance};

    if (skip_index && index_only.at(key)) {
      // still record the def so later lookups can see (and ignore) it
      if (ev.def) reg_ready[*ev.def] = DefInfo{0, true};
      continue;
    }

    std::uint64_t cycle = 1;
    for (std::uint64_t reg : ev.uses) {
      auto it = reg_ready.find(reg);
      if (it == reg_ready.end()) {
        if (!opts.tolerate_undefined) undefined_register(reg, ev.seq);
        continue;
      }
      if (skip_index && it->second.is_index_update) continue;
      cycle = std::max(cycle, it->second.cycle + 1);
    }
    if (ev.mem) cycle = std::max(cycle, stores.constraint(*ev.mem) + 1);

    // serial execution inside one dynamic block instance
    auto [inst_it, first] = last_in_instance.try_emplace(key, 0);
    if (!first) cycle = std::max(cycle, inst_it->second + 1);
    inst_it->second = cycle;

    if (ev.mem) stores.record(*ev.mem, cycle);
    if (ev.def) reg_ready[*ev.def] = DefInfo{cycle, ev.is_index_update};
    sched.cycles[i] = cycle;
    sched.max_cycle = std::max(sched.max_cycle, cycle);
    ++sched.counted;
  }
  return sched;
}

double bblp(std::span<const TraceEvent> events, DependencyPolicy policy,
            const ScheduleOptions& opts) {
  BlockSchedule sched = block_schedule(events, policy, opts);
  if (sched.counted == 0) {
    if (policy == DependencyPolicy::SkipIndexUpdates && !events.empty())
      return bblp(events, DependencyPolicy::Full, opts);
    return 0.0;
  }
  return static_cast<double>(sched.counted) / static_cast<double>(sched.max_cycle);
}

PbblpResult pbblp(std::span<const TraceEvent> events, const ScheduleOptions& opts) {
  struct BbStats {
    std::unordered_set<std::uint64_t> instances;
    std::uint64_t max_level = 1;
    bool index_only = true;
  };
  struct RegOrigin {
    std::uint64_t bb_id;
    std::uint64_t bb_instance;
    bool is_index_update;
  };

  std::unordered_map<std::uint64_t, BbStats> blocks;
  std::unordered_map<std::uint64_t, RegOrigin> origin;
  // chain depth of each dynamic instance within its static block; instances
  // of one block are assumed not to interleave (single entry/exit)
  std::unordered_map<BlockKey, std::uint64_t, BlockKeyHash> level;

  for (const TraceEvent& ev : events) {
    BbStats& bb = blocks[ev.bb_id];
    bb.instances.insert(ev.bb_instance);
    bb.index_only = bb.index_only && ev.is_index_update;

    const BlockKey key{ev.bb_id, ev.bb_instance};
    auto [lvl_it, fresh] = level.try_emplace(key, 1);
    for (std::uint64_t reg : ev.uses) {
      auto it = origin.find(reg);
      if (it == origin.end()) {
        if (!opts.tolerate_undefined) undefined_register(reg, ev.seq);
        continue;
      }
      const RegOrigin& def = it->second;
      if (def.is_index_update || def.bb_id != ev.bb_id ||
          def.bb_instance == ev.bb_instance)
        continue;
      const std::uint64_t pred =
          level.at(BlockKey{def.bb_id, def.bb_instance});
      lvl_it->second = std::max(lvl_it->second, pred + 1);
    }
    bb.max_level = std::max(bb.max_level, lvl_it->second);

    if (ev.def)
      origin[*ev.def] = RegOrigin{ev.bb_id, ev.bb_instance, ev.is_index_update};
  }

  PbblpResult result;
  std::uint64_t total_instances = 0;
  double weighted = 0.0;
  std::map<std::uint64_t, const BbStats*> ordered;
  for (const auto& [bb_id, stats] : blocks) ordered[bb_id] = &stats;
  for (const auto& [bb_id, stats] : ordered) {
    if (stats->index_only) continue;
    const std::uint64_t count = stats->instances.size();
    double score = static_cast<double>(count) / static_cast<double>(stats->max_level);
    score = std::clamp(score, 1.0, static_cast<double>(count));
    result.per_bb[bb_id] = score;
    weighted += score * static_cast<double>(count);
    total_instances += count;
  }
  result.average =
      total_instances ? weighted / static_cast<double>(total_instances) : 1.0;
  return result;
}

bool has_index_flags(std::span<const TraceEvent> events) {
  for (const TraceEvent& ev : events)
    if (ev.is_index_update) return true;
  return false;
}

std::vector<TraceEvent> infer_index_updates(std::span<const TraceEvent> events) {
  std::vector<TraceEvent> out(events.begin(), events.end());

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> consumers;
  std::unordered_map<std::uint64_t, std::size_t> def_event;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].def) def_event[*out[i].def] = i;
    for (std::uint64_t reg : out[i].uses) consumers[reg].push_back(i);
  }

  std::vector<bool> classified(out.size(), false);
  auto feeds = [&](std::size_t i) -> const std::vector<std::size_t>* {
    if (!out[i].def) return nullptr;
    auto it = consumers.find(*out[i].def);
    return it == consumers.end() ? nullptr : &it->second;
  };

  // compare instructions that exist only to steer a branch
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].opcode != Opcode::Cmp) continue;
    const auto* users = feeds(i);
    if (!users || users->empty()) continue;
    classified[i] = std::all_of(users->begin(), users->end(), [&](std::size_t u) {
      return out[u].opcode == Opcode::Br;
    });
  }
  // counter updates: every consumer sits in the block's next instance or in
  // the branch machinery above
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].opcode != Opcode::Add) continue;
    const auto* users = feeds(i);
    if (!users || users->empty()) continue;
    classified[i] = std::all_of(users->begin(), users->end(), [&](std::size_t u) {
      if (out[u].opcode == Opcode::Br) return true;
      if (out[u].opcode == Opcode::Cmp && classified[u]) return true;
      return out[u].bb_id == out[i].bb_id &&
             out[u].bb_instance == out[i].bb_instance + 1 &&
             out[u].thread_id == out[i].thread_id;
    });
  }
  // a branch joins the classification when its operands are classified, or
  // when it is bare and shares its instance with a classified instruction
  std::unordered_map<BlockKey, bool, BlockKeyHash> instance_has_classified;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (classified[i])
      instance_has_classified[BlockKey{out[i].bb_id, out[i].bb_instance}] = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].opcode != Opcode::Br) continue;
    if (!out[i].uses.empty()) {
      classified[i] =
          std::all_of(out[i].uses.begin(), out[i].uses.end(), [&](std::uint64_t reg) {
            auto it = def_event.find(reg);
            return it != def_event.end() && classified[it->second];
          });
    } else {
      auto it = instance_has_classified.find(BlockKey{out[i].bb_id, out[i].bb_instance});
      classified[i] = it != instance_has_classified.end();
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i)
    if (classified[i]) out[i].is_index_update = true;
  return out;
}

ParallelismMetrics analyze_parallelism(std::span<const TraceEvent> events,
                                       const ScheduleOptions& opts) {
  ParallelismMetrics m;
  DataflowSchedule sched = dataflow_schedule(events, opts);
  m.ilp = sched.max_cycle
              ? static_cast<double>(events.size()) / static_cast<double>(sched.max_cycle)
              : 0.0;
  m.ilp_spec = specialized_from_schedule(events, sched);
  DlpVariants dlp = dlp_from_schedule(events, sched);
  m.dlp1 = dlp.dlp1;
  m.dlp2 = dlp.dlp2;
  m.bblp_full = bblp(events, DependencyPolicy::Full, opts);
  m.bblp_smart = bblp(events, DependencyPolicy::SkipIndexUpdates, opts);
  PbblpResult pb = pbblp(events, opts);
  m.pbblp_avg = pb.average;
  m.pbblp_per_bb = std::move(pb.per_bb);
  return m;
}

}  // namespace nmcprof
