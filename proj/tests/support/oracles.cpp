#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "nmcprof/memory_metrics.hpp"

namespace nmcprof::test {

double shannon_entropy_oracle(std::span<const std::uint64_t> addresses,
                              unsigned lsb_cut) {
  std::map<std::uint64_t, std::uint64_t> freq;
  for (std::uint64_t a : addresses) ++freq[a >> lsb_cut];
  const double n = static_cast<double>(addresses.size());
  double h = 0.0;
  for (const auto& [value, count] : freq) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::vector<std::uint64_t> reuse_distance_oracle(
    std::span<const std::uint64_t> addresses, std::uint64_t line_size_bytes) {
  std::vector<std::uint64_t> out;
  out.reserve(addresses.size());
  std::unordered_map<std::uint64_t, std::uint64_t> last_index;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    const std::uint64_t line = addresses[i] / line_size_bytes;
    auto it = last_index.find(line);
    if (it == last_index.end()) {
      out.push_back(kCold);
    } else {
      std::uint64_t distinct = 0;
      for (const auto& [other, idx] : last_index)
        if (other != line && idx > it->second) ++distinct;
      out.push_back(distinct);
    }
    last_index[line] = i;
  }
  return out;
}

namespace {

struct InstanceState {
  std::vector<std::size_t> order;  // event indices in trace order
  std::size_t next = 0;            // position of the next issueable entry
};

OracleSchedule step_schedule(std::span<const TraceEvent> events, bool block_serial,
                             bool skip_index) {
  const std::size_t n = events.size();
  OracleSchedule sched;
  sched.cycles.assign(n, 0);
  if (n == 0) return sched;

  std::unordered_map<std::uint64_t, std::size_t> def_event;
  for (std::size_t i = 0; i < n; ++i)
    if (events[i].def && !def_event.count(*events[i].def))
      def_event[*events[i].def] = i;

  // index-only instances vanish under the skip policy
  std::map<std::pair<std::uint64_t, std::uint64_t>, bool> index_only;
  if (skip_index)
    for (const TraceEvent& ev : events) {
      auto [it, fresh] = index_only.try_emplace({ev.bb_id, ev.bb_instance}, true);
      it->second = it->second && ev.is_index_update;
    }

  std::vector<bool> considered(n, true);
  std::map<std::pair<std::uint64_t, std::uint64_t>, InstanceState> instances;
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = std::make_pair(events[i].bb_id, events[i].bb_instance);
    if (skip_index && index_only.at(key)) {
      considered[i] = false;
      continue;
    }
    if (block_serial) instances[key].order.push_back(i);
  }

  std::size_t remaining = 0;
  for (bool c : considered) remaining += c;
  std::vector<bool> issued(n, false);

  for (std::uint64_t cycle = 1; remaining > 0; ++cycle) {
    if (cycle > static_cast<std::uint64_t>(n) + 1)
      throw std::logic_error("oracle schedule failed to make progress");
    std::vector<std::size_t> issue_now;
    for (std::size_t i = 0; i < n; ++i) {
      if (!considered[i] || issued[i]) continue;
      const TraceEvent& ev = events[i];

      if (block_serial) {
        const InstanceState& inst =
            instances.at(std::make_pair(ev.bb_id, ev.bb_instance));
        if (inst.order[inst.next] != i) continue;  // in-order within the block
        if (inst.next > 0) {
          const std::size_t prev = inst.order[inst.next - 1];
          if (!(issued[prev] && sched.cycles[prev] < cycle)) continue;
        }
      }

      bool ready = true;
      for (std::uint64_t reg : ev.uses) {
        auto def_it = def_event.find(reg);
        if (def_it == def_event.end())
          throw std::invalid_argument("oracle: use of undefined register");
        const std::size_t producer = def_it->second;
        if (producer == i) continue;
        if (skip_index && events[producer].is_index_update) continue;
        if (!considered[producer]) continue;
        if (!(issued[producer] && sched.cycles[producer] < cycle)) {
          ready = false;
          break;
        }
      }
      if (ready) issue_now.push_back(i);
    }

    for (std::size_t i : issue_now) {
      issued[i] = true;
      sched.cycles[i] = cycle;
      sched.max_cycle = cycle;
      ++sched.counted;
      if (block_serial)
        ++instances.at(std::make_pair(events[i].bb_id, events[i].bb_instance)).next;
    }
    remaining -= issue_now.size();
  }
  return sched;
}

}  // namespace

OracleSchedule dataflow_schedule_oracle(std::span<const TraceEvent> events) {
  return step_schedule(events, false, false);
}

OracleSchedule block_schedule_oracle(std::span<const TraceEvent> events,
                                     DependencyPolicy policy) {
  return step_schedule(events, true, policy == DependencyPolicy::SkipIndexUpdates);
}

std::map<Opcode, double> specialized_from_cycles(
    std::span<const TraceEvent> events, std::span<const std::uint64_t> cycles) {
  std::map<Opcode, std::map<std::uint64_t, std::uint64_t>> table;
  for (std::size_t i = 0; i < events.size(); ++i)
    ++table[events[i].opcode][cycles[i]];
  std::map<Opcode, double> out;
  for (const auto& [op, hist] : table) {
    std::uint64_t count = 0;
    for (const auto& [cycle, c] : hist) count += c;
    out[op] = static_cast<double>(count) / static_cast<double>(hist.size());
  }
  return out;
}

namespace {

std::vector<double> normalized(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return v;
}

std::vector<double> cross(const double* a, const double* b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

std::vector<EigenPair> analytic_eigen_2x2(double a00, double a01, double a11) {
  const double tr = a00 + a11;
  const double disc = std::sqrt((a00 - a11) * (a00 - a11) + 4.0 * a01 * a01);
  const double l1 = (tr + disc) / 2.0, l2 = (tr - disc) / 2.0;
  auto vec = [&](double lambda) {
    if (a01 != 0.0) return normalized({a01, lambda - a00});
    // diagonal: pick the matching axis
    return std::fabs(a00 - lambda) <= std::fabs(a11 - lambda)
               ? std::vector<double>{1.0, 0.0}
               : std::vector<double>{0.0, 1.0};
  };
  return {{l1, vec(l1)}, {l2, vec(l2)}};
}

std::vector<EigenPair> analytic_eigen_3x3(const double m[9]) {
  const double p1 = m[1] * m[1] + m[2] * m[2] + m[5] * m[5];
  std::vector<double> lambdas(3);
  if (p1 == 0.0) {
    lambdas = {m[0], m[4], m[8]};
  } else {
    const double q = (m[0] + m[4] + m[8]) / 3.0;
    const double p2 = (m[0] - q) * (m[0] - q) + (m[4] - q) * (m[4] - q) +
                      (m[8] - q) * (m[8] - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double b[9];
    for (int i = 0; i < 9; ++i) b[i] = m[i] / p;
    b[0] -= q / p;
    b[4] -= q / p;
    b[8] -= q / p;
    const double detb = b[0] * (b[4] * b[8] - b[5] * b[5]) -
                        b[1] * (b[1] * b[8] - b[5] * b[2]) +
                        b[2] * (b[1] * b[5] - b[4] * b[2]);
    double r = detb / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    lambdas[0] = q + 2.0 * p * std::cos(phi);
    lambdas[2] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    lambdas[1] = 3.0 * q - lambdas[0] - lambdas[2];
  }

  std::vector<EigenPair> out;
  for (double lambda : lambdas) {
    double shifted[9];
    for (int i = 0; i < 9; ++i) shifted[i] = m[i];
    shifted[0] -= lambda;
    shifted[4] -= lambda;
    shifted[8] -= lambda;
    const double* rows[3] = {shifted, shifted + 3, shifted + 6};
    std::vector<double> best = {0.0, 0.0, 0.0};
    double best_norm = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        std::vector<double> c = cross(rows[i], rows[j]);
        const double norm = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        if (norm > best_norm) {
          best_norm = norm;
          best = c;
        }
      }
    out.push_back({lambda, normalized(best)});
  }
  std::sort(out.begin(), out.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.value > b.value; });
  return out;
}

}  // namespace nmcprof::test
