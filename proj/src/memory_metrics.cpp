#include "nmcprof/memory_metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nmcprof {

double memory_entropy(std::span<const std::uint64_t> addresses, unsigned lsb_cut) {
  if (addresses.empty())
    throw std::invalid_argument("memory_entropy: empty access stream");
  if (lsb_cut > 63)
    throw std::invalid_argument("memory_entropy: lsb_cut must be < 64");

  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  counts.reserve(addresses.size());
  for (std::uint64_t a : addresses) ++counts[a >> lsb_cut];

  // fixed summation order keeps the result independent of hash layout
  std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(counts.begin(),
                                                              counts.end());
  std::sort(sorted.begin(), sorted.end());

  const double n = static_cast<double>(addresses.size());
  double acc = 0.0;  // sum of c * log2(c)
  for (const auto& [value, count] : sorted)
    acc += static_cast<double>(count) * std::log2(static_cast<double>(count));
  double h = std::log2(n) - acc / n;
  return h < 0.0 ? 0.0 : h;
}

EntropyLadder entropy_ladder(std::span<const std::uint64_t> addresses,
                             std::span<const unsigned> cuts) {
  if (cuts.empty() || cuts.front() != 0)
    throw std::invalid_argument("entropy_ladder: cuts must start at 0");
  for (std::size_t i = 1; i < cuts.size(); ++i)
    if (cuts[i] <= cuts[i - 1])
      throw std::invalid_argument("entropy_ladder: cuts must strictly increase");

  EntropyLadder ladder;
  ladder.cuts.assign(cuts.begin(), cuts.end());
  ladder.values.reserve(cuts.size());
  for (unsigned cut : cuts)
    ladder.values.push_back(memory_entropy(addresses, cut));
  return ladder;
}

double entropy_diff(const EntropyLadder& ladder) {
  if (ladder.values.size() < 2)
    throw std::invalid_argument("entropy_diff: need at least 2 ladder entries");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ladder.values.size(); ++i)
    sum += ladder.values[i] - ladder.values[i + 1];
  return sum / static_cast<double>(ladder.values.size() - 1);
}

std::size_t distance_bin(std::uint64_t distance) {
  return distance == 0 ? 0 : static_cast<std::size_t>(std::bit_width(distance));
}

ReuseDistanceTracker::ReuseDistanceTracker(std::uint64_t line_size_bytes)
    : line_size_(line_size_bytes) {
  if (line_size_bytes == 0 || !std::has_single_bit(line_size_bytes))
    throw std::invalid_argument("line size must be a power of two >= 1");
  line_shift_ = static_cast<unsigned>(std::countr_zero(line_size_bytes));
}

std::uint64_t ReuseDistanceTracker::access(std::uint64_t address) {
  const std::uint64_t line = address >> line_shift_;
  const std::uint64_t ts = now_++;
  auto it = last_ts_.find(line);
  if (it == last_ts_.end()) {
    last_ts_.emplace(line, ts);
    tree_.insert(ts);
    return kCold;
  }
  const std::uint64_t prev = it->second;
  const std::uint64_t distance = tree_.count_greater(prev);
  tree_.erase(prev);
  tree_.insert(ts);
  it->second = ts;
  return distance;
}

std::vector<std::uint64_t> reuse_distances(std::span<const std::uint64_t> addresses,
                                           std::uint64_t line_size_bytes) {
  ReuseDistanceTracker tracker(line_size_bytes);
  std::vector<std::uint64_t> out;
  out.reserve(addresses.size());
  for (std::uint64_t a : addresses) out.push_back(tracker.access(a));
  return out;
}

ReuseSignature reuse_signature(std::span<const std::uint64_t> distances,
                               std::uint64_t line_size_bytes) {
  if (distances.empty())
    throw std::invalid_argument("reuse_signature: empty distance stream");

  std::size_t finite_bins = 0;
  for (std::uint64_t d : distances)
    if (d != kCold) finite_bins = std::max(finite_bins, distance_bin(d) + 1);

  std::vector<std::uint64_t> counts(finite_bins + 1, 0);  // last = cold
  for (std::uint64_t d : distances)
    ++counts[d == kCold ? finite_bins : distance_bin(d)];

  ReuseSignature sig;
  sig.line_size_bytes = line_size_bytes;
  sig.bin_lower.reserve(finite_bins);
  for (std::size_t i = 0; i < finite_bins; ++i)
    sig.bin_lower.push_back(i == 0 ? 0 : std::uint64_t{1} << (i - 1));
  sig.probs.reserve(counts.size());
  const double n = static_cast<double>(distances.size());
  for (std::uint64_t c : counts) sig.probs.push_back(static_cast<double>(c) / n);
  return sig;
}

DistributionMap distribution_map_from_distances(
    std::span<const std::uint64_t> dist_at_b,
    std::span<const std::uint64_t> dist_at_2b, std::uint64_t line_size_b) {
  if (dist_at_b.size() != dist_at_2b.size())
    throw std::invalid_argument("distribution map: distance streams differ in length");
  if (dist_at_b.empty())
    throw std::invalid_argument("distribution map: empty distance stream");

  std::size_t finite_rows = 0, finite_cols = 0;
  for (std::size_t i = 0; i < dist_at_b.size(); ++i) {
    const std::uint64_t db = dist_at_b[i], d2 = dist_at_2b[i];
    // doubling the line can only shrink a distance
    if (d2 == kCold && db != kCold)
      throw std::logic_error("distribution map: access went cold at the larger line");
    if (d2 != kCold && db != kCold && d2 > db)
      throw std::logic_error("distribution map: distance grew at the larger line");
    if (db != kCold) finite_rows = std::max(finite_rows, distance_bin(db) + 1);
    if (d2 != kCold) finite_cols = std::max(finite_cols, distance_bin(d2) + 1);
  }

  DistributionMap map;
  map.line_size_b = line_size_b;
  map.n_rows = finite_rows + 1;
  map.n_cols = finite_cols + 1;
  map.cells.assign(map.n_rows * map.n_cols, 0.0);
  map.row_counts.assign(map.n_rows, 0);

  for (std::size_t i = 0; i < dist_at_b.size(); ++i) {
    const std::size_t row =
        dist_at_b[i] == kCold ? finite_rows : distance_bin(dist_at_b[i]);
    const std::size_t col =
        dist_at_2b[i] == kCold ? finite_cols : distance_bin(dist_at_2b[i]);
    map.cells[row * map.n_cols + col] += 1.0;
    ++map.row_counts[row];
  }
  for (std::size_t r = 0; r < map.n_rows; ++r) {
    if (map.row_counts[r] == 0) continue;
    const double total = static_cast<double>(map.row_counts[r]);
    for (std::size_t c = 0; c < map.n_cols; ++c) map.cells[r * map.n_cols + c] /= total;
  }
  return map;
}

DistributionMap distribution_map(std::span<const std::uint64_t> addresses,
                                 std::uint64_t line_size_b) {
  // single pass: both trackers advance in lockstep over the access stream
  ReuseDistanceTracker small(line_size_b), large(line_size_b * 2);
  std::vector<std::uint64_t> d_small, d_large;
  d_small.reserve(addresses.size());
  d_large.reserve(addresses.size());
  for (std::uint64_t a : addresses) {
    d_small.push_back(small.access(a));
    d_large.push_back(large.access(a));
  }
  return distribution_map_from_distances(d_small, d_large, line_size_b);
}

namespace {

// cold sorts above every finite bin
std::uint64_t bin_order(std::size_t index, std::size_t cold_index) {
  return index == cold_index ? std::numeric_limits<std::uint64_t>::max()
                             : static_cast<std::uint64_t>(index);
}

}  // namespace

double slq_bin(const DistributionMap& map, std::size_t row) {
  if (row >= map.n_rows)
    throw std::out_of_range("slq_bin: row " + std::to_string(row) +
                            " out of range");
  const std::uint64_t row_order = bin_order(row, map.n_rows - 1);
  double sum = 0.0;
  for (std::size_t col = 0; col < map.n_cols; ++col)
    if (bin_order(col, map.n_cols - 1) < row_order) sum += map.at(row, col);
  return sum;
}

double slq_pair_score(const LinePairStats& pair) {
  // signature rows and map rows come from the same distance stream
  if (pair.signature.probs.size() != pair.map.n_rows)
    throw std::invalid_argument("slq_pair_score: signature does not match map rows");
  double sum = 0.0;
  for (std::size_t row = 0; row < pair.map.n_rows; ++row)
    sum += slq_bin(pair.map, row) * pair.signature.probs[row];
  return std::fabs(sum);
}

SpatialLocalityReport slq_total(std::span<const LinePairStats> pairs) {
  SpatialLocalityReport report;
  double weighted = 0.0, weight_sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double score = slq_pair_score(pairs[k]);
    report.pair_sizes.emplace_back(pairs[k].map.line_size_b,
                                   pairs[k].map.line_size_b * 2);
    report.per_pair.push_back(score);
    const double w = std::ldexp(1.0, -static_cast<int>(k + 1));  // 2^-(k+1)
    weighted += score * w;
    weight_sum += w;
  }
  report.total = weight_sum > 0.0 ? weighted / weight_sum : 0.0;
  return report;
}

}  // namespace nmcprof
