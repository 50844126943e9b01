#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nmcprof/order_statistic_tree.hpp"

// Memory-behaviour metrics over an address stream: Shannon entropy across
// address granularities, reuse distances per cache-line size, logarithmic
// reuse signatures, line-doubling distribution maps and the spatial locality
// score derived from them.

namespace nmcprof {

// reuse distance of a first touch
inline constexpr std::uint64_t kCold = std::numeric_limits<std::uint64_t>::max();

// Shannon entropy (bits) of the empirical address distribution after
// dropping lsb_cut low bits. 0*log0 counts as 0. Throws on an empty stream.
double memory_entropy(std::span<const std::uint64_t> addresses, unsigned lsb_cut);

struct EntropyLadder {
  std::vector<unsigned> cuts;   // strictly increasing, starts at 0
  std::vector<double> values;   // same length, non-increasing
};

EntropyLadder entropy_ladder(std::span<const std::uint64_t> addresses,
                             std::span<const unsigned> cuts);

// Mean drop between consecutive ladder entries; needs >= 2 entries.
double entropy_diff(const EntropyLadder& ladder);

// Log-binned distance ranges: bin 0 = [0,1), bin i>=1 = [2^(i-1), 2^i).
// kCold maps to the terminal cold bin.
std::size_t distance_bin(std::uint64_t distance);

// Online reuse-distance tracker for one line size (power of two, bytes).
// access() returns the number of distinct lines touched since the previous
// access to the same line, or kCold on first touch. O(log distinct lines)
// per access: a last-timestamp map plus an order-statistics tree over the
// current last-access timestamps.
class ReuseDistanceTracker {
 public:
  explicit ReuseDistanceTracker(std::uint64_t line_size_bytes);

  std::uint64_t access(std::uint64_t address);
  std::size_t distinct_lines() const { return last_ts_.size(); }
  std::uint64_t line_size_bytes() const { return line_size_; }

 private:
  std::uint64_t line_size_;
  unsigned line_shift_;
  std::unordered_map<std::uint64_t, std::uint64_t> last_ts_;
  OrderStatisticTree tree_;
  std::uint64_t now_ = 0;
};

std::vector<std::uint64_t> reuse_distances(std::span<const std::uint64_t> addresses,
                                           std::uint64_t line_size_bytes);

struct ReuseSignature {
  std::uint64_t line_size_bytes = 0;
  std::vector<std::uint64_t> bin_lower;  // lower edges 0,1,2,4,... per finite bin
  std::vector<double> probs;             // bin_lower.size()+1 entries; last = cold
};

ReuseSignature reuse_signature(std::span<const std::uint64_t> distances,
                               std::uint64_t line_size_bytes);

// Row-stochastic transition matrix of distance bins when the line size
// doubles from b to 2b. The last row/column is the cold bin.
struct DistributionMap {
  std::uint64_t line_size_b = 0;
  std::size_t n_rows = 0;  // finite bins at b, plus cold
  std::size_t n_cols = 0;  // finite bins at 2b, plus cold
  std::vector<double> cells;            // row-major, non-empty rows sum to 1
  std::vector<std::uint64_t> row_counts;  // raw per-row access counts

  double at(std::size_t row, std::size_t col) const {
    return cells[row * n_cols + col];
  }
};

DistributionMap distribution_map(std::span<const std::uint64_t> addresses,
                                 std::uint64_t line_size_b);

// Same map built from precomputed distance streams at b and 2b (one entry per
// access each). Checks the per-access monotonicity of line doubling.
DistributionMap distribution_map_from_distances(
    std::span<const std::uint64_t> dist_at_b,
    std::span<const std::uint64_t> dist_at_2b, std::uint64_t line_size_b);

// Probability mass of row i that moved to a strictly smaller bin when the
// line doubled. For the cold row, any finite destination counts as a drop.
double slq_bin(const DistributionMap& map, std::size_t row);

struct LinePairStats {
  DistributionMap map;
  ReuseSignature signature;  // at the smaller line size of the pair
};

// |sum_i slq_bin(i) * p_i| for one (b, 2b) pair.
double slq_pair_score(const LinePairStats& pair);

struct SpatialLocalityReport {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pair_sizes;
  std::vector<double> per_pair;  // each in [0,1]
  double total = 0.0;            // in [0,1]
};

// Weighted total over pairs ordered by ascending line size, weight 2^-k for
// the k-th pair (1-based) so small-line pairs dominate.
SpatialLocalityReport slq_total(std::span<const LinePairStats> pairs);

}  // namespace nmcprof
