#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nmcprof/analytics.hpp"
#include "nmcprof/trace.hpp"

// Assembles per-trace analysis reports (schema nmc-report/1) and the PCA
// output files. All values are deterministic for a fixed trace and config.

namespace nmcprof {

using ordered_json = nlohmann::ordered_json;

struct AnalysisConfig {
  std::uint64_t max_line_bytes = 512;              // largest reuse line size
  std::vector<unsigned> entropy_cuts = {0, 3, 6, 9, 12};
  bool memory_carried_deps = false;
  bool run_bblp_full = true;
  bool run_bblp_smart = true;
  unsigned max_threads = 1;  // internal parallelism cap (NMC_PROFILER_THREADS)

  // line sizes word, 2*word, ..., max_line_bytes
  std::vector<std::uint64_t> line_sizes(const TraceHeader& header) const;
  void validate(const TraceHeader& header) const;  // throws std::invalid_argument
};

// Loads an AnalysisConfig from a JSON file (*.json) or a flat TOML file
// (anything else). Recognized keys: max_line, entropy_cuts,
// memory_carried_deps, policies. Unknown keys are rejected.
AnalysisConfig load_analysis_config(const std::string& path);

// Full metric report for one trace. `force` tolerates dataflow gaps in
// invalid traces instead of throwing.
ordered_json analyze_trace(const Trace& trace, const AnalysisConfig& config,
                           std::string_view trace_file_name,
                           std::uint64_t checksum, bool force = false);

// FNV-1a 64-bit over the file bytes.
std::uint64_t fnv1a64_file(const std::string& path);
std::string format_checksum(std::uint64_t checksum);

// Flattens the scalar metrics of a report into PCA features: ilp, dlp_avg,
// dlp1, dlp2, bblp_full, bblp_smart, pbblp_avg, entropy_diff, entropy_<cut>,
// slq_total and slq_<b>_<2b> per configured pair.
AppFeatures extract_features(const ordered_json& report);

inline const std::vector<std::string> kDefaultPcaFeatures = {
    "bblp_full", "pbblp_avg", "entropy_diff", "slq_8_16"};

ordered_json pca_to_json(const PcaResult& result,
                         const std::vector<std::string>& app_names,
                         const std::vector<std::string>& quadrants);

std::string scores_to_csv(const PcaResult& result,
                          const std::vector<std::string>& app_names,
                          const std::vector<std::string>& quadrants);

}  // namespace nmcprof
