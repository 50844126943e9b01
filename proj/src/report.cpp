#include "nmcprof/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>

#include "nmcprof/memory_metrics.hpp"
#include "nmcprof/parallelism.hpp"

namespace nmcprof {

std::vector<std::uint64_t> AnalysisConfig::line_sizes(const TraceHeader& header) const {
  std::vector<std::uint64_t> sizes;
  for (std::uint64_t s = header.word_size_bytes; s <= max_line_bytes; s *= 2)
    sizes.push_back(s);
  return sizes;
}

void AnalysisConfig::validate(const TraceHeader& header) const {
  if (max_line_bytes < header.word_size_bytes ||
      (max_line_bytes & (max_line_bytes - 1)) != 0)
    throw std::invalid_argument(
        "config: max line size must be a power of two >= the trace word size");
  if (entropy_cuts.size() < 2 || entropy_cuts.front() != 0)
    throw std::invalid_argument(
        "config: entropy cuts must start at 0 and have at least 2 entries");
  for (std::size_t i = 1; i < entropy_cuts.size(); ++i)
    if (entropy_cuts[i] <= entropy_cuts[i - 1])
      throw std::invalid_argument("config: entropy cuts must strictly increase");
  if (entropy_cuts.back() >= header.address_bits)
    throw std::invalid_argument("config: entropy cuts must stay below address_bits");
  if (!run_bblp_full && !run_bblp_smart)
    throw std::invalid_argument("config: at least one scheduling policy required");
}

namespace {

void apply_policies(AnalysisConfig& config, const std::vector<std::string>& policies) {
  config.run_bblp_full = false;
  config.run_bblp_smart = false;
  for (const std::string& p : policies) {
    if (p == "full")
      config.run_bblp_full = true;
    else if (p == "smart")
      config.run_bblp_smart = true;
    else
      throw std::invalid_argument("config: unknown policy '" + p + "'");
  }
}

void apply_config_json(AnalysisConfig& config, const nlohmann::json& doc) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "max_line") {
      config.max_line_bytes = value.get<std::uint64_t>();
    } else if (key == "entropy_cuts") {
      config.entropy_cuts = value.get<std::vector<unsigned>>();
    } else if (key == "memory_carried_deps") {
      config.memory_carried_deps = value.get<bool>();
    } else if (key == "policies") {
      apply_policies(config, value.get<std::vector<std::string>>());
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// flat TOML subset: `key = value` with integers, booleans, quoted strings
// and one-level arrays; # starts a comment
nlohmann::json parse_flat_toml(std::istream& in, const std::string& path) {
  auto parse_scalar = [&](const std::string& token) -> nlohmann::json {
    if (token == "true") return true;
    if (token == "false") return false;
    if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
      return token.substr(1, token.size() - 2);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(token, &used);
      if (used == token.size()) return v;
    } catch (...) {
    }
    throw std::invalid_argument("config '" + path + "': bad value '" + token + "'");
  };

  nlohmann::json doc = nlohmann::json::object();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config '" + path + "' line " +
                                  std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw std::invalid_argument("config '" + path + "' line " +
                                    std::to_string(line_no) + ": unterminated array");
      nlohmann::json arr = nlohmann::json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::size_t start = 0;
      while (start <= body.size()) {
        auto comma = body.find(',', start);
        if (comma == std::string::npos) comma = body.size();
        const std::string item = trim(body.substr(start, comma - start));
        if (!item.empty()) arr.push_back(parse_scalar(item));
        start = comma + 1;
        if (comma == body.size()) break;
      }
      doc[key] = std::move(arr);
    } else {
      doc[key] = parse_scalar(value);
    }
  }
  return doc;
}

}  // namespace

AnalysisConfig load_analysis_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    doc = nlohmann::json::parse(in);
  else
    doc = parse_flat_toml(in, path);
  AnalysisConfig config;
  apply_config_json(config, doc);
  return config;
}

namespace {

// bounded fork-join over [0, count); results must be written to per-index slots
void parallel_indexed(std::size_t count, unsigned max_threads,
                      const std::function<void(std::size_t)>& fn) {
  if (max_threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers = std::min<std::size_t>(max_threads, count);
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// sample standard deviation; 0 for fewer than two values
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

ordered_json scalar_agg(const std::vector<double>& per_thread) {
  return {{"per_thread", per_thread},
          {"mean", mean_of(per_thread)},
          {"std", std_of(per_thread)}};
}

ordered_json vector_agg(const std::vector<std::vector<double>>& per_thread,
                        std::size_t width) {
  std::vector<double> mean(width, 0.0), stddev(width, 0.0);
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<double> column;
    column.reserve(per_thread.size());
    for (const auto& row : per_thread) column.push_back(row[c]);
    mean[c] = mean_of(column);
    stddev[c] = std_of(column);
  }
  return {{"per_thread", per_thread}, {"mean", mean}, {"std", stddev}};
}

// union of keys; aggregates over the threads where a key is present
ordered_json map_agg(const std::vector<std::map<std::string, double>>& per_thread) {
  std::map<std::string, std::vector<double>> columns;
  for (const auto& m : per_thread)
    for (const auto& [key, value] : m) columns[key].push_back(value);
  ordered_json mean = ordered_json::object(), stddev = ordered_json::object();
  for (const auto& [key, values] : columns) {
    mean[key] = mean_of(values);
    stddev[key] = std_of(values);
  }
  ordered_json pt = ordered_json::array();
  for (const auto& m : per_thread) pt.push_back(m);
  return {{"per_thread", pt}, {"mean", mean}, {"std", stddev}};
}

struct ThreadMemoryMetrics {
  std::size_t accesses = 0;
  std::vector<double> entropy_values;
  double entropy_diff_value = 0.0;
  std::vector<ReuseSignature> signatures;  // one per line size
  std::vector<double> slq_per_pair;        // one per consecutive pair
  double slq_total_value = 0.0;
};

ThreadMemoryMetrics thread_memory_metrics(std::span<const TraceEvent> events,
                                          const AnalysisConfig& config,
                                          const std::vector<std::uint64_t>& sizes) {
  ThreadMemoryMetrics out;
  std::vector<std::uint64_t> addresses;
  for (const TraceEvent& ev : events)
    if (ev.mem) addresses.push_back(ev.mem->address);
  out.accesses = addresses.size();

  const std::size_t n_pairs = sizes.size() >= 2 ? sizes.size() - 1 : 0;
  if (addresses.empty()) {
    // compute-only stream: no randomness, no locality signal
    out.entropy_values.assign(config.entropy_cuts.size(), 0.0);
    for (std::uint64_t s : sizes)
      out.signatures.push_back(ReuseSignature{s, {}, {}});
    out.slq_per_pair.assign(n_pairs, 0.0);
    return out;
  }

  EntropyLadder ladder = entropy_ladder(addresses, config.entropy_cuts);
  out.entropy_values = ladder.values;
  out.entropy_diff_value = entropy_diff(ladder);

  std::vector<std::vector<std::uint64_t>> distances(sizes.size());
  parallel_indexed(sizes.size(), config.max_threads, [&](std::size_t i) {
    distances[i] = reuse_distances(addresses, sizes[i]);
  });
  for (std::size_t i = 0; i < sizes.size(); ++i)
    out.signatures.push_back(reuse_signature(distances[i], sizes[i]));

  std::vector<LinePairStats> pairs;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    pairs.push_back(LinePairStats{
        distribution_map_from_distances(distances[i], distances[i + 1], sizes[i]),
        out.signatures[i]});
  SpatialLocalityReport slq = slq_total(pairs);
  out.slq_per_pair = slq.per_pair;
  out.slq_total_value = slq.total;
  return out;
}

ordered_json signature_json(const ReuseSignature& sig) {
  return {{"line_size_bytes", sig.line_size_bytes},
          {"bin_lower", sig.bin_lower},
          {"probs", sig.probs}};
}

std::map<std::string, double> spec_to_string_map(const std::map<Opcode, double>& m) {
  std::map<std::string, double> out;
  for (const auto& [op, value] : m) out[std::string(mnemonic(op))] = value;
  return out;
}

std::map<std::string, double> bb_to_string_map(
    const std::map<std::uint64_t, double>& m) {
  std::map<std::string, double> out;
  for (const auto& [bb, value] : m) out[std::to_string(bb)] = value;
  return out;
}

}  // namespace

ordered_json analyze_trace(const Trace& trace, const AnalysisConfig& config,
                           std::string_view trace_file_name,
                           std::uint64_t checksum, bool force) {
  config.validate(trace.header);
  const std::vector<std::uint64_t> sizes = config.line_sizes(trace.header);

  auto by_thread = split_by_thread(trace.events);
  std::vector<std::uint32_t> tids;
  std::vector<const std::vector<TraceEvent>*> tevents;
  for (const auto& [tid, evs] : by_thread) {
    tids.push_back(tid);
    tevents.push_back(&evs);
  }
  const std::size_t nt = tids.size();

  ScheduleOptions sched_opts;
  sched_opts.memory_carried_deps = config.memory_carried_deps;
  sched_opts.word_size_bytes = trace.header.word_size_bytes;
  sched_opts.tolerate_undefined = force;

  // foreign traces without index flags get the heuristic classifier
  const bool infer_flags = !trace.events.empty() && !has_index_flags(trace.events);

  std::vector<ThreadMemoryMetrics> mem(nt);
  std::vector<ParallelismMetrics> par(nt);
  parallel_indexed(nt, config.max_threads, [&](std::size_t i) {
    mem[i] = thread_memory_metrics(*tevents[i], config, sizes);
    if (infer_flags) {
      const std::vector<TraceEvent> flagged = infer_index_updates(*tevents[i]);
      par[i] = analyze_parallelism(flagged, sched_opts);
    } else {
      par[i] = analyze_parallelism(*tevents[i], sched_opts);
    }
  });

  ordered_json report;
  report["schema"] = "nmc-report/1";
  report["app"] = trace.header.app_name;
  report["trace"] = {{"file", std::string(trace_file_name)},
                     {"checksum", format_checksum(checksum)},
                     {"events", trace.events.size()},
                     {"word_size_bytes", trace.header.word_size_bytes},
                     {"address_bits", trace.header.address_bits},
                     {"thread_count", trace.header.thread_count},
                     {"threads_observed", tids}};
  std::vector<std::string> policies;
  if (config.run_bblp_full) policies.push_back("full");
  if (config.run_bblp_smart) policies.push_back("smart");
  report["config"] = {{"line_sizes", sizes},
                      {"entropy_cuts", config.entropy_cuts},
                      {"memory_carried_deps", config.memory_carried_deps},
                      {"policies", policies}};

  // --- memory fragment ---
  ordered_json memory;
  std::vector<std::uint64_t> accesses;
  std::uint64_t total_accesses = 0;
  for (const auto& m : mem) {
    accesses.push_back(m.accesses);
    total_accesses += m.accesses;
  }
  memory["accesses"] = {{"per_thread", accesses}, {"total", total_accesses}};

  std::vector<std::vector<double>> ladders;
  for (const auto& m : mem) ladders.push_back(m.entropy_values);
  ordered_json ladder_json = vector_agg(ladders, config.entropy_cuts.size());
  ladder_json["cuts"] = config.entropy_cuts;
  memory["entropy_ladder"] = std::move(ladder_json);

  std::vector<double> ediff;
  for (const auto& m : mem) ediff.push_back(m.entropy_diff_value);
  memory["entropy_diff"] = scalar_agg(ediff);

  for (std::size_t s = 0; s < sizes.size(); ++s) {
    ordered_json per_thread = ordered_json::array();
    for (const auto& m : mem) per_thread.push_back(signature_json(m.signatures[s]));
    memory["reuse_signature_" + std::to_string(sizes[s])] = {
        {"per_thread", std::move(per_thread)}};
  }

  const std::size_t n_pairs = sizes.size() >= 2 ? sizes.size() - 1 : 0;
  ordered_json pairs_json = ordered_json::array();
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    pairs_json.push_back({sizes[i], sizes[i + 1]});
  std::vector<std::vector<double>> slq_rows;
  for (const auto& m : mem) slq_rows.push_back(m.slq_per_pair);
  ordered_json slq_json = vector_agg(slq_rows, n_pairs);
  slq_json["pairs"] = std::move(pairs_json);
  memory["slq_pairs"] = std::move(slq_json);

  std::vector<double> slq_totals;
  for (const auto& m : mem) slq_totals.push_back(m.slq_total_value);
  memory["slq_total"] = scalar_agg(slq_totals);
  report["memory"] = std::move(memory);

  // --- parallelism fragment ---
  ordered_json parallelism;
  std::vector<std::uint64_t> instr;
  std::uint64_t total_instr = 0;
  for (const auto* evs : tevents) {
    instr.push_back(evs->size());
    total_instr += evs->size();
  }
  parallelism["instructions"] = {{"per_thread", instr}, {"total", total_instr}};
  parallelism["index_flags"] = infer_flags ? "inferred" : "explicit";

  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(nt);
    for (const auto& p : par) v.push_back(getter(p));
    return v;
  };
  parallelism["ilp"] = scalar_agg(collect([](const auto& p) { return p.ilp; }));

  std::vector<std::map<std::string, double>> spec_maps;
  for (const auto& p : par) spec_maps.push_back(spec_to_string_map(p.ilp_spec));
  parallelism["ilp_specialized"] = map_agg(spec_maps);

  parallelism["dlp_avg"] = scalar_agg(collect([](const auto& p) { return p.dlp1; }));
  parallelism["dlp1"] = scalar_agg(collect([](const auto& p) { return p.dlp1; }));
  parallelism["dlp2"] = scalar_agg(collect([](const auto& p) { return p.dlp2; }));
  if (config.run_bblp_full)
    parallelism["bblp_full"] =
        scalar_agg(collect([](const auto& p) { return p.bblp_full; }));
  if (config.run_bblp_smart)
    parallelism["bblp_smart"] =
        scalar_agg(collect([](const auto& p) { return p.bblp_smart; }));
  parallelism["pbblp_avg"] =
      scalar_agg(collect([](const auto& p) { return p.pbblp_avg; }));

  std::vector<std::map<std::string, double>> bb_maps;
  for (const auto& p : par) bb_maps.push_back(bb_to_string_map(p.pbblp_per_bb));
  parallelism["pbblp_per_bb"] = map_agg(bb_maps);
  report["parallelism"] = std::move(parallelism);

  return report;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open '" + path + "' for checksumming");
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return hash;
}

std::string format_checksum(std::uint64_t checksum) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(checksum));
  return buf;
}

AppFeatures extract_features(const ordered_json& report) {
  AppFeatures out;
  out.app_name = report.at("app").get<std::string>();

  const ordered_json& par = report.at("parallelism");
  for (const char* key :
       {"ilp", "dlp_avg", "dlp1", "dlp2", "bblp_full", "bblp_smart", "pbblp_avg"})
    if (par.contains(key))
      out.features[key] = par.at(key).at("mean").get<double>();

  const ordered_json& memory = report.at("memory");
  out.features["entropy_diff"] = memory.at("entropy_diff").at("mean").get<double>();
  out.features["slq_total"] = memory.at("slq_total").at("mean").get<double>();

  const ordered_json& ladder = memory.at("entropy_ladder");
  const auto& cuts = ladder.at("cuts");
  const auto& means = ladder.at("mean");
  for (std::size_t i = 0; i < cuts.size(); ++i)
    out.features["entropy_" + std::to_string(cuts[i].get<unsigned>())] =
        means[i].get<double>();

  const ordered_json& slq = memory.at("slq_pairs");
  const auto& pairs = slq.at("pairs");
  const auto& slq_means = slq.at("mean");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string name = "slq_" + std::to_string(pairs[i][0].get<std::uint64_t>()) +
                             "_" + std::to_string(pairs[i][1].get<std::uint64_t>());
    out.features[name] = slq_means[i].get<double>();
  }
  return out;
}

ordered_json pca_to_json(const PcaResult& result,
                         const std::vector<std::string>& app_names,
                         const std::vector<std::string>& quadrants) {
  ordered_json out;
  out["schema"] = "nmc-pca/1";
  out["feature_names"] = result.feature_names;
  out["means"] = result.means;
  out["stds"] = result.stds;
  out["dropped_features"] = result.dropped_features;
  out["components"] = result.loadings;
  out["explained_variance_ratio"] = result.explained_variance_ratio;
  out["apps"] = app_names;
  out["scores"] = result.scores;
  out["quadrants"] = quadrants;
  return out;
}

std::string scores_to_csv(const PcaResult& result,
                          const std::vector<std::string>& app_names,
                          const std::vector<std::string>& quadrants) {
  std::string csv = "app";
  for (std::size_t c = 0; c < result.loadings.size(); ++c)
    csv += ",PC" + std::to_string(c + 1);
  csv += ",quadrant\n";
  char buf[64];
  for (std::size_t r = 0; r < app_names.size(); ++r) {
    csv += app_names[r];
    for (double score : result.scores[r]) {
      std::snprintf(buf, sizeof buf, ",%.12g", score);
      csv += buf;
    }
    csv += "," + quadrants[r] + "\n";
  }
  return csv;
}

}  // namespace nmcprof
