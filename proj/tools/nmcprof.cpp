// nmcprof: generate synthetic traces, validate and analyze them, and reduce
// per-app metric reports with PCA. Exit codes: 0 success, 1 trace-validation
// failure (or too few PCA inputs), 2 I/O and parse errors.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmcprof/kernels.hpp"
#include "nmcprof/report.hpp"
#include "nmcprof/trace.hpp"

namespace fs = std::filesystem;
using nmcprof::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

unsigned thread_cap_from_env() {
  unsigned cap = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NMC_PROFILER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
  }
  return cap;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nmcprof::TraceError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw nmcprof::TraceError("write to '" + path + "' failed");
}

int run_gen(const nmcprof::KernelSpec& spec, const std::string& out_path) {
  nmcprof::Trace trace = nmcprof::generate(spec);
  nmcprof::write_trace_file(trace, out_path);
  std::cout << "wrote " << trace.events.size() << " events to " << out_path << "\n";
  return kExitOk;
}

int run_validate(const std::string& path) {
  nmcprof::Trace trace = nmcprof::read_trace_file(path);
  nmcprof::ValidationReport report =
      nmcprof::validate_trace(trace.header, trace.events);
  if (report.clean()) {
    std::cout << path << ": ok (" << trace.events.size() << " events)\n";
    return kExitOk;
  }
  for (const nmcprof::Violation& v : report.violations)
    std::cout << path << ": seq " << v.seq << " thread " << v.thread_id << ": "
              << nmcprof::to_string(v.kind) << ": " << v.detail << "\n";
  std::cout << report.violations.size() << " violation(s)\n";
  return kExitValidation;
}

int run_analyze(const std::string& trace_path, const std::string& out_path,
                nmcprof::AnalysisConfig config, bool force) {
  nmcprof::Trace trace = nmcprof::read_trace_file(trace_path);
  nmcprof::ValidationReport validation =
      nmcprof::validate_trace(trace.header, trace.events);
  if (!validation.clean()) {
    if (!force) {
      std::cerr << "trace '" << trace_path << "' has "
                << validation.violations.size()
                << " validation violation(s); rerun with --force to analyze anyway\n";
      return kExitValidation;
    }
    std::cerr << "warning: analyzing invalid trace ("
              << validation.violations.size() << " violation(s))\n";
  }

  const std::uint64_t checksum = nmcprof::fnv1a64_file(trace_path);
  ordered_json report =
      nmcprof::analyze_trace(trace, config, fs::path(trace_path).filename().string(),
                             checksum, force);
  write_text_file(out_path, report.dump(2) + "\n");
  std::cout << "wrote report to " << out_path << "\n";
  return kExitOk;
}

int run_pca(const std::string& report_dir, const std::vector<std::string>& features,
            std::size_t k, const std::string& out_path, const std::string& csv_path) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(report_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());

  std::vector<nmcprof::AppFeatures> apps;
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw nmcprof::TraceError("cannot open '" + file + "'");
    ordered_json doc = ordered_json::parse(in);
    if (!doc.contains("schema") || doc["schema"] != "nmc-report/1") continue;
    apps.push_back(nmcprof::extract_features(doc));
  }
  if (apps.size() < 2) {
    std::cerr << "need >= 2 applications, found " << apps.size() << " report(s) in '"
              << report_dir << "'\n";
    return kExitValidation;
  }

  nmcprof::FeatureMatrix matrix = nmcprof::assemble(apps, features);
  nmcprof::PcaResult result = nmcprof::pca_pipeline(matrix, k);
  std::vector<std::string> quadrants =
      result.loadings.size() >= 2
          ? nmcprof::quadrant_report(result)
          : std::vector<std::string>(matrix.app_names.size(), "on-axis");

  write_text_file(out_path,
                  nmcprof::pca_to_json(result, matrix.app_names, quadrants).dump(2) +
                      "\n");
  std::cout << "wrote " << out_path << "\n";
  if (!csv_path.empty()) {
    write_text_file(csv_path,
                    nmcprof::scores_to_csv(result, matrix.app_names, quadrants));
    std::cout << "wrote " << csv_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nmcprof: trace-driven workload characterization for near-memory computing"};
  app.require_subcommand(1);

  // --- gen ---
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic trace");
  gen->require_subcommand(1);
  std::string gen_out = "trace.nmct";
  std::string gen_app_name;
  nmcprof::KernelSpec spec;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--out", gen_out, "output trace path")->capture_default_str();
    sub->add_option("--app", gen_app_name, "app name recorded in the header");
  };
  CLI::App* g_stream = gen->add_subcommand("stream", "sequential strided loads");
  g_stream->add_option("--n", spec.n, "number of loads")->default_val(1024);
  g_stream->add_option("--stride", spec.stride_bytes, "stride in bytes")
      ->default_val(8);
  g_stream->add_option("--base", spec.base_addr, "base address")->default_val(0);
  add_common(g_stream);

  CLI::App* g_random = gen->add_subcommand("random", "uniform random loads");
  g_random->add_option("--n", spec.n, "number of loads")->default_val(1024);
  g_random->add_option("--space", spec.space_bytes, "address space in bytes")
      ->default_val(1 << 20);
  g_random->add_option("--seed", spec.seed, "PRNG seed")->default_val(1);
  add_common(g_random);

  CLI::App* g_chain = gen->add_subcommand("chain", "serial dependence chain of adds");
  g_chain->add_option("--n", spec.n, "number of adds")->default_val(64);
  add_common(g_chain);

  CLI::App* g_parallel = gen->add_subcommand("parallel", "independent adds");
  g_parallel->add_option("--n", spec.n, "number of adds")->default_val(64);
  add_common(g_parallel);

  CLI::App* g_dploop = gen->add_subcommand("dploop", "data-parallel loop");
  g_dploop->add_option("--instances", spec.instances, "loop iterations")
      ->default_val(16);
  g_dploop->add_option("--body", spec.body_len, "instructions per iteration")
      ->default_val(4);
  g_dploop->add_flag("--carried", spec.carried, "add a loop-carried dependence");
  add_common(g_dploop);

  CLI::App* g_matmul = gen->add_subcommand("matmul", "naive triple-loop matmul");
  g_matmul->add_option("--dim", spec.dim, "matrix dimension")->default_val(8);
  add_common(g_matmul);

  // --- validate ---
  CLI::App* validate = app.add_subcommand("validate", "check trace invariants");
  std::string validate_path;
  validate->add_option("trace", validate_path, "trace file")->required();

  // --- analyze ---
  CLI::App* analyze = app.add_subcommand("analyze", "compute the metric report");
  std::string analyze_path, analyze_out = "report.json", config_path;
  bool force = false;
  nmcprof::AnalysisConfig config;
  analyze->add_option("trace", analyze_path, "trace file")->required();
  analyze->add_option("-o,--out", analyze_out, "report path")->capture_default_str();
  CLI::Option* opt_max_line =
      analyze
          ->add_option("--max-line", config.max_line_bytes,
                       "largest reuse line size in bytes")
          ->capture_default_str();
  CLI::Option* opt_cuts =
      analyze
          ->add_option("--cuts", config.entropy_cuts,
                       "entropy LSB cuts (strictly increasing, first 0)")
          ->delimiter(',')
          ->capture_default_str();
  CLI::Option* opt_mem_deps = analyze->add_flag(
      "--mem-deps", config.memory_carried_deps,
      "honor store->load ordering in the schedulers");
  std::vector<std::string> policies = {"full", "smart"};
  CLI::Option* opt_policies =
      analyze->add_option("--policies", policies, "block scheduling policies to run")
          ->delimiter(',')
          ->check(CLI::IsMember({"full", "smart"}))
          ->capture_default_str();
  analyze->add_flag("--force", force, "analyze even when validation fails");
  analyze->add_option("--config", config_path,
                      "TOML or JSON config file (keys: max_line, entropy_cuts, "
                      "memory_carried_deps, policies); flags override it");

  // --- pca ---
  CLI::App* pca = app.add_subcommand("pca", "PCA over a directory of reports");
  std::string pca_dir, pca_out = "pca.json", pca_csv;
  std::vector<std::string> features = nmcprof::kDefaultPcaFeatures;
  std::size_t pca_k = 2;
  pca->add_option("reports", pca_dir, "directory of nmc-report/1 JSON files")
      ->required();
  pca->add_option("-o,--out", pca_out, "output path")->capture_default_str();
  pca->add_option("--csv", pca_csv, "also write a scores CSV");
  pca->add_option("--features", features, "feature selection")
      ->delimiter(',')
      ->capture_default_str();
  pca->add_option("-k,--components", pca_k, "number of components")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      for (const auto& [name, kind] :
           {std::pair{g_stream, nmcprof::KernelKind::Stream},
            {g_random, nmcprof::KernelKind::Random},
            {g_chain, nmcprof::KernelKind::Chain},
            {g_parallel, nmcprof::KernelKind::Parallel},
            {g_dploop, nmcprof::KernelKind::Dploop},
            {g_matmul, nmcprof::KernelKind::Matmul}}) {
        if (name->parsed()) spec.kind = kind;
      }
      spec.app_name = gen_app_name;
      return run_gen(spec, gen_out);
    }
    if (validate->parsed()) return run_validate(validate_path);
    if (analyze->parsed()) {
      if (!config_path.empty()) {
        // the file sets the baseline, explicit flags win
        nmcprof::AnalysisConfig from_file = nmcprof::load_analysis_config(config_path);
        if (opt_max_line->count() == 0) config.max_line_bytes = from_file.max_line_bytes;
        if (opt_cuts->count() == 0) config.entropy_cuts = from_file.entropy_cuts;
        if (opt_mem_deps->count() == 0)
          config.memory_carried_deps = from_file.memory_carried_deps;
        if (opt_policies->count() == 0) {
          config.run_bblp_full = from_file.run_bblp_full;
          config.run_bblp_smart = from_file.run_bblp_smart;
        }
      }
      if (opt_policies->count() > 0 || config_path.empty()) {
        config.run_bblp_full =
            std::find(policies.begin(), policies.end(), "full") != policies.end();
        config.run_bblp_smart =
            std::find(policies.begin(), policies.end(), "smart") != policies.end();
      }
      config.max_threads = thread_cap_from_env();
      return run_analyze(analyze_path, analyze_out, config, force);
    }
    if (pca->parsed()) return run_pca(pca_dir, features, pca_k, pca_out, pca_csv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
