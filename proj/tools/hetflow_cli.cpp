#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/experiment.hpp"
#include "hetflow/io_util.hpp"
#include "hetflow/metrics.hpp"

namespace {

using namespace hetflow;

// "1,2,5" or "1..10", mixed freely: "1..3,7"
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty())
      continue;
    auto dots = token.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(std::stoull(token));
    } else {
      std::uint64_t lo = std::stoull(token.substr(0, dots));
      std::uint64_t hi = std::stoull(token.substr(dots + 2));
      if (hi < lo)
        throw ConfigError("bad seed range '" + token + "'");
      for (std::uint64_t s = lo; s <= hi; ++s)
        seeds.push_back(s);
    }
  }
  if (seeds.empty())
    throw ConfigError("seed list '" + text + "' is empty");
  return seeds;
}

std::vector<DesignId> parse_design_list(const std::string& text) {
  std::vector<DesignId> designs;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ','))
    if (!token.empty())
      designs.push_back(design_from_string(token));
  if (designs.empty())
    throw ConfigError("design list '" + text + "' is empty");
  return designs;
}

std::map<std::string, double> parse_speed_list(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("bad --speed '" + item + "' (expected node=factor)");
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    atomic_write_file(out_path, content);
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
  WorkloadSpec spec;
  std::string out_path;
};

int cmd_generate(const GenerateOpts& o) {
  Workload wl = generate_workload(o.spec);
  std::ostringstream csv;
  write_workload_csv(wl, csv);
  emit(o.out_path, csv.str());
  std::cerr << "generated " << wl.size() << " images, " << format_double(total_size_mb(wl))
            << " MB total\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitOpts {
  std::string pairs_path;
  std::string trace_path;
  std::string workload_path;
  std::string kind = "tiling";
  bool restrict_bins = false;
  int first_bin = 4;
  int last_bin = 18;
  double bin_lo = kDefaultBinLoMb;
  double bin_width = kDefaultBinWidthMb;
  int bin_count = kDefaultBinCount;
  std::string bins_out;
  std::string out_path;
};

std::vector<SizeDurationPair> read_pairs_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw InputError(path + ": empty pairs file");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != "size_mb,duration_s")
    throw InputError(path + ": expected header 'size_mb,duration_s', got '" + line + "'");
  std::vector<SizeDurationPair> pairs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError(path + ": row " + std::to_string(row) + " is not 'size,duration'");
    try {
      pairs.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw InputError(path + ": row " + std::to_string(row) + " has a malformed number");
    }
  }
  return pairs;
}

std::vector<SizeDurationPair> pairs_from_trace(const FitOpts& o) {
  Trace trace = load_trace(o.trace_path);
  Workload wl = load_workload(o.workload_path);
  TaskKind kind = kind_from_string(o.kind);
  std::map<std::string, double> size_of;
  for (const auto& img : wl)
    size_of[img.id] = img.size_mb;
  std::vector<SizeDurationPair> pairs;
  for (const auto& r : trace) {
    if (r.kind != kind)
      continue;
    auto it = size_of.find(r.image_id);
    if (it == size_of.end())
      throw InputError("trace image '" + r.image_id + "' is not in the workload manifest");
    pairs.emplace_back(it->second, r.end_s - r.start_s);
  }
  return pairs;
}

int cmd_fit(const FitOpts& o) {
  if (o.pairs_path.empty() == o.trace_path.empty())
    throw ConfigError("fit: pass exactly one of --pairs or --trace (with --workload)");
  std::vector<SizeDurationPair> pairs =
      o.pairs_path.empty() ? pairs_from_trace(o) : read_pairs_csv(o.pairs_path);

  if (!o.bins_out.empty()) {
    auto bins = bin_by_size(pairs, o.bin_width, o.bin_lo, o.bin_lo + o.bin_width * o.bin_count);
    atomic_write_file(o.bins_out, bins_to_csv(bins));
  }
  if (o.restrict_bins)
    pairs = restrict_to_representative_bins(pairs, o.first_bin, o.last_bin, o.bin_lo,
                                            o.bin_width, o.bin_count);

  FitResult fit = fit_linear(pairs);
  emit(o.out_path, fit_result_to_json(fit));
  return 0;
}

// ---------------------------------------------------------------------------

struct PlanOpts {
  std::string config_path;
  std::string designs;
  std::string seeds;
  std::string backend;
  std::string out_dir;
  std::string workload_path;
  std::string cluster_path;
  std::string models_path;
  double poll = -1.0;
  double time_scale = -1.0;
  std::vector<std::string> speed;
  // generator overrides
  std::int64_t count = -1;
  double mean = -1.0, stddev = -1.0, minv = -1.0, maxv = -1.0;
  std::int64_t workload_seed = -1;
};

ExperimentPlan build_plan(const PlanOpts& o) {
  ExperimentPlan plan;
  if (!o.config_path.empty()) {
    plan = load_plan(o.config_path);
  } else {
    plan = reference_plan();
    if (const char* env = std::getenv("HETFLOW_OUT"); env && *env)
      plan.out_dir = env;
  }
  if (!o.designs.empty())
    plan.designs = parse_design_list(o.designs);
  if (!o.seeds.empty())
    plan.seeds = parse_seed_list(o.seeds);
  if (!o.backend.empty())
    plan.backend = backend_from_string(o.backend);
  if (!o.out_dir.empty())
    plan.out_dir = o.out_dir;
  if (!o.workload_path.empty()) {
    plan.workload.manifest_path = o.workload_path;
    plan.workload.generator.reset();
  }
  if (o.count >= 0 || o.mean > 0 || o.stddev > 0 || o.minv > 0 || o.maxv > 0 ||
      o.workload_seed >= 0) {
    if (plan.workload.manifest_path)
      throw ConfigError("cannot combine generator flags with a workload manifest");
    WorkloadSpec spec = plan.workload.generator.value_or(WorkloadSpec{});
    if (o.count >= 0)
      spec.count = static_cast<std::size_t>(o.count);
    if (o.mean > 0)
      spec.mean_mb = o.mean;
    if (o.stddev > 0)
      spec.std_mb = o.stddev;
    if (o.minv > 0)
      spec.min_mb = o.minv;
    if (o.maxv > 0)
      spec.max_mb = o.maxv;
    if (o.workload_seed >= 0) {
      spec.seed = static_cast<std::uint64_t>(o.workload_seed);
      plan.workload.generator_seed_fixed = true;
    }
    plan.workload.generator = spec;
  }
  if (!o.cluster_path.empty()) {
    auto [cluster, caps] = load_cluster(o.cluster_path);
    plan.cluster = std::move(cluster);
    plan.caps = caps;
  }
  if (!o.models_path.empty())
    plan.models = ModelRegistry::load(o.models_path);
  if (o.poll > 0)
    plan.poll_interval_s = o.poll;
  if (o.time_scale > 0)
    plan.time_scale = o.time_scale;
  for (const auto& [node, factor] : parse_speed_list(o.speed))
    plan.t1_speed_multipliers[node] = factor;
  return plan;
}

int cmd_run(const PlanOpts& o) {
  ExperimentPlan plan = build_plan(o);
  if (plan.designs.size() != 1)
    throw ConfigError("run: exactly one design required (use --design or compare)");
  if (plan.seeds.size() != 1)
    throw ConfigError("run: exactly one seed required (use --seed or compare)");
  Workload workload = plan.workload.realize(plan.seeds.front());
  ExecutedRun run = execute_run(plan, plan.designs.front(), plan.seeds.front(), workload, true);
  std::cout << report_to_json(run.report);
  std::cerr << "wrote " << run.dir << "\n";
  return 0;
}

int cmd_compare(const PlanOpts& o) {
  ExperimentPlan plan = build_plan(o);
  auto runs = run_plan(plan, true);
  std::vector<RunReport> reports;
  reports.reserve(runs.size());
  for (const auto& r : runs)
    reports.push_back(r.report);

  if (reports.size() >= 2) {
    Comparison cmp = compare_designs(reports);
    namespace fs = std::filesystem;
    atomic_write_file((fs::path(plan.out_dir) / "comparison.csv").string(),
                      comparison_to_csv(cmp));
    std::string table = render_comparison(cmp);
    atomic_write_file((fs::path(plan.out_dir) / "summary.txt").string(), table);
    std::cout << table;
  } else {
    // Degenerate single-run comparison: still emit the one-row table.
    const RunReport& r = reports.front();
    Comparison cmp;
    cmp.rows.push_back({r.design, r.seed, r.ttc_s, r.cpu_mean_pct, r.gpu_mean_pct,
                        r.overheads.total_s(), r.balance_ratio_mb()});
    DesignSummary s;
    s.design = r.design;
    s.runs = 1;
    s.wins = 1;
    s.mean_ttc_s = s.min_ttc_s = s.max_ttc_s = r.ttc_s;
    s.mean_cpu_pct = r.cpu_mean_pct;
    s.mean_gpu_pct = r.gpu_mean_pct;
    s.mean_overhead_s = r.overheads.total_s();
    cmp.summaries.push_back(s);
    namespace fs = std::filesystem;
    atomic_write_file((fs::path(plan.out_dir) / "comparison.csv").string(),
                      comparison_to_csv(cmp));
    std::string table = render_comparison(cmp);
    atomic_write_file((fs::path(plan.out_dir) / "summary.txt").string(), table);
    std::cout << table;
  }
  std::cerr << "wrote " << plan.out_dir << " (" << runs.size() << " runs)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetflow: two-stage heterogeneous workflow design analysis"};
  app.require_subcommand(1);

  GenerateOpts gen;
  gen.spec.count = 200;
  gen.spec.mean_mb = 1304.85;
  gen.spec.std_mb = 512.68;
  gen.spec.min_mb = 50.0;
  gen.spec.max_mb = 2770.0;
  gen.spec.seed = 1;
  auto* generate = app.add_subcommand("generate", "Sample a workload manifest");
  generate->add_option("--count", gen.spec.count, "Number of images");
  generate->add_option("--mean", gen.spec.mean_mb, "Mean image size (MB)");
  generate->add_option("--std", gen.spec.std_mb, "Size standard deviation (MB)");
  generate->add_option("--min", gen.spec.min_mb, "Minimum size (MB)");
  generate->add_option("--max", gen.spec.max_mb, "Maximum size (MB)");
  generate->add_option("--seed", gen.spec.seed, "Generator seed");
  generate->add_option("--out", gen.out_path, "Output manifest path (default stdout)");

  FitOpts fit;
  auto* fitc = app.add_subcommand("fit", "Fit the linear execution-time model");
  fitc->add_option("--pairs", fit.pairs_path, "CSV of size_mb,duration_s pairs");
  fitc->add_option("--trace", fit.trace_path, "Trace CSV to fit from");
  fitc->add_option("--workload", fit.workload_path, "Workload manifest for --trace sizes");
  fitc->add_option("--kind", fit.kind, "Task kind to fit from a trace (tiling|counting)");
  fitc->add_flag("--restrict", fit.restrict_bins, "Keep only the representative size bins");
  fitc->add_option("--first-bin", fit.first_bin, "First representative bin (1-based)");
  fitc->add_option("--last-bin", fit.last_bin, "Last representative bin (1-based)");
  fitc->add_option("--bin-lo", fit.bin_lo, "Lower edge of the binning grid (MB)");
  fitc->add_option("--bin-width", fit.bin_width, "Bin width (MB)");
  fitc->add_option("--bin-count", fit.bin_count, "Number of bins in the grid");
  fitc->add_option("--bins-out", fit.bins_out, "Also write per-bin statistics CSV here");
  fitc->add_option("--out", fit.out_path, "Fit JSON output path (default stdout)");

  PlanOpts run_opts;
  auto add_plan_flags = [](CLI::App* cmd, PlanOpts& o, bool single) {
    cmd->add_option("--config", o.config_path, "Experiment plan JSON");
    if (single) {
      cmd->add_option("--design", o.designs, "Design to run (d1|d2|d2a)");
      cmd->add_option("--seed", o.seeds, "Run seed");
    } else {
      cmd->add_option("--designs", o.designs, "Comma-separated designs (default all)");
      cmd->add_option("--seeds", o.seeds, "Seed list, e.g. 1..10 or 1,2,5");
    }
    cmd->add_option("--backend", o.backend, "sim | realtime");
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--workload", o.workload_path, "Workload manifest path");
    cmd->add_option("--count", o.count, "Generated workload: image count");
    cmd->add_option("--mean", o.mean, "Generated workload: mean size (MB)");
    cmd->add_option("--std", o.stddev, "Generated workload: size std (MB)");
    cmd->add_option("--min", o.minv, "Generated workload: min size (MB)");
    cmd->add_option("--max", o.maxv, "Generated workload: max size (MB)");
    cmd->add_option("--workload-seed", o.workload_seed,
                    "Fix the workload sample seed across runs");
    cmd->add_option("--cluster", o.cluster_path, "Cluster config JSON path");
    cmd->add_option("--models", o.models_path, "Model registry JSON path");
    cmd->add_option("--poll", o.poll, "Receiver poll interval (s)");
    cmd->add_option("--time-scale", o.time_scale, "Realtime backend sleep scale");
    cmd->add_option("--speed", o.speed, "Per-node tiling speed factor, node=factor");
  };
  auto* runc = app.add_subcommand("run", "Run one design on one seed");
  add_plan_flags(runc, run_opts, true);

  PlanOpts cmp_opts;
  auto* cmpc = app.add_subcommand("compare", "Run designs x seeds and compare");
  add_plan_flags(cmpc, cmp_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cmd_generate(gen);
    if (fitc->parsed())
      return cmd_fit(fit);
    if (runc->parsed())
      return cmd_run(run_opts);
    if (cmpc->parsed())
      return cmd_compare(cmp_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
