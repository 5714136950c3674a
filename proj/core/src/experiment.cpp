#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/experiment.hpp"
#include "hetflow/io_util.hpp"

namespace hetflow {

namespace {

const std::set<std::string> kPlanKeys = {
    "workload", "cluster",   "caps",      "models",     "designs",   "seeds",
    "backend",  "poll_interval_s", "overheads", "t1_speed_multipliers",
    "time_scale", "out_dir"};

WorkloadSpec reference_workload_spec() {
  WorkloadSpec spec;
  spec.count = 200;
  spec.mean_mb = 1304.85;
  spec.std_mb = 512.68;
  spec.min_mb = 50.0;
  spec.max_mb = 2770.0;
  spec.seed = 0;
  return spec;
}

void parse_workload_source(const nlohmann::json& j, WorkloadSource& out) {
  if (j.contains("manifest")) {
    out.manifest_path = j.at("manifest").get<std::string>();
    out.generator.reset();
    return;
  }
  WorkloadSpec spec = out.generator.value_or(reference_workload_spec());
  if (j.contains("count"))
    spec.count = j.at("count").get<std::size_t>();
  if (j.contains("mean_mb"))
    spec.mean_mb = j.at("mean_mb").get<double>();
  if (j.contains("std_mb"))
    spec.std_mb = j.at("std_mb").get<double>();
  if (j.contains("min_mb"))
    spec.min_mb = j.at("min_mb").get<double>();
  if (j.contains("max_mb"))
    spec.max_mb = j.at("max_mb").get<double>();
  if (j.contains("seed")) {
    spec.seed = j.at("seed").get<std::uint64_t>();
    out.generator_seed_fixed = true;
  }
  out.generator = spec;
  out.manifest_path.reset();
}

void parse_overheads(const nlohmann::json& j, OverheadConfig& out) {
  if (j.contains("discovery_s_per_image"))
    out.discovery_s_per_image = j.at("discovery_s_per_image").get<double>();
  if (j.contains("setup_s"))
    out.setup_s = j.at("setup_s").get<double>();
  if (j.contains("distributing_s"))
    out.distributing_s = j.at("distributing_s").get<double>();
  if (j.contains("client_submission_s"))
    out.client_submission_s = j.at("client_submission_s").get<double>();
  if (j.contains("teardown_s"))
    out.teardown_s = j.at("teardown_s").get<double>();
}

} // namespace

Workload WorkloadSource::realize(std::uint64_t run_seed) const {
  if (manifest_path)
    return load_workload(*manifest_path);
  if (!generator)
    throw ConfigError("workload source is empty");
  WorkloadSpec spec = *generator;
  if (!generator_seed_fixed)
    spec.seed = run_seed;
  return generate_workload(spec);
}

ExperimentPlan reference_plan() {
  ExperimentPlan plan;
  plan.workload.generator = reference_workload_spec();
  plan.workload.generator_seed_fixed = false;
  plan.cluster = reference_cluster();
  plan.caps = reference_caps();
  plan.models = default_registry();
  plan.designs = {DesignId::D1, DesignId::D2, DesignId::D2A};
  plan.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return plan;
}

ExperimentPlan plan_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad plan JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("bad plan JSON: expected an object");
  for (const auto& [key, _] : j.items())
    if (!kPlanKeys.count(key))
      throw ConfigError("bad plan JSON: unknown key '" + key + "'");

  ExperimentPlan plan = reference_plan();
  try {
    if (j.contains("workload"))
      parse_workload_source(j.at("workload"), plan.workload);
    if (j.contains("cluster")) {
      auto [cluster, caps] = j.at("cluster").is_string()
                                 ? load_cluster(j.at("cluster").get<std::string>())
                                 : cluster_from_json(j.at("cluster").dump());
      plan.cluster = std::move(cluster);
      plan.caps = caps;
    }
    if (j.contains("caps")) {
      const auto& c = j.at("caps");
      if (c.contains("max_t1_per_node"))
        plan.caps.max_t1_per_node = c.at("max_t1_per_node").get<int>();
      if (c.contains("max_t2_per_node"))
        plan.caps.max_t2_per_node = c.at("max_t2_per_node").get<int>();
      if (c.contains("mem_per_t1_gb"))
        plan.caps.mem_per_t1_gb = c.at("mem_per_t1_gb").get<double>();
      if (c.contains("mem_per_t2_gb"))
        plan.caps.mem_per_t2_gb = c.at("mem_per_t2_gb").get<double>();
    }
    if (j.contains("models"))
      plan.models = j.at("models").is_string()
                        ? ModelRegistry::load(j.at("models").get<std::string>())
                        : ModelRegistry::from_json(j.at("models").dump());
    if (j.contains("designs")) {
      plan.designs.clear();
      for (const auto& d : j.at("designs"))
        plan.designs.push_back(design_from_string(d.get<std::string>()));
      if (plan.designs.empty())
        throw ConfigError("bad plan JSON: designs must be non-empty");
    }
    if (j.contains("seeds")) {
      plan.seeds.clear();
      for (const auto& s : j.at("seeds"))
        plan.seeds.push_back(s.get<std::uint64_t>());
      if (plan.seeds.empty())
        throw ConfigError("bad plan JSON: seeds must be non-empty");
    }
    if (j.contains("backend"))
      plan.backend = backend_from_string(j.at("backend").get<std::string>());
    if (j.contains("poll_interval_s"))
      plan.poll_interval_s = j.at("poll_interval_s").get<double>();
    if (j.contains("overheads"))
      parse_overheads(j.at("overheads"), plan.overheads);
    if (j.contains("t1_speed_multipliers"))
      for (const auto& [node, factor] : j.at("t1_speed_multipliers").items())
        plan.t1_speed_multipliers[node] = factor.get<double>();
    if (j.contains("time_scale"))
      plan.time_scale = j.at("time_scale").get<double>();
    if (j.contains("out_dir"))
      plan.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad plan JSON: ") + e.what());
  }

  if (const char* env = std::getenv("HETFLOW_OUT"); env && *env)
    plan.out_dir = env;
  return plan;
}

ExperimentPlan load_plan(const std::string& path) { return plan_from_json(read_file(path)); }

DesignConfig design_config_for(const ExperimentPlan& plan, DesignId design, std::uint64_t seed) {
  DesignConfig cfg;
  cfg.design = design;
  cfg.backend = plan.backend;
  cfg.caps = plan.caps;
  cfg.poll_interval_s = plan.poll_interval_s;
  cfg.seed = seed;
  cfg.overheads = plan.overheads;
  cfg.t1_speed_multipliers = plan.t1_speed_multipliers;
  cfg.time_scale = plan.time_scale;
  return cfg;
}

ExecutedRun execute_run(const ExperimentPlan& plan, DesignId design, std::uint64_t seed,
                        const Workload& workload, bool write_files) {
  DesignConfig cfg = design_config_for(plan, design, seed);
  RunResult result = run_design(plan.cluster, workload, plan.models, cfg);

  auto violations = audit_trace(result.trace, plan.cluster, plan.caps, workload);
  if (!violations.empty()) {
    std::string msg = "trace audit failed for " + to_string(design) + " seed " +
                      std::to_string(seed) + ":";
    for (const auto& v : violations)
      msg += "\n  " + v;
    throw InputError(msg);
  }

  ExecutedRun run;
  run.report = make_report(result, plan.cluster, plan.caps, workload);

  if (write_files) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(plan.out_dir) / (to_string(design) + "-seed" + std::to_string(seed));
    atomic_write_file((dir / "trace.csv").string(), trace_to_csv(result.trace));
    atomic_write_file((dir / "manifest.json").string(), manifest_to_json(result.manifest));
    atomic_write_file((dir / "report.json").string(), report_to_json(run.report));
    auto cpu = compute_utilization(result.trace, plan.cluster, plan.caps, TaskKind::Tiling,
                                   result.manifest.run_start_s, result.manifest.run_end_s);
    auto gpu = compute_utilization(result.trace, plan.cluster, plan.caps, TaskKind::Counting,
                                   result.manifest.run_start_s, result.manifest.run_end_s);
    atomic_write_file((dir / "utilization.csv").string(), timelines_to_csv({cpu, gpu}));
    std::ostringstream wl;
    write_workload_csv(workload, wl);
    atomic_write_file((dir / "workload.csv").string(), wl.str());
    run.dir = dir.string();
  }
  run.result = std::move(result);
  return run;
}

std::vector<ExecutedRun> run_plan(const ExperimentPlan& plan, bool write_files) {
  if (plan.designs.empty() || plan.seeds.empty())
    throw ConfigError("plan: designs and seeds must be non-empty");
  std::vector<ExecutedRun> runs;
  for (std::uint64_t seed : plan.seeds) {
    Workload workload = plan.workload.realize(seed);
    for (DesignId design : plan.designs)
      runs.push_back(execute_run(plan, design, seed, workload, write_files));
  }
  return runs;
}

} // namespace hetflow
