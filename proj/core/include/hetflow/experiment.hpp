#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hetflow/cluster.hpp"
#include "hetflow/designs.hpp"
#include "hetflow/metrics.hpp"
#include "hetflow/perfmodel.hpp"
#include "hetflow/workload.hpp"

namespace hetflow {

/// Where a run's images come from: a manifest on disk, or a generator spec.
/// With a generator and no fixed seed, each run seed draws its own sample so
/// multi-seed studies average over workloads as well as task noise.
struct WorkloadSource {
  std::optional<std::string> manifest_path;
  std::optional<WorkloadSpec> generator;
  bool generator_seed_fixed = false;

  Workload realize(std::uint64_t run_seed) const;
};

struct ExperimentPlan {
  WorkloadSource workload;
  ClusterSpec cluster;
  ConcurrencyCaps caps;
  ModelRegistry models;
  std::vector<DesignId> designs;
  std::vector<std::uint64_t> seeds;
  BackendKind backend = BackendKind::Simulated;
  double poll_interval_s = 1.0;
  OverheadConfig overheads;
  std::map<std::string, double> t1_speed_multipliers;
  double time_scale = 1.0;
  std::string out_dir = "hetflow-out";
};

/// Baseline study: 200-image truncated-normal sample per seed, the 4-node
/// reference cluster, all three designs on the simulated backend, seeds 1-10.
ExperimentPlan reference_plan();

/// Parse a plan from JSON text. Unknown keys are rejected; absent keys keep
/// the reference-plan defaults. The HETFLOW_OUT environment variable, when
/// set, overrides the file's output directory.
ExperimentPlan plan_from_json(const std::string& text);
ExperimentPlan load_plan(const std::string& path);

struct ExecutedRun {
  RunReport report;
  RunResult result;
  std::string dir; ///< empty when files were not written
};

DesignConfig design_config_for(const ExperimentPlan& plan, DesignId design, std::uint64_t seed);

/// Run one (design, seed) cell. When `write_files` is set, emits
/// trace.csv, manifest.json, report.json, utilization.csv, and workload.csv
/// under `<out_dir>/<design>-seed<seed>/`, all written atomically.
/// Throws InputError when the resulting trace fails the audit.
ExecutedRun execute_run(const ExperimentPlan& plan, DesignId design, std::uint64_t seed,
                        const Workload& workload, bool write_files);

std::vector<ExecutedRun> run_plan(const ExperimentPlan& plan, bool write_files);

} // namespace hetflow
