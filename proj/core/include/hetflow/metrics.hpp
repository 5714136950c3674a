#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetflow/cluster.hpp"
#include "hetflow/perfmodel.hpp"
#include "hetflow/trace.hpp"
#include "hetflow/workload.hpp"

namespace hetflow {

/// Step function of busy resource units over a run, produced by a sweep over
/// task start/end events. `busy_units` is the denominator for `percent`:
/// total cores for tiling (each task occupies one core), total GPUs for
/// counting. `cap_units` is the scheduler's admission limit (nodes x cap),
/// giving the cap-relative view alongside the hardware-relative one.
struct UtilizationTimeline {
  TaskKind kind = TaskKind::Tiling;
  int busy_units = 0;
  int cap_units = 0;
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  std::vector<std::pair<double, int>> steps; ///< (time, busy count from that time on)

  double busy_integral_s() const; ///< unit-seconds of busy time over the window
  double mean_percent() const;    ///< time-averaged busy / busy_units, in percent
  double mean_percent_of_cap() const;
  int peak_busy() const;
  double peak_percent() const;
  int busy_at(double t) const;
};

UtilizationTimeline compute_utilization(const Trace& trace, const ClusterSpec& cluster,
                                        const ConcurrencyCaps& caps, TaskKind kind,
                                        double window_start_s, double window_end_s);

/// CSV rows `t_s,kind,busy,percent`, one row per step change, both kinds
/// interleaved in time order.
std::string timelines_to_csv(const std::vector<UtilizationTimeline>& timelines);

struct OverheadBreakdown {
  double dataset_discovery_s = 0.0;
  double setup_s = 0.0;
  double distributing_s = 0.0;
  double client_submission_s = 0.0;
  double teardown_s = 0.0;
  /// Span of the run not covered by labeled intervals or the task span.
  double unaccounted_s = 0.0;
  bool accounting_warning = false;

  double total_s() const {
    return dataset_discovery_s + setup_s + distributing_s + client_submission_s + teardown_s;
  }
};

OverheadBreakdown compute_overheads(const RunManifest& manifest);
/// As above, and additionally flags any part of [run_start, run_end] covered
/// neither by a labeled interval nor by [first task start, last task end].
OverheadBreakdown compute_overheads(const RunManifest& manifest, const Trace& trace,
                                    double gap_tolerance_s = 1.0);

struct NodeUsage {
  std::string node_id;
  std::size_t images = 0; ///< images whose tiling task ran on this node
  double mb = 0.0;
};

struct RunReport {
  DesignId design = DesignId::D1;
  std::string backend;
  std::uint64_t seed = 0;
  std::size_t n_images = 0;
  double total_mb = 0.0;
  std::uint64_t workload_fingerprint = 0;
  std::uint64_t cluster_fingerprint = 0;

  double ttc_s = 0.0;
  double cpu_mean_pct = 0.0;
  double cpu_peak_pct = 0.0;
  double cpu_mean_pct_of_cap = 0.0;
  double gpu_mean_pct = 0.0;
  double gpu_peak_pct = 0.0;
  double gpu_mean_pct_of_cap = 0.0;
  OverheadBreakdown overheads;
  std::vector<NodeUsage> per_node;

  /// max/min per-node assigned MB; infinity when some node got nothing.
  double balance_ratio_mb() const;
};

double compute_ttc(const RunManifest& manifest);

RunReport make_report(const RunResult& result, const ClusterSpec& cluster,
                      const ConcurrencyCaps& caps, const Workload& workload);

std::string report_to_json(const RunReport& report);

struct ComparisonRow {
  DesignId design = DesignId::D1;
  std::uint64_t seed = 0;
  double ttc_s = 0.0;
  double cpu_mean_pct = 0.0;
  double gpu_mean_pct = 0.0;
  double overhead_s = 0.0;
  double balance_ratio_mb = 0.0;
};

struct DesignSummary {
  DesignId design = DesignId::D1;
  std::size_t runs = 0;
  std::size_t wins = 0; ///< seeds where this design had the strictly lowest TTC
  double mean_ttc_s = 0.0;
  double min_ttc_s = 0.0;
  double max_ttc_s = 0.0;
  double mean_cpu_pct = 0.0;
  double mean_gpu_pct = 0.0;
  double mean_overhead_s = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<DesignSummary> summaries; ///< ordered by ascending mean TTC
};

/// Requires at least two reports; within a seed all reports must share the
/// workload fingerprint, and the cluster fingerprint must match throughout.
Comparison compare_designs(const std::vector<RunReport>& reports);

std::string comparison_to_csv(const Comparison& comparison);
std::string render_comparison(const Comparison& comparison); ///< aligned text table

} // namespace hetflow
