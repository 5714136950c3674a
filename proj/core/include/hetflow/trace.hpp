#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetflow/cluster.hpp"
#include "hetflow/perfmodel.hpp"
#include "hetflow/workload.hpp"

namespace hetflow {

/// One executed task. All experiment metrics derive from these records.
struct TaskRecord {
  std::string task_id;
  TaskKind kind = TaskKind::Tiling;
  std::string image_id;
  std::string node_id;
  double start_s = 0.0;
  double end_s = 0.0;
  bool ok = true;
};

using Trace = std::vector<TaskRecord>;

/// Labeled non-task interval (overheads: discovery, setup, distributing,
/// client_submission, teardown).
struct LabeledInterval {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
};

/// Everything about a run that is not a task record.
struct RunManifest {
  DesignId design = DesignId::D1;
  std::string backend; // "sim" | "realtime"
  std::uint64_t seed = 0;
  std::size_t n_images = 0;
  double total_mb = 0.0;
  std::uint64_t workload_fingerprint = 0;
  std::uint64_t cluster_fingerprint = 0;
  double poll_interval_s = 1.0;
  std::vector<LabeledInterval> intervals;
  double run_start_s = 0.0;
  double run_end_s = 0.0;
};

struct RunResult {
  Trace trace;
  RunManifest manifest;
};

/// CSV: task_id,kind,image_id,node_id,start_s,end_s,outcome
std::string trace_to_csv(const Trace& trace);
Trace trace_from_csv(const std::string& csv_text, const std::string& origin = "trace");
Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& json_text);
RunManifest load_manifest(const std::string& path);
void save_manifest(const RunManifest& m, const std::string& path);

/// Checks the invariants every trace must satisfy:
///   - exactly-once: each workload image has one tiling and one counting record
///   - affinity: both records of an image name the same node
///   - precedence: counting starts no earlier than tiling ends
///   - cap compliance: per-node concurrent tasks never exceed the caps
///   - sanity: end >= start, node ids known
/// Returns human-readable violations; empty means the trace passed.
std::vector<std::string> audit_trace(const Trace& trace, const ClusterSpec& cluster,
                                     const ConcurrencyCaps& caps, const Workload& workload);

} // namespace hetflow
