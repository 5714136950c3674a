#pragma once

#include <map>
#include <string>
#include <vector>

#include "hetflow/cluster.hpp"
#include "hetflow/perfmodel.hpp"
#include "hetflow/trace.hpp"
#include "hetflow/workload.hpp"

namespace hetflow {

enum class BackendKind { Simulated, Realtime };

std::string to_string(BackendKind b);
BackendKind backend_from_string(const std::string& s);

/// Injected overhead constants for the simulated backend. The realtime
/// backend measures the corresponding phases instead.
struct OverheadConfig {
  double discovery_s_per_image = 0.001; // dataset listing, all designs
  double setup_s = 30.0;                // queue/worker bootstrap, d2 and d2a
  double distributing_s = 7.5;          // partition + preload, d2a only
  double client_submission_s = 0.0;     // d1 client-side submission
  double teardown_s = 0.0;
};

struct DesignConfig {
  DesignId design = DesignId::D1;
  BackendKind backend = BackendKind::Simulated;
  ConcurrencyCaps caps;
  double poll_interval_s = 1.0;
  std::uint64_t seed = 0;
  OverheadConfig overheads;
  /// Per-node CPU performance factor: the node's tiling tasks run
  /// factor-times faster (duration is divided by it). Counting runs on the
  /// GPUs, which are treated as uniform. Default 1.0.
  std::map<std::string, double> t1_speed_multipliers;
  /// Realtime backend only: task sleeps are duration * time_scale, so desk
  /// runs finish quickly. Recorded times are the measured (scaled) ones.
  double time_scale = 1.0;
};

double t1_speed(const DesignConfig& config, const std::string& node_id);

/// Greedy longest-predicted-duration-first assignment: images sorted by
/// predicted duration descending, each placed on the node with the least
/// accumulated predicted load. Max node load is within 4/3 - 1/(3n) of the
/// optimal makespan. Returns n_nodes disjoint lists whose union is the
/// workload.
std::vector<Workload> partition_balanced(const Workload& workload, std::size_t n_nodes,
                                         const ExecTimeModel& model);

/// Pipeline-per-image: every image gets its own two-stage pipeline; tiling
/// goes to the first node with a free slot and counting is pinned to that
/// same node.
RunResult run_design1(const ClusterSpec& cluster, const Workload& workload,
                      const ModelRegistry& models, const DesignConfig& config);

/// Queue-based: one global image queue, one tile queue per node,
/// long-running workers per node pulled from both ends; late binding of
/// images to nodes.
RunResult run_design2(const ClusterSpec& cluster, const Workload& workload,
                      const ModelRegistry& models, const DesignConfig& config);

/// Queue-based with early binding: a balanced partition preloads one image
/// queue per node before the workers start.
RunResult run_design2a(const ClusterSpec& cluster, const Workload& workload,
                       const ModelRegistry& models, const DesignConfig& config);

/// Dispatches on config.design.
RunResult run_design(const ClusterSpec& cluster, const Workload& workload,
                     const ModelRegistry& models, const DesignConfig& config);

namespace detail {
/// Payload carried through the protocol queues: an image or tile-set
/// descriptor. Tile sets are not materialized; the descriptor keeps the
/// originating image's identity and size, which is all the time models need.
std::string encode_descriptor(const ImageSpec& image);
ImageSpec decode_descriptor(const std::string& payload);

/// Independent per-task noise stream: a function of (seed, image, kind)
/// only, so a task's sampled duration does not depend on scheduling order
/// or backend.
Rng task_rng(std::uint64_t seed, const std::string& image_id, TaskKind kind);

RunResult simulate(const ClusterSpec& cluster, const Workload& workload,
                   const ModelRegistry& models, const DesignConfig& config);
RunResult run_realtime(const ClusterSpec& cluster, const Workload& workload,
                       const ModelRegistry& models, const DesignConfig& config);
} // namespace detail

} // namespace hetflow
