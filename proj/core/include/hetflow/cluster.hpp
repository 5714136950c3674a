#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "hetflow/perfmodel.hpp" // TaskKind

namespace hetflow {

struct NodeSpec {
  std::string id;
  int cpu_cores = 0;
  int gpus = 0;
  double memory_gb = 0.0;
};

struct ClusterSpec {
  std::vector<NodeSpec> nodes;

  int total_cpus() const;
  int total_gpus() const;
  bool homogeneous() const;
  const NodeSpec& node(const std::string& id) const;
  std::uint64_t fingerprint() const;
};

/// Per-node concurrency limits. Memory is enforced indirectly through these
/// caps (cap * per-task memory must fit in node RAM); the ledger itself
/// counts slots, not bytes.
struct ConcurrencyCaps {
  int max_t1_per_node = 1;
  int max_t2_per_node = 1;
  double mem_per_t1_gb = 0.0;
  double mem_per_t2_gb = 0.0;

  int cap(TaskKind k) const {
    return k == TaskKind::Tiling ? max_t1_per_node : max_t2_per_node;
  }
};

/// Throws ConfigError when a node or the caps violate the resource model
/// (g > c, caps exceeding memory, GPU cap above GPU count, ...).
void validate(const NodeSpec& node);
void validate(const ClusterSpec& cluster);
void validate(const ClusterSpec& cluster, const ConcurrencyCaps& caps);

/// Tracks busy task slots per node. Linearizable: the realtime backend calls
/// it from concurrent workers, the simulator from its single event loop.
class SlotLedger {
public:
  SlotLedger(const ClusterSpec& cluster, const ConcurrencyCaps& caps);

  /// Grants a slot and returns true iff the node's busy count for the kind
  /// is below its cap. A denial leaves the ledger unchanged.
  bool try_acquire(const std::string& node_id, TaskKind kind);

  /// Throws std::logic_error on release without a matching acquire.
  void release(const std::string& node_id, TaskKind kind);

  int busy(const std::string& node_id, TaskKind kind) const;

private:
  struct Counts {
    int t1 = 0;
    int t2 = 0;
  };
  int& slot(Counts& c, TaskKind k) const {
    return k == TaskKind::Tiling ? c.t1 : c.t2;
  }

  mutable std::mutex mu_;
  ConcurrencyCaps caps_;
  std::map<std::string, Counts> busy_;
};

/// (cpu_fraction, gpu_fraction) achievable under the caps on a homogeneous
/// cluster: cap_t1 / c and cap_t2 / g. Heterogeneous clusters are not
/// supported (throws ConfigError).
std::pair<double, double> theoretical_max_utilization(const ClusterSpec& cluster,
                                                      const ConcurrencyCaps& caps);

/// JSON form: {"nodes":[{"id","cpu_cores","gpus","memory_gb"}],
///             "caps":{"max_t1_per_node",...}}
std::string cluster_to_json(const ClusterSpec& cluster, const ConcurrencyCaps& caps);
std::pair<ClusterSpec, ConcurrencyCaps> cluster_from_json(const std::string& json_text);
std::pair<ClusterSpec, ConcurrencyCaps> load_cluster(const std::string& path);

/// 4 nodes x (32 cores, 2 GPUs, 128 GB), caps (3, 2).
ClusterSpec reference_cluster();
ConcurrencyCaps reference_caps();

} // namespace hetflow
