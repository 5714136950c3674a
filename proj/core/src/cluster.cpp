#include "hetflow/cluster.hpp"

#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/io_util.hpp"

namespace hetflow {

int ClusterSpec::total_cpus() const {
  int n = 0;
  for (const auto& node : nodes)
    n += node.cpu_cores;
  return n;
}

int ClusterSpec::total_gpus() const {
  int n = 0;
  for (const auto& node : nodes)
    n += node.gpus;
  return n;
}

bool ClusterSpec::homogeneous() const {
  for (const auto& node : nodes)
    if (node.cpu_cores != nodes.front().cpu_cores || node.gpus != nodes.front().gpus ||
        node.memory_gb != nodes.front().memory_gb)
      return false;
  return true;
}

const NodeSpec& ClusterSpec::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id)
      return n;
  throw InputError("unknown node '" + id + "'");
}

std::uint64_t ClusterSpec::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& n : nodes) {
    h = fnv1a(n.id, h);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "|%d|%d|%.17g", n.cpu_cores, n.gpus, n.memory_gb);
    h = fnv1a(buf, h);
  }
  return h;
}

void validate(const NodeSpec& node) {
  if (node.id.empty())
    throw ConfigError("node id must be non-empty");
  if (node.cpu_cores <= 0)
    throw ConfigError("node " + node.id + ": cpu_cores must be positive");
  if (node.gpus < 0)
    throw ConfigError("node " + node.id + ": gpus must be non-negative");
  if (node.gpus > node.cpu_cores)
    throw ConfigError("node " + node.id + ": gpus must not exceed cpu_cores");
  if (node.memory_gb <= 0.0)
    throw ConfigError("node " + node.id + ": memory_gb must be positive");
}

void validate(const ClusterSpec& cluster) {
  if (cluster.nodes.empty())
    throw ConfigError("cluster must have at least one node");
  std::map<std::string, int> seen;
  for (const auto& node : cluster.nodes) {
    validate(node);
    if (++seen[node.id] > 1)
      throw ConfigError("duplicate node id '" + node.id + "'");
  }
}

void validate(const ClusterSpec& cluster, const ConcurrencyCaps& caps) {
  validate(cluster);
  if (caps.max_t1_per_node < 1 || caps.max_t2_per_node < 1)
    throw ConfigError("concurrency caps must be at least 1 per kind");
  if (caps.mem_per_t1_gb < 0.0 || caps.mem_per_t2_gb < 0.0)
    throw ConfigError("per-task memory must be non-negative");
  for (const auto& node : cluster.nodes) {
    if (caps.max_t2_per_node > node.gpus)
      throw ConfigError("node " + node.id + ": counting cap " +
                        std::to_string(caps.max_t2_per_node) + " exceeds " +
                        std::to_string(node.gpus) + " GPUs");
    const double need =
        caps.max_t1_per_node * caps.mem_per_t1_gb + caps.max_t2_per_node * caps.mem_per_t2_gb;
    if (need > node.memory_gb)
      throw ConfigError("node " + node.id + ": caps need " + format_double(need) +
                        " GB, node has " + format_double(node.memory_gb) + " GB");
  }
}

SlotLedger::SlotLedger(const ClusterSpec& cluster, const ConcurrencyCaps& caps) : caps_(caps) {
  for (const auto& node : cluster.nodes)
    busy_[node.id] = Counts{};
}

bool SlotLedger::try_acquire(const std::string& node_id, TaskKind kind) {
  std::lock_guard lock(mu_);
  auto it = busy_.find(node_id);
  if (it == busy_.end())
    throw InputError("slot ledger: unknown node '" + node_id + "'");
  int& count = slot(it->second, kind);
  if (count >= caps_.cap(kind))
    return false;
  ++count;
  return true;
}

void SlotLedger::release(const std::string& node_id, TaskKind kind) {
  std::lock_guard lock(mu_);
  auto it = busy_.find(node_id);
  if (it == busy_.end())
    throw InputError("slot ledger: unknown node '" + node_id + "'");
  int& count = slot(it->second, kind);
  if (count <= 0)
    throw std::logic_error("slot ledger: release of " + to_string(kind) + " on " + node_id +
                           " without matching acquire");
  --count;
}

int SlotLedger::busy(const std::string& node_id, TaskKind kind) const {
  std::lock_guard lock(mu_);
  auto it = busy_.find(node_id);
  if (it == busy_.end())
    throw InputError("slot ledger: unknown node '" + node_id + "'");
  Counts c = it->second;
  return slot(c, kind);
}

std::pair<double, double> theoretical_max_utilization(const ClusterSpec& cluster,
                                                      const ConcurrencyCaps& caps) {
  validate(cluster, caps);
  if (!cluster.homogeneous())
    throw ConfigError("theoretical_max_utilization requires a homogeneous cluster");
  const NodeSpec& n = cluster.nodes.front();
  const double cpu = static_cast<double>(caps.max_t1_per_node) / n.cpu_cores;
  const double gpu = static_cast<double>(caps.max_t2_per_node) / n.gpus;
  return {cpu, gpu};
}

std::string cluster_to_json(const ClusterSpec& cluster, const ConcurrencyCaps& caps) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : cluster.nodes)
    j["nodes"].push_back({{"id", n.id},
                          {"cpu_cores", n.cpu_cores},
                          {"gpus", n.gpus},
                          {"memory_gb", n.memory_gb}});
  j["caps"] = {{"max_t1_per_node", caps.max_t1_per_node},
               {"max_t2_per_node", caps.max_t2_per_node},
               {"mem_per_t1_gb", caps.mem_per_t1_gb},
               {"mem_per_t2_gb", caps.mem_per_t2_gb}};
  return j.dump(2) + "\n";
}

std::pair<ClusterSpec, ConcurrencyCaps> cluster_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cluster config: invalid JSON: ") + e.what());
  }
  ClusterSpec cluster;
  for (const auto& nj : j.at("nodes")) {
    NodeSpec n;
    n.id = nj.at("id").get<std::string>();
    n.cpu_cores = nj.at("cpu_cores").get<int>();
    n.gpus = nj.at("gpus").get<int>();
    n.memory_gb = nj.at("memory_gb").get<double>();
    cluster.nodes.push_back(std::move(n));
  }
  ConcurrencyCaps caps;
  if (j.contains("caps")) {
    const auto& cj = j.at("caps");
    caps.max_t1_per_node = cj.at("max_t1_per_node").get<int>();
    caps.max_t2_per_node = cj.at("max_t2_per_node").get<int>();
    caps.mem_per_t1_gb = cj.value("mem_per_t1_gb", 0.0);
    caps.mem_per_t2_gb = cj.value("mem_per_t2_gb", 0.0);
  }
  validate(cluster, caps);
  return {std::move(cluster), caps};
}

std::pair<ClusterSpec, ConcurrencyCaps> load_cluster(const std::string& path) {
  return cluster_from_json(read_file(path));
}

ClusterSpec reference_cluster() {
  ClusterSpec cluster;
  for (int i = 0; i < 4; ++i)
    cluster.nodes.push_back({"node" + std::to_string(i), 32, 2, 128.0});
  return cluster;
}

ConcurrencyCaps reference_caps() {
  // 3 tiling tasks fill most of the 128 GB; the two counting tasks are
  // GPU-bound and take the remainder.
  return {3, 2, 40.0, 4.0};
}

} // namespace hetflow
