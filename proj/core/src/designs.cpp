#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hetflow/designs.hpp"
#include "hetflow/errors.hpp"

namespace hetflow {

std::string to_string(BackendKind backend) {
  return backend == BackendKind::Simulated ? "sim" : "realtime";
}

BackendKind backend_from_string(const std::string& s) {
  if (s == "sim" || s == "simulated")
    return BackendKind::Simulated;
  if (s == "realtime" || s == "real")
    return BackendKind::Realtime;
  throw ConfigError("unknown backend '" + s + "' (expected sim or realtime)");
}

double t1_speed(const DesignConfig& config, const std::string& node_id) {
  auto it = config.t1_speed_multipliers.find(node_id);
  if (it == config.t1_speed_multipliers.end())
    return 1.0;
  if (it->second <= 0.0)
    throw ConfigError("speed multiplier for node '" + node_id + "' must be positive");
  return it->second;
}

std::vector<Workload> partition_balanced(const Workload& workload, std::size_t n_parts,
                                         const ExecTimeModel& model) {
  if (n_parts == 0)
    throw ConfigError("partition: need at least one part");

  // Longest-processing-time-first: sort by predicted cost descending, always
  // assign to the currently lightest part. Keeps the makespan within
  // 4/3 - 1/(3n) of optimal while staying O(m log m).
  std::vector<std::size_t> order(workload.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> cost(workload.size());
  for (std::size_t i = 0; i < workload.size(); ++i)
    cost[i] = predict_mean(model, workload[i].size_mb);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cost[a] > cost[b]; });

  std::vector<Workload> parts(n_parts);
  std::vector<double> load(n_parts, 0.0);
  for (std::size_t idx : order) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < n_parts; ++p)
      if (load[p] < load[best])
        best = p;
    parts[best].push_back(workload[idx]);
    load[best] += cost[idx];
  }
  return parts;
}

RunResult run_design1(const ClusterSpec& cluster, const Workload& workload,
                      const ModelRegistry& models, const DesignConfig& config) {
  DesignConfig c = config;
  c.design = DesignId::D1;
  return run_design(cluster, workload, models, c);
}

RunResult run_design2(const ClusterSpec& cluster, const Workload& workload,
                      const ModelRegistry& models, const DesignConfig& config) {
  DesignConfig c = config;
  c.design = DesignId::D2;
  return run_design(cluster, workload, models, c);
}

RunResult run_design2a(const ClusterSpec& cluster, const Workload& workload,
                       const ModelRegistry& models, const DesignConfig& config) {
  DesignConfig c = config;
  c.design = DesignId::D2A;
  return run_design(cluster, workload, models, c);
}

RunResult run_design(const ClusterSpec& cluster, const Workload& workload,
                     const ModelRegistry& models, const DesignConfig& config) {
  if (config.poll_interval_s <= 0.0)
    throw ConfigError("run: poll_interval_s must be positive");
  if (config.backend == BackendKind::Simulated)
    return detail::simulate(cluster, workload, models, config);
  return detail::run_realtime(cluster, workload, models, config);
}

namespace detail {

std::string encode_descriptor(const ImageSpec& image) {
  nlohmann::ordered_json j;
  j["id"] = image.id;
  j["size_mb"] = image.size_mb;
  return j.dump();
}

ImageSpec decode_descriptor(const std::string& payload) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad image descriptor: ") + e.what());
  }
  if (!j.contains("id") || !j.contains("size_mb"))
    throw InputError("bad image descriptor: missing id or size_mb");
  return {j.at("id").get<std::string>(), j.at("size_mb").get<double>()};
}

Rng task_rng(std::uint64_t run_seed, const std::string& image_id, TaskKind kind) {
  // Seed depends only on (run seed, image, stage), never on scheduling, so
  // sampled durations are identical across designs and backends.
  return Rng(derive_seed(run_seed, image_id + "/" + to_string(kind)));
}

} // namespace detail

} // namespace hetflow
