#include "hetflow/trace.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/io_util.hpp"

namespace hetflow {

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream out;
  out << "task_id,kind,image_id,node_id,start_s,end_s,outcome\n";
  for (const auto& r : trace) {
    out << r.task_id << ',' << to_string(r.kind) << ',' << r.image_id << ',' << r.node_id << ','
        << format_seconds(r.start_s) << ',' << format_seconds(r.end_s) << ','
        << (r.ok ? "ok" : "failed") << '\n';
  }
  return out.str();
}

Trace trace_from_csv(const std::string& csv_text, const std::string& origin) {
  Trace trace;
  std::istringstream in(csv_text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    if (lineno == 1) {
      if (line != "task_id,kind,image_id,node_id,start_s,end_s,outcome")
        throw InputError(origin + ": unexpected trace header '" + line + "'");
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (fields.size() != 7)
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected 7 fields, got " +
                       std::to_string(fields.size()));
    TaskRecord r;
    r.task_id = fields[0];
    r.kind = kind_from_string(fields[1]);
    r.image_id = fields[2];
    r.node_id = fields[3];
    try {
      r.start_s = std::stod(fields[4]);
      r.end_s = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": bad timestamp");
    }
    if (fields[6] == "ok")
      r.ok = true;
    else if (fields[6] == "failed")
      r.ok = false;
    else
      throw InputError(origin + ":" + std::to_string(lineno) + ": bad outcome '" + fields[6] +
                       "'");
    trace.push_back(std::move(r));
  }
  return trace;
}

Trace load_trace(const std::string& path) {
  return trace_from_csv(read_file(path), path);
}

void save_trace(const Trace& trace, const std::string& path) {
  atomic_write_file(path, trace_to_csv(trace));
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["design"] = to_string(m.design);
  j["backend"] = m.backend;
  j["seed"] = m.seed;
  j["n_images"] = m.n_images;
  j["total_mb"] = m.total_mb;
  j["workload_fingerprint"] = m.workload_fingerprint;
  j["cluster_fingerprint"] = m.cluster_fingerprint;
  j["poll_interval_s"] = m.poll_interval_s;
  j["run_start_s"] = m.run_start_s;
  j["run_end_s"] = m.run_end_s;
  j["intervals"] = nlohmann::ordered_json::array();
  for (const auto& iv : m.intervals)
    j["intervals"].push_back({{"label", iv.label}, {"start_s", iv.start_s}, {"end_s", iv.end_s}});
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("run manifest: invalid JSON: ") + e.what());
  }
  RunManifest m;
  m.design = design_from_string(j.at("design").get<std::string>());
  m.backend = j.at("backend").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_images = j.at("n_images").get<std::size_t>();
  m.total_mb = j.at("total_mb").get<double>();
  m.workload_fingerprint = j.value("workload_fingerprint", 0ull);
  m.cluster_fingerprint = j.value("cluster_fingerprint", 0ull);
  m.poll_interval_s = j.value("poll_interval_s", 1.0);
  m.run_start_s = j.at("run_start_s").get<double>();
  m.run_end_s = j.at("run_end_s").get<double>();
  for (const auto& ij : j.value("intervals", nlohmann::json::array()))
    m.intervals.push_back({ij.at("label").get<std::string>(), ij.at("start_s").get<double>(),
                           ij.at("end_s").get<double>()});
  return m;
}

RunManifest load_manifest(const std::string& path) {
  return manifest_from_json(read_file(path));
}

void save_manifest(const RunManifest& m, const std::string& path) {
  atomic_write_file(path, manifest_to_json(m));
}

std::vector<std::string> audit_trace(const Trace& trace, const ClusterSpec& cluster,
                                     const ConcurrencyCaps& caps, const Workload& workload) {
  std::vector<std::string> issues;
  constexpr double kEps = 1e-9;

  std::map<std::string, const TaskRecord*> t1_of, t2_of;
  std::map<std::string, int> node_index;
  for (std::size_t i = 0; i < cluster.nodes.size(); ++i)
    node_index[cluster.nodes[i].id] = static_cast<int>(i);

  for (const auto& r : trace) {
    if (r.end_s < r.start_s - kEps)
      issues.push_back("task " + r.task_id + ": end " + format_seconds(r.end_s) +
                       " precedes start " + format_seconds(r.start_s));
    if (!node_index.contains(r.node_id))
      issues.push_back("task " + r.task_id + ": unknown node '" + r.node_id + "'");
    auto& slot = r.kind == TaskKind::Tiling ? t1_of : t2_of;
    auto [it, inserted] = slot.try_emplace(r.image_id, &r);
    if (!inserted)
      issues.push_back("image " + r.image_id + ": duplicate " + to_string(r.kind) + " record");
  }

  for (const auto& img : workload) {
    auto i1 = t1_of.find(img.id);
    auto i2 = t2_of.find(img.id);
    if (i1 == t1_of.end())
      issues.push_back("image " + img.id + ": missing tiling record");
    if (i2 == t2_of.end())
      issues.push_back("image " + img.id + ": missing counting record");
    if (i1 == t1_of.end() || i2 == t2_of.end())
      continue;
    if (i1->second->node_id != i2->second->node_id)
      issues.push_back("image " + img.id + ": counting ran on " + i2->second->node_id +
                       " but tiling ran on " + i1->second->node_id);
    if (i2->second->start_s < i1->second->end_s - kEps)
      issues.push_back("image " + img.id + ": counting started before tiling finished");
  }
  for (const auto& [image_id, rec] : t1_of)
    if (std::none_of(workload.begin(), workload.end(),
                     [&](const ImageSpec& im) { return im.id == image_id; }))
      issues.push_back("image " + image_id + ": trace record for image not in workload");

  // Cap compliance: sweep task boundaries per node/kind, closing intervals
  // before opening ones at equal timestamps (back-to-back reuse of a slot is
  // not an overlap).
  struct Event {
    double t;
    int delta;
    std::string node;
    TaskKind kind;
  };
  std::vector<Event> events;
  events.reserve(trace.size() * 2);
  for (const auto& r : trace) {
    events.push_back({r.start_s, +1, r.node_id, r.kind});
    events.push_back({r.end_s, -1, r.node_id, r.kind});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t)
      return a.t < b.t;
    return a.delta < b.delta;
  });
  std::map<std::pair<std::string, int>, int> busy;
  std::map<std::pair<std::string, int>, bool> flagged;
  for (const auto& e : events) {
    if (!node_index.contains(e.node))
      continue;
    auto key = std::make_pair(e.node, e.kind == TaskKind::Tiling ? 1 : 2);
    int& b = busy[key];
    b += e.delta;
    const int cap = caps.cap(e.kind);
    if (b > cap && !flagged[key]) {
      flagged[key] = true;
      issues.push_back("node " + e.node + ": " + std::to_string(b) + " concurrent " +
                       to_string(e.kind) + " tasks exceed cap " + std::to_string(cap) + " at t=" +
                       format_seconds(e.t));
    }
  }
  return issues;
}

} // namespace hetflow
