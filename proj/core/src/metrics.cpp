#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"
#include "hetflow/io_util.hpp"
#include "hetflow/metrics.hpp"

namespace hetflow {

namespace {

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

} // namespace

double UtilizationTimeline::busy_integral_s() const {
  double integral = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    double t0 = clamp(steps[i].first, window_start_s, window_end_s);
    double t1 = (i + 1 < steps.size()) ? clamp(steps[i + 1].first, window_start_s, window_end_s)
                                       : window_end_s;
    if (t1 > t0)
      integral += steps[i].second * (t1 - t0);
  }
  return integral;
}

double UtilizationTimeline::mean_percent() const {
  const double span = window_end_s - window_start_s;
  if (span <= 0.0 || busy_units == 0)
    return 0.0;
  return busy_integral_s() / (busy_units * span) * 100.0;
}

double UtilizationTimeline::mean_percent_of_cap() const {
  const double span = window_end_s - window_start_s;
  if (span <= 0.0 || cap_units == 0)
    return 0.0;
  return busy_integral_s() / (cap_units * span) * 100.0;
}

int UtilizationTimeline::peak_busy() const {
  int peak = 0;
  for (const auto& s : steps)
    peak = std::max(peak, s.second);
  return peak;
}

double UtilizationTimeline::peak_percent() const {
  return busy_units == 0 ? 0.0 : 100.0 * peak_busy() / busy_units;
}

int UtilizationTimeline::busy_at(double t) const {
  int busy = 0;
  for (const auto& s : steps) {
    if (s.first > t)
      break;
    busy = s.second;
  }
  return busy;
}

UtilizationTimeline compute_utilization(const Trace& trace, const ClusterSpec& cluster,
                                        const ConcurrencyCaps& caps, TaskKind kind,
                                        double window_start_s, double window_end_s) {
  if (window_end_s < window_start_s)
    throw InputError("utilization: window end precedes window start");

  UtilizationTimeline tl;
  tl.kind = kind;
  tl.busy_units = kind == TaskKind::Tiling ? cluster.total_cpus() : cluster.total_gpus();
  tl.cap_units = static_cast<int>(cluster.nodes.size()) * caps.cap(kind);
  tl.window_start_s = window_start_s;
  tl.window_end_s = window_end_s;

  // Sweep start/end events in time order; at equal timestamps ends come
  // first so back-to-back tasks on one slot never double-count.
  struct Ev {
    double t;
    int delta;
  };
  std::vector<Ev> events;
  for (const auto& r : trace) {
    if (r.kind != kind)
      continue;
    events.push_back({r.start_s, +1});
    events.push_back({r.end_s, -1});
  }
  std::sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
    if (a.t != b.t)
      return a.t < b.t;
    return a.delta < b.delta;
  });

  tl.steps.push_back({window_start_s, 0});
  int busy = 0;
  for (const auto& ev : events) {
    busy += ev.delta;
    if (busy > tl.cap_units)
      throw InputError("utilization: trace exceeds concurrency caps; run the trace audit");
    if (!tl.steps.empty() && tl.steps.back().first == ev.t)
      tl.steps.back().second = busy;
    else
      tl.steps.push_back({ev.t, busy});
  }
  return tl;
}

std::string timelines_to_csv(const std::vector<UtilizationTimeline>& timelines) {
  struct Row {
    double t;
    std::string kind;
    int busy;
    double percent;
  };
  std::vector<Row> rows;
  for (const auto& tl : timelines) {
    const std::string kind = to_string(tl.kind);
    for (const auto& s : tl.steps) {
      double pct = tl.busy_units == 0 ? 0.0 : 100.0 * s.second / tl.busy_units;
      rows.push_back({s.first, kind, s.second, pct});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t)
      return a.t < b.t;
    return a.kind < b.kind;
  });
  std::string out = "t_s,kind,busy,percent\n";
  for (const auto& r : rows) {
    out += format_seconds(r.t);
    out += ',';
    out += r.kind;
    out += ',';
    out += std::to_string(r.busy);
    out += ',';
    out += fmt("%.6f", r.percent);
    out += '\n';
  }
  return out;
}

OverheadBreakdown compute_overheads(const RunManifest& manifest) {
  OverheadBreakdown b;
  for (const auto& iv : manifest.intervals) {
    const double len = iv.length();
    if (iv.label == "dataset_discovery")
      b.dataset_discovery_s += len;
    else if (iv.label == "setup")
      b.setup_s += len;
    else if (iv.label == "distributing")
      b.distributing_s += len;
    else if (iv.label == "client_submission")
      b.client_submission_s += len;
    else if (iv.label == "teardown")
      b.teardown_s += len;
  }
  return b;
}

OverheadBreakdown compute_overheads(const RunManifest& manifest, const Trace& trace,
                                    double gap_tolerance_s) {
  OverheadBreakdown b = compute_overheads(manifest);

  // Anything inside [run_start, run_end] should be either a labeled phase or
  // inside the task span; leftover gaps mean the accounting missed a phase.
  std::vector<std::pair<double, double>> covered;
  for (const auto& iv : manifest.intervals)
    covered.push_back({iv.start_s, iv.end_s});
  if (!trace.empty()) {
    double first = trace.front().start_s, last = trace.front().end_s;
    for (const auto& r : trace) {
      first = std::min(first, r.start_s);
      last = std::max(last, r.end_s);
    }
    covered.push_back({first, last});
  }
  std::sort(covered.begin(), covered.end());
  double cursor = manifest.run_start_s;
  double gap = 0.0;
  for (const auto& [s, e] : covered) {
    if (s > cursor)
      gap += std::min(s, manifest.run_end_s) - cursor;
    cursor = std::max(cursor, e);
    if (cursor >= manifest.run_end_s)
      break;
  }
  if (cursor < manifest.run_end_s)
    gap += manifest.run_end_s - cursor;

  b.unaccounted_s = gap;
  b.accounting_warning = gap > gap_tolerance_s;
  return b;
}

double compute_ttc(const RunManifest& manifest) {
  return manifest.run_end_s - manifest.run_start_s;
}

double RunReport::balance_ratio_mb() const {
  if (per_node.empty())
    return 0.0;
  double lo = per_node.front().mb, hi = per_node.front().mb;
  for (const auto& u : per_node) {
    lo = std::min(lo, u.mb);
    hi = std::max(hi, u.mb);
  }
  if (lo <= 0.0)
    return hi <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return hi / lo;
}

RunReport make_report(const RunResult& result, const ClusterSpec& cluster,
                      const ConcurrencyCaps& caps, const Workload& workload) {
  const RunManifest& m = result.manifest;
  RunReport rep;
  rep.design = m.design;
  rep.backend = m.backend;
  rep.seed = m.seed;
  rep.n_images = m.n_images;
  rep.total_mb = m.total_mb;
  rep.workload_fingerprint = m.workload_fingerprint;
  rep.cluster_fingerprint = m.cluster_fingerprint;
  rep.ttc_s = compute_ttc(m);

  auto cpu = compute_utilization(result.trace, cluster, caps, TaskKind::Tiling, m.run_start_s,
                                 m.run_end_s);
  auto gpu = compute_utilization(result.trace, cluster, caps, TaskKind::Counting, m.run_start_s,
                                 m.run_end_s);
  rep.cpu_mean_pct = cpu.mean_percent();
  rep.cpu_peak_pct = cpu.peak_percent();
  rep.cpu_mean_pct_of_cap = cpu.mean_percent_of_cap();
  rep.gpu_mean_pct = gpu.mean_percent();
  rep.gpu_peak_pct = gpu.peak_percent();
  rep.gpu_mean_pct_of_cap = gpu.mean_percent_of_cap();
  rep.overheads = compute_overheads(m, result.trace);

  std::map<std::string, double> size_of;
  for (const auto& img : workload)
    size_of[img.id] = img.size_mb;
  std::map<std::string, NodeUsage> usage;
  for (const auto& node : cluster.nodes)
    usage[node.id] = {node.id, 0, 0.0};
  for (const auto& r : result.trace) {
    if (r.kind != TaskKind::Tiling)
      continue;
    auto it = usage.find(r.node_id);
    if (it == usage.end())
      continue;
    it->second.images += 1;
    auto sz = size_of.find(r.image_id);
    if (sz != size_of.end())
      it->second.mb += sz->second;
  }
  for (const auto& node : cluster.nodes)
    rep.per_node.push_back(usage[node.id]);
  return rep;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["design"] = to_string(report.design);
  j["backend"] = report.backend;
  j["seed"] = report.seed;
  j["n_images"] = report.n_images;
  j["total_mb"] = report.total_mb;
  j["workload_fingerprint"] = report.workload_fingerprint;
  j["cluster_fingerprint"] = report.cluster_fingerprint;
  j["ttc_s"] = report.ttc_s;
  j["utilization"] = {
      {"cpu_mean_pct", report.cpu_mean_pct},
      {"cpu_peak_pct", report.cpu_peak_pct},
      {"cpu_mean_pct_of_cap", report.cpu_mean_pct_of_cap},
      {"gpu_mean_pct", report.gpu_mean_pct},
      {"gpu_peak_pct", report.gpu_peak_pct},
      {"gpu_mean_pct_of_cap", report.gpu_mean_pct_of_cap},
  };
  j["overheads"] = {
      {"dataset_discovery_s", report.overheads.dataset_discovery_s},
      {"setup_s", report.overheads.setup_s},
      {"distributing_s", report.overheads.distributing_s},
      {"client_submission_s", report.overheads.client_submission_s},
      {"teardown_s", report.overheads.teardown_s},
      {"total_s", report.overheads.total_s()},
      {"unaccounted_s", report.overheads.unaccounted_s},
      {"accounting_warning", report.overheads.accounting_warning},
  };
  j["per_node"] = nlohmann::ordered_json::array();
  for (const auto& u : report.per_node)
    j["per_node"].push_back({{"node_id", u.node_id}, {"images", u.images}, {"mb", u.mb}});
  j["balance_ratio_mb"] = report.balance_ratio_mb();
  return j.dump(2) + "\n";
}

Comparison compare_designs(const std::vector<RunReport>& reports) {
  if (reports.size() < 2)
    throw ConfigError("compare: need at least two runs");
  for (const auto& r : reports)
    if (r.cluster_fingerprint != reports.front().cluster_fingerprint)
      throw ConfigError("compare: runs use different clusters");
  std::map<std::uint64_t, std::uint64_t> workload_by_seed;
  for (const auto& r : reports) {
    auto [it, inserted] = workload_by_seed.emplace(r.seed, r.workload_fingerprint);
    if (!inserted && it->second != r.workload_fingerprint)
      throw ConfigError("compare: runs for seed " + std::to_string(r.seed) +
                        " use different workloads");
  }

  Comparison cmp;
  for (const auto& r : reports)
    cmp.rows.push_back({r.design, r.seed, r.ttc_s, r.cpu_mean_pct, r.gpu_mean_pct,
                        r.overheads.total_s(), r.balance_ratio_mb()});
  std::sort(cmp.rows.begin(), cmp.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.seed != b.seed)
      return a.seed < b.seed;
    return to_string(a.design) < to_string(b.design);
  });

  std::map<DesignId, DesignSummary> by_design;
  for (const auto& row : cmp.rows) {
    auto& s = by_design[row.design];
    if (s.runs == 0) {
      s.design = row.design;
      s.min_ttc_s = row.ttc_s;
      s.max_ttc_s = row.ttc_s;
    }
    s.runs += 1;
    s.mean_ttc_s += row.ttc_s;
    s.min_ttc_s = std::min(s.min_ttc_s, row.ttc_s);
    s.max_ttc_s = std::max(s.max_ttc_s, row.ttc_s);
    s.mean_cpu_pct += row.cpu_mean_pct;
    s.mean_gpu_pct += row.gpu_mean_pct;
    s.mean_overhead_s += row.overhead_s;
  }
  for (auto& [_, s] : by_design) {
    s.mean_ttc_s /= s.runs;
    s.mean_cpu_pct /= s.runs;
    s.mean_gpu_pct /= s.runs;
    s.mean_overhead_s /= s.runs;
  }

  // A win requires a strictly lowest TTC within the seed; ties award nobody.
  std::map<std::uint64_t, std::vector<const ComparisonRow*>> by_seed;
  for (const auto& row : cmp.rows)
    by_seed[row.seed].push_back(&row);
  for (const auto& [_, rows] : by_seed) {
    const ComparisonRow* best = rows.front();
    bool tie = false;
    for (const auto* row : rows) {
      if (row == best)
        continue;
      if (row->ttc_s < best->ttc_s) {
        best = row;
        tie = false;
      } else if (row->ttc_s == best->ttc_s) {
        tie = true;
      }
    }
    if (!tie)
      by_design[best->design].wins += 1;
  }

  for (const auto& [_, s] : by_design)
    cmp.summaries.push_back(s);
  std::sort(cmp.summaries.begin(), cmp.summaries.end(),
            [](const DesignSummary& a, const DesignSummary& b) {
              return a.mean_ttc_s < b.mean_ttc_s;
            });
  return cmp;
}

std::string comparison_to_csv(const Comparison& comparison) {
  std::string out = "design,seed,ttc_s,cpu_mean_pct,gpu_mean_pct,overhead_s,balance_ratio_mb\n";
  for (const auto& r : comparison.rows) {
    out += to_string(r.design);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += format_seconds(r.ttc_s);
    out += ',';
    out += fmt("%.6f", r.cpu_mean_pct);
    out += ',';
    out += fmt("%.6f", r.gpu_mean_pct);
    out += ',';
    out += format_seconds(r.overhead_s);
    out += ',';
    out += fmt("%.6f", r.balance_ratio_mb);
    out += '\n';
  }
  return out;
}

std::string render_comparison(const Comparison& comparison) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-6s %5s %5s %12s %12s %12s %9s %9s %12s\n", "design",
                "runs", "wins", "mean_ttc_s", "min_ttc_s", "max_ttc_s", "cpu_pct", "gpu_pct",
                "overhead_s");
  out += line;
  for (const auto& s : comparison.summaries) {
    std::snprintf(line, sizeof(line), "%-6s %5zu %5zu %12.2f %12.2f %12.2f %9.2f %9.2f %12.2f\n",
                  to_string(s.design).c_str(), s.runs, s.wins, s.mean_ttc_s, s.min_ttc_s,
                  s.max_ttc_s, s.mean_cpu_pct, s.mean_gpu_pct, s.mean_overhead_s);
    out += line;
  }
  return out;
}

} // namespace hetflow
