#include <algorithm>
#include <cstdio>
#include <map>

#include <doctest.h>

#include "hetflow/designs.hpp"
#include "hetflow/errors.hpp"
#include "hetflow/perfmodel.hpp"

using namespace hetflow;

namespace {

ClusterSpec one_node() {
  ClusterSpec c;
  c.nodes.push_back({"n0", 32, 2, 128.0});
  return c;
}

ModelRegistry noiseless_registry() {
  ModelRegistry reg = default_registry();
  ModelRegistry out;
  for (DesignId d : {DesignId::D1, DesignId::D2, DesignId::D2A})
    for (TaskKind k : {TaskKind::Tiling, TaskKind::Counting}) {
      ExecTimeModel m = reg.at(d, k);
      m.noise_std = 0.0;
      out.put(m);
    }
  return out;
}

Workload equal_images(std::size_t n, double size_mb) {
  Workload wl;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "img-%06zu", i);
    wl.push_back({buf, size_mb});
  }
  return wl;
}

DesignConfig sim_config(DesignId d, std::uint64_t seed = 1) {
  DesignConfig cfg;
  cfg.design = d;
  cfg.backend = BackendKind::Simulated;
  cfg.caps = reference_caps();
  cfg.seed = seed;
  return cfg;
}

std::map<std::string, const TaskRecord*> by_image(const Trace& trace, TaskKind kind) {
  std::map<std::string, const TaskRecord*> out;
  for (const auto& r : trace)
    if (r.kind == kind)
      out[r.image_id] = &r;
  return out;
}

} // namespace

TEST_CASE("pipeline design hand schedule on one node") {
  // 6 equal 1000 MB images, zero noise: T1 = 79.69 s, T2 = 180.63 s.
  // 3 tiling slots, 2 counting slots. Counting pairs finish at
  // 79.69 + k*180.63 for k = 1, 2, 3 (plus 6 ms of discovery).
  Workload wl = equal_images(6, 1000.0);
  RunResult res = run_design1(one_node(), wl, noiseless_registry(), sim_config(DesignId::D1));

  REQUIRE(res.trace.size() == 12);
  const double t0 = 0.006;
  CHECK(res.manifest.run_end_s == doctest::Approx(t0 + 79.69 + 3 * 180.63).epsilon(1e-9));

  std::vector<double> t1_starts, t2_ends;
  for (const auto& r : res.trace) {
    CHECK(r.node_id == "n0");
    CHECK(r.ok);
    if (r.kind == TaskKind::Tiling)
      t1_starts.push_back(r.start_s);
    else
      t2_ends.push_back(r.end_s);
  }
  std::sort(t1_starts.begin(), t1_starts.end());
  std::sort(t2_ends.begin(), t2_ends.end());
  // First wave of three tiling tasks at t0, second wave right after.
  for (int i = 0; i < 3; ++i) {
    CHECK(t1_starts[i] == doctest::Approx(t0).epsilon(1e-9));
    CHECK(t1_starts[3 + i] == doctest::Approx(t0 + 79.69).epsilon(1e-9));
  }
  for (int k = 1; k <= 3; ++k) {
    CHECK(t2_ends[2 * k - 2] == doctest::Approx(t0 + 79.69 + k * 180.63).epsilon(1e-9));
    CHECK(t2_ends[2 * k - 1] == doctest::Approx(t0 + 79.69 + k * 180.63).epsilon(1e-9));
  }

  auto violations = audit_trace(res.trace, one_node(), reference_caps(), wl);
  CHECK(violations.empty());
}

TEST_CASE("pipeline design fills the lowest-index node first") {
  Workload wl = equal_images(4, 1000.0);
  RunResult res =
      run_design1(reference_cluster(), wl, noiseless_registry(), sim_config(DesignId::D1));
  std::map<std::string, int> t1_per_node;
  for (const auto& r : res.trace)
    if (r.kind == TaskKind::Tiling)
      ++t1_per_node[r.node_id];
  CHECK(t1_per_node["node0"] == 3);
  CHECK(t1_per_node["node1"] == 1);
}

TEST_CASE("global-queue design hand schedule with poll quantization") {
  // 2 equal 1000 MB images on one node, zero noise. Workers start after
  // discovery (2 ms) + setup (30 s). T1 = 96.55 s ends at 126.552; counting
  // workers poll every second from 30.002, so counting starts at the first
  // poll after the tiles appear: 127.002.
  Workload wl = equal_images(2, 1000.0);
  RunResult res = run_design2(one_node(), wl, noiseless_registry(), sim_config(DesignId::D2));

  auto t1 = by_image(res.trace, TaskKind::Tiling);
  auto t2 = by_image(res.trace, TaskKind::Counting);
  REQUIRE(t1.size() == 2);
  REQUIRE(t2.size() == 2);
  for (const auto& [_, r] : t1) {
    CHECK(r->start_s == doctest::Approx(30.002).epsilon(1e-9));
    CHECK(r->end_s == doctest::Approx(126.552).epsilon(1e-9));
  }
  for (const auto& [_, r] : t2) {
    CHECK(r->start_s == doctest::Approx(127.002).epsilon(1e-9));
    CHECK(r->end_s == doctest::Approx(127.002 + 142.93).epsilon(1e-9));
  }
  CHECK(res.manifest.run_end_s == doctest::Approx(269.932).epsilon(1e-9));
}

TEST_CASE("overhead intervals per design") {
  Workload wl = equal_images(2, 1000.0);
  ModelRegistry reg = noiseless_registry();

  auto labels = [](const RunResult& r) {
    std::vector<std::string> out;
    for (const auto& iv : r.manifest.intervals)
      out.push_back(iv.label);
    return out;
  };

  RunResult d1 = run_design1(one_node(), wl, reg, sim_config(DesignId::D1));
  CHECK(labels(d1) == std::vector<std::string>{"dataset_discovery"});

  RunResult d2 = run_design2(one_node(), wl, reg, sim_config(DesignId::D2));
  CHECK(labels(d2) == std::vector<std::string>{"dataset_discovery", "setup"});

  RunResult d2a = run_design2a(one_node(), wl, reg, sim_config(DesignId::D2A));
  CHECK(labels(d2a) ==
        std::vector<std::string>{"dataset_discovery", "setup", "distributing"});
  // Phases chain without gaps: discovery [0, 2 ms], setup to 30.002,
  // distributing to 37.502.
  CHECK(d2a.manifest.intervals[0].start_s == doctest::Approx(0.0));
  CHECK(d2a.manifest.intervals[0].end_s == doctest::Approx(0.002));
  CHECK(d2a.manifest.intervals[1].end_s == doctest::Approx(30.002));
  CHECK(d2a.manifest.intervals[2].end_s == doctest::Approx(37.502));

  DesignConfig with_teardown = sim_config(DesignId::D1);
  with_teardown.overheads.teardown_s = 5.0;
  RunResult td = run_design1(one_node(), wl, reg, with_teardown);
  REQUIRE(labels(td) == std::vector<std::string>{"dataset_discovery", "teardown"});
  CHECK(td.manifest.run_end_s ==
        doctest::Approx(td.manifest.intervals[1].start_s + 5.0).epsilon(1e-9));
}

TEST_CASE("sampled durations do not depend on scheduling") {
  // Same design/seed on different clusters: per-image durations identical.
  Workload wl = equal_images(12, 0.0);
  Rng rng(99);
  for (auto& img : wl)
    img.size_mb = rng.uniform(100.0, 2700.0);

  ModelRegistry reg = default_registry(); // real noise
  RunResult small = run_design2(one_node(), wl, reg, sim_config(DesignId::D2, 5));
  RunResult big = run_design2(reference_cluster(), wl, reg, sim_config(DesignId::D2, 5));

  for (TaskKind k : {TaskKind::Tiling, TaskKind::Counting}) {
    auto a = by_image(small.trace, k);
    auto b = by_image(big.trace, k);
    REQUIRE(a.size() == wl.size());
    REQUIRE(b.size() == wl.size());
    for (const auto& [img, ra] : a) {
      double da = ra->end_s - ra->start_s;
      double db = b.at(img)->end_s - b.at(img)->start_s;
      CHECK(da == doctest::Approx(db).epsilon(1e-12));
    }
  }
}

TEST_CASE("tiling speed multiplier halves tiling only") {
  Workload wl = equal_images(3, 1000.0);
  DesignConfig base = sim_config(DesignId::D2);
  DesignConfig fast = base;
  fast.t1_speed_multipliers["n0"] = 2.0;

  RunResult slow_run = run_design2(one_node(), wl, noiseless_registry(), base);
  RunResult fast_run = run_design2(one_node(), wl, noiseless_registry(), fast);

  auto t1s = by_image(slow_run.trace, TaskKind::Tiling);
  auto t1f = by_image(fast_run.trace, TaskKind::Tiling);
  auto t2s = by_image(slow_run.trace, TaskKind::Counting);
  auto t2f = by_image(fast_run.trace, TaskKind::Counting);
  for (const auto& [img, r] : t1s) {
    double ds = r->end_s - r->start_s;
    double df = t1f.at(img)->end_s - t1f.at(img)->start_s;
    CHECK(df == doctest::Approx(ds / 2.0).epsilon(1e-12));
  }
  for (const auto& [img, r] : t2s) {
    double ds = r->end_s - r->start_s;
    double df = t2f.at(img)->end_s - t2f.at(img)->start_s;
    CHECK(df == doctest::Approx(ds).epsilon(1e-12)); // counting unaffected
  }

  DesignConfig bad = base;
  bad.t1_speed_multipliers["n0"] = 0.0;
  CHECK_THROWS_AS(run_design2(one_node(), wl, noiseless_registry(), bad), ConfigError);
}

TEST_CASE("balanced partition follows longest-first placement") {
  Workload wl = {{"a", 8.0}, {"b", 7.0}, {"c", 6.0}, {"d", 5.0}, {"e", 4.0}};
  ExecTimeModel ident{1.0, 0.0, 0.0, DesignId::D2A, TaskKind::Tiling};
  auto parts = partition_balanced(wl, 2, ident);
  REQUIRE(parts.size() == 2);

  auto load = [](const Workload& part) {
    double sum = 0;
    for (const auto& img : part)
      sum += img.size_mb;
    return sum;
  };
  CHECK(load(parts[0]) == doctest::Approx(17.0)); // {8, 5, 4}
  CHECK(load(parts[1]) == doctest::Approx(13.0)); // {7, 6}

  // Union is the workload, no duplicates.
  std::map<std::string, int> seen;
  for (const auto& part : parts)
    for (const auto& img : part)
      ++seen[img.id];
  CHECK(seen.size() == wl.size());
  for (const auto& [_, n] : seen)
    CHECK(n == 1);

  CHECK_THROWS_AS(partition_balanced(wl, 0, ident), ConfigError);
  auto wide = partition_balanced(wl, 8, ident);
  std::size_t total = 0;
  for (const auto& p : wide)
    total += p.size();
  CHECK(total == wl.size()); // extra parts stay empty
}

TEST_CASE("descriptor codec") {
  ImageSpec img{"img-000042", 1234.5};
  ImageSpec back = detail::decode_descriptor(detail::encode_descriptor(img));
  CHECK(back.id == img.id);
  CHECK(back.size_mb == img.size_mb);
  CHECK_THROWS_AS(detail::decode_descriptor("not json"), InputError);
  CHECK_THROWS_AS(detail::decode_descriptor(R"({"id":"x"})"), InputError);
}

TEST_CASE("run configuration validation") {
  Workload wl = equal_images(2, 1000.0);
  ModelRegistry reg = noiseless_registry();

  CHECK_THROWS_AS(run_design1(one_node(), {}, reg, sim_config(DesignId::D1)), ConfigError);

  DesignConfig bad_poll = sim_config(DesignId::D2);
  bad_poll.poll_interval_s = 0.0;
  CHECK_THROWS_AS(run_design2(one_node(), wl, reg, bad_poll), ConfigError);

  DesignConfig bad_scale = sim_config(DesignId::D1);
  bad_scale.backend = BackendKind::Realtime;
  bad_scale.time_scale = -1.0;
  CHECK_THROWS_AS(run_design1(one_node(), wl, reg, bad_scale), ConfigError);

  ModelRegistry partial;
  partial.put(reg.at(DesignId::D1, TaskKind::Tiling));
  CHECK_THROWS_AS(run_design1(one_node(), wl, partial, sim_config(DesignId::D1)), ConfigError);

  CHECK_THROWS_AS(backend_from_string("quantum"), ConfigError);
  CHECK(backend_from_string("sim") == BackendKind::Simulated);
  CHECK(to_string(BackendKind::Realtime) == "realtime");
}

TEST_CASE("realtime backend produces audit-clean traces for every design") {
  Workload wl = equal_images(8, 1000.0);
  ModelRegistry reg = noiseless_registry();
  for (DesignId d : {DesignId::D1, DesignId::D2, DesignId::D2A}) {
    DesignConfig cfg = sim_config(d, 3);
    cfg.backend = BackendKind::Realtime;
    cfg.poll_interval_s = 0.02;
    cfg.time_scale = 0.0005;
    RunResult res = run_design(reference_cluster(), wl, reg, cfg);
    CHECK(res.manifest.backend == "realtime");
    CHECK(res.trace.size() == 16);
    auto violations = audit_trace(res.trace, reference_cluster(), reference_caps(), wl);
    for (const auto& v : violations)
      MESSAGE(v);
    CHECK(violations.empty());
  }
}
