#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "hetflow/designs.hpp"
#include "hetflow/errors.hpp"
#include "hetflow/protocol.hpp"

namespace hetflow::detail {

namespace {

/// Shared, mutex-guarded trace sink for worker threads. Records are sorted
/// afterwards; arrival order under real concurrency is not meaningful.
class TraceSink {
public:
  void record(TaskKind kind, const std::string& image_id, const std::string& node_id,
              double start, double end) {
    std::lock_guard<std::mutex> lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%06llu", kind == TaskKind::Tiling ? "t1" : "t2",
                  static_cast<unsigned long long>(next_seq_++));
    trace_.push_back({buf, kind, image_id, node_id, start, end, true});
  }

  Trace take() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::sort(trace_.begin(), trace_.end(), [](const TaskRecord& a, const TaskRecord& b) {
      if (a.start_s != b.start_s)
        return a.start_s < b.start_s;
      return a.task_id < b.task_id;
    });
    return std::move(trace_);
  }

private:
  std::mutex mutex_;
  Trace trace_;
  std::uint64_t next_seq_ = 0;
};

struct RtContext {
  const ClusterSpec& cluster;
  const Workload& workload;
  const ModelRegistry& models;
  const DesignConfig& config;
  protocol::SystemClock clock;
  TraceSink sink;

  RtContext(const ClusterSpec& cl, const Workload& wl, const ModelRegistry& mo,
            const DesignConfig& cf)
      : cluster(cl), workload(wl), models(mo), config(cf) {}

  // Durations come from the same per-image generator as the simulator, so
  // both backends agree up to scheduling; wall-clock sleeps are scaled.
  double duration(TaskKind kind, const ImageSpec& image, const std::string& node_id) {
    const ExecTimeModel& model = models.at(config.design, kind);
    Rng rng = task_rng(config.seed, image.id, kind);
    double d = sample_duration(model, image.size_mb, rng);
    if (kind == TaskKind::Tiling)
      d /= t1_speed(config, node_id);
    return d;
  }

  void execute(TaskKind kind, const ImageSpec& image, const std::string& node_id) {
    const double dur = duration(kind, image, node_id);
    const double start = clock.now();
    clock.sleep(dur * config.time_scale);
    sink.record(kind, image.id, node_id, start, clock.now());
  }
};

double last_task_end(const Trace& trace) {
  double end = 0.0;
  for (const auto& r : trace)
    end = std::max(end, r.end_s);
  return end;
}

RunManifest make_manifest(const RtContext& ctx, std::vector<LabeledInterval> intervals,
                          double run_end) {
  RunManifest m;
  m.design = ctx.config.design;
  m.backend = "realtime";
  m.seed = ctx.config.seed;
  m.n_images = ctx.workload.size();
  m.total_mb = total_size_mb(ctx.workload);
  m.workload_fingerprint = fingerprint(ctx.workload);
  m.cluster_fingerprint = ctx.cluster.fingerprint();
  m.poll_interval_s = ctx.config.poll_interval_s;
  m.intervals = std::move(intervals);
  m.run_start_s = 0.0;
  m.run_end_s = run_end;
  return m;
}

// Walking the dataset stands in for listing a remote store; the phase is
// measured so the breakdown reflects what actually happened.
double measured_discovery(RtContext& ctx) {
  volatile double acc = 0.0;
  for (const auto& img : ctx.workload)
    acc = acc + img.size_mb;
  (void)acc;
  return ctx.clock.now();
}

// ---------------------------------------------------------------------------
// Pipeline-per-image: one thread per image drives tiling then counting,
// gated by a condition-variable slot monitor that mirrors the scheduler's
// per-node concurrency caps.

RunResult realtime_design1(RtContext& ctx) {
  struct Monitor {
    std::mutex mutex;
    std::condition_variable cv;
    SlotLedger ledger;
    explicit Monitor(const ClusterSpec& cl, const ConcurrencyCaps& caps) : ledger(cl, caps) {}
  };
  Monitor mon(ctx.cluster, ctx.config.caps);

  auto acquire_any_tiling = [&]() -> std::string {
    std::unique_lock<std::mutex> lock(mon.mutex);
    for (;;) {
      for (const auto& node : ctx.cluster.nodes)
        if (mon.ledger.try_acquire(node.id, TaskKind::Tiling))
          return node.id;
      mon.cv.wait(lock);
    }
  };
  auto acquire_counting_on = [&](const std::string& node_id) {
    std::unique_lock<std::mutex> lock(mon.mutex);
    mon.cv.wait(lock, [&] { return mon.ledger.try_acquire(node_id, TaskKind::Counting); });
  };
  auto release = [&](const std::string& node_id, TaskKind kind) {
    std::lock_guard<std::mutex> lock(mon.mutex);
    mon.ledger.release(node_id, kind);
    mon.cv.notify_all();
  };

  std::vector<LabeledInterval> intervals;
  double t0 = 0.0;
  double t1 = measured_discovery(ctx);
  if (t1 > t0)
    intervals.push_back({"dataset_discovery", t0, t1});

  std::vector<std::thread> pipelines;
  pipelines.reserve(ctx.workload.size());
  for (const auto& img : ctx.workload) {
    pipelines.emplace_back([&ctx, &img, &acquire_any_tiling, &acquire_counting_on, &release] {
      std::string node_id = acquire_any_tiling();
      ctx.execute(TaskKind::Tiling, img, node_id);
      release(node_id, TaskKind::Tiling);
      acquire_counting_on(node_id);
      ctx.execute(TaskKind::Counting, img, node_id);
      release(node_id, TaskKind::Counting);
    });
  }
  double t2 = ctx.clock.now();
  if (t2 > t1)
    intervals.push_back({"client_submission", t1, t2});

  for (auto& th : pipelines)
    th.join();

  Trace trace = ctx.sink.take();
  double tasks_end = last_task_end(trace);
  double run_end = ctx.clock.now();
  if (run_end > tasks_end)
    intervals.push_back({"teardown", tasks_end, run_end});
  RunManifest manifest = make_manifest(ctx, std::move(intervals), run_end);
  return {std::move(trace), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// Queue designs: every worker is a thread in the protocol receive loop.
// Tiling workers feed the node's tile queue and close their sender on exit,
// which lets counting workers terminate through the Empty result.

RunResult realtime_queue_design(RtContext& ctx, bool early_binding) {
  const std::size_t n = ctx.cluster.nodes.size();
  std::vector<std::unique_ptr<protocol::Queue>> image_queues;
  if (early_binding) {
    for (std::size_t i = 0; i < n; ++i)
      image_queues.push_back(
          std::make_unique<protocol::Queue>("images-" + ctx.cluster.nodes[i].id));
  } else {
    image_queues.push_back(std::make_unique<protocol::Queue>("images"));
  }
  std::vector<std::unique_ptr<protocol::Queue>> tile_queues;
  for (std::size_t i = 0; i < n; ++i)
    tile_queues.push_back(std::make_unique<protocol::Queue>("tiles-" + ctx.cluster.nodes[i].id));

  std::vector<LabeledInterval> intervals;
  double t0 = 0.0;
  double t1 = measured_discovery(ctx);
  if (t1 > t0)
    intervals.push_back({"dataset_discovery", t0, t1});

  // Register the client before any worker polls so an empty queue reads as
  // Wait, not Empty, until the workload has been submitted.
  for (auto& q : image_queues)
    q->register_sender("client");

  std::vector<std::thread> threads;
  auto spawn_tiling = [&](std::size_t node_index, int k) {
    const std::string node_id = ctx.cluster.nodes[node_index].id;
    const std::string worker_id = node_id + "-t1w" + std::to_string(k);
    protocol::Queue* in = early_binding ? image_queues[node_index].get()
                                        : image_queues.front().get();
    protocol::Queue* out = tile_queues[node_index].get();
    out->register_sender(worker_id);
    threads.emplace_back([&ctx, in, out, worker_id, node_id] {
      protocol::receive_loop(
          *in, worker_id,
          [&ctx, out, &worker_id, &node_id](const std::string& payload) {
            const ImageSpec image = decode_descriptor(payload);
            ctx.execute(TaskKind::Tiling, image, node_id);
            out->push(worker_id, encode_descriptor(image));
          },
          ctx.config.poll_interval_s * ctx.config.time_scale, ctx.clock);
      out->close_sender(worker_id);
    });
  };
  auto spawn_counting = [&](std::size_t node_index, int k) {
    const std::string node_id = ctx.cluster.nodes[node_index].id;
    const std::string worker_id = node_id + "-t2w" + std::to_string(k);
    protocol::Queue* in = tile_queues[node_index].get();
    threads.emplace_back([&ctx, in, worker_id, node_id] {
      protocol::receive_loop(
          *in, worker_id,
          [&ctx, &node_id](const std::string& payload) {
            ctx.execute(TaskKind::Counting, decode_descriptor(payload), node_id);
          },
          ctx.config.poll_interval_s * ctx.config.time_scale, ctx.clock);
    });
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < ctx.config.caps.max_t1_per_node; ++k)
      spawn_tiling(i, k);
    for (int k = 0; k < ctx.config.caps.max_t2_per_node; ++k)
      spawn_counting(i, k);
  }
  double t2 = ctx.clock.now();
  if (t2 > t1)
    intervals.push_back({"setup", t1, t2});

  if (early_binding) {
    const ExecTimeModel& m1 = ctx.models.at(ctx.config.design, TaskKind::Tiling);
    const ExecTimeModel& m2 = ctx.models.at(ctx.config.design, TaskKind::Counting);
    ExecTimeModel combined{m1.alpha + m2.alpha, m1.beta + m2.beta, 0.0, ctx.config.design,
                           TaskKind::Tiling};
    auto parts = partition_balanced(ctx.workload, n, combined);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& img : parts[i])
        image_queues[i]->push("client", encode_descriptor(img));
      image_queues[i]->close_sender("client");
    }
    double t3 = ctx.clock.now();
    if (t3 > t2)
      intervals.push_back({"distributing", t2, t3});
  } else {
    for (const auto& img : ctx.workload)
      image_queues.front()->push("client", encode_descriptor(img));
    image_queues.front()->close_sender("client");
    double t3 = ctx.clock.now();
    if (t3 > t2)
      intervals.push_back({"client_submission", t2, t3});
  }

  for (auto& th : threads)
    th.join();

  Trace trace = ctx.sink.take();
  double tasks_end = last_task_end(trace);
  double run_end = ctx.clock.now();
  if (run_end > tasks_end)
    intervals.push_back({"teardown", tasks_end, run_end});
  RunManifest manifest = make_manifest(ctx, std::move(intervals), run_end);
  return {std::move(trace), std::move(manifest)};
}

} // namespace

RunResult run_realtime(const ClusterSpec& cluster, const Workload& workload,
                       const ModelRegistry& models, const DesignConfig& config) {
  validate(cluster, config.caps);
  if (workload.empty())
    throw ConfigError("run: workload is empty");
  if (config.time_scale <= 0.0)
    throw ConfigError("run: time_scale must be positive");
  models.at(config.design, TaskKind::Tiling);
  models.at(config.design, TaskKind::Counting);

  RtContext ctx(cluster, workload, models, config);
  switch (config.design) {
  case DesignId::D1:
    return realtime_design1(ctx);
  case DesignId::D2:
    return realtime_queue_design(ctx, false);
  case DesignId::D2A:
    return realtime_queue_design(ctx, true);
  }
  throw ConfigError("run: unknown design");
}

} // namespace hetflow::detail
