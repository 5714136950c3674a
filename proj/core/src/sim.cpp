#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <memory>
#include <queue>

#include "hetflow/designs.hpp"
#include "hetflow/errors.hpp"
#include "hetflow/protocol.hpp"

namespace hetflow::detail {

namespace {

/// Minimal discrete-event loop. Events fire in (time, insertion order), so a
/// run is a pure function of its inputs.
class SimEngine {
public:
  double now() const { return now_; }

  void at(double t, std::function<void()> fn) {
    events_.push(Event{t, next_seq_++, std::move(fn)});
  }

  void run() {
    while (!events_.empty()) {
      Event ev = std::move(const_cast<Event&>(events_.top()));
      events_.pop();
      now_ = ev.t;
      ev.fn();
    }
  }

private:
  struct Event {
    double t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t)
        return a.t > b.t;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
};

struct SimContext {
  SimEngine engine;
  const ClusterSpec& cluster;
  const Workload& workload;
  const ModelRegistry& models;
  const DesignConfig& config;
  SlotLedger ledger;
  Trace trace;
  std::uint64_t next_task_seq = 0;

  SimContext(const ClusterSpec& cl, const Workload& wl, const ModelRegistry& mo,
             const DesignConfig& cf)
      : cluster(cl), workload(wl), models(mo), config(cf), ledger(cl, cf.caps) {}

  double duration(TaskKind kind, const ImageSpec& image, const std::string& node_id) {
    const ExecTimeModel& model = models.at(config.design, kind);
    Rng rng = task_rng(config.seed, image.id, kind);
    double d = sample_duration(model, image.size_mb, rng);
    if (kind == TaskKind::Tiling)
      d /= t1_speed(config, node_id);
    return d;
  }

  std::string new_task_id(TaskKind kind) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%06llu", kind == TaskKind::Tiling ? "t1" : "t2",
                  static_cast<unsigned long long>(next_task_seq++));
    return buf;
  }

  void record(std::string task_id, TaskKind kind, const ImageSpec& image,
              const std::string& node_id, double start, double end) {
    trace.push_back({std::move(task_id), kind, image.id, node_id, start, end, true});
  }
};

double last_task_end(const Trace& trace) {
  double end = 0.0;
  for (const auto& r : trace)
    end = std::max(end, r.end_s);
  return end;
}

// ---------------------------------------------------------------------------
// Pipeline-per-image design: a tagged scheduler places each image's tiling
// task on the first node with a free slot and pins the counting task to that
// node, even when other nodes' GPUs are idle.

void simulate_design1_tasks(SimContext& ctx, double start_time) {
  struct State {
    std::deque<const ImageSpec*> pending;
    std::map<std::string, std::deque<const ImageSpec*>> ready_counting;
  };
  auto state = std::make_shared<State>();
  for (const auto& img : ctx.workload)
    state->pending.push_back(&img);

  // Mutual recursion through std::function so completion events can
  // re-enter the scheduler.
  auto schedule_tiling = std::make_shared<std::function<void()>>();
  auto schedule_counting = std::make_shared<std::function<void(const std::string&)>>();

  auto start_task = [&ctx, state, schedule_tiling, schedule_counting](
                        TaskKind kind, const ImageSpec* img, const std::string& node_id) {
    const double start = ctx.engine.now();
    const double dur = ctx.duration(kind, *img, node_id);
    std::string task_id = ctx.new_task_id(kind);
    ctx.engine.at(start + dur, [&ctx, state, schedule_tiling, schedule_counting, kind, img,
                                node_id, start, dur, task_id] {
      ctx.record(task_id, kind, *img, node_id, start, start + dur);
      ctx.ledger.release(node_id, kind);
      if (kind == TaskKind::Tiling) {
        state->ready_counting[node_id].push_back(img);
        (*schedule_counting)(node_id);
        (*schedule_tiling)();
      } else {
        (*schedule_counting)(node_id);
      }
    });
  };

  *schedule_tiling = [&ctx, state, start_task] {
    while (!state->pending.empty()) {
      const ImageSpec* img = state->pending.front();
      bool placed = false;
      for (const auto& node : ctx.cluster.nodes) {
        if (ctx.ledger.try_acquire(node.id, TaskKind::Tiling)) {
          state->pending.pop_front();
          start_task(TaskKind::Tiling, img, node.id);
          placed = true;
          break;
        }
      }
      if (!placed)
        break;
    }
  };

  *schedule_counting = [&ctx, state, start_task](const std::string& node_id) {
    auto& ready = state->ready_counting[node_id];
    while (!ready.empty() && ctx.ledger.try_acquire(node_id, TaskKind::Counting)) {
      const ImageSpec* img = ready.front();
      ready.pop_front();
      start_task(TaskKind::Counting, img, node_id);
    }
  };

  ctx.engine.at(start_time, [schedule_tiling] { (*schedule_tiling)(); });
  ctx.engine.run();
}

// ---------------------------------------------------------------------------
// Queue-based designs. Workers are bootstrapped once and then pull work for
// as long as any sender stays connected; termination propagates through the
// protocol's Empty result.

struct SimWorker {
  std::string id;
  std::string node_id;
  TaskKind kind;
  protocol::Queue* in = nullptr;
  protocol::Queue* out = nullptr; // tiling workers feed the node's tile queue
};

void wake_worker(SimContext& ctx, const std::shared_ptr<SimWorker>& w) {
  protocol::PullResult r = w->in->pull(w->id);
  switch (r.status) {
  case protocol::PullStatus::Data: {
    const ImageSpec image = decode_descriptor(r.payload);
    const double start = ctx.engine.now();
    const double dur = ctx.duration(w->kind, image, w->node_id);
    std::string task_id = ctx.new_task_id(w->kind);
    ctx.engine.at(start + dur, [&ctx, w, image, start, dur, task_id] {
      ctx.record(task_id, w->kind, image, w->node_id, start, start + dur);
      if (w->out)
        w->out->push(w->id, encode_descriptor(image));
      wake_worker(ctx, w);
    });
    break;
  }
  case protocol::PullStatus::Wait:
    ctx.engine.at(ctx.engine.now() + ctx.config.poll_interval_s,
                  [&ctx, w] { wake_worker(ctx, w); });
    break;
  case protocol::PullStatus::Empty:
    if (w->out)
      w->out->close_sender(w->id);
    ctx.ledger.release(w->node_id, w->kind);
    break;
  }
}

void simulate_queue_design_tasks(SimContext& ctx, double workers_start,
                                 const std::vector<Workload>& per_node_images,
                                 bool per_node_image_queues) {
  const std::size_t n = ctx.cluster.nodes.size();

  std::vector<std::unique_ptr<protocol::Queue>> image_queues;
  if (per_node_image_queues) {
    for (std::size_t i = 0; i < n; ++i)
      image_queues.push_back(
          std::make_unique<protocol::Queue>("images-" + ctx.cluster.nodes[i].id));
  } else {
    image_queues.push_back(std::make_unique<protocol::Queue>("images"));
  }
  std::vector<std::unique_ptr<protocol::Queue>> tile_queues;
  for (std::size_t i = 0; i < n; ++i)
    tile_queues.push_back(std::make_unique<protocol::Queue>("tiles-" + ctx.cluster.nodes[i].id));

  // The client enqueues the whole workload and disconnects before the
  // workers' first poll; tiling workers then drain the image queue(s) and
  // each node's tiling workers feed that node's tile queue.
  for (std::size_t qi = 0; qi < image_queues.size(); ++qi) {
    image_queues[qi]->register_sender("client");
    const Workload& images = per_node_image_queues ? per_node_images[qi] : ctx.workload;
    for (const auto& img : images)
      image_queues[qi]->push("client", encode_descriptor(img));
    image_queues[qi]->close_sender("client");
  }

  std::vector<std::shared_ptr<SimWorker>> workers;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& node_id = ctx.cluster.nodes[i].id;
    protocol::Queue* in_images = per_node_image_queues ? image_queues[i].get()
                                                       : image_queues.front().get();
    for (int k = 0; k < ctx.config.caps.max_t1_per_node; ++k) {
      auto w = std::make_shared<SimWorker>();
      w->id = node_id + "-t1w" + std::to_string(k);
      w->node_id = node_id;
      w->kind = TaskKind::Tiling;
      w->in = in_images;
      w->out = tile_queues[i].get();
      w->out->register_sender(w->id);
      ctx.ledger.try_acquire(node_id, TaskKind::Tiling);
      workers.push_back(std::move(w));
    }
    for (int k = 0; k < ctx.config.caps.max_t2_per_node; ++k) {
      auto w = std::make_shared<SimWorker>();
      w->id = node_id + "-t2w" + std::to_string(k);
      w->node_id = node_id;
      w->kind = TaskKind::Counting;
      w->in = tile_queues[i].get();
      ctx.ledger.try_acquire(node_id, TaskKind::Counting);
      workers.push_back(std::move(w));
    }
  }
  for (const auto& w : workers)
    ctx.engine.at(workers_start, [&ctx, w] { wake_worker(ctx, w); });
  ctx.engine.run();
}

RunManifest make_manifest(const SimContext& ctx, const std::vector<LabeledInterval>& intervals,
                          double run_end) {
  RunManifest m;
  m.design = ctx.config.design;
  m.backend = "sim";
  m.seed = ctx.config.seed;
  m.n_images = ctx.workload.size();
  m.total_mb = total_size_mb(ctx.workload);
  m.workload_fingerprint = fingerprint(ctx.workload);
  m.cluster_fingerprint = ctx.cluster.fingerprint();
  m.poll_interval_s = ctx.config.poll_interval_s;
  m.intervals = intervals;
  m.run_start_s = 0.0;
  m.run_end_s = run_end;
  return m;
}

} // namespace

RunResult simulate(const ClusterSpec& cluster, const Workload& workload,
                   const ModelRegistry& models, const DesignConfig& config) {
  validate(cluster, config.caps);
  if (workload.empty())
    throw ConfigError("run: workload is empty");
  models.at(config.design, TaskKind::Tiling); // fail before execution if absent
  models.at(config.design, TaskKind::Counting);

  SimContext ctx(cluster, workload, models, config);
  const OverheadConfig& oh = config.overheads;

  std::vector<LabeledInterval> intervals;
  double t = 0.0;
  auto add_interval = [&](const std::string& label, double length) {
    if (length > 0.0) {
      intervals.push_back({label, t, t + length});
      t += length;
    }
  };

  add_interval("dataset_discovery", oh.discovery_s_per_image * workload.size());
  switch (config.design) {
  case DesignId::D1:
    add_interval("client_submission", oh.client_submission_s);
    simulate_design1_tasks(ctx, t);
    break;
  case DesignId::D2:
    add_interval("setup", oh.setup_s);
    simulate_queue_design_tasks(ctx, t, {}, false);
    break;
  case DesignId::D2A: {
    add_interval("setup", oh.setup_s);
    add_interval("distributing", oh.distributing_s);
    // Early binding: balance on predicted per-image time for the whole
    // pipeline (tiling + counting are both linear in size).
    const ExecTimeModel& m1 = models.at(config.design, TaskKind::Tiling);
    const ExecTimeModel& m2 = models.at(config.design, TaskKind::Counting);
    ExecTimeModel combined{m1.alpha + m2.alpha, m1.beta + m2.beta, 0.0, config.design,
                           TaskKind::Tiling};
    auto parts = partition_balanced(workload, cluster.nodes.size(), combined);
    simulate_queue_design_tasks(ctx, t, parts, true);
    break;
  }
  }

  double run_end = std::max(t, last_task_end(ctx.trace));
  if (oh.teardown_s > 0.0) {
    intervals.push_back({"teardown", run_end, run_end + oh.teardown_s});
    run_end += oh.teardown_s;
  }
  RunManifest manifest = make_manifest(ctx, intervals, run_end);
  return {std::move(ctx.trace), std::move(manifest)};
}

} // namespace hetflow::detail
