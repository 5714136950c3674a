#include <atomic>
#include <map>
#include <thread>
#include <vector>

#include <doctest.h>

#include "hetflow/errors.hpp"
#include "hetflow/protocol.hpp"
#include "hetflow/protocol_wire.hpp"

using namespace hetflow;
using namespace hetflow::protocol;

namespace {

/// Virtual clock for driving receive_loop in tests: sleeping advances time
/// instantly.
class ScriptedClock : public Clock {
public:
  double now() override { return t_; }
  void sleep(double seconds) override { t_ += seconds; }

private:
  double t_ = 0.0;
};

} // namespace

TEST_CASE("pull distinguishes wait from empty") {
  Queue q("q");
  CHECK(q.pull("r").status == PullStatus::Empty); // no sender ever connected

  q.register_sender("s");
  CHECK(q.pull("r").status == PullStatus::Wait); // sender open, nothing queued

  q.push("s", "a");
  PullResult r = q.pull("r");
  REQUIRE(r.is_data());
  CHECK(r.payload == "a");

  CHECK(q.pull("r").status == PullStatus::Wait);
  q.close_sender("s");
  CHECK(q.pull("r").status == PullStatus::Empty);
}

TEST_CASE("items pushed before close remain pullable") {
  Queue q("q");
  q.register_sender("s");
  q.push("s", "a");
  q.push("s", "b");
  q.close_sender("s");
  CHECK(q.pull("r").payload == "a"); // FIFO
  CHECK(q.pull("r").payload == "b");
  CHECK(q.pull("r").status == PullStatus::Empty);
}

TEST_CASE("sender registration rules") {
  Queue q("q");
  q.register_sender("s");
  CHECK_THROWS_AS(q.register_sender("s"), ProtocolError); // already open
  CHECK_THROWS_AS(q.push("ghost", "x"), ProtocolError);   // never registered
  CHECK_THROWS_AS(q.close_sender("ghost"), ProtocolError);
  q.close_sender("s");
  CHECK_THROWS_AS(q.push("s", "x"), ProtocolError); // closed
  CHECK_NOTHROW(q.register_sender("s"));            // reconnection is fine
  q.push("s", "x");
  CHECK(q.size() == 1);
  CHECK(q.open_sender_count() == 1);
}

TEST_CASE("empty requires all senders closed") {
  Queue q("q");
  q.register_sender("s1");
  q.register_sender("s2");
  q.close_sender("s1");
  CHECK(q.pull("r").status == PullStatus::Wait); // s2 still open
  q.close_sender("s2");
  CHECK(q.pull("r").status == PullStatus::Empty);
}

TEST_CASE("receive_loop processes, waits, and terminates") {
  Queue q("q");
  q.register_sender("s");
  q.push("s", "a");
  q.push("s", "b");
  q.close_sender("s");

  ScriptedClock clock;
  std::vector<std::string> seen;
  ReceiveReport rep = receive_loop(
      q, "r", [&](const std::string& p) { seen.push_back(p); }, 1.0, clock);
  CHECK(seen == std::vector<std::string>{"a", "b"});
  CHECK(rep.processed == 2);
  CHECK(rep.failed == 0);
  CHECK(rep.waits == 0);
  CHECK(rep.terminated_at == doctest::Approx(0.0)); // drained immediately
}

TEST_CASE("receive_loop polls while a sender is open") {
  // A loop that has to wait: the sender pushes and closes from another
  // thread while the loop polls on the real clock.
  Queue q2("q2");
  q2.register_sender("s");
  SystemClock real;
  std::thread closer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    q2.push("s", "y");
    q2.close_sender("s");
  });
  std::size_t processed = 0;
  ReceiveReport rep2 =
      receive_loop(q2, "r", [&](const std::string&) { ++processed; }, 0.005, real);
  closer.join();
  CHECK(processed == 1);
  CHECK(rep2.waits >= 1);
}

TEST_CASE("receive_loop records handler failures and continues") {
  Queue q("q");
  q.register_sender("s");
  for (int i = 0; i < 4; ++i)
    q.push("s", i % 2 == 0 ? "ok" : "boom");
  q.close_sender("s");

  ScriptedClock clock;
  std::size_t ok = 0;
  ReceiveReport rep = receive_loop(
      q, "r",
      [&](const std::string& p) {
        if (p == "boom")
          throw std::runtime_error("handler exploded");
        ++ok;
      },
      1.0, clock);
  CHECK(ok == 2);
  CHECK(rep.processed == 2);
  CHECK(rep.failed == 2);
}

TEST_CASE("concurrent senders and receivers deliver exactly once") {
  Queue q("q");
  const int n_senders = 3, per_sender = 200, n_receivers = 5;
  for (int s = 0; s < n_senders; ++s)
    q.register_sender("s" + std::to_string(s));

  std::vector<std::thread> threads;
  for (int s = 0; s < n_senders; ++s)
    threads.emplace_back([&q, s] {
      std::string id = "s" + std::to_string(s);
      for (int i = 0; i < per_sender; ++i)
        q.push(id, id + ":" + std::to_string(i));
      q.close_sender(id);
    });

  std::mutex mu;
  std::map<std::string, int> delivered;
  for (int r = 0; r < n_receivers; ++r)
    threads.emplace_back([&, r] {
      SystemClock clock;
      receive_loop(
          q, "r" + std::to_string(r),
          [&](const std::string& p) {
            std::lock_guard<std::mutex> lock(mu);
            ++delivered[p];
          },
          0.001, clock);
    });
  for (auto& t : threads)
    t.join();

  CHECK(delivered.size() == n_senders * per_sender);
  for (const auto& [_, count] : delivered)
    CHECK(count == 1);
  CHECK(q.pull("late").status == PullStatus::Empty);
}

TEST_CASE("wire protocol round trip over a unix socket") {
  const std::string path = "/tmp/hetflow-test-" + std::to_string(::getpid()) + ".sock";
  QueueServer server(path);
  server.create_queue("jobs");

  RemoteQueue sender(path, "jobs");
  RemoteQueue receiver(path, "jobs");

  CHECK(receiver.pull("r").status == PullStatus::Empty); // no sender yet
  sender.register_sender("s");
  CHECK(receiver.pull("r").status == PullStatus::Wait);

  sender.push("s", R"({"id":"img-000001","size_mb":123.5})");
  PullResult got = receiver.pull("r");
  REQUIRE(got.is_data());
  CHECK(got.payload == R"({"id":"img-000001","size_mb":123.5})");

  sender.close_sender("s");
  CHECK(receiver.pull("r").status == PullStatus::Empty);

  // Errors travel back as error frames and surface as exceptions.
  RemoteQueue bad(path, "no-such-queue");
  CHECK_THROWS_AS(bad.pull("r"), ProtocolError);
  CHECK_THROWS_AS(sender.push("s", "after close"), ProtocolError);

  server.stop();
}

TEST_CASE("wire protocol supports the full worker handshake") {
  const std::string path = "/tmp/hetflow-test2-" + std::to_string(::getpid()) + ".sock";
  QueueServer server(path);
  server.create_queue("jobs");

  RemoteQueue sender(path, "jobs");
  sender.register_sender("client");
  for (int i = 0; i < 20; ++i)
    sender.push("client", std::to_string(i));

  std::atomic<int> pulled{0};
  std::vector<std::thread> receivers;
  for (int r = 0; r < 3; ++r)
    receivers.emplace_back([&path, &pulled] {
      RemoteQueue rq(path, "jobs");
      for (;;) {
        PullResult res = rq.pull("w");
        if (res.status == PullStatus::Empty)
          return;
        if (res.is_data())
          ++pulled;
        else
          std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    });
  sender.close_sender("client");
  for (auto& t : receivers)
    t.join();
  CHECK(pulled.load() == 20);
  server.stop();
}
