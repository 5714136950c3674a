#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <set>
#include <string>

namespace hetflow::protocol {

enum class PullStatus { Data, Wait, Empty };

/// Outcome of a pull. Wait and Empty are ordinary values, not errors:
///   Wait  - no item available but at least one sender is still connected;
///   Empty - no item available and no sender remains connected.
struct PullResult {
  PullStatus status = PullStatus::Empty;
  std::string payload; // valid only when status == Data

  bool is_data() const { return status == PullStatus::Data; }
};

/// Multi-producer multi-consumer queue with explicit sender registration.
/// Senders connect, push opaque payloads, and disconnect when done;
/// receivers pull until they observe Empty. All operations take a single
/// lock, so every pull (item check + sender check + dequeue) is one
/// linearization point -- required for Empty to be trustworthy under
/// concurrency.
class Queue {
public:
  explicit Queue(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }

  /// Connects a sender. Re-registering after a close is allowed
  /// (re-connection); registering while already connected is a protocol
  /// error.
  void register_sender(const std::string& sender_id);

  /// Appends a payload. FIFO order is preserved per sender (and, with this
  /// single-lock implementation, globally). Pushing while not connected is
  /// a protocol error.
  void push(const std::string& sender_id, std::string payload);

  /// Disconnects a sender. Items it pushed remain pullable.
  void close_sender(const std::string& sender_id);

  /// Removes and returns the head item, or reports Wait/Empty.
  PullResult pull(const std::string& receiver_id);

  std::size_t size() const;
  std::size_t open_sender_count() const;

private:
  mutable std::mutex mu_;
  std::string id_;
  std::deque<std::string> items_;
  std::set<std::string> open_senders_;
  std::set<std::string> closed_senders_;
};

/// Time source for receive_loop. The realtime backend uses SystemClock;
/// tests drive the loop with a scripted clock in virtual time.
class Clock {
public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep(double seconds) = 0;
};

/// Monotonic wall clock; now() is seconds since construction.
class SystemClock : public Clock {
public:
  SystemClock();
  double now() override;
  void sleep(double seconds) override;

private:
  double t0_;
};

struct ReceiveReport {
  std::size_t processed = 0;
  std::size_t failed = 0;
  std::size_t waits = 0;
  double terminated_at = 0.0;
};

/// Pulls until Empty: Data items go to the handler, Wait sleeps one poll
/// interval and retries. A throwing handler marks the item failed and the
/// loop continues, so delivery accounting stays exact.
ReceiveReport receive_loop(Queue& queue, const std::string& receiver_id,
                           const std::function<void(const std::string&)>& handler,
                           double poll_interval_s, Clock& clock);

} // namespace hetflow::protocol
