#include "hetflow/protocol.hpp"

#include <chrono>
#include <thread>

#include "hetflow/errors.hpp"

namespace hetflow::protocol {

void Queue::register_sender(const std::string& sender_id) {
  std::lock_guard lock(mu_);
  if (open_senders_.contains(sender_id))
    throw ProtocolError("queue " + id_ + ": sender '" + sender_id + "' is already connected");
  closed_senders_.erase(sender_id);
  open_senders_.insert(sender_id);
}

void Queue::push(const std::string& sender_id, std::string payload) {
  std::lock_guard lock(mu_);
  if (!open_senders_.contains(sender_id))
    throw ProtocolError("queue " + id_ + ": push from disconnected sender '" + sender_id + "'");
  items_.push_back(std::move(payload));
}

void Queue::close_sender(const std::string& sender_id) {
  std::lock_guard lock(mu_);
  if (!open_senders_.contains(sender_id))
    throw ProtocolError("queue " + id_ + ": close of non-connected sender '" + sender_id + "'");
  open_senders_.erase(sender_id);
  closed_senders_.insert(sender_id);
}

PullResult Queue::pull(const std::string& /*receiver_id*/) {
  std::lock_guard lock(mu_);
  if (!items_.empty()) {
    PullResult r{PullStatus::Data, std::move(items_.front())};
    items_.pop_front();
    return r;
  }
  if (!open_senders_.empty())
    return {PullStatus::Wait, {}};
  return {PullStatus::Empty, {}};
}

std::size_t Queue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::size_t Queue::open_sender_count() const {
  std::lock_guard lock(mu_);
  return open_senders_.size();
}

SystemClock::SystemClock() {
  t0_ = 0.0;
  t0_ = now();
}

double SystemClock::now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count() - t0_;
}

void SystemClock::sleep(double seconds) {
  if (seconds > 0.0)
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

ReceiveReport receive_loop(Queue& queue, const std::string& receiver_id,
                           const std::function<void(const std::string&)>& handler,
                           double poll_interval_s, Clock& clock) {
  ReceiveReport report;
  for (;;) {
    PullResult r = queue.pull(receiver_id);
    switch (r.status) {
    case PullStatus::Data:
      try {
        handler(r.payload);
        ++report.processed;
      } catch (const std::exception&) {
        ++report.failed;
      }
      break;
    case PullStatus::Wait:
      ++report.waits;
      clock.sleep(poll_interval_s);
      break;
    case PullStatus::Empty:
      report.terminated_at = clock.now();
      return report;
    }
  }
}

} // namespace hetflow::protocol
