#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "hetflow/protocol.hpp"

namespace hetflow::protocol {

/// Serves one or more queues over a local (AF_UNIX) stream socket so that
/// senders and receivers can live in separate processes. Single-process
/// in-memory Queue use is the default; this transport is opt-in.
///
/// Wire format: 4-byte big-endian length prefix, then a JSON frame
///   {"type":"register|push|close|pull", "queue":..., "sender"|"receiver":...,
///    "payload"?:...}
/// answered by
///   {"status":"ok|data|wait|empty|error", "payload"?:..., "message"?:...}.
/// Payloads must be UTF-8 (the designs exchange JSON descriptors).
class QueueServer {
public:
  explicit QueueServer(std::string socket_path);
  ~QueueServer();

  QueueServer(const QueueServer&) = delete;
  QueueServer& operator=(const QueueServer&) = delete;

  Queue& create_queue(const std::string& queue_id);
  Queue& queue(const std::string& queue_id);

  const std::string& socket_path() const { return socket_path_; }
  void stop();

private:
  void serve();
  void handle_connection(int fd);
  std::string handle_frame(const std::string& frame);

  std::string socket_path_;
  int listen_fd_ = -1;
  std::thread accept_thread_;
  std::vector<std::thread> conn_threads_;
  std::set<int> live_fds_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<Queue>> queues_;
  bool stopping_ = false;
};

/// Client-side proxy with the same operations as Queue, speaking the frame
/// protocol above. One connection per proxy; operations are serialized on it.
class RemoteQueue {
public:
  RemoteQueue(const std::string& socket_path, std::string queue_id);
  ~RemoteQueue();

  RemoteQueue(const RemoteQueue&) = delete;
  RemoteQueue& operator=(const RemoteQueue&) = delete;

  void register_sender(const std::string& sender_id);
  void push(const std::string& sender_id, std::string payload);
  void close_sender(const std::string& sender_id);
  PullResult pull(const std::string& receiver_id);

private:
  std::string request(const std::string& type, const std::string& role_key,
                      const std::string& role_id, const std::string* payload);

  std::mutex mu_;
  std::string queue_id_;
  int fd_ = -1;
};

} // namespace hetflow::protocol
