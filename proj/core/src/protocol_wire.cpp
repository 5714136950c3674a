#include "hetflow/protocol_wire.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "hetflow/errors.hpp"

namespace hetflow::protocol {

namespace {

bool read_exact(int fd, void* buf, std::size_t len) {
  auto* p = static_cast<char*>(buf);
  while (len > 0) {
    ssize_t n = ::read(fd, p, len);
    if (n <= 0)
      return false;
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool write_exact(int fd, const void* buf, std::size_t len) {
  const auto* p = static_cast<const char*>(buf);
  while (len > 0) {
    ssize_t n = ::write(fd, p, len);
    if (n <= 0)
      return false;
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool send_frame(int fd, const std::string& body) {
  unsigned char hdr[4] = {static_cast<unsigned char>((body.size() >> 24) & 0xff),
                          static_cast<unsigned char>((body.size() >> 16) & 0xff),
                          static_cast<unsigned char>((body.size() >> 8) & 0xff),
                          static_cast<unsigned char>(body.size() & 0xff)};
  return write_exact(fd, hdr, 4) && write_exact(fd, body.data(), body.size());
}

bool recv_frame(int fd, std::string& body) {
  unsigned char hdr[4];
  if (!read_exact(fd, hdr, 4))
    return false;
  const std::size_t len = (static_cast<std::size_t>(hdr[0]) << 24) |
                          (static_cast<std::size_t>(hdr[1]) << 16) |
                          (static_cast<std::size_t>(hdr[2]) << 8) | hdr[3];
  if (len > (64u << 20))
    return false;
  body.resize(len);
  return read_exact(fd, body.data(), len);
}

sockaddr_un make_addr(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() + 1 > sizeof(addr.sun_path))
    throw ConfigError("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

} // namespace

QueueServer::QueueServer(std::string socket_path) : socket_path_(std::move(socket_path)) {
  ::unlink(socket_path_.c_str());
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0)
    throw ConfigError("queue server: socket() failed");
  sockaddr_un addr = make_addr(socket_path_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    throw ConfigError("queue server: cannot bind " + socket_path_);
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw ConfigError("queue server: listen failed on " + socket_path_);
  }
  accept_thread_ = std::thread([this] { serve(); });
}

QueueServer::~QueueServer() {
  stop();
}

void QueueServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_)
      return;
    stopping_ = true;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable())
    accept_thread_.join();
  {
    // Unblock handlers waiting in read() on connections a client never
    // closed. Handlers close their own fd (under mu_), so only shut down.
    std::lock_guard lock(mu_);
    for (int fd : live_fds_)
      ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : conn_threads_)
    if (t.joinable())
      t.join();
  ::unlink(socket_path_.c_str());
}

Queue& QueueServer::create_queue(const std::string& queue_id) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = queues_.try_emplace(queue_id, nullptr);
  if (inserted)
    it->second = std::make_unique<Queue>(queue_id);
  return *it->second;
}

Queue& QueueServer::queue(const std::string& queue_id) {
  std::lock_guard lock(mu_);
  auto it = queues_.find(queue_id);
  if (it == queues_.end())
    throw ProtocolError("queue server: no such queue '" + queue_id + "'");
  return *it->second;
}

void QueueServer::serve() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0)
      return; // listener closed
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    live_fds_.insert(fd);
    conn_threads_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void QueueServer::handle_connection(int fd) {
  std::string frame;
  while (recv_frame(fd, frame)) {
    if (!send_frame(fd, handle_frame(frame)))
      break;
  }
  std::lock_guard lock(mu_);
  ::close(fd);
  live_fds_.erase(fd);
}

std::string QueueServer::handle_frame(const std::string& frame) {
  nlohmann::json reply;
  try {
    nlohmann::json req = nlohmann::json::parse(frame);
    const std::string type = req.at("type").get<std::string>();
    const std::string queue_id = req.at("queue").get<std::string>();
    Queue& q = queue(queue_id);
    if (type == "register") {
      q.register_sender(req.at("sender").get<std::string>());
      reply["status"] = "ok";
    } else if (type == "push") {
      q.push(req.at("sender").get<std::string>(), req.at("payload").get<std::string>());
      reply["status"] = "ok";
    } else if (type == "close") {
      q.close_sender(req.at("sender").get<std::string>());
      reply["status"] = "ok";
    } else if (type == "pull") {
      PullResult r = q.pull(req.at("receiver").get<std::string>());
      switch (r.status) {
      case PullStatus::Data:
        reply["status"] = "data";
        reply["payload"] = r.payload;
        break;
      case PullStatus::Wait:
        reply["status"] = "wait";
        break;
      case PullStatus::Empty:
        reply["status"] = "empty";
        break;
      }
    } else {
      reply["status"] = "error";
      reply["message"] = "unknown frame type '" + type + "'";
    }
  } catch (const std::exception& e) {
    reply = {{"status", "error"}, {"message", e.what()}};
  }
  return reply.dump();
}

RemoteQueue::RemoteQueue(const std::string& socket_path, std::string queue_id)
    : queue_id_(std::move(queue_id)) {
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0)
    throw ConfigError("remote queue: socket() failed");
  sockaddr_un addr = make_addr(socket_path);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw ConfigError("remote queue: cannot connect to " + socket_path);
  }
}

RemoteQueue::~RemoteQueue() {
  if (fd_ >= 0)
    ::close(fd_);
}

std::string RemoteQueue::request(const std::string& type, const std::string& role_key,
                                 const std::string& role_id, const std::string* payload) {
  nlohmann::json req = {{"type", type}, {"queue", queue_id_}};
  req[role_key] = role_id;
  if (payload)
    req["payload"] = *payload;

  std::lock_guard lock(mu_);
  if (!send_frame(fd_, req.dump()))
    throw ProtocolError("remote queue: connection lost on send");
  std::string body;
  if (!recv_frame(fd_, body))
    throw ProtocolError("remote queue: connection lost on receive");
  return body;
}

void RemoteQueue::register_sender(const std::string& sender_id) {
  auto reply = nlohmann::json::parse(request("register", "sender", sender_id, nullptr));
  if (reply.at("status") != "ok")
    throw ProtocolError(reply.value("message", "register failed"));
}

void RemoteQueue::push(const std::string& sender_id, std::string payload) {
  auto reply = nlohmann::json::parse(request("push", "sender", sender_id, &payload));
  if (reply.at("status") != "ok")
    throw ProtocolError(reply.value("message", "push failed"));
}

void RemoteQueue::close_sender(const std::string& sender_id) {
  auto reply = nlohmann::json::parse(request("close", "sender", sender_id, nullptr));
  if (reply.at("status") != "ok")
    throw ProtocolError(reply.value("message", "close failed"));
}

PullResult RemoteQueue::pull(const std::string& receiver_id) {
  auto reply = nlohmann::json::parse(request("pull", "receiver", receiver_id, nullptr));
  const std::string status = reply.at("status").get<std::string>();
  if (status == "data")
    return {PullStatus::Data, reply.at("payload").get<std::string>()};
  if (status == "wait")
    return {PullStatus::Wait, {}};
  if (status == "empty")
    return {PullStatus::Empty, {}};
  throw ProtocolError(reply.value("message", "pull failed"));
}

} // namespace hetflow::protocol
