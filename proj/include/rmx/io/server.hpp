#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "rmx/generation.hpp"
#include "rmx/io/protocol.hpp"

namespace rmx::io {

/// Transport-free state machine of one streaming connection: the first
/// ctx_len subject frames warm up a mirror-initialized session, every later
/// subject frame yields exactly one generated frame. Errors produce one 0x04
/// message and close the session.
class StreamProtocolSession {
 public:
  StreamProtocolSession(const MotionModel<float>& model, const SkeletonTopology& topo);

  std::vector<FrameMessage> on_message(const FrameMessage& msg);
  /// Reply for bytes that failed to decode; closes the session.
  FrameMessage on_protocol_error(ProtocolError err);

  bool closed() const { return closed_; }
  std::size_t received() const { return received_; }
  std::size_t replies() const { return replies_; }
  const std::vector<double>& step_latencies_ms() const { return latencies_ms_; }

 private:
  FrameMessage fail(const std::string& reason, std::uint32_t frame_index);

  const MotionModel<float>* model_;
  const SkeletonTopology* topo_;
  std::vector<PoseFrame> warmup_;
  std::optional<GenerationSession> session_;
  std::size_t received_ = 0;
  std::size_t replies_ = 0;
  bool closed_ = false;
  std::vector<double> latencies_ms_;
};

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::ostream* log = nullptr;
};

/// TCP front end: one thread and one StreamProtocolSession per connection,
/// all sharing the read-only model.
class StreamServer {
 public:
  StreamServer(std::shared_ptr<const MotionModel<float>> model, SkeletonTopology topo,
               ServerOptions options = {});
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  /// Binds and starts accepting. Throws IoError when the port is unavailable.
  void start();
  /// Stops accepting, closes open connections and joins all threads.
  void stop();
  std::uint16_t port() const { return port_; }
  std::size_t connections_served() const { return served_.load(); }

 private:
  void accept_loop();
  void serve_connection(int fd);
  void log(const std::string& line);

  std::shared_ptr<const MotionModel<float>> model_;
  SkeletonTopology topo_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::set<int> open_fds_;
};

/// Blocking client used by tests and tools.
class StreamClient {
 public:
  StreamClient(const std::string& host, std::uint16_t port);
  ~StreamClient();
  StreamClient(const StreamClient&) = delete;
  StreamClient& operator=(const StreamClient&) = delete;

  void send(const FrameMessage& msg);
  void send_raw(std::span<const std::uint8_t> bytes);
  /// Next message, or nullopt once the server closed the connection.
  /// Throws IoError on a malformed reply.
  std::optional<FrameMessage> receive();

 private:
  int fd_ = -1;
};

/// Reads one whole message from a socket into `out`. Returns false on a
/// clean EOF before any byte; a ProtocolError when the prefix is invalid.
std::variant<bool, ProtocolError> read_message(int fd, std::vector<std::uint8_t>& out);

}  // namespace rmx::io
