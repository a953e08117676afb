#include "rmx/io/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <numeric>
#include <sstream>

#include "rmx/error.hpp"

namespace rmx::io {

StreamProtocolSession::StreamProtocolSession(const MotionModel<float>& model,
                                             const SkeletonTopology& topo)
    : model_(&model), topo_(&topo) {}

FrameMessage StreamProtocolSession::fail(const std::string& reason, std::uint32_t frame_index) {
  closed_ = true;
  return FrameMessage::error(reason, frame_index);
}

FrameMessage StreamProtocolSession::on_protocol_error(ProtocolError err) {
  return fail("protocol error: " + std::string(to_string(err)), 0);
}

std::vector<FrameMessage> StreamProtocolSession::on_message(const FrameMessage& msg) {
  if (closed_) return {};
  switch (msg.type) {
    case MessageType::kEndOfStream:
      closed_ = true;
      return {FrameMessage::end_of_stream(msg.frame_index)};
    case MessageType::kSubjectFrame:
      break;
    default:
      return {fail("unexpected message type from client", msg.frame_index)};
  }
  ++received_;
  try {
    PoseFrame frame = msg.to_pose();
    if (frame.person_id != 0) throw ValidationError("subject frames must carry person id 0");
    validate_preprocessed(frame, *topo_);
    if (!session_) {
      warmup_.push_back(frame);
      if (warmup_.size() == model_->config().ctx_len) {
        session_.emplace(*model_, warmup_, std::nullopt, *topo_);
        warmup_.clear();
      }
      return {};
    }
    const auto t0 = std::chrono::steady_clock::now();
    PoseFrame out = session_->step(frame);
    latencies_ms_.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    ++replies_;
    return {FrameMessage::generated(out)};
  } catch (const DivergenceError& e) {
    return {fail("divergence at frame " + std::to_string(e.index()), msg.frame_index)};
  } catch (const Error& e) {
    return {fail(e.what(), msg.frame_index)};
  }
}

namespace {

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// Returns bytes read before EOF/error (== n on success).
std::size_t read_exact(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

std::variant<bool, ProtocolError> read_message(int fd, std::vector<std::uint8_t>& out) {
  out.clear();
  // Grow the buffer until the prefix tells the full size.
  std::size_t want = 5;
  while (true) {
    const std::size_t have = out.size();
    out.resize(want);
    const std::size_t got = read_exact(fd, out.data() + have, want - have);
    if (got < want - have) {
      out.resize(have + got);
      if (out.empty()) return false;
      return out.size() < kHeaderBytes ? ProtocolError::kTooShort
                                       : ProtocolError::kLengthMismatch;
    }
    const auto len = expected_length(out);
    if (auto* err = std::get_if<ProtocolError>(&len)) return *err;
    const std::size_t total = std::get<std::size_t>(len);
    if (total == 0) {
      want = kHeaderBytes + 2;
    } else if (total == out.size()) {
      return true;
    } else {
      want = total;
    }
  }
}

StreamServer::StreamServer(std::shared_ptr<const MotionModel<float>> model, SkeletonTopology topo,
                           ServerOptions options)
    : model_(std::move(model)), topo_(std::move(topo)), options_(std::move(options)) {
  if (!model_) throw ConfigError("server needs a model");
}

StreamServer::~StreamServer() { stop(); }

void StreamServer::log(const std::string& line) {
  if (!options_.log) return;
  std::lock_guard lock(mu_);
  *options_.log << line << '\n' << std::flush;
}

void StreamServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw IoError("bad bind address '" + options_.bind_address + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("cannot listen on port " + std::to_string(options_.port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  log("listening on " + options_.bind_address + ":" + std::to_string(port_));
}

void StreamServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void StreamServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    open_fds_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void StreamServer::serve_connection(int fd) {
  StreamProtocolSession session(*model_, topo_);
  std::vector<std::uint8_t> buf;
  auto reply = [&](const FrameMessage& m) {
    const auto bytes = encode_frame(m);
    return write_all(fd, bytes.data(), bytes.size());
  };
  while (!session.closed()) {
    const auto r = read_message(fd, buf);
    if (auto* err = std::get_if<ProtocolError>(&r)) {
      reply(session.on_protocol_error(*err));
      break;
    }
    if (!std::get<bool>(r)) break;  // client hung up
    const auto decoded = decode_frame(buf);
    bool ok = true;
    if (auto* err = std::get_if<ProtocolError>(&decoded)) {
      ok = reply(session.on_protocol_error(*err));
    } else {
      for (const auto& m : session.on_message(std::get<FrameMessage>(decoded))) ok = ok && reply(m);
    }
    if (!ok) break;
  }

  const auto& lat = session.step_latencies_ms();
  std::ostringstream line;
  line << "stream end: received " << session.received() << ", replies " << session.replies();
  if (!lat.empty()) {
    auto sorted = lat;
    std::sort(sorted.begin(), sorted.end());
    line << ", step latency ms mean "
         << std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size())
         << " p50 " << sorted[sorted.size() / 2] << " max " << sorted.back();
  }
  log(line.str());
  {
    std::lock_guard lock(mu_);
    open_fds_.erase(fd);
  }
  ::close(fd);
  ++served_;
}

StreamClient::StreamClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw IoError("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    if (fd_ >= 0) ::close(fd_);
    throw IoError("cannot connect to " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

StreamClient::~StreamClient() {
  if (fd_ >= 0) ::close(fd_);
}

void StreamClient::send(const FrameMessage& msg) {
  const auto bytes = encode_frame(msg);
  send_raw(bytes);
}

void StreamClient::send_raw(std::span<const std::uint8_t> bytes) {
  if (!write_all(fd_, bytes.data(), bytes.size())) throw IoError("send failed");
}

std::optional<FrameMessage> StreamClient::receive() {
  std::vector<std::uint8_t> buf;
  const auto r = read_message(fd_, buf);
  if (auto* err = std::get_if<ProtocolError>(&r)) {
    throw IoError("bad reply: " + std::string(to_string(*err)));
  }
  if (!std::get<bool>(r)) return std::nullopt;
  const auto decoded = decode_frame(buf);
  if (auto* err = std::get_if<ProtocolError>(&decoded)) {
    throw IoError("bad reply: " + std::string(to_string(*err)));
  }
  return std::get<FrameMessage>(decoded);
}

}  // namespace rmx::io
