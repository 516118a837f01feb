#include "specwalk/remote.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace specwalk {
namespace {

std::string errno_text() { return std::strerror(errno); }

int wait_for(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc;
  }
}

}  // namespace

LineSocket::LineSocket(LineSocket&& other) noexcept : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
  other.fd_ = -1;
}

LineSocket& LineSocket::operator=(LineSocket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    buffer_ = std::move(other.buffer_);
    other.fd_ = -1;
  }
  return *this;
}

LineSocket::~LineSocket() { close(); }

void LineSocket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

LineSocket LineSocket::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const auto service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw ConnectionError("cannot resolve " + host + ": " + ::gai_strerror(rc));

  std::string last_error = "no addresses";
  for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      if (wait_for(fd, POLLOUT, timeout) > 0) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::freeaddrinfo(found);
      return LineSocket(fd);
    }
    last_error = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(found);
  throw ConnectionError("cannot connect to " + host + ":" + service + ": " + last_error);
}

void LineSocket::write_line(const std::string& line, std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw ConnectionError("socket is closed");
  const std::string data = line + '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const int ready = wait_for(fd_, POLLOUT, timeout);
    if (ready == 0) throw TimeoutError("timed out sending request");
    if (ready < 0) throw ConnectionError("poll failed: " + errno_text());
    const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ConnectionError("send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string LineSocket::read_line(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw ConnectionError("socket is closed");
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TimeoutError("timed out waiting for response");
    const int ready = wait_for(fd_, POLLIN, left);
    if (ready == 0) throw TimeoutError("timed out waiting for response");
    if (ready < 0) throw ConnectionError("poll failed: " + errno_text());
    char chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n == 0) throw ConnectionError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ConnectionError("recv failed: " + errno_text());
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw InvalidArgument("endpoint must be host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  try {
    const auto port = std::stoul(text.substr(colon + 1));
    if (port == 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw InvalidArgument("invalid port in endpoint '" + text + "'");
  }
  return ep;
}

RemoteOracle::RemoteOracle(Endpoint endpoint, std::chrono::milliseconds timeout, int retries)
    : endpoint_(std::move(endpoint)), timeout_(timeout), retries_(retries) {
  if (retries_ < 0) throw InvalidArgument("RemoteOracle: retries must be >= 0");
  connect_and_handshake();
}

void RemoteOracle::connect_and_handshake() {
  socket_ = LineSocket::connect(endpoint_.host, endpoint_.port, timeout_);
  socket_.write_line(wire::encode_info_request(), timeout_);
  const auto resp = wire::decode_response(socket_.read_line(timeout_));
  if (resp.id != 0) throw ProtocolError("info response id " + std::to_string(resp.id) + " != 0");
  if (resp.error) throw RemoteError("info request failed: " + *resp.error);
  if (!resp.classes || *resp.classes < 2) throw ProtocolError("info response lacks a valid class count");
  classes_ = *resp.classes;
  name_ = resp.name.value_or("");
}

Label RemoteOracle::round_trip(const PointCloud& cloud) {
  const auto id = next_id_++;
  socket_.write_line(wire::encode_classify_request(id, cloud), timeout_);
  const auto resp = wire::decode_response(socket_.read_line(timeout_));
  if (resp.id != id)
    throw ProtocolError("response id " + std::to_string(resp.id) + " does not match request id " + std::to_string(id));
  if (resp.error) throw RemoteError(*resp.error);
  if (!resp.label) throw ProtocolError("classify response lacks a label");
  if (*resp.label < 0 || *resp.label >= classes_)
    throw ProtocolError("label " + std::to_string(*resp.label) + " outside [0, " + std::to_string(classes_) + ")");
  return *resp.label;
}

Label RemoteOracle::do_classify(const PointCloud& cloud) {
  std::lock_guard lock(mutex_);
  for (int attempt = 0;; ++attempt) {
    try {
      if (!socket_.valid()) connect_and_handshake();
      return round_trip(cloud);
    } catch (const ConnectionError&) {
      socket_.close();
      if (attempt >= retries_) throw;
    } catch (const TimeoutError&) {
      socket_.close();
      if (attempt >= retries_) throw;
    }
  }
}

OracleServer::OracleServer(std::shared_ptr<HardLabelOracle> oracle, std::string name, std::uint16_t port,
                           std::string bind_host)
    : oracle_(std::move(oracle)), name_(std::move(name)) {
  if (!oracle_) throw InvalidArgument("OracleServer: null oracle");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConnectionError("socket failed: " + errno_text());
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw InvalidArgument("OracleServer: bind host must be an IPv4 address");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 16) < 0) {
    const auto err = errno_text();
    ::close(listen_fd_);
    throw ConnectionError("cannot listen on " + bind_host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

OracleServer::~OracleServer() {
  stop();
  if (acceptor_.joinable()) acceptor_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
}

void OracleServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void OracleServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  std::lock_guard lock(conn_mutex_);
  for (const int fd : connections_) ::shutdown(fd, SHUT_RDWR);
}

void OracleServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(conn_mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    connections_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void OracleServer::serve_connection(int fd) {
  LineSocket sock(fd);
  constexpr std::chrono::hours kIdle{24};
  try {
    for (;;) {
      const auto line = sock.read_line(kIdle);
      sock.write_line(handle_line(line), std::chrono::seconds(30));
    }
  } catch (const OracleError&) {
    // peer went away or server stopping
  }
  std::lock_guard lock(conn_mutex_);
  std::erase(connections_, fd);
  sock.close();
}

std::string OracleServer::handle_line(const std::string& line) {
  std::uint64_t id = 0;
  try {
    const auto req = wire::decode_request(line, &id);
    if (req.op == wire::Op::kInfo) return wire::encode_info_response(req.id, oracle_->class_count(), name_);
    Label label;
    if (oracle_->concurrency() == Concurrency::kSerial) {
      std::lock_guard lock(classify_mutex_);
      label = oracle_->classify(*req.points);
    } else {
      label = oracle_->classify(*req.points);
    }
    return wire::encode_label_response(req.id, label);
  } catch (const std::exception& e) {
    return wire::encode_error_response(id, e.what());
  }
}

}  // namespace specwalk
