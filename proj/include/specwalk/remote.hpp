#pragma once

#include "specwalk/oracle.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace specwalk {

// Blocking line-oriented TCP stream.
class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  LineSocket(LineSocket&& other) noexcept;
  LineSocket& operator=(LineSocket&& other) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;
  ~LineSocket();

  // Throws ConnectionError.
  static LineSocket connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

  bool valid() const { return fd_ >= 0; }
  void write_line(const std::string& line, std::chrono::milliseconds timeout);
  // Throws TimeoutError, or ConnectionError when the peer closed the stream.
  std::string read_line(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "host:port"; throws InvalidArgument.
Endpoint parse_endpoint(const std::string& text);

// Client for a classifier served over the oracle wire protocol. Serial: one
// request in flight per connection.
class RemoteOracle final : public HardLabelOracle {
 public:
  RemoteOracle(Endpoint endpoint, std::chrono::milliseconds timeout, int retries = 0);

  int class_count() const override { return classes_; }
  Concurrency concurrency() const override { return Concurrency::kSerial; }
  const std::string& model_name() const { return name_; }

 protected:
  Label do_classify(const PointCloud& cloud) override;

 private:
  void connect_and_handshake();
  Label round_trip(const PointCloud& cloud);

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int retries_;
  LineSocket socket_;
  std::uint64_t next_id_ = 1;
  int classes_ = 0;
  std::string name_;
  std::mutex mutex_;
};

// Serves an oracle over the wire protocol on 127.0.0.1 (or `bind_host`),
// one thread per connection. Port 0 picks an ephemeral port.
class OracleServer {
 public:
  OracleServer(std::shared_ptr<HardLabelOracle> oracle, std::string name, std::uint16_t port = 0,
               std::string bind_host = "127.0.0.1");
  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;
  ~OracleServer();

  std::uint16_t port() const { return port_; }
  // Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);
  std::string handle_line(const std::string& line);

  std::shared_ptr<HardLabelOracle> oracle_;
  std::string name_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::mutex classify_mutex_;
  std::mutex conn_mutex_;
  std::vector<int> connections_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
};

}  // namespace specwalk
