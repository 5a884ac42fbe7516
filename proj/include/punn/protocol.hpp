#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace punn {

// Wire format: every message is an ASCII decimal byte count, a newline, and
// that many bytes of JSON. Message types: HELLO, JOB, RESULT, DONE, ERROR.
// See docs/protocol.md for the field-level contract.
inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxMessageBytes = 256u << 20;

// Thin RAII TCP socket. Linux-only (the harness targets POSIX hosts).
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  // Throws ProtocolError on failure or timeout.
  static Socket connect(const std::string& host, int port, double timeout_seconds);

  void send_all(const void* data, std::size_t len);
  // false on orderly EOF at a message boundary; throws mid-message.
  bool recv_all(void* data, std::size_t len);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void close();

 private:
  int fd_ = -1;
};

class ListenSocket {
 public:
  // port 0 picks an ephemeral port; bound_port() reports the actual one.
  ListenSocket(const std::string& host, int port);
  ~ListenSocket();
  ListenSocket(const ListenSocket&) = delete;
  ListenSocket& operator=(const ListenSocket&) = delete;

  Socket accept();
  int bound_port() const { return port_; }

 private:
  int fd_ = -1;
  int port_ = 0;
};

void send_message(Socket& sock, const nlohmann::json& msg);
// nullopt on orderly close between messages.
std::optional<nlohmann::json> recv_message(Socket& sock);

// "host:port" -> (host, port); throws ProtocolError on malformed input.
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

nlohmann::json make_hello();
nlohmann::json make_error(const std::string& text, int job_id = -1);

}  // namespace punn
