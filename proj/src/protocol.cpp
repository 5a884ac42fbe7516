#include "punn/protocol.hpp"

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
#include <utility>

#include "punn/errors.hpp"

namespace punn {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

}  // namespace

Socket::~Socket() { close(); }

Socket::Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const std::string& host, int port, double timeout_seconds) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0)
    throw ProtocolError("connect " + host + ":" + port_str + ": " + gai_strerror(rc));

  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    ::fcntl(fd, F_SETFL, O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(timeout_seconds * 1000.0));
      if (rc == 1) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        if (err != 0) last_error = std::strerror(err);
      } else {
        rc = -1;
        last_error = "connect timed out";
      }
    } else if (rc != 0) {
      last_error = std::strerror(errno);
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::freeaddrinfo(res);
      return Socket(fd);
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw ProtocolError("connect " + host + ":" + port_str + ": " + last_error);
}

void Socket::send_all(const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    const ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

bool Socket::recv_all(void* data, std::size_t len) {
  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd_, p + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv");
    }
    if (n == 0) {
      if (got == 0) return false;  // clean close at a message boundary
      throw ProtocolError("recv: connection closed mid-message");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

ListenSocket::ListenSocket(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = INADDR_ANY;
  } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    hostent* he = ::gethostbyname(host.c_str());
    if (he == nullptr || he->h_addrtype != AF_INET) {
      ::close(fd_);
      throw ProtocolError("listen: cannot resolve " + host);
    }
    std::memcpy(&addr.sin_addr, he->h_addr, sizeof(addr.sin_addr));
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int e = errno;
    ::close(fd_);
    throw ProtocolError("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(e));
  }
  if (::listen(fd_, 16) != 0) {
    const int e = errno;
    ::close(fd_);
    throw ProtocolError(std::string("listen: ") + std::strerror(e));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

ListenSocket::~ListenSocket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket ListenSocket::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno != EINTR) throw_errno("accept");
  }
}

void send_message(Socket& sock, const nlohmann::json& msg) {
  const std::string body = msg.dump();
  const std::string frame = std::to_string(body.size()) + "\n" + body;
  sock.send_all(frame.data(), frame.size());
}

std::optional<nlohmann::json> recv_message(Socket& sock) {
  // length prefix: decimal digits up to '\n'
  std::string digits;
  char c;
  while (true) {
    if (!sock.recv_all(&c, 1)) {
      if (digits.empty()) return std::nullopt;
      throw ProtocolError("recv: connection closed inside length prefix");
    }
    if (c == '\n') break;
    if (c < '0' || c > '9') throw ProtocolError("recv: malformed length prefix");
    digits.push_back(c);
    if (digits.size() > 12) throw ProtocolError("recv: length prefix too long");
  }
  if (digits.empty()) throw ProtocolError("recv: empty length prefix");
  const std::size_t len = std::stoull(digits);
  if (len > kMaxMessageBytes) throw ProtocolError("recv: message exceeds size limit");

  std::string body(len, '\0');
  if (len > 0 && !sock.recv_all(body.data(), len))
    throw ProtocolError("recv: connection closed before message body");
  try {
    nlohmann::json j = nlohmann::json::parse(body);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw ProtocolError("recv: message has no type field");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("recv: malformed JSON: ") + e.what());
  }
}

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  const auto pos = endpoint.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == endpoint.size())
    throw ProtocolError("endpoint '" + endpoint + "' is not host:port");
  int port;
  try {
    port = std::stoi(endpoint.substr(pos + 1));
  } catch (const std::exception&) {
    throw ProtocolError("endpoint '" + endpoint + "' has a non-numeric port");
  }
  if (port < 0 || port > 65535) throw ProtocolError("endpoint '" + endpoint + "' port out of range");
  return {endpoint.substr(0, pos), port};
}

nlohmann::json make_hello() {
  return nlohmann::json{{"type", "HELLO"}, {"version", kProtocolVersion}};
}

nlohmann::json make_error(const std::string& text, int job_id) {
  nlohmann::json j{{"type", "ERROR"}, {"message", text}};
  if (job_id >= 0) j["job_id"] = job_id;
  return j;
}

}  // namespace punn
