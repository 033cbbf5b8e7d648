#include "privprof/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "privprof/error.hpp"
#include "privprof/rng.hpp"

namespace privprof {

bool is_known_frame_type(std::uint8_t t) {
  switch (t) {
    case 0x01: case 0x02: case 0x03: case 0x04: case 0x05: case 0x0E: case 0x0F:
      return true;
    default:
      return false;
  }
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) fail(Errc::kOversize, "frame payload");
  const std::uint32_t len = static_cast<std::uint32_t>(f.payload.size() + 3);
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeader + f.payload.size());
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.push_back(static_cast<std::uint8_t>(f.sub >> 8));
  out.push_back(static_cast<std::uint8_t>(f.sub));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < kFrameHeader) fail(Errc::kTruncated, "frame header");
  const std::uint32_t len = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                            (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
  if (len < 3) fail(Errc::kTruncated, "frame length below header size");
  if (len - 3 > kMaxPayload) fail(Errc::kOversize, "frame payload of " + std::to_string(len - 3));
  if (bytes.size() < 4 + std::size_t{len}) fail(Errc::kTruncated, "declared length exceeds buffer");
  if (!is_known_frame_type(bytes[4])) fail(Errc::kUnknownType, "frame type " + std::to_string(bytes[4]));
  Frame f;
  f.type = static_cast<FrameType>(bytes[4]);
  f.sub = static_cast<std::uint16_t>((bytes[5] << 8) | bytes[6]);
  f.payload.assign(bytes.begin() + kFrameHeader, bytes.begin() + 4 + len);
  if (consumed) *consumed = 4 + std::size_t{len};
  return f;
}

Frame error_frame(const std::string& message) {
  return Frame{FrameType::kError, 0, std::vector<std::uint8_t>(message.begin(), message.end())};
}

std::string error_message(const Frame& f) {
  return std::string(f.payload.begin(), f.payload.end());
}

// ---- MemoryChannel ----

std::pair<std::unique_ptr<MemoryChannel>, std::unique_ptr<MemoryChannel>> MemoryChannel::make_pair(
    std::chrono::milliseconds timeout) {
  auto ab = std::make_shared<Pipe>();
  auto ba = std::make_shared<Pipe>();
  std::unique_ptr<MemoryChannel> a(new MemoryChannel(ba, ab, timeout));
  std::unique_ptr<MemoryChannel> b(new MemoryChannel(ab, ba, timeout));
  return {std::move(a), std::move(b)};
}

void MemoryChannel::send(const Frame& f) {
  auto bytes = encode_frame(f);
  count_sent(bytes.size());
  std::lock_guard lk(out_->mu);
  if (out_->closed) fail(Errc::kChannelClosed, "peer closed");
  out_->queue.push_back(std::move(bytes));
  out_->cv.notify_one();
}

Frame MemoryChannel::recv() {
  std::unique_lock lk(in_->mu);
  if (!in_->cv.wait_for(lk, timeout_, [&] { return !in_->queue.empty() || in_->closed; })) {
    fail(Errc::kChannelClosed, "receive timed out");
  }
  if (in_->queue.empty()) fail(Errc::kChannelClosed, "peer closed");
  auto bytes = std::move(in_->queue.front());
  in_->queue.pop_front();
  lk.unlock();
  count_received(bytes.size());
  return decode_frame(bytes);
}

void MemoryChannel::close() {
  for (auto* p : {in_.get(), out_.get()}) {
    if (!p) continue;
    std::lock_guard lk(p->mu);
    p->closed = true;
    p->cv.notify_all();
  }
}

// ---- TCP ----

TcpChannel::TcpChannel(int fd) : fd_(fd) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpChannel::~TcpChannel() { close(); }

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    fail(Errc::kChannelClosed, "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) fail(Errc::kChannelClosed, "connect " + host + ":" + service + ": " + std::strerror(errno));
  return std::make_unique<TcpChannel>(fd);
}

void TcpChannel::send(const Frame& f) {
  if (fd_ < 0) fail(Errc::kChannelClosed, "socket closed");
  const auto bytes = encode_frame(f);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::kChannelClosed, std::string("send: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  count_sent(bytes.size());
}

void TcpChannel::read_exact(std::uint8_t* dst, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t r = ::recv(fd_, dst + off, n - off, 0);
    if (r == 0) fail(Errc::kChannelClosed, "peer closed the connection");
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(Errc::kChannelClosed, std::string("recv: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(r);
  }
}

Frame TcpChannel::recv() {
  if (fd_ < 0) fail(Errc::kChannelClosed, "socket closed");
  std::vector<std::uint8_t> buf(4);
  read_exact(buf.data(), 4);
  const std::uint32_t len = (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
                            (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
  if (len < 3) fail(Errc::kTruncated, "frame length below header size");
  if (len - 3 > kMaxPayload) fail(Errc::kOversize, "incoming frame");
  buf.resize(4 + std::size_t{len});
  read_exact(buf.data() + 4, len);
  count_received(buf.size());
  return decode_frame(buf);
}

void TcpChannel::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener::TcpListener(std::uint16_t port, const std::string& bind_addr) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail(Errc::kIoFailure, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fail(Errc::kConfig, "bad bind address " + bind_addr);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    fail(Errc::kIoFailure, "listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

std::unique_ptr<TcpChannel> TcpListener::accept() {
  for (;;) {
    if (fd_ < 0) return nullptr;
    const int c = ::accept(fd_, nullptr, nullptr);
    if (c >= 0) return std::make_unique<TcpChannel>(c);
    if (errno == EINTR) continue;
    return nullptr;
  }
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s,
                                                     std::uint16_t default_port) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) return {s, default_port};
  const std::string host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  try {
    const unsigned long p = std::stoul(port);
    if (p == 0 || p > 65535) throw std::out_of_range("port");
    return {host.empty() ? "127.0.0.1" : host, static_cast<std::uint16_t>(p)};
  } catch (const std::exception&) {
    fail(Errc::kConfig, "bad endpoint '" + s + "'");
  }
}

// ---- Transcript ----

std::string Transcript::digest() const {
  crypto_init();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (const auto* stream : {&sent, &received}) {
    std::uint8_t len[8];
    for (int i = 0; i < 8; ++i) len[i] = static_cast<std::uint8_t>(stream->size() >> (8 * i));
    crypto_hash_sha256_update(&st, len, sizeof(len));
    crypto_hash_sha256_update(&st, stream->data(), stream->size());
  }
  std::uint8_t out[crypto_hash_sha256_BYTES];
  crypto_hash_sha256_final(&st, out);
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof(hex), out, sizeof(out));
  return hex;
}

void RecordingChannel::send(const Frame& f) {
  inner_.send(f);
  const auto bytes = encode_frame(f);
  transcript_.sent.insert(transcript_.sent.end(), bytes.begin(), bytes.end());
  transcript_.sent_frames.push_back(f);
  count_sent(bytes.size());
}

Frame RecordingChannel::recv() {
  Frame f = inner_.recv();
  const auto bytes = encode_frame(f);
  transcript_.received.insert(transcript_.received.end(), bytes.begin(), bytes.end());
  transcript_.received_frames.push_back(f);
  count_received(bytes.size());
  return f;
}

// ---- Mux ----

Frame Mux::recv_any(std::uint16_t sub) {
  auto& q = pending_[sub];
  if (!q.empty()) {
    Frame f = std::move(q.front());
    q.pop_front();
    return f;
  }
  for (;;) {
    Frame f = ch_.recv();
    if (f.type == FrameType::kError) fail(Errc::kPeerError, error_message(f));
    if (f.sub == sub) return f;
    if (f.type == FrameType::kBye) fail(Errc::kChannelClosed, "peer said goodbye");
    pending_[f.sub].push_back(std::move(f));
  }
}

Frame Mux::recv(std::uint16_t sub, FrameType expected) {
  Frame f = recv_any(sub);
  if (f.type == expected) return f;
  if (f.type == FrameType::kBye) fail(Errc::kChannelClosed, "peer said goodbye");
  fail(Errc::kProtocol, "unexpected frame type " + std::to_string(static_cast<int>(f.type)) +
                            " on sub-session " + std::to_string(sub));
}

}  // namespace privprof
