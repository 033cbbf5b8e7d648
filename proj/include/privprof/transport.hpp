#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace privprof {

enum class FrameType : std::uint8_t {
  kHello = 0x01,
  kOpen = 0x02,
  kResult = 0x03,
  kClearFeatures = 0x04,
  kClearResult = 0x05,
  kError = 0x0E,
  kBye = 0x0F,
};

bool is_known_frame_type(std::uint8_t t);

// | length u32 BE | type u8 | sub-session u16 BE | payload |, where length
// counts type + sub-session + payload.
struct Frame {
  FrameType type = FrameType::kHello;
  std::uint16_t sub = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

inline constexpr std::size_t kFrameHeader = 7;
inline constexpr std::size_t kMaxPayload = 16u << 20;

inline constexpr std::uint16_t kDefaultServerPort = 7311;
inline constexpr std::uint16_t kDefaultDealerPort = 7312;

std::vector<std::uint8_t> encode_frame(const Frame& f);
// Decodes one frame from the front of `bytes`; `consumed` receives its size.
Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

Frame error_frame(const std::string& message);
std::string error_message(const Frame& f);

// Bidirectional, ordered frame pipe.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const Frame& f) = 0;
  virtual Frame recv() = 0;
  virtual void close() {}

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::uint64_t frames_sent() const { return frames_sent_; }

 protected:
  void count_sent(std::size_t n) { bytes_sent_ += n; ++frames_sent_; }
  void count_received(std::size_t n) { bytes_received_ += n; }

 private:
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::uint64_t frames_sent_ = 0;
};

// In-process channel pair; frames still pass through encode/decode so the
// byte stream equals what a socket would carry.
class MemoryChannel final : public Channel {
 public:
  static std::pair<std::unique_ptr<MemoryChannel>, std::unique_ptr<MemoryChannel>> make_pair(
      std::chrono::milliseconds timeout = std::chrono::seconds(30));

  void send(const Frame& f) override;
  Frame recv() override;
  void close() override;

  ~MemoryChannel() override { close(); }

 private:
  struct Pipe {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> queue;
    bool closed = false;
  };
  MemoryChannel(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out,
                std::chrono::milliseconds timeout)
      : in_(std::move(in)), out_(std::move(out)), timeout_(timeout) {}

  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
  std::chrono::milliseconds timeout_;
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd);
  static std::unique_ptr<TcpChannel> connect(const std::string& host, std::uint16_t port);

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;
  ~TcpChannel() override;

  void send(const Frame& f) override;
  Frame recv() override;
  void close() override;

 private:
  void read_exact(std::uint8_t* dst, std::size_t n);
  int fd_;
};

class TcpListener {
 public:
  // Port 0 binds an ephemeral port; see port().
  explicit TcpListener(std::uint16_t port, const std::string& bind_addr = "127.0.0.1");
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  std::uint16_t port() const { return port_; }
  // Blocks until a client connects; returns nullptr once close() was called.
  std::unique_ptr<TcpChannel> accept();
  void close();

 private:
  int fd_;
  std::uint16_t port_;
};

// Splits "host:port"; a bare host gets default_port.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s,
                                                     std::uint16_t default_port);

// Byte-level record of everything a channel sent and received.
struct Transcript {
  std::vector<std::uint8_t> sent;
  std::vector<std::uint8_t> received;
  std::vector<Frame> sent_frames;
  std::vector<Frame> received_frames;

  // SHA-256 over len(sent) || sent || len(received) || received, hex.
  std::string digest() const;
};

class RecordingChannel final : public Channel {
 public:
  RecordingChannel(Channel& inner, Transcript& transcript)
      : inner_(inner), transcript_(transcript) {}

  void send(const Frame& f) override;
  Frame recv() override;
  void close() override { inner_.close(); }

 private:
  Channel& inner_;
  Transcript& transcript_;
};

// Demultiplexes frames by sub-session id. Frames for other sub-sessions are
// buffered, so sub-sessions may interleave arbitrarily.
class Mux {
 public:
  explicit Mux(Channel& ch) : ch_(ch) {}

  void send(const Frame& f) { ch_.send(f); }
  void send(FrameType t, std::uint16_t sub, std::vector<std::uint8_t> payload) {
    ch_.send(Frame{t, sub, std::move(payload)});
  }
  // Next frame on `sub`; throws PeerError on ERROR, ChannelClosed on BYE and
  // ProtocolError when the frame type differs from `expected`.
  Frame recv(std::uint16_t sub, FrameType expected);
  // Next frame on `sub` of any type (ERROR still throws).
  Frame recv_any(std::uint16_t sub);

  Channel& channel() { return ch_; }

 private:
  Channel& ch_;
  std::map<std::uint16_t, std::deque<Frame>> pending_;
};

}  // namespace privprof
