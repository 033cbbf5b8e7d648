#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privprof/model_bank.hpp"
#include "privprof/svm.hpp"
#include "privprof/transport.hpp"
#include "privprof/triples.hpp"

// Client/server session flows on top of the protocol kernels: handshake,
// clear and private profiling, the server's bundle pool and the dealer
// service.
namespace privprof::app {

enum class Mode : std::uint8_t { kPrivate = 0, kClear = 1, kCompare = 2 };
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);  // Config on unknown names

inline constexpr std::uint8_t kProtocolVersion = 1;

struct ServerHello {
  std::uint8_t version = kProtocolVersion;
  unsigned ell = 64;
  unsigned frac_bits = 16;
  Variant variant = Variant::kBasic;
  std::array<std::uint8_t, 32> catalog_hash{};
  std::string catalog_json;
};

struct ClientHello {
  std::uint8_t version = kProtocolVersion;
  unsigned ell = 64;
  unsigned frac_bits = 16;
  Variant variant = Variant::kBasic;
  std::array<std::uint8_t, 32> catalog_hash{};
  std::uint8_t mode = 0;  // raw so that a server can reject unknown values
  std::uint32_t bundle_index = 0;
};

// version u8 | ell u8 | frac_bits u8 | variant u8 | catalog hash [32] | ...
// The server appends the catalog JSON, the client mode u8 and bundle index
// u32 BE.
std::vector<std::uint8_t> encode_hello(const ServerHello& h);
std::vector<std::uint8_t> encode_hello(const ClientHello& h);
ServerHello decode_server_hello(std::span<const std::uint8_t> payload);
ClientHello decode_client_hello(std::span<const std::uint8_t> payload);

// Which kernel variant a bundle was dealt for, given the session's model
// dimensions. Throws HandshakeMismatch if it fits neither plan.
Variant bundle_variant(const RandomnessBundle& b, std::span<const std::size_t> dims);

// "a.vit" -> index 0, "a.3.vit" -> 3.
std::uint32_t bundle_index_from_path(const std::filesystem::path& p);
// Inverse used by the dealer for multi-session output.
std::filesystem::path indexed_path(const std::filesystem::path& p, std::uint32_t index);

struct ClientInputs {
  std::vector<double> text;       // 43 raw text features
  std::vector<double> landmarks;  // 136 raw landmark values
};

struct ClientOptions {
  Mode mode = Mode::kPrivate;
  std::optional<RandomnessBundle> bundle;  // required unless mode is clear
  std::uint32_t bundle_index = 0;
};

struct PhaseStats {
  std::chrono::nanoseconds elapsed{0};
  std::uint32_t rounds = 0;  // OPEN rounds of the slowest pipeline
};

struct ClientReport {
  svm::ProfileResult profile;                // private result unless mode is clear
  std::optional<svm::ProfileResult> clear;   // clear and compare modes
  std::optional<svm::ProfileResult> priv;    // private and compare modes
  std::vector<ClearScore> clear_scores;      // schedule order
  PhaseStats clear_stats;
  PhaseStats private_stats;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;

  bool agree() const { return !clear || !priv || *clear == *priv; }
};

// Runs one complete client connection. Any failure before the server's
// acceptance is reported as HandshakeMismatch.
ClientReport run_client(Channel& ch, const ClientInputs& in, ClientOptions opts);

// One-use server bundles keyed by session index.
class BundlePool {
 public:
  BundlePool() = default;
  void add(std::uint32_t index, RandomnessBundle b);
  // Throws HandshakeMismatch for unknown or already used indices.
  RandomnessBundle take(std::uint32_t index);
  std::size_t available() const;
  bool empty() const { return available() == 0 && ell_ == 0; }
  unsigned ell() const { return ell_ ? ell_ : 64; }
  Variant variant() const { return variant_; }
  // Fixes ell and variant from the bank's dimensions; all bundles must agree.
  void check(const ModelBank& bank);

 private:
  mutable std::mutex mu_;
  std::map<std::uint32_t, std::optional<RandomnessBundle>> bundles_;
  unsigned ell_ = 0;
  Variant variant_ = Variant::kBasic;
};

struct ServerStats {
  std::uint32_t rounds = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  Mode mode = Mode::kPrivate;
};

// Serves one connection end to end. Errors are sent to the peer as ERROR
// frames and rethrown.
ServerStats serve_session(Channel& ch, const ModelBank& bank, BundlePool& pool);

// Accept loop running each connection on its own thread.
class Server {
 public:
  Server(const ModelBank& bank, BundlePool& pool, std::uint16_t port,
         const std::string& bind_addr = "127.0.0.1");
  ~Server();

  std::uint16_t port() const { return listener_.port(); }
  // Returns after `max_sessions` connections (0 = until stop()) have ended.
  void run(std::size_t max_sessions = 0);
  void stop();
  std::size_t sessions_completed() const { return completed_; }
  std::size_t sessions_failed() const { return failed_; }

 private:
  const ModelBank& bank_;
  BundlePool& pool_;
  TcpListener listener_;
  std::atomic<std::size_t> completed_{0};
  std::atomic<std::size_t> failed_{0};
};

// Dealing. Bundles for session k come from an independent stream of `seed`.
struct DealtSessions {
  std::vector<BundlePair> pairs;
};
DealtSessions deal_sessions(const ModelBank& bank, unsigned ell, Variant variant,
                            std::size_t sessions, std::optional<std::uint64_t> seed);
// Writes alice shares to `alice_out`, bob shares to `bob_out`; with more than
// one session the index is inserted before the extension.
std::vector<std::filesystem::path> write_sessions(const DealtSessions& d,
                                                  const std::filesystem::path& alice_out,
                                                  const std::filesystem::path& bob_out);

// Online dealer: each party's share of each session is handed out exactly
// once; the service ends when every share has been delivered.
class DealerService {
 public:
  DealerService(DealtSessions dealt, std::uint16_t port, const std::string& bind_addr = "127.0.0.1");
  std::uint16_t port() const { return listener_.port(); }
  void run();
  void stop() { listener_.close(); }

 private:
  std::vector<std::array<std::optional<RandomnessBundle>, 2>> shares_;
  std::size_t remaining_;
  TcpListener listener_;
};

// Request: HELLO [party u8 | index u32 BE]; reply: HELLO [bundle bytes].
RandomnessBundle fetch_bundle(const std::string& host, std::uint16_t port, Party party,
                              std::uint32_t index);

}  // namespace privprof::app
