#include "privprof/session.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <thread>

#include <spdlog/spdlog.h>

#include "privprof/error.hpp"
#include "privprof/protocols.hpp"
#include "privprof/rng.hpp"

namespace privprof::app {

namespace {

using Clock = std::chrono::steady_clock;
using Bytes = std::vector<std::uint8_t>;

constexpr std::uint16_t kControl = 0;
constexpr std::size_t kHelloFixed = 4 + 32;
constexpr std::size_t kClearRecord = 1 + 8 + 8;

void put_u32_be(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
void put_u64_le(Bytes& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

void put_hello_fixed(Bytes& out, std::uint8_t version, unsigned ell, unsigned f, Variant v,
                     const std::array<std::uint8_t, 32>& hash) {
  out.push_back(version);
  out.push_back(static_cast<std::uint8_t>(ell));
  out.push_back(static_cast<std::uint8_t>(f));
  out.push_back(static_cast<std::uint8_t>(v));
  out.insert(out.end(), hash.begin(), hash.end());
}

template <typename H>
void get_hello_fixed(std::span<const std::uint8_t> p, H& h) {
  if (p.size() < kHelloFixed) fail(Errc::kParseError, "HELLO payload too short");
  h.version = p[0];
  h.ell = p[1];
  h.frac_bits = p[2];
  if (p[3] > 1) fail(Errc::kParseError, "unknown kernel variant " + std::to_string(p[3]));
  h.variant = static_cast<Variant>(p[3]);
  std::copy_n(p.begin() + 4, 32, h.catalog_hash.begin());
}

std::uint8_t result_bit(const Frame& f) {
  if (f.payload.size() != 1 || f.payload[0] > 1) {
    fail(Errc::kProtocol, "malformed RESULT on sub-session " + std::to_string(f.sub));
  }
  return f.payload[0];
}

std::span<const double> input_for(const SvmModel& m, const ClientInputs& in) {
  return m.dim == kTextDim ? std::span<const double>(in.text) : std::span<const double>(in.landmarks);
}

// Assembles a profile from opened labels (true = model's positive side); the
// age entry not chosen by the cascade is ignored.
svm::ProfileResult assemble(const std::vector<SvmModel>& cat,
                            const std::array<std::optional<bool>, kTaskCount>& labels) {
  svm::ProfileResult r;
  r.gender = *labels[3] ? cat[3].positive : cat[3].negative;
  const bool young = svm::means_younger(cat[1], *labels[1]);
  const std::size_t inner = svm::needs_age1(young) ? 0 : 2;
  r.age = svm::bracket_from(young, svm::means_younger(cat[inner], *labels[inner]));
  for (std::size_t k = 0; k < 5; ++k) {
    r.traits[k] = (*labels[4 + k] ? cat[4 + k].positive : cat[4 + k].negative) == "present";
  }
  return r;
}

void check_catalog(const std::vector<SvmModel>& cat, unsigned frac_bits) {
  if (cat.size() != kTaskCount) {
    fail(Errc::kHandshakeMismatch, "catalog lists " + std::to_string(cat.size()) + " models, need 9");
  }
  for (std::size_t k = 0; k < kTaskCount; ++k) {
    if (cat[k].task != kSchedule[k] || cat[k].dim != task_dim(kSchedule[k])) {
      fail(Errc::kHandshakeMismatch, "catalog entry " + std::to_string(k) + " is not " +
                                         std::string(task_name(kSchedule[k])));
    }
    if (cat[k].schema != task_schema(kSchedule[k])) {
      fail(Errc::kHandshakeMismatch, "feature schema '" + cat[k].schema + "' is not supported");
    }
    if (cat[k].frac_bits != frac_bits) {
      fail(Errc::kHandshakeMismatch, "model scale differs from the advertised scale");
    }
  }
}

std::vector<std::size_t> dims_of(const std::vector<SvmModel>& models) {
  std::vector<std::size_t> d;
  for (const auto& m : models) d.push_back(m.dim);
  return d;
}

// The pipelines of one private profile, in schedule order on sub-sessions 1..9.
struct Pipelines {
  std::vector<RandomnessBundle> parts;
  std::vector<mpc::Session> sessions;
  std::vector<svm::SvmKernel> kernels;

  std::uint32_t run(Mux& mux) {
    mpc::Lockstep ls(mux);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      ls.add(static_cast<std::uint16_t>(k + 1), sessions[k], kernels[k]);
    }
    ls.run();
    std::uint32_t rounds = 0;
    for (const auto& s : sessions) rounds = std::max(rounds, s.rounds());
    for (const auto& p : parts) {
      if (!p.exhausted()) fail(Errc::kProtocol, "pipeline left triples unused");
    }
    return rounds;
  }
  std::uint8_t share(std::size_t k) const { return kernels[k].result(); }
};

Pipelines make_pipelines(RandomnessBundle bundle, const SessionPlan& plan,
                         const std::vector<SvmModel>& models, const ClientInputs* in) {
  Pipelines p;
  p.parts = std::move(bundle).split(plan);
  p.sessions.reserve(models.size());
  p.kernels.reserve(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    p.sessions.emplace_back(plan.ring, p.parts[k].party(), p.parts[k]);
    if (in) {
      p.kernels.push_back(svm::client_kernel(models[k], input_for(models[k], *in), plan.ring, plan.variant));
    } else {
      p.kernels.push_back(svm::server_kernel(models[k], plan.ring, plan.variant));
    }
  }
  return p;
}

Bytes encode_clear_features(const ClientInputs& in) {
  Bytes out;
  for (double v : in.text) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  for (double v : in.landmarks) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ClientInputs decode_clear_features(std::span<const std::uint8_t> p) {
  if (p.size() != 8 * (kTextDim + kLandmarkDim)) {
    fail(Errc::kProtocol, "CLEAR_FEATURES must carry 179 values");
  }
  ClientInputs in;
  for (std::size_t k = 0; k < kTextDim + kLandmarkDim; ++k) {
    const double v = std::bit_cast<double>(get_u64_le(p.data() + 8 * k));
    (k < kTextDim ? in.text : in.landmarks).push_back(v);
  }
  return in;
}

}  // namespace

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kPrivate: return "private";
    case Mode::kClear: return "clear";
    case Mode::kCompare: return "compare";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  if (s == "private") return Mode::kPrivate;
  if (s == "clear") return Mode::kClear;
  if (s == "compare") return Mode::kCompare;
  fail(Errc::kConfig, "unknown mode '" + std::string(s) + "' (private, clear or compare)");
}

std::vector<std::uint8_t> encode_hello(const ServerHello& h) {
  Bytes out;
  put_hello_fixed(out, h.version, h.ell, h.frac_bits, h.variant, h.catalog_hash);
  out.insert(out.end(), h.catalog_json.begin(), h.catalog_json.end());
  return out;
}

std::vector<std::uint8_t> encode_hello(const ClientHello& h) {
  Bytes out;
  put_hello_fixed(out, h.version, h.ell, h.frac_bits, h.variant, h.catalog_hash);
  out.push_back(h.mode);
  put_u32_be(out, h.bundle_index);
  return out;
}

ServerHello decode_server_hello(std::span<const std::uint8_t> p) {
  ServerHello h;
  get_hello_fixed(p, h);
  h.catalog_json.assign(p.begin() + kHelloFixed, p.end());
  return h;
}

ClientHello decode_client_hello(std::span<const std::uint8_t> p) {
  ClientHello h;
  get_hello_fixed(p, h);
  if (p.size() != kHelloFixed + 5) fail(Errc::kParseError, "client HELLO has wrong length");
  h.mode = p[kHelloFixed];
  h.bundle_index = get_u32_be(p.data() + kHelloFixed + 1);
  return h;
}

Variant bundle_variant(const RandomnessBundle& b, std::span<const std::size_t> dims) {
  for (Variant v : {Variant::kBasic, Variant::kOptimized}) {
    if (b.matches(plan_session(dims, b.ring().bits(), v))) return v;
  }
  fail(Errc::kHandshakeMismatch, "bundle does not fit a profile session over these models");
}

std::uint32_t bundle_index_from_path(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  const auto dot = stem.rfind('.');
  if (dot == std::string::npos || dot + 1 == stem.size()) return 0;
  std::uint32_t k = 0;
  const char* b = stem.data() + dot + 1;
  const char* e = stem.data() + stem.size();
  auto [ptr, ec] = std::from_chars(b, e, k);
  return (ec == std::errc() && ptr == e) ? k : 0;
}

std::filesystem::path indexed_path(const std::filesystem::path& p, std::uint32_t index) {
  return p.parent_path() / (p.stem().string() + "." + std::to_string(index) + p.extension().string());
}

// ---- client ----

ClientReport run_client(Channel& ch, const ClientInputs& in, ClientOptions opts) {
  if (in.text.size() != kTextDim || in.landmarks.size() != kLandmarkDim) {
    fail(Errc::kDimensionMismatch, "client inputs must be 43 text and 136 landmark values");
  }
  if (opts.mode != Mode::kClear) {
    if (!opts.bundle) fail(Errc::kConfig, "private mode needs a randomness bundle");
    if (opts.bundle->party() != Party::kAlice) {
      fail(Errc::kPartyMismatch, "client needs the Alice share of the bundle");
    }
  }
  Mux mux(ch);
  ClientReport report;
  std::vector<SvmModel> cat;
  SessionPlan plan;

  try {
    const ServerHello sh = decode_server_hello(mux.recv(kControl, FrameType::kHello).payload);
    if (sh.version != kProtocolVersion) fail(Errc::kHandshakeMismatch, "protocol version differs");
    if (sha256(sh.catalog_json) != sh.catalog_hash) {
      fail(Errc::kHandshakeMismatch, "catalog does not match its advertised hash");
    }
    cat = parse_catalog(sh.catalog_json);
    check_catalog(cat, sh.frac_bits);
    ClientHello hello;
    hello.frac_bits = sh.frac_bits;
    hello.catalog_hash = sh.catalog_hash;
    hello.mode = static_cast<std::uint8_t>(opts.mode);
    hello.bundle_index = opts.bundle_index;
    hello.ell = sh.ell;
    hello.variant = sh.variant;
    if (opts.mode != Mode::kClear) {
      const auto dims = dims_of(cat);
      hello.ell = opts.bundle->ring().bits();
      hello.variant = bundle_variant(*opts.bundle, dims);
      if (hello.ell != sh.ell || hello.variant != sh.variant) {
        fail(Errc::kHandshakeMismatch, "bundle was dealt for ell=" + std::to_string(hello.ell) +
                                           " " + std::string(variant_name(hello.variant)) +
                                           ", server runs ell=" + std::to_string(sh.ell) + " " +
                                           std::string(variant_name(sh.variant)));
      }
      plan = plan_session(dims, hello.ell, hello.variant);
    }
    mux.send(FrameType::kHello, kControl, encode_hello(hello));
    const Frame ack = mux.recv(kControl, FrameType::kHello);
    if (!ack.payload.empty()) fail(Errc::kProtocol, "server acceptance must be empty");
  } catch (const Error& e) {
    if (e.code() == Errc::kHandshakeMismatch) throw;
    fail(Errc::kHandshakeMismatch, std::string("handshake failed: ") + e.what());
  }

  if (opts.mode != Mode::kPrivate) {
    const auto t0 = Clock::now();
    mux.send(FrameType::kClearFeatures, kControl, encode_clear_features(in));
    const Frame f = mux.recv(kControl, FrameType::kClearResult);
    if (f.payload.size() != kTaskCount * kClearRecord) fail(Errc::kProtocol, "malformed CLEAR_RESULT");
    std::array<std::optional<bool>, kTaskCount> labels;
    for (std::size_t k = 0; k < kTaskCount; ++k) {
      const std::uint8_t* r = f.payload.data() + k * kClearRecord;
      if (r[0] > 1) fail(Errc::kProtocol, "malformed CLEAR_RESULT label");
      labels[k] = r[0] == 1;
      report.clear_scores.push_back(ClearScore{r[0] == 1, static_cast<std::int64_t>(get_u64_le(r + 1)),
                                               std::bit_cast<double>(get_u64_le(r + 9))});
    }
    report.clear = assemble(cat, labels);
    report.clear_stats.elapsed = Clock::now() - t0;
  }

  if (opts.mode != Mode::kClear) {
    const auto t0 = Clock::now();
    Pipelines p = make_pipelines(std::move(*opts.bundle), plan, cat, &in);
    report.private_stats.rounds = p.run(mux);

    std::array<std::optional<bool>, kTaskCount> labels;
    mux.send(FrameType::kResult, 2, {p.share(1)});
    labels[1] = (p.share(1) ^ result_bit(mux.recv(2, FrameType::kResult))) != 0;
    const std::size_t inner = svm::needs_age1(svm::means_younger(cat[1], *labels[1])) ? 0 : 2;
    const auto inner_sub = static_cast<std::uint16_t>(inner + 1);
    labels[inner] = (p.share(inner) ^ result_bit(mux.recv(inner_sub, FrameType::kResult))) != 0;
    for (std::size_t k = 3; k < kTaskCount; ++k) {
      const auto sub = static_cast<std::uint16_t>(k + 1);
      labels[k] = (p.share(k) ^ result_bit(mux.recv(sub, FrameType::kResult))) != 0;
    }
    report.priv = assemble(cat, labels);
    report.private_stats.elapsed = Clock::now() - t0;
  }

  mux.send(FrameType::kBye, kControl, {});
  report.profile = report.priv ? *report.priv : *report.clear;
  report.bytes_sent = ch.bytes_sent();
  report.bytes_received = ch.bytes_received();
  return report;
}

// ---- server ----

void BundlePool::add(std::uint32_t index, RandomnessBundle b) {
  std::lock_guard lock(mu_);
  if (bundles_.count(index)) fail(Errc::kConfig, "two bundles for session index " + std::to_string(index));
  bundles_.emplace(index, std::move(b));
}

RandomnessBundle BundlePool::take(std::uint32_t index) {
  std::lock_guard lock(mu_);
  auto it = bundles_.find(index);
  if (it == bundles_.end()) fail(Errc::kHandshakeMismatch, "no bundle for session " + std::to_string(index));
  if (!it->second) fail(Errc::kHandshakeMismatch, "bundle " + std::to_string(index) + " was already used");
  RandomnessBundle b = std::move(*it->second);
  it->second.reset();
  return b;
}

std::size_t BundlePool::available() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(bundles_.begin(), bundles_.end(), [](const auto& kv) { return kv.second.has_value(); }));
}

void BundlePool::check(const ModelBank& bank) {
  std::lock_guard lock(mu_);
  const auto dims = bank.dims();
  bool first = true;
  for (const auto& [index, b] : bundles_) {
    if (!b) continue;
    if (b->party() != Party::kBob) fail(Errc::kPartyMismatch, "server needs Bob shares (bundle " + std::to_string(index) + ")");
    const Variant v = bundle_variant(*b, dims);
    if (first) {
      ell_ = b->ring().bits();
      variant_ = v;
      first = false;
    } else if (b->ring().bits() != ell_ || v != variant_) {
      fail(Errc::kConfig, "bundles disagree on ring width or kernel variant");
    }
  }
}

ServerStats serve_session(Channel& ch, const ModelBank& bank, BundlePool& pool) {
  Mux mux(ch);
  ServerStats stats;
  try {
    if (!bank.complete()) fail(Errc::kConfig, "model bank does not cover all nine tasks");
    ServerHello sh;
    sh.ell = pool.ell();
    sh.variant = pool.variant();
    sh.frac_bits = bank.models().front().frac_bits;
    sh.catalog_json = bank.catalog_json();
    sh.catalog_hash = sha256(sh.catalog_json);
    mux.send(FrameType::kHello, kControl, encode_hello(sh));

    const ClientHello h = decode_client_hello(mux.recv(kControl, FrameType::kHello).payload);
    if (h.version != sh.version) fail(Errc::kHandshakeMismatch, "protocol version differs");
    if (h.catalog_hash != sh.catalog_hash) fail(Errc::kHandshakeMismatch, "catalog hash differs");
    if (h.frac_bits != sh.frac_bits) fail(Errc::kHandshakeMismatch, "fixed-point scale differs");
    if (h.mode > static_cast<std::uint8_t>(Mode::kCompare)) {
      fail(Errc::kHandshakeMismatch, "unknown mode " + std::to_string(h.mode));
    }
    stats.mode = static_cast<Mode>(h.mode);
    std::optional<RandomnessBundle> bundle;
    if (stats.mode != Mode::kClear) {
      if (h.ell != sh.ell || h.variant != sh.variant) {
        fail(Errc::kHandshakeMismatch, "ring width or kernel variant differs");
      }
      bundle = pool.take(h.bundle_index);
    }
    mux.send(FrameType::kHello, kControl, {});
    spdlog::info("session accepted: mode={} bundle={}", mode_name(stats.mode), h.bundle_index);

    if (stats.mode != Mode::kPrivate) {
      const ClientInputs in = decode_clear_features(mux.recv(kControl, FrameType::kClearFeatures).payload);
      Bytes out;
      for (const auto& m : bank.models()) {
        const ClearScore s = clear_score(m, input_for(m, in));
        out.push_back(s.positive ? 1 : 0);
        put_u64_le(out, static_cast<std::uint64_t>(s.margin));
        put_u64_le(out, std::bit_cast<std::uint64_t>(s.real_margin));
      }
      mux.send(FrameType::kClearResult, kControl, std::move(out));
    }

    if (stats.mode != Mode::kClear) {
      const SessionPlan plan = plan_session(bank.dims(), sh.ell, sh.variant);
      Pipelines p = make_pipelines(std::move(*bundle), plan, bank.models(), nullptr);
      stats.rounds = p.run(mux);

      const std::uint8_t client_age2 = result_bit(mux.recv(2, FrameType::kResult));
      mux.send(FrameType::kResult, 2, {p.share(1)});
      const bool age2 = (client_age2 ^ p.share(1)) != 0;
      const std::size_t inner = svm::needs_age1(svm::means_younger(bank.models()[1], age2)) ? 0 : 2;
      mux.send(FrameType::kResult, static_cast<std::uint16_t>(inner + 1), {p.share(inner)});
      for (std::size_t k = 3; k < kTaskCount; ++k) {
        mux.send(FrameType::kResult, static_cast<std::uint16_t>(k + 1), {p.share(k)});
      }
    }

    const Frame bye = mux.recv_any(kControl);
    if (bye.type != FrameType::kBye) fail(Errc::kProtocol, "expected BYE");
  } catch (const Error& e) {
    if (e.code() != Errc::kPeerError && e.code() != Errc::kChannelClosed) {
      try {
        mux.send(error_frame(e.what()));
      } catch (const Error&) {
      }
    }
    throw;
  }
  stats.bytes_sent = ch.bytes_sent();
  stats.bytes_received = ch.bytes_received();
  spdlog::info("session done: mode={} rounds={} sent={}B received={}B", mode_name(stats.mode),
               stats.rounds, stats.bytes_sent, stats.bytes_received);
  return stats;
}

Server::Server(const ModelBank& bank, BundlePool& pool, std::uint16_t port, const std::string& bind_addr)
    : bank_(bank), pool_(pool), listener_(port, bind_addr) {}

Server::~Server() { stop(); }

void Server::run(std::size_t max_sessions) {
  std::vector<std::thread> workers;
  std::size_t accepted = 0;
  while (max_sessions == 0 || accepted < max_sessions) {
    auto ch = listener_.accept();
    if (!ch) break;
    ++accepted;
    workers.emplace_back([this, ch = std::move(ch)] {
      try {
        serve_session(*ch, bank_, pool_);
        ++completed_;
      } catch (const Error& e) {
        ++failed_;
        spdlog::warn("session failed: {}", e.what());
      }
      ch->close();
    });
  }
  for (auto& t : workers) t.join();
}

void Server::stop() { listener_.close(); }

// ---- dealer ----

DealtSessions deal_sessions(const ModelBank& bank, unsigned ell, Variant variant,
                            std::size_t sessions, std::optional<std::uint64_t> seed) {
  if (!bank.complete()) fail(Errc::kConfig, "model bank does not cover all nine tasks");
  if (sessions == 0) fail(Errc::kConfig, "at least one session must be dealt");
  const SessionPlan plan = plan_session(bank.dims(), ell, variant);
  DealtSessions out;
  for (std::size_t k = 0; k < sessions; ++k) {
    Prg rng = seed ? Prg::from_u64(*seed, "privprof-deal", k) : Prg();
    out.pairs.push_back(deal(plan, rng));
  }
  return out;
}

std::vector<std::filesystem::path> write_sessions(const DealtSessions& d,
                                                  const std::filesystem::path& alice_out,
                                                  const std::filesystem::path& bob_out) {
  std::vector<std::filesystem::path> written;
  const bool many = d.pairs.size() > 1;
  for (std::size_t k = 0; k < d.pairs.size(); ++k) {
    const auto idx = static_cast<std::uint32_t>(k);
    const auto a = many ? indexed_path(alice_out, idx) : alice_out;
    const auto b = many ? indexed_path(bob_out, idx) : bob_out;
    d.pairs[k].alice.save(a);
    d.pairs[k].bob.save(b);
    written.push_back(a);
    written.push_back(b);
  }
  return written;
}

DealerService::DealerService(DealtSessions dealt, std::uint16_t port, const std::string& bind_addr)
    : remaining_(2 * dealt.pairs.size()), listener_(port, bind_addr) {
  for (auto& p : dealt.pairs) {
    shares_.push_back({std::move(p.alice), std::move(p.bob)});
  }
}

void DealerService::run() {
  while (remaining_ > 0) {
    auto ch = listener_.accept();
    if (!ch) return;
    try {
      Mux mux(*ch);
      const Frame req = mux.recv(kControl, FrameType::kHello);
      if (req.payload.size() != 5 || req.payload[0] > 1) fail(Errc::kParseError, "malformed bundle request");
      const auto party = static_cast<std::size_t>(req.payload[0]);
      const std::uint32_t index = get_u32_be(req.payload.data() + 1);
      if (index >= shares_.size() || !shares_[index][party]) {
        mux.send(error_frame("bundle " + std::to_string(index) + " is not available"));
        continue;
      }
      mux.send(FrameType::kHello, kControl, shares_[index][party]->serialize());
      shares_[index][party].reset();
      --remaining_;
      spdlog::info("delivered {} share of session {}", party == 0 ? "alice" : "bob", index);
    } catch (const Error& e) {
      spdlog::warn("dealer request failed: {}", e.what());
    }
  }
  listener_.close();
}

RandomnessBundle fetch_bundle(const std::string& host, std::uint16_t port, Party party,
                              std::uint32_t index) {
  auto ch = TcpChannel::connect(host, port);
  Mux mux(*ch);
  Bytes req{static_cast<std::uint8_t>(party)};
  put_u32_be(req, index);
  mux.send(FrameType::kHello, kControl, std::move(req));
  RandomnessBundle b = RandomnessBundle::parse(mux.recv(kControl, FrameType::kHello).payload);
  ch->close();
  if (b.party() != party) fail(Errc::kPartyMismatch, "dealer sent the wrong party's share");
  return b;
}

}  // namespace privprof::app
