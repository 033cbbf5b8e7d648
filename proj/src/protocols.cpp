#include "privprof/protocols.hpp"

#include <string>
#include <utility>

#include "privprof/error.hpp"

namespace privprof::mpc {
namespace {

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32be(std::span<const std::uint8_t> in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

std::vector<std::uint8_t> bits_of(std::uint64_t v, unsigned ell) {
  std::vector<std::uint8_t> out(ell);
  for (unsigned i = 0; i < ell; ++i) out[i] = (v >> i) & 1u;
  return out;
}

void expect_bits(const MulResponse& r, std::size_t n) {
  if (r.bits.size() != n || !r.matrices.empty()) {
    fail(Errc::kProtocol, "kernel received " + std::to_string(r.bits.size()) +
                              " bit products, expected " + std::to_string(n));
  }
}

}  // namespace

// ---- OPEN payload ----

std::vector<std::uint8_t> encode_open(const OpenPayload& p, const Ring& ring) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + p.elements.size() * ring.width_bytes() + (p.bits.size() + 7) / 8);
  put_u32be(out, p.round);
  put_u32be(out, static_cast<std::uint32_t>(p.elements.size()));
  put_u32be(out, static_cast<std::uint32_t>(p.bits.size()));
  for (auto v : p.elements) ring.encode(v, out);
  const std::size_t base = out.size();
  out.resize(base + (p.bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < p.bits.size(); ++i) {
    out[base + i / 8] |= static_cast<std::uint8_t>((p.bits[i] & 1u) << (i % 8));
  }
  return out;
}

OpenPayload decode_open(std::span<const std::uint8_t> payload, const Ring& ring) {
  if (payload.size() < 12) fail(Errc::kProtocol, "OPEN payload too short");
  OpenPayload p;
  p.round = get_u32be(payload, 0);
  const std::size_t n_elem = get_u32be(payload, 4);
  const std::size_t n_bits = get_u32be(payload, 8);
  const std::size_t w = ring.width_bytes();
  if (payload.size() != 12 + n_elem * w + (n_bits + 7) / 8) {
    fail(Errc::kProtocol, "OPEN payload length does not match its counts");
  }
  p.elements.reserve(n_elem);
  std::size_t at = 12;
  for (std::size_t i = 0; i < n_elem; ++i, at += w) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < w; ++b) v |= std::uint64_t{payload[at + b]} << (8 * b);
    if (v != ring.reduce(v)) fail(Errc::kProtocol, "OPEN element out of range");
    p.elements.push_back(v);
  }
  p.bits.resize(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) p.bits[i] = (payload[at + i / 8] >> (i % 8)) & 1u;
  for (std::size_t i = n_bits; i < ((n_bits + 7) / 8) * 8; ++i) {
    if ((payload[at + i / 8] >> (i % 8)) & 1u) fail(Errc::kProtocol, "OPEN padding bits set");
  }
  return p;
}

// ---- Session ----

Session::Session(Ring ring, Party party, RandomnessBundle& triples)
    : ring_(ring), party_(party), triples_(triples) {
  if (triples.party() != party) fail(Errc::kPartyMismatch, "bundle belongs to the other party");
  if (!(triples.ring() == ring)) fail(Errc::kUnsupportedRing, "bundle ring differs from session");
}

std::vector<std::uint8_t> Session::open(const MulRequest& req) {
  if (pending_) fail(Errc::kProtocol, "round already open");
  Pending p;
  OpenPayload out;
  out.round = rounds_;
  for (const auto& m : req.matrices) {
    if (m.x.cols != m.y.rows) fail(Errc::kDimensionMismatch, "matrix product shapes");
    const auto& t = triples_.take_matrix(m.x.rows, m.x.cols, m.y.cols);
    p.matrix_triples.push_back(&t);
    p.d.push_back(matsub(m.x, t.u, ring_));
    p.e.push_back(matsub(m.y, t.v, ring_));
    out.elements.insert(out.elements.end(), p.d.back().data.begin(), p.d.back().data.end());
    out.elements.insert(out.elements.end(), p.e.back().data.begin(), p.e.back().data.end());
  }
  for (const auto& b : req.bits) {
    const auto t = triples_.take_bit();
    p.bit_triples.push_back(t);
    p.bd.push_back((b.x ^ t.u) & 1u);
    p.be.push_back((b.y ^ t.v) & 1u);
    out.bits.push_back(p.bd.back());
    out.bits.push_back(p.be.back());
  }
  pending_ = std::move(p);
  return encode_open(out, ring_);
}

MulResponse Session::close(std::span<const std::uint8_t> peer_payload) {
  if (!pending_) fail(Errc::kProtocol, "no open round");
  Pending p = std::move(*pending_);
  pending_.reset();
  const OpenPayload peer = decode_open(peer_payload, ring_);
  if (peer.round != rounds_) {
    fail(Errc::kRoundDesync, "peer is at round " + std::to_string(peer.round) + ", local round " +
                                 std::to_string(rounds_));
  }
  std::size_t n_elem = 0;
  for (std::size_t m = 0; m < p.d.size(); ++m) n_elem += p.d[m].size() + p.e[m].size();
  if (peer.elements.size() != n_elem || peer.bits.size() != 2 * p.bd.size()) {
    fail(Errc::kRoundDesync, "peer opened a different number of values");
  }

  const bool alice = party_ == Party::kAlice;
  MulResponse resp;
  std::size_t at = 0;
  for (std::size_t m = 0; m < p.d.size(); ++m) {
    Matrix d = p.d[m], e = p.e[m];
    for (auto& v : d.data) v = ring_.add(v, peer.elements[at++]);
    for (auto& v : e.data) v = ring_.add(v, peer.elements[at++]);
    const auto& t = *p.matrix_triples[m];
    Matrix z = matadd(t.w, matmul(t.u, e, ring_), ring_);
    z = matadd(z, matmul(d, t.v, ring_), ring_);
    if (alice) z = matadd(z, matmul(d, e, ring_), ring_);
    resp.matrices.push_back(std::move(z));
  }
  for (std::size_t i = 0; i < p.bd.size(); ++i) {
    const std::uint8_t d = p.bd[i] ^ peer.bits[2 * i];
    const std::uint8_t e = p.be[i] ^ peer.bits[2 * i + 1];
    const auto& t = p.bit_triples[i];
    std::uint8_t z = t.w ^ (e & t.u) ^ (d & t.v);
    if (alice) z ^= d & e;
    resp.bits.push_back(z & 1u);
  }
  ++rounds_;
  return resp;
}

// ---- Lockstep ----

void Lockstep::add(std::uint16_t sub, Session& session, Kernel& kernel) {
  for (const auto& l : lanes_) {
    if (l.sub == sub) fail(Errc::kProtocol, "duplicate sub-session " + std::to_string(sub));
  }
  auto it = lanes_.begin();
  while (it != lanes_.end() && it->sub < sub) ++it;
  lanes_.insert(it, Lane{sub, &session, &kernel});
}

bool Lockstep::finished() const {
  for (const auto& l : lanes_) {
    if (l.in_flight || !l.kernel->done()) return false;
  }
  return true;
}

void Lockstep::send_round() {
  for (auto& l : lanes_) {
    if (l.in_flight || l.kernel->done()) continue;
    const MulRequest req = l.kernel->request();
    mux_->send(FrameType::kOpen, l.sub, l.session->open(req));
    l.in_flight = true;
  }
}

void Lockstep::recv_round() {
  for (auto& l : lanes_) {
    if (!l.in_flight) continue;
    const Frame f = mux_->recv(l.sub, FrameType::kOpen);
    l.in_flight = false;
    l.kernel->deliver(l.session->close(f.payload));
  }
}

void Lockstep::run() {
  while (!finished()) {
    send_round();
    recv_round();
  }
}

// ---- LocalPair ----

LocalPair::LocalPair(Transcript* alice_transcript) {
  auto [a, b] = MemoryChannel::make_pair();
  ch_a_ = std::move(a);
  ch_b_ = std::move(b);
  Channel* alice = ch_a_.get();
  if (alice_transcript) {
    rec_ = std::make_unique<RecordingChannel>(*ch_a_, *alice_transcript);
    alice = rec_.get();
  }
  mux_a_ = std::make_unique<Mux>(*alice);
  mux_b_ = std::make_unique<Mux>(*ch_b_);
  drv_a_ = std::make_unique<Lockstep>(*mux_a_);
  drv_b_ = std::make_unique<Lockstep>(*mux_b_);
}

void LocalPair::add(std::uint16_t sub, Session& alice, Kernel& alice_kernel, Session& bob,
                    Kernel& bob_kernel) {
  drv_a_->add(sub, alice, alice_kernel);
  drv_b_->add(sub, bob, bob_kernel);
}

void LocalPair::run() {
  while (!drv_a_->finished() || !drv_b_->finished()) {
    drv_a_->send_round();
    drv_b_->send_round();
    drv_a_->recv_round();
    drv_b_->recv_round();
  }
}

// ---- MatMulKernel ----

MatMulKernel::MatMulKernel(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.cols != y_.rows) fail(Errc::kDimensionMismatch, "matrix product shapes");
}

MulRequest MatMulKernel::request() {
  MulRequest r;
  r.matrices.push_back({x_, y_});
  return r;
}

void MatMulKernel::deliver(MulResponse response) {
  if (response.matrices.size() != 1 || !response.bits.empty()) {
    fail(Errc::kProtocol, "matrix kernel expects one product");
  }
  result_ = std::move(response.matrices.front());
}

// ---- DecompKernel ----

DecompKernel::DecompKernel(const Ring& ring, Party party, std::uint64_t share, Variant variant)
    : ell_(ring.bits()),
      party_(party),
      variant_(variant),
      one_(party == Party::kAlice ? 1 : 0) {
  const auto own = bits_of(ring.reduce(share), ell_);
  const std::vector<std::uint8_t> zero(ell_, 0);
  a_ = party == Party::kAlice ? own : zero;
  b_ = party == Party::kAlice ? zero : own;
  st_.y = own;
  st_.c.assign(ell_, 0);
  st_.d.assign(ell_, 0);
  st_.e.assign(ell_, 0);
  if (variant_ == Variant::kOptimized) {
    levels_ = prefix_carry_levels(ell_);
    if (ell_ == 1) finish_prefix();
  }
}

MulRequest DecompKernel::request() {
  if (done_) fail(Errc::kProtocol, "decomposition already finished");
  MulRequest r;
  if (variant_ == Variant::kBasic) {
    if (step_ == 0) {
      r.bits.push_back({a_[0], b_[0]});
    } else {
      const unsigned k = (step_ + 1) / 2;  // bit index i - 1
      if (step_ % 2 == 1) {
        r.bits.push_back({a_[k], b_[k]});
        r.bits.push_back({st_.y[k], st_.c[k - 1]});
      } else {
        r.bits.push_back({st_.e[k], st_.d[k]});
      }
    }
    return r;
  }
  const unsigned m = ell_ - 1;
  if (step_ == 0) {
    for (unsigned i = 0; i < m; ++i) r.bits.push_back({a_[i], b_[i]});
  } else {
    const auto& level = levels_[step_ - 1];
    for (const auto& node : level.nodes) {
      const unsigned i = node.pos - 1, j = node.pos - 1 - level.dist;
      r.bits.push_back({p_[i], g_[j]});
      if (node.update_propagate) r.bits.push_back({p_[i], p_[j]});
    }
  }
  return r;
}

void DecompKernel::deliver(MulResponse response) {
  if (done_) fail(Errc::kProtocol, "decomposition already finished");
  if (variant_ == Variant::kBasic) {
    if (step_ == 0) {
      expect_bits(response, 1);
      st_.c[0] = response.bits[0];
    } else {
      const unsigned k = (step_ + 1) / 2;
      if (step_ % 2 == 1) {
        expect_bits(response, 2);
        st_.d[k] = response.bits[0] ^ one_;
        st_.e[k] = response.bits[1] ^ one_;
      } else {
        expect_bits(response, 1);
        st_.c[k] = response.bits[0] ^ one_;
      }
    }
    ++step_;
    if (step_ == 2 * ell_ - 1) {
      x_.resize(ell_);
      x_[0] = st_.y[0];
      for (unsigned i = 1; i < ell_; ++i) x_[i] = st_.y[i] ^ st_.c[i - 1];
      done_ = true;
    }
    return;
  }
  const unsigned m = ell_ - 1;
  if (step_ == 0) {
    expect_bits(response, m);
    g_ = response.bits;
    p_.assign(st_.y.begin(), st_.y.begin() + m);
  } else {
    const auto& level = levels_[step_ - 1];
    std::size_t n = 0;
    for (const auto& node : level.nodes) n += node.update_propagate ? 2 : 1;
    expect_bits(response, n);
    std::size_t at = 0;
    for (const auto& node : level.nodes) {
      const unsigned i = node.pos - 1;
      g_[i] ^= response.bits[at++];
      if (node.update_propagate) p_[i] = response.bits[at++];
    }
  }
  ++step_;
  if (step_ == 1 + levels_.size()) finish_prefix();
}

void DecompKernel::finish_prefix() {
  for (unsigned i = 0; i + 1 < ell_; ++i) st_.c[i] = g_[i];
  x_.resize(ell_);
  x_[0] = st_.y[0];
  for (unsigned i = 1; i < ell_; ++i) x_[i] = st_.y[i] ^ st_.c[i - 1];
  done_ = true;
}

// ---- CompareKernel ----

CompareKernel::CompareKernel(Party party, std::vector<std::uint8_t> x_bits,
                             std::vector<std::uint8_t> y_bits, Variant variant)
    : ell_(static_cast<unsigned>(x_bits.size())),
      party_(party),
      variant_(variant),
      one_(party == Party::kAlice ? 1 : 0),
      x_(std::move(x_bits)),
      y_(std::move(y_bits)) {
  if (ell_ == 0 || y_.size() != ell_) fail(Errc::kDimensionMismatch, "comparison bit widths");
  d_.assign(ell_, 0);
  e_.resize(ell_);
  for (unsigned i = 0; i < ell_; ++i) e_[i] = (x_[i] ^ y_[i] ^ one_) & 1u;
  // 1-based positions; suffix_[ell] = e_ell is local.
  suffix_.assign(ell_ + 2, std::nullopt);
  suffix_[ell_] = e_[ell_ - 1];
  c_.assign(ell_ + 1, std::nullopt);
  next_chain_ = ell_ - 1;
}

MulRequest CompareKernel::request() {
  if (result_) fail(Errc::kProtocol, "comparison already finished");
  MulRequest r;
  slots_.clear();
  if (round_ == 0) {
    for (unsigned i = 0; i < ell_; ++i) {
      r.bits.push_back({y_[i], static_cast<std::uint8_t>(x_[i] ^ one_)});
      slots_.push_back({Slot::kD, i});
    }
  }
  if (variant_ == Variant::kBasic) {
    if (next_chain_ >= 1 && suffix_[next_chain_ + 1]) {
      r.bits.push_back({e_[next_chain_ - 1], *suffix_[next_chain_ + 1]});
      slots_.push_back({Slot::kChain, next_chain_});
    }
    if (round_ > 0) {
      for (unsigned i = 1; i < ell_; ++i) {
        if (!c_[i] && suffix_[i + 1]) {
          r.bits.push_back({d_[i - 1], *suffix_[i + 1]});
          slots_.push_back({Slot::kC, i});
        }
      }
    }
  } else if (round_ > 0) {
    const bool last = node_d_.size() <= 2;
    for (unsigned p = 0; p + 1 < node_d_.size(); p += 2) {
      r.bits.push_back({node_e_[p], node_d_[p + 1]});
      slots_.push_back({Slot::kTreeD, p});
      if (!last) {
        r.bits.push_back({node_e_[p], node_e_[p + 1]});
        slots_.push_back({Slot::kTreeE, p});
      }
    }
  }
  return r;
}

void CompareKernel::deliver(MulResponse response) {
  if (result_) fail(Errc::kProtocol, "comparison already finished");
  expect_bits(response, slots_.size());
  std::vector<std::uint8_t> next_d, next_e;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    const auto& slot = slots_[s];
    const std::uint8_t z = response.bits[s];
    switch (slot.kind) {
      case Slot::kD: d_[slot.index] = z; break;
      case Slot::kChain: suffix_[slot.index] = z; break;
      case Slot::kC: c_[slot.index] = z; break;
      case Slot::kTreeD: next_d.push_back(node_d_[slot.index] ^ z); break;
      case Slot::kTreeE: next_e.push_back(z); break;
    }
  }
  if (variant_ == Variant::kBasic) {
    for (const auto& slot : slots_) {
      if (slot.kind == Slot::kChain) next_chain_ = slot.index - 1;
    }
  }
  ++round_;
  slots_.clear();

  if (variant_ == Variant::kBasic) {
    bool all = next_chain_ == 0;
    for (unsigned i = 1; i < ell_ && all; ++i) all = c_[i].has_value();
    if (all) finish_basic();
    return;
  }
  if (round_ == 1) {
    // Leaves, most significant bit first.
    node_d_.assign(d_.rbegin(), d_.rend());
    node_e_.assign(e_.rbegin(), e_.rend());
  } else {
    if (node_d_.size() % 2 == 1) {
      next_d.push_back(node_d_.back());
      next_e.push_back(node_e_.back());
    }
    node_d_ = std::move(next_d);
    node_e_ = std::move(next_e);
  }
  if (node_d_.size() == 1) result_ = static_cast<std::uint8_t>(one_ ^ node_d_[0]);
}

void CompareKernel::finish_basic() {
  std::uint8_t acc = d_[ell_ - 1];  // c_ell = d_ell
  for (unsigned i = 1; i < ell_; ++i) acc ^= *c_[i];
  result_ = static_cast<std::uint8_t>(one_ ^ acc);
}

CompareState CompareKernel::state() const {
  CompareState st{d_, e_, std::vector<std::uint8_t>(ell_, 0), result_.value_or(0)};
  for (unsigned i = 1; i < ell_; ++i) st.c[i - 1] = c_[i].value_or(0);
  st.c[ell_ - 1] = d_[ell_ - 1];
  return st;
}

// ---- SignedGtKernel ----

SignedGtKernel::SignedGtKernel(const Ring& ring, Party party, std::uint64_t share,
                               std::int64_t threshold, Variant variant)
    : ring_(ring),
      party_(party),
      variant_(variant),
      constant_(0),
      decomp_(ring, party, party == Party::kAlice ? to_offset(share, ring) : ring.reduce(share),
              variant) {
  const std::int64_t max = ring.bits() == 64
                               ? INT64_MAX
                               : static_cast<std::int64_t>(ring.half()) - 1;
  const std::int64_t min = ring.bits() == 64 ? INT64_MIN : -static_cast<std::int64_t>(ring.half());
  if (threshold >= max || threshold < min) {
    fail(Errc::kOutOfRange, "threshold " + std::to_string(threshold) + " has no successor in the ring");
  }
  constant_ = ring.add(to_offset(ring.from_signed(threshold), ring), 1);
  advance();
}

void SignedGtKernel::advance() {
  if (compare_ || !decomp_.done()) return;
  std::vector<std::uint8_t> t(ring_.bits(), 0);
  if (party_ == Party::kAlice) t = bits_of(constant_, ring_.bits());
  compare_.emplace(party_, decomp_.bits(), std::move(t), variant_);
}

bool SignedGtKernel::done() const { return compare_ && compare_->done(); }

MulRequest SignedGtKernel::request() {
  return compare_ ? compare_->request() : decomp_.request();
}

void SignedGtKernel::deliver(MulResponse response) {
  if (compare_) {
    compare_->deliver(std::move(response));
  } else {
    decomp_.deliver(std::move(response));
    advance();
  }
}

}  // namespace privprof::mpc
