#include "privprof/triples.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "privprof/error.hpp"
#include "privprof/rng.hpp"

namespace privprof {
namespace {

constexpr std::uint8_t kMagic[4] = {'V', 'I', 'T', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

void put_u16(std::vector<std::uint8_t>& out, std::size_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::size_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() - pos_ < n) fail(Errc::kParseError, "bundle truncated");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::size_t u16() {
    auto s = take(2);
    return std::size_t{s[0]} | (std::size_t{s[1]} << 8);
  }
  std::size_t u32() {
    auto s = take(4);
    std::size_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::size_t{s[i]} << (8 * i);
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_matrix(std::vector<std::uint8_t>& out, const Matrix& m, const Ring& ring) {
  for (auto v : m.data) ring.encode(v, out);
}

Matrix get_matrix(Reader& rd, std::size_t rows, std::size_t cols, const Ring& ring) {
  Matrix m(rows, cols);
  const std::size_t w = ring.width_bytes();
  for (auto& v : m.data) {
    auto raw = rd.take(w);
    // The canonical encoding never sets bits above ell.
    std::uint64_t full = 0;
    for (std::size_t i = 0; i < w; ++i) full |= std::uint64_t{raw[i]} << (8 * i);
    if (full != ring.reduce(full)) fail(Errc::kParseError, "ring element out of range");
    v = full;
  }
  return m;
}

std::pair<BitTripleShare, BitTripleShare> split_bits(std::uint8_t u, std::uint8_t v,
                                                     Prg& rng) {
  BitTripleShare a{rng.next_bit(), rng.next_bit(), rng.next_bit()};
  BitTripleShare b{static_cast<std::uint8_t>(u ^ a.u), static_cast<std::uint8_t>(v ^ a.v),
                   static_cast<std::uint8_t>((u & v) ^ a.w)};
  return {a, b};
}

}  // namespace

SessionPlan plan_session(std::span<const std::size_t> model_dims, unsigned ell,
                         Variant variant) {
  SessionPlan plan;
  plan.ring = Ring::checked(ell);
  if (model_dims.empty()) fail(Errc::kValidationError, "session plan needs at least one model");
  plan.variant = variant;
  plan.model_dims.assign(model_dims.begin(), model_dims.end());
  for (std::size_t n : model_dims) {
    if (n == 0 || n > 0xFFFF) fail(Errc::kValidationError, "model dimension " + std::to_string(n));
    plan.matrix_shapes.push_back({1, n, 1});
  }
  plan.bits_per_model = svm_bit_cost(ell, variant);
  plan.bit_triples = plan.bits_per_model * model_dims.size();
  return plan;
}

const MatrixTripleShare& RandomnessBundle::take_matrix(std::size_t i, std::size_t j,
                                                       std::size_t k) {
  if (matrix_cursor_ >= matrices_.size()) fail(Errc::kTripleExhausted, "no matrix triple left");
  const auto& t = matrices_[matrix_cursor_];
  if (t.u.rows != i || t.u.cols != j || t.v.cols != k) {
    fail(Errc::kDimensionMismatch, "next matrix triple has shape " + std::to_string(t.u.rows) +
                                       "x" + std::to_string(t.u.cols) + "x" +
                                       std::to_string(t.v.cols));
  }
  ++matrix_cursor_;
  return t;
}

BitTripleShare RandomnessBundle::take_bit() {
  if (bit_cursor_ >= bits_.size()) fail(Errc::kTripleExhausted, "no bit triple left");
  return bits_[bit_cursor_++];
}

bool RandomnessBundle::matches(const SessionPlan& plan) const {
  if (!(ring_ == plan.ring) || bits_.size() != plan.bit_triples ||
      matrices_.size() != plan.matrix_shapes.size()) {
    return false;
  }
  for (std::size_t m = 0; m < matrices_.size(); ++m) {
    const auto& t = matrices_[m];
    const TripleShape s{t.u.rows, t.u.cols, t.v.cols};
    if (!(s == plan.matrix_shapes[m])) return false;
  }
  return true;
}

std::vector<RandomnessBundle> RandomnessBundle::split(const SessionPlan& plan) && {
  if (matrix_cursor_ != 0 || bit_cursor_ != 0) {
    fail(Errc::kValidationError, "cannot split a partially consumed bundle");
  }
  if (!matches(plan)) fail(Errc::kValidationError, "bundle does not match the session plan");
  std::vector<RandomnessBundle> parts;
  parts.reserve(matrices_.size());
  for (std::size_t m = 0; m < matrices_.size(); ++m) {
    RandomnessBundle part(party_, ring_);
    part.push(std::move(matrices_[m]));
    const auto first = bits_.begin() + static_cast<std::ptrdiff_t>(m * plan.bits_per_model);
    part.bits_.assign(first, first + static_cast<std::ptrdiff_t>(plan.bits_per_model));
    parts.push_back(std::move(part));
  }
  matrices_.clear();
  bits_.clear();
  return parts;
}

std::vector<std::uint8_t> RandomnessBundle::serialize() const {
  if (!Ring::supported(ring_.bits())) fail(Errc::kUnsupportedRing, "bundle ring");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(party_));
  out.push_back(static_cast<std::uint8_t>(ring_.bits()));
  out.push_back(0);
  put_u32(out, matrices_.size());
  put_u32(out, bits_.size());
  for (const auto& t : matrices_) {
    put_u16(out, t.u.rows);
    put_u16(out, t.u.cols);
    put_u16(out, t.v.cols);
    put_matrix(out, t.u, ring_);
    put_matrix(out, t.v, ring_);
    put_matrix(out, t.w, ring_);
  }
  std::vector<std::uint8_t> packed((bits_.size() * 3 + 7) / 8, 0);
  std::size_t pos = 0;
  for (const auto& t : bits_) {
    for (std::uint8_t b : {t.u, t.v, t.w}) {
      packed[pos / 8] |= static_cast<std::uint8_t>((b & 1u) << (pos % 8));
      ++pos;
    }
  }
  out.insert(out.end(), packed.begin(), packed.end());
  return out;
}

RandomnessBundle RandomnessBundle::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) fail(Errc::kParseError, "bundle header truncated");
  Reader rd(bytes);
  auto magic = rd.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    fail(Errc::kParseError, "bad bundle magic");
  }
  if (rd.u8() != kVersion) fail(Errc::kParseError, "unsupported bundle version");
  const std::uint8_t party = rd.u8();
  if (party > 1) fail(Errc::kParseError, "bad party tag");
  const unsigned ell = rd.u8();
  if (!Ring::supported(ell)) fail(Errc::kParseError, "bad ring width " + std::to_string(ell));
  if (rd.u8() != 0) fail(Errc::kParseError, "reserved byte set");
  const std::size_t n_matrix = rd.u32();
  const std::size_t n_bits = rd.u32();

  const Ring ring(ell);
  RandomnessBundle out(static_cast<Party>(party), ring);
  for (std::size_t m = 0; m < n_matrix; ++m) {
    const std::size_t i = rd.u16(), j = rd.u16(), k = rd.u16();
    if (i == 0 || j == 0 || k == 0) fail(Errc::kParseError, "zero triple dimension");
    MatrixTripleShare t;
    t.u = get_matrix(rd, i, j, ring);
    t.v = get_matrix(rd, j, k, ring);
    t.w = get_matrix(rd, i, k, ring);
    out.matrices_.push_back(std::move(t));
  }
  const std::size_t packed_len = (n_bits * 3 + 7) / 8;
  if (rd.remaining() != packed_len) fail(Errc::kParseError, "bundle length does not match counts");
  auto packed = rd.take(packed_len);
  out.bits_.resize(n_bits);
  std::size_t pos = 0;
  auto next = [&] { std::uint8_t b = (packed[pos / 8] >> (pos % 8)) & 1u; ++pos; return b; };
  for (auto& t : out.bits_) {
    t.u = next();
    t.v = next();
    t.w = next();
  }
  for (; pos < packed_len * 8; ++pos) {
    if ((packed[pos / 8] >> (pos % 8)) & 1u) fail(Errc::kParseError, "nonzero padding bits");
  }
  return out;
}

void RandomnessBundle::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::kIoFailure, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(Errc::kIoFailure, "write failed for " + path.string());
}

RandomnessBundle RandomnessBundle::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIoFailure, "cannot open bundle " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return parse(bytes);
}

std::pair<MatrixTripleShare, MatrixTripleShare> make_matrix_triple(const Matrix& u,
                                                                   const Matrix& v,
                                                                   const Ring& ring,
                                                                   Prg& rng) {
  if (u.cols != v.rows) fail(Errc::kDimensionMismatch, "triple U/V shapes");
  const Matrix w = matmul(u, v, ring);
  MatrixTripleShare a{random_matrix(u.rows, u.cols, ring, rng),
                      random_matrix(v.rows, v.cols, ring, rng),
                      random_matrix(w.rows, w.cols, ring, rng)};
  MatrixTripleShare b{matsub(u, a.u, ring), matsub(v, a.v, ring), matsub(w, a.w, ring)};
  return {std::move(a), std::move(b)};
}

std::pair<MatrixTripleShare, MatrixTripleShare> gen_matrix_triple(std::size_t i,
                                                                   std::size_t j,
                                                                   std::size_t k,
                                                                   const Ring& ring,
                                                                   Prg& rng) {
  if (i == 0 || j == 0 || k == 0) fail(Errc::kDimensionMismatch, "triple dimensions must be >= 1");
  const Matrix u = random_matrix(i, j, ring, rng);
  const Matrix v = random_matrix(j, k, ring, rng);
  return make_matrix_triple(u, v, ring, rng);
}

std::pair<BitTripleShare, BitTripleShare> gen_bit_triple(Prg& rng) {
  const std::uint8_t u = rng.next_bit();
  const std::uint8_t v = rng.next_bit();
  return split_bits(u, v, rng);
}

BundlePair deal_budget(const Ring& ring, std::span<const TripleShape> shapes,
                       std::size_t bit_triples, Prg& rng) {
  BundlePair out{RandomnessBundle(Party::kAlice, ring), RandomnessBundle(Party::kBob, ring)};
  for (const auto& s : shapes) {
    auto [a, b] = gen_matrix_triple(s.i, s.j, s.k, ring, rng);
    out.alice.push(std::move(a));
    out.bob.push(std::move(b));
  }
  for (std::size_t t = 0; t < bit_triples; ++t) {
    auto [a, b] = gen_bit_triple(rng);
    out.alice.push(a);
    out.bob.push(b);
  }
  return out;
}

BundlePair deal(const SessionPlan& plan, Prg& rng) {
  return deal_budget(plan.ring, plan.matrix_shapes, plan.bit_triples, rng);
}

}  // namespace privprof
