#include "privprof/ring.hpp"

#include <cmath>
#include <string>

#include "privprof/error.hpp"
#include "privprof/rng.hpp"

namespace privprof {

Ring::Ring(unsigned ell)
    : ell_(ell), mask_(ell >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << ell) - 1) {
  if (ell == 0 || ell > 64) fail(Errc::kUnsupportedRing, "ring width " + std::to_string(ell));
}

bool Ring::supported(unsigned ell) {
  return ell == 8 || ell == 16 || ell == 32 || ell == 64;
}

Ring Ring::checked(unsigned ell) {
  if (!supported(ell)) {
    fail(Errc::kUnsupportedRing, "ring width " + std::to_string(ell) +
                                     " (expected 8, 16, 32 or 64)");
  }
  return Ring(ell);
}

std::int64_t Ring::to_signed(std::uint64_t v) const {
  v &= mask_;
  if (ell_ == 64) return static_cast<std::int64_t>(v);
  if (v & half()) return static_cast<std::int64_t>(v) - static_cast<std::int64_t>(mask_) - 1;
  return static_cast<std::int64_t>(v);
}

std::uint64_t Ring::from_signed(std::int64_t v) const {
  return static_cast<std::uint64_t>(v) & mask_;
}

void Ring::encode(std::uint64_t v, std::vector<std::uint8_t>& out) const {
  for (std::size_t i = 0; i < width_bytes(); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

std::uint64_t Ring::decode(std::span<const std::uint8_t> in) const {
  if (in.size() < width_bytes()) fail(Errc::kTruncated, "ring element");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width_bytes(); ++i) v |= std::uint64_t{in[i]} << (8 * i);
  return v & mask_;
}

std::pair<Share, Share> share(std::uint64_t v, const Ring& ring, Prg& rng) {
  return share_with_mask(v, rng.next_u64(), ring);
}

std::pair<Share, Share> share_with_mask(std::uint64_t v, std::uint64_t mask,
                                        const Ring& ring) {
  const std::uint64_t r = ring.reduce(mask);
  return {Share{Party::kAlice, r}, Share{Party::kBob, ring.sub(v, r)}};
}

std::uint64_t reconstruct(const Share& a, const Share& b, const Ring& ring) {
  if (a.party == b.party) fail(Errc::kPartyMismatch, "both shares held by the same party");
  return ring.add(a.value, b.value);
}

std::uint8_t reconstruct(const BitShare& a, const BitShare& b) {
  if (a.party == b.party) fail(Errc::kPartyMismatch, "both bit shares held by the same party");
  return (a.value ^ b.value) & 1u;
}

Share add(const Share& x, const Share& y, const Ring& ring) {
  if (x.party != y.party) fail(Errc::kPartyMismatch, "local add across parties");
  return {x.party, ring.add(x.value, y.value)};
}

Share sub(const Share& x, const Share& y, const Ring& ring) {
  if (x.party != y.party) fail(Errc::kPartyMismatch, "local sub across parties");
  return {x.party, ring.sub(x.value, y.value)};
}

Share scale(const Share& x, std::uint64_t c, const Ring& ring) {
  return {x.party, ring.mul(x.value, c)};
}

Share add_const(const Share& x, std::uint64_t c, const Ring& ring) {
  if (x.party != Party::kAlice) return {x.party, ring.reduce(x.value)};
  return {x.party, ring.add(x.value, c)};
}

Share to_offset(const Share& s, const Ring& ring) {
  return add_const(s, ring.half(), ring);
}

std::uint64_t to_offset(std::uint64_t v, const Ring& ring) {
  return ring.add(v, ring.half());
}

std::uint64_t fxp_encode(double x, const FixedPoint& fp, const Ring& ring) {
  if (fp.bound_bits < fp.frac_bits || fp.bound_bits >= ring.bits()) {
    fail(Errc::kOutOfRange, "fixed-point bound does not fit the ring");
  }
  if (!std::isfinite(x)) fail(Errc::kOutOfRange, "non-finite value");
  const double limit = std::ldexp(1.0, static_cast<int>(fp.bound_bits - fp.frac_bits));
  if (std::fabs(x) >= limit) {
    fail(Errc::kOutOfRange, "|" + std::to_string(x) + "| >= " + std::to_string(limit));
  }
  // std::round rounds half away from zero.
  const double scaled = std::round(std::ldexp(x, static_cast<int>(fp.frac_bits)));
  return ring.from_signed(static_cast<std::int64_t>(scaled));
}

double fxp_decode(std::uint64_t v, const FixedPoint& fp, const Ring& ring) {
  return std::ldexp(static_cast<double>(ring.to_signed(v)), -static_cast<int>(fp.frac_bits));
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<std::uint64_t> d)
    : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != r * c) fail(Errc::kDimensionMismatch, "matrix data size");
}

Matrix matmul(const Matrix& a, const Matrix& b, const Ring& ring) {
  if (a.cols != b.rows) fail(Errc::kDimensionMismatch, "matmul inner dimensions");
  Matrix out(a.rows, b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const std::uint64_t av = a.at(r, k);
      for (std::size_t c = 0; c < b.cols; ++c) out.at(r, c) += av * b.at(k, c);
    }
  }
  for (auto& v : out.data) v = ring.reduce(v);
  return out;
}

Matrix matadd(const Matrix& a, const Matrix& b, const Ring& ring) {
  if (a.rows != b.rows || a.cols != b.cols) fail(Errc::kDimensionMismatch, "matadd");
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = ring.add(a.data[i], b.data[i]);
  return out;
}

Matrix matsub(const Matrix& a, const Matrix& b, const Ring& ring) {
  if (a.rows != b.rows || a.cols != b.cols) fail(Errc::kDimensionMismatch, "matsub");
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = ring.sub(a.data[i], b.data[i]);
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, const Ring& ring, Prg& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = ring.reduce(rng.next_u64());
  return m;
}

}  // namespace privprof
