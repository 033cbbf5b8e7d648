#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace privprof {

class Prg;

enum class Party : std::uint8_t { kAlice = 0, kBob = 1 };

inline Party peer_of(Party p) {
  return p == Party::kAlice ? Party::kBob : Party::kAlice;
}

// Z_{2^ell} for 1 <= ell <= 64, elements held in the low bits of a u64.
// Protocol kernels accept any width; sessions, bundles and the wire only use
// the widths accepted by Ring::checked().
class Ring {
 public:
  explicit Ring(unsigned ell = 64);

  // Throws UnsupportedRing unless ell is 8, 16, 32 or 64.
  static Ring checked(unsigned ell);
  static bool supported(unsigned ell);

  unsigned bits() const { return ell_; }
  std::uint64_t mask() const { return mask_; }
  std::uint64_t half() const { return std::uint64_t{1} << (ell_ - 1); }
  std::size_t width_bytes() const { return (ell_ + 7) / 8; }

  std::uint64_t reduce(std::uint64_t v) const { return v & mask_; }
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const { return (a + b) & mask_; }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return (a - b) & mask_; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return (a * b) & mask_; }
  std::uint64_t neg(std::uint64_t a) const { return (0 - a) & mask_; }

  // Two's-complement interpretation.
  std::int64_t to_signed(std::uint64_t v) const;
  std::uint64_t from_signed(std::int64_t v) const;

  bool bit(std::uint64_t v, unsigned i) const { return (v >> i) & 1u; }

  // Canonical serialization: width_bytes() bytes, little-endian.
  void encode(std::uint64_t v, std::vector<std::uint8_t>& out) const;
  std::uint64_t decode(std::span<const std::uint8_t> in) const;

  bool operator==(const Ring& o) const { return ell_ == o.ell_; }

 private:
  unsigned ell_;
  std::uint64_t mask_;
};

struct Share {
  Party party;
  std::uint64_t value;
};

struct BitShare {
  Party party;
  std::uint8_t value;
};

// Splits v into (Alice, Bob) shares using a mask drawn from rng.
std::pair<Share, Share> share(std::uint64_t v, const Ring& ring, Prg& rng);
// Same, with the Alice share fixed to `mask`.
std::pair<Share, Share> share_with_mask(std::uint64_t v, std::uint64_t mask,
                                        const Ring& ring);
std::uint64_t reconstruct(const Share& a, const Share& b, const Ring& ring);
std::uint8_t reconstruct(const BitShare& a, const BitShare& b);

// Local operations on shares. Adding a public constant is done by Alice only.
Share add(const Share& x, const Share& y, const Ring& ring);
Share sub(const Share& x, const Share& y, const Ring& ring);
Share scale(const Share& x, std::uint64_t c, const Ring& ring);
Share add_const(const Share& x, std::uint64_t c, const Ring& ring);

// Maps a signed value v to v + 2^(ell-1); order-preserving from the signed
// range onto [0, 2^ell).
Share to_offset(const Share& s, const Ring& ring);
std::uint64_t to_offset(std::uint64_t v, const Ring& ring);

struct FixedPoint {
  unsigned frac_bits = 16;
  unsigned bound_bits = 24;
};

// round(x * 2^f), half away from zero, as a ring element. Throws OutOfRange
// if |x| >= 2^(bound_bits - frac_bits) or the bound does not fit the ring.
std::uint64_t fxp_encode(double x, const FixedPoint& fp, const Ring& ring);
double fxp_decode(std::uint64_t v, const FixedPoint& fp, const Ring& ring);

// Row-major matrix of ring elements.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<std::uint64_t> d);

  std::uint64_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::uint64_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

Matrix matmul(const Matrix& a, const Matrix& b, const Ring& ring);
Matrix matadd(const Matrix& a, const Matrix& b, const Ring& ring);
Matrix matsub(const Matrix& a, const Matrix& b, const Ring& ring);
Matrix random_matrix(std::size_t rows, std::size_t cols, const Ring& ring, Prg& rng);

}  // namespace privprof
