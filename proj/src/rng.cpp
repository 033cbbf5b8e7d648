#include "privprof/rng.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace privprof {
namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

void crypto_init() { ensure_sodium(); }

Prg::Prg() {
  ensure_sodium();
  randombytes_buf(key_.data(), key_.size());
}

Prg::Prg(const Seed& seed) : key_(seed) { ensure_sodium(); }

Prg Prg::from_u64(std::uint64_t seed, std::string_view domain, std::uint64_t stream) {
  ensure_sodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  std::uint8_t le[16];
  for (int i = 0; i < 8; ++i) {
    le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    le[8 + i] = static_cast<std::uint8_t>(stream >> (8 * i));
  }
  crypto_generichash_update(&st, le, sizeof(le));
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(domain.data()),
                            domain.size());
  Seed out{};
  crypto_generichash_final(&st, out.data(), out.size());
  return Prg(out);
}

void Prg::refill() {
  // Nonce = block counter; each refill draws a fresh 512-byte keystream.
  std::uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {};
  for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(block_ >> (8 * i));
  crypto_stream_chacha20(buf_.data(), buf_.size(), nonce, key_.data());
  ++block_;
  pos_ = 0;
}

std::uint64_t Prg::next_u64() {
  if (pos_ + 8 > buf_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

std::uint8_t Prg::next_bit() {
  if (bits_left_ == 0) {
    bits_ = next_u64();
    bits_left_ = 64;
  }
  std::uint8_t b = bits_ & 1u;
  bits_ >>= 1;
  --bits_left_;
  return b;
}

std::uint64_t Prg::uniform(std::uint64_t bound) {
  // Rejection sampling against the largest multiple of bound.
  const std::uint64_t limit = (0 - bound) % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v >= limit) return v % bound;
  }
}

double Prg::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace privprof
