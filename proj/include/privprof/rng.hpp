#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace privprof {

// Idempotent libsodium initialisation.
void crypto_init();

// ChaCha20 keystream generator (libsodium). A fixed seed makes every draw
// reproducible across platforms; the default constructor seeds from the OS.
class Prg {
 public:
  using Seed = std::array<std::uint8_t, 32>;

  Prg();
  explicit Prg(const Seed& seed);

  // Derives a seed from a numeric seed plus a domain label, so that
  // independent streams (e.g. one per dealt session) never overlap.
  static Prg from_u64(std::uint64_t seed, std::string_view domain = "",
                      std::uint64_t stream = 0);

  std::uint64_t next_u64();
  std::uint8_t next_bit();
  // Uniform in [0, bound); bound > 0.
  std::uint64_t uniform(std::uint64_t bound);
  double next_double();  // [0, 1)

 private:
  void refill();

  Seed key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 512> buf_{};
  std::size_t pos_ = sizeof(buf_);
  std::uint64_t bits_ = 0;
  unsigned bits_left_ = 0;
};

}  // namespace privprof
