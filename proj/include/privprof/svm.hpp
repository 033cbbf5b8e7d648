#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "privprof/model_bank.hpp"
#include "privprof/protocols.hpp"

namespace privprof::svm {

// Throws Overflow unless 2 * bound_bits + ceil(log2(n + 1)) < ell - 1, which
// keeps every inner product and the bias inside the signed ring range.
void check_headroom(std::size_t n, unsigned bound_bits, const Ring& ring);

// One party's half of sign(<x, a> - b): the client holds (x, 0), the server
// (0, a) and b. The server folds b into its share of the inner product, so
// only the final comparison bit depends on it.
class SvmKernel final : public mpc::Kernel {
 public:
  // `x_share` is 1 x n, `a_share` n x 1; `bias` is applied by the server only.
  SvmKernel(const Ring& ring, Party party, Matrix x_share, Matrix a_share, std::uint64_t bias,
            Variant variant);

  bool done() const override;
  mpc::MulRequest request() override;
  void deliver(mpc::MulResponse response) override;

  // Share of [<x, a> - b > 0].
  std::uint8_t result() const { return gt_->result(); }

 private:
  Ring ring_;
  Party party_;
  Variant variant_;
  std::uint64_t bias_;
  mpc::MatMulKernel ip_;
  std::optional<mpc::SignedGtKernel> gt_;
};

// Client-side kernel: encodes features against the model's stats.
SvmKernel client_kernel(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                        Variant variant, unsigned bound_bits = 24);
// Server-side kernel.
SvmKernel server_kernel(const SvmModel& m, const Ring& ring, Variant variant,
                        unsigned bound_bits = 24);

// Both halves of one model in-process, with the result opened by XOR. Used
// as the private path in oracle tests.
bool private_svm_label(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                       Variant variant, Prg& dealer_rng, unsigned bound_bits = 24);

enum class AgeBracket : std::uint8_t { kB1, kB2, kB3, kB4 };
std::string_view bracket_name(AgeBracket b);  // "7-26", ...

// Whether an opened SVM bit means "younger" for the given age model.
bool means_younger(const SvmModel& model, bool positive);
// The cascade: age2 splits at 35; age1 splits the young side at 27, age3 the
// old side at 44.
inline bool needs_age1(bool age2_younger) { return age2_younger; }
AgeBracket bracket_from(bool age2_younger, bool inner_younger);

struct ProfileResult {
  std::string gender;
  AgeBracket age = AgeBracket::kB1;
  // openness, conscientiousness, extraversion, agreeableness, neuroticism
  std::array<bool, 5> traits{};

  bool operator==(const ProfileResult&) const = default;
};

// Plaintext reference for the whole profile using clear_score.
ProfileResult clear_profile(const ModelBank& bank, std::span<const double> text,
                            std::span<const double> landmarks);

std::string format_profile(const ProfileResult& r);

}  // namespace privprof::svm
