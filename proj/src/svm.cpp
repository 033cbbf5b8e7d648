#include "privprof/svm.hpp"

#include <bit>
#include <sstream>

#include "privprof/error.hpp"
#include "privprof/rng.hpp"

#include <spdlog/spdlog.h>

namespace privprof::svm {

void check_headroom(std::size_t n, unsigned bound_bits, const Ring& ring) {
  const unsigned growth = static_cast<unsigned>(std::bit_width(n));  // ceil(log2(n + 1))
  if (2 * bound_bits + growth >= ring.bits() - 1) {
    fail(Errc::kOverflow, "inner products of " + std::to_string(n) + " values with " +
                              std::to_string(bound_bits) + "-bit operands overflow Z_2^" +
                              std::to_string(ring.bits()));
  }
}

SvmKernel::SvmKernel(const Ring& ring, Party party, Matrix x_share, Matrix a_share,
                     std::uint64_t bias, Variant variant)
    : ring_(ring),
      party_(party),
      variant_(variant),
      bias_(party == Party::kBob ? ring.reduce(bias) : 0),
      ip_(std::move(x_share), std::move(a_share)) {}

bool SvmKernel::done() const { return gt_ && gt_->done(); }

mpc::MulRequest SvmKernel::request() { return gt_ ? gt_->request() : ip_.request(); }

void SvmKernel::deliver(mpc::MulResponse response) {
  if (gt_) {
    gt_->deliver(std::move(response));
    return;
  }
  ip_.deliver(std::move(response));
  const std::uint64_t z = ring_.sub(ip_.result().data[0], bias_);
  SPDLOG_TRACE("svm margin share {}", z);
  gt_.emplace(ring_, party_, z, 0, variant_);
}

SvmKernel client_kernel(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                        Variant variant, unsigned bound_bits) {
  check_headroom(m.dim, bound_bits, ring);
  return SvmKernel(ring, Party::kAlice, encode_features(m, raw, ring, bound_bits),
                   Matrix(m.dim, 1), 0, variant);
}

SvmKernel server_kernel(const SvmModel& m, const Ring& ring, Variant variant,
                        unsigned bound_bits) {
  check_headroom(m.dim, bound_bits, ring);
  return SvmKernel(ring, Party::kBob, Matrix(1, m.dim), encode_weights(m, ring, bound_bits),
                   encode_bias(m, ring, bound_bits), variant);
}

bool private_svm_label(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                       Variant variant, Prg& dealer_rng, unsigned bound_bits) {
  const TripleShape shape{1, m.dim, 1};
  auto dealt = deal_budget(ring, std::span(&shape, 1), svm_bit_cost(ring.bits(), variant),
                           dealer_rng);
  mpc::Session sa(ring, Party::kAlice, dealt.alice), sb(ring, Party::kBob, dealt.bob);
  auto ka = client_kernel(m, raw, ring, variant, bound_bits);
  auto kb = server_kernel(m, ring, variant, bound_bits);
  mpc::LocalPair pair;
  pair.add(1, sa, ka, sb, kb);
  pair.run();
  if (!dealt.alice.exhausted() || !dealt.bob.exhausted()) {
    fail(Errc::kProtocol, "pipeline left triples unused");
  }
  return ((ka.result() ^ kb.result()) & 1u) != 0;
}

std::string_view bracket_name(AgeBracket b) {
  switch (b) {
    case AgeBracket::kB1: return "7-26";
    case AgeBracket::kB2: return "27-34";
    case AgeBracket::kB3: return "35-43";
    case AgeBracket::kB4: return "44-101";
  }
  return "?";
}

bool means_younger(const SvmModel& model, bool positive) {
  return (positive ? model.positive : model.negative) == "younger";
}

AgeBracket bracket_from(bool age2_younger, bool inner_younger) {
  if (age2_younger) return inner_younger ? AgeBracket::kB1 : AgeBracket::kB2;
  return inner_younger ? AgeBracket::kB3 : AgeBracket::kB4;
}

ProfileResult clear_profile(const ModelBank& bank, std::span<const double> text,
                            std::span<const double> landmarks) {
  if (!bank.complete()) fail(Errc::kValidationError, "model bank lacks one of the nine tasks");
  auto label = [&](Task t) {
    const SvmModel& m = *bank.find(t);
    return clear_score(m, m.dim == kTextDim ? text : landmarks).positive;
  };
  ProfileResult r;
  const SvmModel& g = *bank.find(Task::kGender);
  r.gender = label(Task::kGender) ? g.positive : g.negative;
  const bool young = means_younger(*bank.find(Task::kAge2), label(Task::kAge2));
  const Task inner = needs_age1(young) ? Task::kAge1 : Task::kAge3;
  r.age = bracket_from(young, means_younger(*bank.find(inner), label(inner)));
  for (std::size_t k = 0; k < 5; ++k) {
    const Task t = kSchedule[4 + k];
    const SvmModel& m = *bank.find(t);
    r.traits[k] = (label(t) ? m.positive : m.negative) == "present";
  }
  return r;
}

std::string format_profile(const ProfileResult& r) {
  static constexpr std::string_view names[] = {"openness", "conscientiousness", "extraversion",
                                               "agreeableness", "neuroticism"};
  std::ostringstream os;
  os << "gender: " << r.gender << '\n' << "age: " << bracket_name(r.age) << '\n';
  for (std::size_t k = 0; k < 5; ++k) {
    os << names[k] << ": " << (r.traits[k] ? "yes" : "no") << '\n';
  }
  return os.str();
}

}  // namespace privprof::svm
