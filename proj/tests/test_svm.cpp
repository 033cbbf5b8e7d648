#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "privprof/error.hpp"
#include "privprof/rng.hpp"
#include "privprof/svm.hpp"
#include "profile_support.hpp"

using namespace privprof;
using privprof::testing::random_bank;
using privprof::testing::random_inputs;
using privprof::testing::random_model;

namespace {

SvmModel small(std::vector<double> w, double b, unsigned f) {
  SvmModel m;
  m.id = "small";
  m.task = Task::kGender;
  m.dim = w.size();
  m.frac_bits = f;
  m.positive = "female";
  m.negative = "male";
  m.bias = b;
  m.weights = std::move(w);
  m.means.assign(m.dim, 0.0);
  m.stds.assign(m.dim, 1.0);
  return m;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::kProtocol;
}

}  // namespace

TEST(PrivateSvm, ZeroWeightsNegativeBiasIsPositive) {
  Prg rng = Prg::from_u64(1);
  const SvmModel m = small(std::vector<double>(43, 0.0), -1.0, 16);
  const std::vector<double> x(43, 3.0);
  EXPECT_TRUE(svm::private_svm_label(m, x, Ring(64), Variant::kBasic, rng));
  EXPECT_TRUE(svm::private_svm_label(m, x, Ring(64), Variant::kOptimized, rng));
}

TEST(PrivateSvm, IntegerExample) {
  Prg rng = Prg::from_u64(2);
  const SvmModel m = small({2.0, -1.0}, 1.0, 0);
  const std::vector<double> x{3.0, 2.0};
  EXPECT_TRUE(svm::private_svm_label(m, x, Ring(64), Variant::kBasic, rng));
}

TEST(PrivateSvm, ZeroMarginIsNegative) {
  Prg rng = Prg::from_u64(3);
  const SvmModel m = small({1.0, 1.0}, 1.0, 0);
  const std::vector<double> x{1.0, 0.0};
  ASSERT_EQ(clear_score(m, x).margin, 0);
  EXPECT_FALSE(svm::private_svm_label(m, x, Ring(64), Variant::kBasic, rng));
  const std::vector<double> y{1.0, 1.0};
  EXPECT_TRUE(svm::private_svm_label(m, y, Ring(64), Variant::kBasic, rng));
}

TEST(PrivateSvm, HeadroomRejectsNarrowRings) {
  EXPECT_NO_THROW(svm::check_headroom(136, 24, Ring(64)));
  EXPECT_EQ(code_of([] { svm::check_headroom(136, 24, Ring(32)); }), Errc::kOverflow);
  // 2 * 24 + bit_width(43) = 54 < 63, but 2 * 28 + 6 = 62 is not < 62.
  EXPECT_NO_THROW(svm::check_headroom(43, 24, Ring(64)));
  EXPECT_EQ(code_of([] { svm::check_headroom(43, 28, Ring(63)); }), Errc::kOverflow);
  const SvmModel m = small(std::vector<double>(43, 0.5), 0, 16);
  Prg rng = Prg::from_u64(4);
  EXPECT_EQ(code_of([&] {
              svm::private_svm_label(m, std::vector<double>(43, 1.0), Ring(16), Variant::kBasic, rng);
            }),
            Errc::kOverflow);
}

// Private label equals the clear label on random models and inputs,
// including margins forced to land on or next to zero.
TEST(PrivateSvm, MatchesClearOnRandomCases) {
  Prg rng = Prg::from_u64(2024);
  int mismatches = 0, positives = 0, near_zero = 0;
  for (int t = 0; t < 1000; ++t) {
    const Task task = kSchedule[rng.uniform(kTaskCount)];
    SvmModel m = random_model(task, rng);
    std::vector<double> x(m.dim);
    for (std::size_t i = 0; i < m.dim; ++i) x[i] = m.means[i] + (rng.next_double() - 0.5) * 4 * m.stds[i];
    if (t % 10 == 0) {
      // Move the bias onto the encoded margin: margin 0 or +/- one unit.
      const auto s = clear_score(m, x);
      m.bias += std::ldexp(static_cast<double>(s.margin) + static_cast<double>(rng.uniform(3)) - 1.0, -32);
      ++near_zero;
    }
    const bool clear = clear_score(m, x).positive;
    const Variant v = t % 2 ? Variant::kOptimized : Variant::kBasic;
    const bool priv = svm::private_svm_label(m, x, Ring(64), v, rng);
    mismatches += clear != priv;
    positives += clear;
  }
  EXPECT_EQ(mismatches, 0);
  EXPECT_GT(positives, 300);
  EXPECT_LT(positives, 700);
  EXPECT_EQ(near_zero, 100);
}

TEST(Cascade, BracketMapping) {
  using svm::AgeBracket;
  EXPECT_EQ(svm::bracket_from(true, true), AgeBracket::kB1);
  EXPECT_EQ(svm::bracket_from(true, false), AgeBracket::kB2);
  EXPECT_EQ(svm::bracket_from(false, true), AgeBracket::kB3);
  EXPECT_EQ(svm::bracket_from(false, false), AgeBracket::kB4);
  EXPECT_EQ(svm::bracket_name(AgeBracket::kB1), "7-26");
  EXPECT_EQ(svm::bracket_name(AgeBracket::kB4), "44-101");
}

namespace {

// Bank whose age models decide by bias alone (zero weights): margin = -b.
ModelBank forced_age_bank(bool age2_younger, bool inner_younger, Prg& rng) {
  std::vector<SvmModel> models;
  for (Task t : kSchedule) {
    SvmModel m = random_model(t, rng);
    if (is_age_task(t)) {
      m.positive = "younger";
      m.negative = "older";
      std::fill(m.weights.begin(), m.weights.end(), 0.0);
      const bool young = t == Task::kAge2 ? age2_younger : inner_younger;
      m.bias = young ? -1.0 : 1.0;
    }
    models.push_back(std::move(m));
  }
  return ModelBank(std::move(models));
}

std::set<std::uint16_t> opened_age_subs(const Transcript& t) {
  std::set<std::uint16_t> subs;
  for (const auto* frames : {&t.sent_frames, &t.received_frames}) {
    for (const auto& f : *frames) {
      if (f.type == FrameType::kResult && f.sub >= 1 && f.sub <= 3) subs.insert(f.sub);
    }
  }
  return subs;
}

}  // namespace

TEST(Cascade, YoungerYoungerIsB1) {
  Prg rng = Prg::from_u64(30);
  const ModelBank bank = forced_age_bank(true, true, rng);
  const auto run = privprof::testing::run_local_profile(bank, random_inputs(bank, rng), app::Mode::kPrivate, 1);
  EXPECT_EQ(run.report.profile.age, svm::AgeBracket::kB1);
  EXPECT_EQ(opened_age_subs(run.transcript), (std::set<std::uint16_t>{1, 2}));
}

TEST(Cascade, OlderOlderIsB4) {
  Prg rng = Prg::from_u64(31);
  const ModelBank bank = forced_age_bank(false, false, rng);
  const auto run = privprof::testing::run_local_profile(bank, random_inputs(bank, rng), app::Mode::kPrivate, 2);
  EXPECT_EQ(run.report.profile.age, svm::AgeBracket::kB4);
  EXPECT_EQ(opened_age_subs(run.transcript), (std::set<std::uint16_t>{2, 3}));
}

// Plaintext decision tree over the three clear signs, written out directly.
TEST(Cascade, RandomCasesMatchPlaintextTree) {
  Prg rng = Prg::from_u64(500);
  std::array<int, 4> seen{};
  int mismatches = 0, bad_openings = 0;
  for (int t = 0; t < 500; ++t) {
    const ModelBank bank = random_bank(rng);
    const auto in = random_inputs(bank, rng);
    auto younger = [&](Task task) {
      const SvmModel& m = *bank.find(task);
      const bool pos = clear_score(m, in.landmarks).positive;
      return (pos ? m.positive : m.negative) == "younger";
    };
    svm::AgeBracket expect;
    if (younger(Task::kAge2)) {
      expect = younger(Task::kAge1) ? svm::AgeBracket::kB1 : svm::AgeBracket::kB2;
    } else {
      expect = younger(Task::kAge3) ? svm::AgeBracket::kB3 : svm::AgeBracket::kB4;
    }
    const auto run = privprof::testing::run_local_profile(bank, in, app::Mode::kPrivate, 1000 + t);
    mismatches += run.report.profile.age != expect;
    const auto subs = opened_age_subs(run.transcript);
    const bool ok = subs.size() == 2 && subs.count(2) == 1;
    bad_openings += !ok;
    ++seen[static_cast<int>(expect)];
  }
  EXPECT_EQ(mismatches, 0);
  EXPECT_EQ(bad_openings, 0);
  for (int b = 0; b < 4; ++b) EXPECT_GT(seen[b], 0) << "bracket " << b << " never exercised";
}

TEST(Profile, ClearProfileMatchesAssembledClearMode) {
  Prg rng = Prg::from_u64(40);
  const ModelBank bank = random_bank(rng);
  const auto in = random_inputs(bank, rng);
  const auto run = privprof::testing::run_local_profile(bank, in, app::Mode::kClear, 3);
  EXPECT_EQ(run.report.profile, svm::clear_profile(bank, in.text, in.landmarks));
  EXPECT_EQ(run.report.clear_scores.size(), kTaskCount);
}

TEST(Profile, ZeroWeightTraitsWithNegativeBiasArePresent) {
  Prg rng = Prg::from_u64(41);
  std::vector<SvmModel> models;
  for (Task t : kSchedule) {
    SvmModel m = random_model(t, rng);
    if (is_trait_task(t)) {
      std::fill(m.weights.begin(), m.weights.end(), 0.0);
      m.bias = -0.5;
    }
    models.push_back(std::move(m));
  }
  const ModelBank bank(std::move(models));
  const auto run = privprof::testing::run_local_profile(bank, random_inputs(bank, rng), app::Mode::kPrivate, 4);
  for (bool present : run.report.profile.traits) EXPECT_TRUE(present);
}
