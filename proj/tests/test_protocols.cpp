#include <gtest/gtest.h>

#include <memory>

#include "privprof/error.hpp"
#include "privprof/protocols.hpp"
#include "support.hpp"

namespace privprof {
namespace {

using mpc::CompareKernel;
using mpc::DecompKernel;
using mpc::MatMulKernel;
using mpc::SignedGtKernel;
using testing::Lane;
using testing::open_bit_vector;
using testing::open_bits;

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::kProtocol;
}

std::pair<Matrix, Matrix> share_matrix(const Matrix& m, const Ring& r, Prg& rng) {
  Matrix a = random_matrix(m.rows, m.cols, r, rng);
  return {a, matsub(m, a, r)};
}

std::vector<std::uint8_t> bits_of(std::uint64_t v, unsigned ell) {
  std::vector<std::uint8_t> out(ell);
  for (unsigned i = 0; i < ell; ++i) out[i] = (v >> i) & 1u;
  return out;
}

// ---- matrix multiplication ----

TEST(MatMul, HandExampleRing16) {
  const Ring r(4);
  Prg rng = Prg::from_u64(100);
  auto [ta, tb] = make_matrix_triple(Matrix(1, 1, {7}), Matrix(1, 1, {2}), r, rng);
  EXPECT_EQ(r.add(ta.w.data[0], tb.w.data[0]), 14u);
  RandomnessBundle ba(Party::kAlice, r), bb(Party::kBob, r);
  ba.push(ta);
  bb.push(tb);
  mpc::Session sa(r, Party::kAlice, ba), sb(r, Party::kBob, bb);

  // x = 4 as (1, 3), y = 5 as (2, 3).
  const mpc::MulRequest ra{{{Matrix(1, 1, {1}), Matrix(1, 1, {2})}}, {}};
  const mpc::MulRequest rb{{{Matrix(1, 1, {3}), Matrix(1, 1, {3})}}, {}};
  const auto pa = sa.open(ra), pb = sb.open(rb);
  const auto oa = mpc::decode_open(pa, r), ob = mpc::decode_open(pb, r);
  EXPECT_EQ(r.add(oa.elements[0], ob.elements[0]), 13u);  // D = 4 - 7
  EXPECT_EQ(r.add(oa.elements[1], ob.elements[1]), 3u);   // E = 5 - 2
  const auto za = sa.close(pb), zb = sb.close(pa);
  EXPECT_EQ(r.add(za.matrices[0].data[0], zb.matrices[0].data[0]), 4u);
  EXPECT_EQ(sa.rounds(), 1u);
  EXPECT_EQ(sb.rounds(), 1u);
}

TEST(MatMul, ZeroLeftOperand) {
  const Ring r(64);
  Prg rng = Prg::from_u64(101);
  const Matrix y = random_matrix(3, 2, r, rng);
  auto [xa, xb] = share_matrix(Matrix(2, 3), r, rng);
  auto [ya, yb] = share_matrix(y, r, rng);
  Lane lane(r, {{2, 3, 2}}, 0, rng);
  MatMulKernel ka(xa, ya), kb(xb, yb);
  lane.run(ka, kb);
  EXPECT_EQ(matadd(ka.result(), kb.result(), r), Matrix(2, 2));
}

TEST(MatMul, RandomProductsRing64) {
  const Ring r(64);
  Prg rng = Prg::from_u64(102);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = random_matrix(3, 2, r, rng), y = random_matrix(2, 4, r, rng);
    auto [xa, xb] = share_matrix(x, r, rng);
    auto [ya, yb] = share_matrix(y, r, rng);
    Lane lane(r, {{3, 2, 4}}, 0, rng);
    MatMulKernel ka(xa, ya), kb(xb, yb);
    lane.run(ka, kb);
    ASSERT_EQ(matadd(ka.result(), kb.result(), r), matmul(x, y, r));
    ASSERT_EQ(lane.alice.rounds(), 1u);
    ASSERT_TRUE(lane.dealt.alice.exhausted());
  }
}

TEST(MatMul, ShapeErrors) {
  const Ring r(64);
  Prg rng = Prg::from_u64(103);
  EXPECT_EQ(code_of([] { MatMulKernel k(Matrix(1, 2), Matrix(3, 1)); }), Errc::kDimensionMismatch);
  Lane lane(r, {{1, 2, 1}}, 0, rng);
  MatMulKernel ka(Matrix(1, 3), Matrix(3, 1));
  EXPECT_EQ(code_of([&] { lane.alice.open(ka.request()); }), Errc::kDimensionMismatch);
  Lane empty(r, {}, 0, rng);
  MatMulKernel kb(Matrix(1, 2), Matrix(2, 1));
  EXPECT_EQ(code_of([&] { empty.alice.open(kb.request()); }), Errc::kTripleExhausted);
}

TEST(InnerProduct, BasisVectorAndDot) {
  const Ring r(64);
  Prg rng = Prg::from_u64(104);
  {
    const Matrix x(1, 4, {1, 0, 0, 0}), y(4, 1, {99, 5, 6, 7});
    auto [xa, xb] = share_matrix(x, r, rng);
    auto [ya, yb] = share_matrix(y, r, rng);
    Lane lane(r, {{1, 4, 1}}, 0, rng);
    MatMulKernel ka(xa, ya), kb(xb, yb);
    lane.run(ka, kb);
    EXPECT_EQ(r.add(ka.result().data[0], kb.result().data[0]), 99u);
  }
  {
    auto [xa, xb] = share_matrix(Matrix(1, 2, {2, 3}), r, rng);
    auto [ya, yb] = share_matrix(Matrix(2, 1, {4, 5}), r, rng);
    Lane lane(r, {{1, 2, 1}}, 0, rng);
    MatMulKernel ka(xa, ya), kb(xb, yb);
    lane.run(ka, kb);
    EXPECT_EQ(r.add(ka.result().data[0], kb.result().data[0]), 23u);
  }
}

TEST(InnerProduct, Random43) {
  const Ring r(64);
  Prg rng = Prg::from_u64(105);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = random_matrix(1, 43, r, rng), y = random_matrix(43, 1, r, rng);
    auto [xa, xb] = share_matrix(x, r, rng);
    auto [ya, yb] = share_matrix(y, r, rng);
    Lane lane(r, {{1, 43, 1}}, 0, rng);
    MatMulKernel ka(xa, ya), kb(xb, yb);
    lane.run(ka, kb);
    ASSERT_EQ(matadd(ka.result(), kb.result(), r), matmul(x, y, r));
  }
}

// ---- bit decomposition ----

struct DecompRun {
  std::uint64_t value;
  std::vector<std::uint8_t> a_bits, b_bits;
  std::uint32_t rounds;
  bool exhausted;
  mpc::DecompState sa, sb;
};

DecompRun run_decomp(const Ring& r, std::uint64_t a, std::uint64_t b, Variant v, Prg& rng) {
  Lane lane(r, {}, decomp_cost(r.bits(), v), rng);
  DecompKernel ka(r, Party::kAlice, a, v), kb(r, Party::kBob, b, v);
  if (!ka.done()) lane.run(ka, kb);
  return {open_bit_vector(ka.bits(), kb.bits()), ka.bits(), kb.bits(), lane.alice.rounds(),
          lane.dealt.alice.exhausted() && lane.dealt.bob.exhausted(), ka.state(), kb.state()};
}

TEST(Decomp, HandTraceRing3) {
  const Ring r(3);
  Prg rng = Prg::from_u64(110);
  const auto run = run_decomp(r, 3, 6, Variant::kBasic, rng);
  EXPECT_EQ(run.value, 1u);
  auto open = [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                 std::size_t i) { return open_bits(a[i], b[i]); };
  const auto& a = run.sa;
  const auto& b = run.sb;
  EXPECT_EQ(open(a.y, b.y, 0), 1);
  EXPECT_EQ(open(a.y, b.y, 1), 0);
  EXPECT_EQ(open(a.y, b.y, 2), 1);
  EXPECT_EQ(open(a.c, b.c, 0), 0);
  EXPECT_EQ(open(a.d, b.d, 1), 0);
  EXPECT_EQ(open(a.e, b.e, 1), 1);
  EXPECT_EQ(open(a.c, b.c, 1), 1);
  EXPECT_EQ(open(run.a_bits, run.b_bits, 1), 0);
  EXPECT_EQ(open(a.d, b.d, 2), 1);
  EXPECT_EQ(open(a.e, b.e, 2), 0);
  EXPECT_EQ(open(a.c, b.c, 2), 1);
  EXPECT_EQ(open(run.a_bits, run.b_bits, 2), 0);
  EXPECT_TRUE(run.exhausted);
}

TEST(Decomp, ZeroShareHasNoCarries) {
  const Ring r(8);
  Prg rng = Prg::from_u64(111);
  for (std::uint64_t v : {0u, 1u, 0x5Au, 0xFFu}) {
    EXPECT_EQ(run_decomp(r, 0, v, Variant::kBasic, rng).value, v);
    EXPECT_EQ(run_decomp(r, v, 0, Variant::kBasic, rng).value, v);
  }
}

TEST(Decomp, ExhaustiveRing8) {
  const Ring r(8);
  Prg rng = Prg::from_u64(112);
  for (std::uint64_t x = 0; x < 256; ++x) {
    for (int s = 0; s < 16; ++s) {
      const std::uint64_t a = r.reduce(rng.next_u64());
      const auto run = run_decomp(r, a, r.sub(x, a), Variant::kBasic, rng);
      ASSERT_EQ(run.value, x) << "split " << a;
      ASSERT_TRUE(run.exhausted);
    }
  }
}

TEST(Decomp, BasicRoundsAndCost) {
  Prg rng = Prg::from_u64(113);
  for (unsigned ell : {1u, 2u, 3u, 8u, 16u, 64u}) {
    const Ring r(ell);
    const auto run = run_decomp(r, r.reduce(rng.next_u64()), r.reduce(rng.next_u64()),
                                Variant::kBasic, rng);
    EXPECT_EQ(run.rounds, basic_decomp_rounds(ell)) << ell;
    EXPECT_EQ(run.rounds, 2 * ell - 1) << ell;
    EXPECT_TRUE(run.exhausted) << ell;
  }
}

TEST(Decomp, OptimizedMatchesOracle) {
  Prg rng = Prg::from_u64(114);
  for (unsigned ell : {1u, 2u, 3u, 5u, 8u}) {
    const Ring r(ell);
    for (std::uint64_t x = 0; x <= r.mask(); ++x) {
      for (int s = 0; s < 4; ++s) {
        const std::uint64_t a = r.reduce(rng.next_u64());
        const auto run = run_decomp(r, a, r.sub(x, a), Variant::kOptimized, rng);
        ASSERT_EQ(run.value, x) << ell;
        ASSERT_TRUE(run.exhausted);
        ASSERT_EQ(run.rounds, optimized_decomp_rounds(ell));
      }
    }
  }
}

TEST(Decomp, OptimizedRandomRing64) {
  const Ring r(64);
  Prg rng = Prg::from_u64(115);
  for (int t = 0; t < 2000; ++t) {
    const std::uint64_t x = rng.next_u64(), a = rng.next_u64();
    const auto run = run_decomp(r, a, x - a, Variant::kOptimized, rng);
    ASSERT_EQ(run.value, x);
    ASSERT_EQ(run.rounds, 7u);
  }
}

TEST(Decomp, BasicRandomRing64) {
  const Ring r(64);
  Prg rng = Prg::from_u64(116);
  for (int t = 0; t < 2000; ++t) {
    const std::uint64_t x = rng.next_u64(), a = rng.next_u64();
    ASSERT_EQ(run_decomp(r, a, x - a, Variant::kBasic, rng).value, x);
  }
}

TEST(Decomp, TripleShortage) {
  const Ring r(8);
  Prg rng = Prg::from_u64(117);
  Lane lane(r, {}, basic_decomp_cost(8) - 1, rng);
  DecompKernel ka(r, Party::kAlice, 1), kb(r, Party::kBob, 2);
  EXPECT_EQ(code_of([&] { lane.run(ka, kb); }), Errc::kTripleExhausted);
}

// ---- comparison ----

struct CompareRun {
  std::uint8_t w;
  std::uint32_t rounds;
  bool exhausted;
  mpc::CompareState sa, sb;
};

CompareRun run_compare(unsigned ell, std::uint64_t x, std::uint64_t y, Variant v, Prg& rng) {
  const Ring r(ell);
  const std::uint64_t xm = r.reduce(rng.next_u64()), ym = r.reduce(rng.next_u64());
  Lane lane(r, {}, compare_cost(ell, v), rng);
  CompareKernel ka(Party::kAlice, bits_of(xm, ell), bits_of(ym, ell), v);
  CompareKernel kb(Party::kBob, bits_of(xm ^ x, ell), bits_of(ym ^ y, ell), v);
  lane.run(ka, kb);
  CompareRun out{open_bits(ka.result(), kb.result()), lane.alice.rounds(),
                 lane.dealt.alice.exhausted() && lane.dealt.bob.exhausted(), {}, {}};
  if (v == Variant::kBasic) {
    out.sa = ka.state();
    out.sb = kb.state();
  }
  return out;
}

TEST(Compare, HandTraceRing3) {
  Prg rng = Prg::from_u64(120);
  const auto run = run_compare(3, 5, 3, Variant::kBasic, rng);
  EXPECT_EQ(run.w, 1);
  EXPECT_EQ(open_bit_vector(run.sa.d, run.sb.d), 0b010u);  // d = (0, 1, 0)
  EXPECT_EQ(open_bit_vector(run.sa.e, run.sb.e), 0b001u);  // e = (1, 0, 0)
  EXPECT_EQ(open_bit_vector(run.sa.c, run.sb.c), 0u);
  EXPECT_TRUE(run.exhausted);
}

TEST(Compare, EqualityCountsAsGreaterOrEqual) {
  Prg rng = Prg::from_u64(121);
  for (std::uint64_t v : {0u, 1u, 37u, 255u}) {
    EXPECT_EQ(run_compare(8, v, v, Variant::kBasic, rng).w, 1);
    EXPECT_EQ(run_compare(8, v, v, Variant::kOptimized, rng).w, 1);
  }
}

TEST(Compare, ExhaustiveRing6) {
  Prg rng = Prg::from_u64(122);
  for (std::uint64_t x = 0; x < 64; ++x) {
    for (std::uint64_t y = 0; y < 64; ++y) {
      const auto run = run_compare(6, x, y, Variant::kBasic, rng);
      ASSERT_EQ(run.w, x >= y ? 1 : 0) << x << " " << y;
      ASSERT_TRUE(run.exhausted);
    }
  }
}

TEST(Compare, OptimizedExhaustiveSmallRings) {
  Prg rng = Prg::from_u64(123);
  for (unsigned ell : {1u, 2u, 3u, 5u, 6u}) {
    const std::uint64_t n = std::uint64_t{1} << ell;
    for (std::uint64_t x = 0; x < n; ++x) {
      for (std::uint64_t y = 0; y < n; ++y) {
        const auto run = run_compare(ell, x, y, Variant::kOptimized, rng);
        ASSERT_EQ(run.w, x >= y ? 1 : 0) << ell << ": " << x << " " << y;
        ASSERT_TRUE(run.exhausted);
        ASSERT_EQ(run.rounds, optimized_compare_rounds(ell));
      }
    }
  }
}

TEST(Compare, BasicRounds) {
  Prg rng = Prg::from_u64(124);
  for (unsigned ell : {1u, 2u, 3u, 6u, 8u, 64u}) {
    const Ring r(ell);
    const auto run = run_compare(ell, r.reduce(rng.next_u64()), r.reduce(rng.next_u64()),
                                 Variant::kBasic, rng);
    EXPECT_EQ(run.rounds, basic_compare_rounds(ell)) << ell;
    EXPECT_LE(run.rounds, ell + 1) << ell;
    EXPECT_TRUE(run.exhausted);
  }
}

TEST(Compare, RandomRing64BothVariants) {
  Prg rng = Prg::from_u64(125);
  for (int t = 0; t < 2000; ++t) {
    std::uint64_t x = rng.next_u64(), y = rng.next_u64();
    if (t % 4 == 0) y = x ^ (rng.next_u64() & 0xFF);
    ASSERT_EQ(run_compare(64, x, y, Variant::kBasic, rng).w, x >= y ? 1 : 0);
    ASSERT_EQ(run_compare(64, x, y, Variant::kOptimized, rng).w, x >= y ? 1 : 0);
  }
}

// ---- signed comparison ----

std::uint8_t run_signed_gt(const Ring& r, std::int64_t s, std::int64_t t, Variant v, Prg& rng) {
  const std::uint64_t a = r.reduce(rng.next_u64());
  Lane lane(r, {}, svm_bit_cost(r.bits(), v), rng);
  SignedGtKernel ka(r, Party::kAlice, a, t, v);
  SignedGtKernel kb(r, Party::kBob, r.sub(r.from_signed(s), a), t, v);
  lane.run(ka, kb);
  EXPECT_TRUE(lane.dealt.alice.exhausted());
  return open_bits(ka.result(), kb.result());
}

TEST(SignedGt, ZeroIsNotGreaterThanZero) {
  Prg rng = Prg::from_u64(130);
  EXPECT_EQ(run_signed_gt(Ring(64), 0, 0, Variant::kBasic, rng), 0);
  EXPECT_EQ(run_signed_gt(Ring(64), 1, 0, Variant::kBasic, rng), 1);
  EXPECT_EQ(run_signed_gt(Ring(64), -1, 0, Variant::kBasic, rng), 0);
}

TEST(SignedGt, ExhaustiveRing8) {
  const Ring r(8);
  Prg rng = Prg::from_u64(131);
  for (Variant v : {Variant::kBasic, Variant::kOptimized}) {
    for (std::int64_t t : {-3, 0, 5}) {
      for (std::int64_t s = -128; s < 128; ++s) {
        ASSERT_EQ(run_signed_gt(r, s, t, v, rng), s > t ? 1 : 0) << s << " > " << t;
      }
    }
  }
}

TEST(SignedGt, ThresholdBounds) {
  const Ring r(8);
  EXPECT_EQ(code_of([&] { SignedGtKernel k(r, Party::kAlice, 0, 127); }), Errc::kOutOfRange);
  EXPECT_EQ(code_of([&] { SignedGtKernel k(r, Party::kAlice, 0, -129); }), Errc::kOutOfRange);
  EXPECT_NO_THROW(SignedGtKernel(r, Party::kAlice, 0, -128));
  EXPECT_NO_THROW(SignedGtKernel(r, Party::kAlice, 0, 126));
}

// ---- round bookkeeping and wire faults ----

TEST(Open, PayloadCodec) {
  const Ring r(16);
  mpc::OpenPayload p{7, {1, 0xFFFF, 300}, {1, 0, 1, 1, 0, 0, 0, 0, 1}};
  const auto bytes = mpc::encode_open(p, r);
  EXPECT_EQ(bytes.size(), 12u + 6 + 2);
  EXPECT_EQ(bytes[3], 7);
  EXPECT_EQ(bytes[7], 3);
  EXPECT_EQ(bytes[11], 9);
  EXPECT_EQ(bytes[18], 0b00001101);
  EXPECT_EQ(bytes[19], 1);
  const auto back = mpc::decode_open(bytes, r);
  EXPECT_EQ(back.round, 7u);
  EXPECT_EQ(back.elements, p.elements);
  EXPECT_EQ(back.bits, p.bits);
  auto bad = bytes;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { mpc::decode_open(bad, r); }), Errc::kProtocol);
}

TEST(Open, RoundCountersAdvanceTogether) {
  const Ring r(8);
  Prg rng = Prg::from_u64(140);
  Lane lane(r, {{1, 1, 1}}, 0, rng);
  MatMulKernel ka(Matrix(1, 1, {1}), Matrix(1, 1, {1}));
  MatMulKernel kb(Matrix(1, 1, {2}), Matrix(1, 1, {3}));
  Transcript tr;
  lane.run(ka, kb, &tr);
  EXPECT_EQ(lane.alice.rounds(), 1u);
  EXPECT_EQ(lane.bob.rounds(), 1u);
  ASSERT_EQ(tr.sent_frames.size(), 1u);
  ASSERT_EQ(tr.received_frames.size(), 1u);
  EXPECT_EQ(mpc::decode_open(tr.sent_frames[0].payload, r).elements.size(), 2u);
}

TEST(Open, BatchOf136IsOneFrame) {
  const Ring r(64);
  Prg rng = Prg::from_u64(141);
  Lane lane(r, {{1, 136, 1}}, 0, rng);
  MatMulKernel ka(random_matrix(1, 136, r, rng), random_matrix(136, 1, r, rng));
  MatMulKernel kb(random_matrix(1, 136, r, rng), random_matrix(136, 1, r, rng));
  Transcript tr;
  lane.run(ka, kb, &tr);
  ASSERT_EQ(tr.sent_frames.size(), 1u);
  EXPECT_EQ(tr.sent_frames[0].payload.size(), 12u + 272 * 8);
}

// Drops the first OPEN frame this end would send.
class DroppingChannel final : public Channel {
 public:
  explicit DroppingChannel(Channel& inner) : inner_(inner) {}
  void send(const Frame& f) override {
    if (f.type == FrameType::kOpen && !dropped_) {
      dropped_ = true;
      return;
    }
    inner_.send(f);
  }
  Frame recv() override { return inner_.recv(); }

 private:
  Channel& inner_;
  bool dropped_ = false;
};

TEST(Open, SkippedRoundIsDesync) {
  const Ring r(8);
  Prg rng = Prg::from_u64(142);
  Lane lane(r, {}, basic_decomp_cost(8), rng);
  auto [ca, cb] = MemoryChannel::make_pair(std::chrono::seconds(5));
  DroppingChannel lossy(*ca);
  Mux ma(lossy), mb(*cb);
  DecompKernel ka(r, Party::kAlice, 10), kb(r, Party::kBob, 20);
  mpc::Lockstep da(ma), db(mb);
  da.add(1, lane.alice, ka);
  db.add(1, lane.bob, kb);
  // Alice's round-0 frame never arrives, so Bob reads her round-1 frame.
  da.send_round();
  db.send_round();
  da.recv_round();
  da.send_round();
  EXPECT_EQ(code_of([&] { db.recv_round(); }), Errc::kRoundDesync);
}

TEST(Open, PeerErrorFrameSurfaces) {
  auto [ca, cb] = MemoryChannel::make_pair(std::chrono::seconds(5));
  Mux mb(*cb);
  ca->send(error_frame("bad bundle"));
  EXPECT_EQ(code_of([&] { mb.recv(1, FrameType::kOpen); }), Errc::kPeerError);
}

TEST(Session, BundleMustBelongToParty) {
  const Ring r(8);
  RandomnessBundle b(Party::kBob, r);
  EXPECT_EQ(code_of([&] { mpc::Session s(r, Party::kAlice, b); }), Errc::kPartyMismatch);
}

// ---- masking ----

TEST(Masking, OpenedValuesAreUniform) {
  const Ring r(8);
  Prg rng = Prg::from_u64(152);
  std::vector<std::uint64_t> d_counts(256, 0), e_counts(256, 0);
  const Matrix xa(1, 1, {17}), xb(1, 1, {200}), ya(1, 1, {3}), yb(1, 1, {90});
  for (int t = 0; t < (1 << 16); ++t) {
    auto dealt = deal_budget(r, std::vector<TripleShape>{{1, 1, 1}}, 0, rng);
    mpc::Session sa(r, Party::kAlice, dealt.alice), sb(r, Party::kBob, dealt.bob);
    const auto pa = mpc::decode_open(sa.open({{{xa, ya}}, {}}), r);
    const auto pb = mpc::decode_open(sb.open({{{xb, yb}}, {}}), r);
    ++d_counts[r.add(pa.elements[0], pb.elements[0])];
    ++e_counts[r.add(pa.elements[1], pb.elements[1])];
  }
  EXPECT_GT(testing::chi_square_uniform_p(d_counts), 0.01);
  EXPECT_GT(testing::chi_square_uniform_p(e_counts), 0.01);
}

}  // namespace
}  // namespace privprof
