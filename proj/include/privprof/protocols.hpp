#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "privprof/ring.hpp"
#include "privprof/schedule.hpp"
#include "privprof/transport.hpp"
#include "privprof/triples.hpp"

// Two-party kernels over additive shares. Every kernel is a round-based state
// machine: request() yields the Beaver multiplications of the next round,
// deliver() hands back this party's shares of the products. The opening of
// masked values happens in Session/Lockstep, never inside a kernel, so the
// same kernels run over in-memory pipes, TCP, or many multiplexed lanes.
namespace privprof::mpc {

struct BitPair {
  std::uint8_t x;
  std::uint8_t y;
};

struct MatPair {
  Matrix x;  // i x j
  Matrix y;  // j x k
};

struct MulRequest {
  std::vector<MatPair> matrices;
  std::vector<BitPair> bits;

  bool empty() const { return matrices.empty() && bits.empty(); }
};

struct MulResponse {
  std::vector<Matrix> matrices;
  std::vector<std::uint8_t> bits;
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual bool done() const = 0;
  // Precondition: !done(). Never returns an empty request.
  virtual MulRequest request() = 0;
  virtual void deliver(MulResponse response) = 0;
};

// One party's end of a sub-session: ring, role, triple source and the round
// counter that both ends must keep in step.
class Session {
 public:
  Session(Ring ring, Party party, RandomnessBundle& triples);

  const Ring& ring() const { return ring_; }
  Party party() const { return party_; }
  std::uint32_t rounds() const { return rounds_; }
  RandomnessBundle& triples() { return triples_; }

  // Consumes triples for `req` and returns the OPEN payload carrying this
  // party's shares of D = X - U and E = Y - V.
  std::vector<std::uint8_t> open(const MulRequest& req);
  // Combines the peer's OPEN payload with the pending round.
  MulResponse close(std::span<const std::uint8_t> peer_payload);

 private:
  struct Pending {
    std::vector<const MatrixTripleShare*> matrix_triples;
    std::vector<BitTripleShare> bit_triples;
    std::vector<Matrix> d;
    std::vector<Matrix> e;
    std::vector<std::uint8_t> bd;
    std::vector<std::uint8_t> be;
  };

  Ring ring_;
  Party party_;
  RandomnessBundle& triples_;
  std::uint32_t rounds_ = 0;
  std::optional<Pending> pending_;
};

// Drives any number of (sub-session, kernel) lanes in lockstep over one Mux.
// Each round every unfinished lane sends one OPEN frame, in ascending lane
// order, and then receives the peer's frame for that lane.
class Lockstep {
 public:
  explicit Lockstep(Mux& mux) : mux_(&mux) {}

  void add(std::uint16_t sub, Session& session, Kernel& kernel);
  bool finished() const;
  void send_round();
  void recv_round();
  void run();

 private:
  struct Lane {
    std::uint16_t sub;
    Session* session;
    Kernel* kernel;
    bool in_flight = false;
  };
  Mux* mux_;
  std::vector<Lane> lanes_;
};

// Secure distributed matrix multiplication; with i = k = 1 it is the inner
// product.
class MatMulKernel final : public Kernel {
 public:
  MatMulKernel(Matrix x, Matrix y);

  bool done() const override { return result_.has_value(); }
  MulRequest request() override;
  void deliver(MulResponse response) override;

  const Matrix& result() const { return *result_; }

 private:
  Matrix x_;
  Matrix y_;
  std::optional<Matrix> result_;
};

// Per-bit trace of the basic decomposition (index 0 is bit 1).
struct DecompState {
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> c;
  std::vector<std::uint8_t> d;  // d[0], e[0] unused
  std::vector<std::uint8_t> e;
};

// Converts a share of x in Z_{2^ell} into shares of the bits x_1..x_ell.
class DecompKernel final : public Kernel {
 public:
  DecompKernel(const Ring& ring, Party party, std::uint64_t share,
               Variant variant = Variant::kBasic);

  bool done() const override { return done_; }
  MulRequest request() override;
  void deliver(MulResponse response) override;

  // Shares of x_1..x_ell, least significant first.
  const std::vector<std::uint8_t>& bits() const { return x_; }
  const DecompState& state() const { return st_; }

 private:
  void finish_prefix();

  unsigned ell_;
  Party party_;
  Variant variant_;
  std::uint8_t one_;
  std::vector<std::uint8_t> a_, b_;  // (a_i, 0) and (0, b_i) sharings
  DecompState st_;
  std::vector<std::uint8_t> x_;
  bool done_ = false;
  // basic: step 1 is c_1, then (d_i, e_i) and c_i alternate for i = 2..ell
  unsigned step_ = 0;
  // optimized
  std::vector<std::uint8_t> g_, p_;
  std::vector<PrefixLevel> levels_;
};

// Per-bit trace of the basic comparison (index 0 is bit 1).
struct CompareState {
  std::vector<std::uint8_t> d;
  std::vector<std::uint8_t> e;
  std::vector<std::uint8_t> c;
  std::uint8_t w = 0;
};

// Shares of [x >= y] from bitwise shares of two ell-bit integers.
class CompareKernel final : public Kernel {
 public:
  CompareKernel(Party party, std::vector<std::uint8_t> x_bits, std::vector<std::uint8_t> y_bits,
                Variant variant = Variant::kBasic);

  bool done() const override { return result_.has_value(); }
  MulRequest request() override;
  void deliver(MulResponse response) override;

  std::uint8_t result() const { return *result_; }
  // Basic variant only; valid once done().
  CompareState state() const;

 private:
  struct Slot {
    enum Kind { kD, kChain, kC, kTreeD, kTreeE } kind;
    unsigned index;
  };
  void finish_basic();

  unsigned ell_;
  Party party_;
  Variant variant_;
  std::uint8_t one_;
  std::vector<std::uint8_t> x_, y_, d_, e_;
  std::optional<std::uint8_t> result_;
  std::vector<Slot> slots_;
  unsigned round_ = 0;
  // basic
  std::vector<std::optional<std::uint8_t>> suffix_;  // suffix_[j] = prod_{k>=j} e_k
  std::vector<std::optional<std::uint8_t>> c_;
  unsigned next_chain_ = 0;
  // optimized: merge-tree nodes, most significant first
  std::vector<std::uint8_t> node_d_, node_e_;
};

// Shares of [s > t] for a shared two's-complement s and public t, via
// compare(decomp(offset(s)), bits(offset(t) + 1)).
class SignedGtKernel final : public Kernel {
 public:
  SignedGtKernel(const Ring& ring, Party party, std::uint64_t share, std::int64_t threshold,
                 Variant variant = Variant::kBasic);

  bool done() const override;
  MulRequest request() override;
  void deliver(MulResponse response) override;

  std::uint8_t result() const { return compare_->result(); }

 private:
  void advance();

  Ring ring_;
  Party party_;
  Variant variant_;
  std::uint64_t constant_;
  DecompKernel decomp_;
  std::optional<CompareKernel> compare_;
};

// Runs Alice's and Bob's lanes against each other in one thread over an
// in-memory channel pair. The transcript, when given, records Alice's side.
class LocalPair {
 public:
  explicit LocalPair(Transcript* alice_transcript = nullptr);

  void add(std::uint16_t sub, Session& alice, Kernel& alice_kernel, Session& bob,
           Kernel& bob_kernel);
  void run();

  Mux& alice_mux() { return *mux_a_; }
  Mux& bob_mux() { return *mux_b_; }

 private:
  std::unique_ptr<MemoryChannel> ch_a_, ch_b_;
  std::unique_ptr<RecordingChannel> rec_;
  std::unique_ptr<Mux> mux_a_, mux_b_;
  std::unique_ptr<Lockstep> drv_a_, drv_b_;
};

// Parses an OPEN payload: round counter, ring elements, packed bits.
struct OpenPayload {
  std::uint32_t round = 0;
  std::vector<std::uint64_t> elements;
  std::vector<std::uint8_t> bits;
};
std::vector<std::uint8_t> encode_open(const OpenPayload& p, const Ring& ring);
OpenPayload decode_open(std::span<const std::uint8_t> payload, const Ring& ring);

}  // namespace privprof::mpc
