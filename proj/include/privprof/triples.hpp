#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "privprof/ring.hpp"
#include "privprof/schedule.hpp"

namespace privprof {

// One party's shares of a matrix multiplication triple (W = U V).
struct MatrixTripleShare {
  Matrix u;  // i x j
  Matrix v;  // j x k
  Matrix w;  // i x k
};

// One party's shares of a Z_2 triple (w = u v).
struct BitTripleShare {
  std::uint8_t u = 0;
  std::uint8_t v = 0;
  std::uint8_t w = 0;
};

struct TripleShape {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  bool operator==(const TripleShape&) const = default;
};

// Exact correlated-randomness budget of one profile session.
struct SessionPlan {
  Ring ring{64};
  Variant variant = Variant::kBasic;
  std::vector<std::size_t> model_dims;      // schedule order
  std::vector<TripleShape> matrix_shapes;   // one (1 x n)(n x 1) per model
  std::size_t bits_per_model = 0;
  std::size_t bit_triples = 0;
};

SessionPlan plan_session(std::span<const std::size_t> model_dims, unsigned ell,
                         Variant variant = Variant::kBasic);

// Ordered stream of one party's triple shares with consumption cursors.
class RandomnessBundle {
 public:
  RandomnessBundle(Party party, Ring ring) : party_(party), ring_(ring) {}

  Party party() const { return party_; }
  const Ring& ring() const { return ring_; }

  void push(MatrixTripleShare t) { matrices_.push_back(std::move(t)); }
  void push(BitTripleShare t) { bits_.push_back(t); }

  const std::vector<MatrixTripleShare>& matrices() const { return matrices_; }
  const std::vector<BitTripleShare>& bits() const { return bits_; }

  // Throws TripleExhausted when the stream is used up, DimensionMismatch if the
  // next matrix triple has a different shape.
  const MatrixTripleShare& take_matrix(std::size_t i, std::size_t j, std::size_t k);
  BitTripleShare take_bit();

  std::size_t matrices_remaining() const { return matrices_.size() - matrix_cursor_; }
  std::size_t bits_remaining() const { return bits_.size() - bit_cursor_; }
  bool exhausted() const { return matrices_remaining() == 0 && bits_remaining() == 0; }

  // Checks that the bundle holds exactly what `plan` requires.
  bool matches(const SessionPlan& plan) const;

  // Per-pipeline bundles in schedule order: model m gets matrix triple m and
  // the m-th block of bits_per_model bit triples. Requires an unconsumed
  // bundle that matches the plan.
  std::vector<RandomnessBundle> split(const SessionPlan& plan) &&;

  // Fixed binary layout: "VIT1", version, party, ell, reserved, counts (u32
  // LE), matrix triples (u16 LE dims + row-major U, V, W), packed bit triples.
  std::vector<std::uint8_t> serialize() const;
  static RandomnessBundle parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static RandomnessBundle load(const std::filesystem::path& path);

 private:
  Party party_;
  Ring ring_;
  std::vector<MatrixTripleShare> matrices_;
  std::vector<BitTripleShare> bits_;
  std::size_t matrix_cursor_ = 0;
  std::size_t bit_cursor_ = 0;
};

struct BundlePair {
  RandomnessBundle alice;
  RandomnessBundle bob;
};

std::pair<MatrixTripleShare, MatrixTripleShare> make_matrix_triple(const Matrix& u,
                                                                   const Matrix& v,
                                                                   const Ring& ring,
                                                                   Prg& rng);
std::pair<MatrixTripleShare, MatrixTripleShare> gen_matrix_triple(std::size_t i,
                                                                   std::size_t j,
                                                                   std::size_t k,
                                                                   const Ring& ring,
                                                                   Prg& rng);
std::pair<BitTripleShare, BitTripleShare> gen_bit_triple(Prg& rng);

// Samples the randomness for an explicit (shape list, bit count) budget; any
// ring width is accepted, which the exhaustive small-ring tests rely on.
BundlePair deal_budget(const Ring& ring, std::span<const TripleShape> shapes,
                       std::size_t bit_triples, Prg& rng);

BundlePair deal(const SessionPlan& plan, Prg& rng);

}  // namespace privprof
