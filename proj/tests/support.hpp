#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdint>
#include <vector>

#include "privprof/protocols.hpp"
#include "privprof/rng.hpp"
#include "privprof/triples.hpp"

namespace privprof::testing {

// Both parties' bundles and sessions for one lane.
struct Lane {
  Lane(const Ring& ring, std::vector<TripleShape> shapes, std::size_t bits, Prg& rng)
      : dealt(deal_budget(ring, shapes, bits, rng)),
        alice(ring, Party::kAlice, dealt.alice),
        bob(ring, Party::kBob, dealt.bob) {}
  Lane(const Lane&) = delete;
  Lane& operator=(const Lane&) = delete;

  void run(mpc::Kernel& a, mpc::Kernel& b, Transcript* transcript = nullptr) {
    mpc::LocalPair pair(transcript);
    pair.add(1, alice, a, bob, b);
    pair.run();
  }

  BundlePair dealt;
  mpc::Session alice;
  mpc::Session bob;
};

inline std::uint8_t open_bits(std::uint8_t a, std::uint8_t b) { return (a ^ b) & 1u; }

inline std::uint64_t open_bit_vector(const std::vector<std::uint8_t>& a,
                                     const std::vector<std::uint8_t>& b) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < a.size(); ++i) v |= std::uint64_t{open_bits(a[i], b[i])} << i;
  return v;
}

// Upper-tail probability of Pearson's statistic against a uniform law.
inline double chi_square_uniform_p(const std::vector<std::uint64_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace privprof::testing
