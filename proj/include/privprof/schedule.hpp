#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Static multiplication schedules of the Z_2 kernels. Triple budgets and the
// kernels themselves are both derived from these, so the dealer's plan and
// the actual consumption cannot drift apart.
namespace privprof {

enum class Variant : unsigned char { kBasic = 0, kOptimized = 1 };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

// Basic decomposition: one product for c_1, then d_i, e_i, c_i per bit.
constexpr std::size_t basic_decomp_cost(unsigned ell) { return 3 * (ell - 1) + 1; }
// Basic comparison: d_i products, the suffix chain of e, final c_i products.
constexpr std::size_t basic_compare_cost(unsigned ell) { return ell + 2 * (ell - 1); }

constexpr std::size_t basic_decomp_rounds(unsigned ell) { return 2 * ell - 1; }
constexpr std::size_t basic_compare_rounds(unsigned ell) {
  return ell == 1 ? 1 : (ell == 2 ? 2 : ell - 1);
}

// One level of the parallel-prefix carry network. For each listed position i
// (1-based), G_i absorbs G_{i-dist}; P_i is combined too when later levels
// still need it.
struct PrefixLevel {
  unsigned dist = 0;
  struct Node {
    unsigned pos;
    bool update_propagate;
  };
  std::vector<Node> nodes;
};

// Kogge-Stone network over carry positions 1..ell-1.
std::vector<PrefixLevel> prefix_carry_levels(unsigned ell);

// Leaf counts per level of the comparison merge tree (MSB-first pairing);
// level k merges floor(n_k / 2) pairs.
std::vector<std::size_t> compare_tree_levels(unsigned ell);

std::size_t optimized_decomp_cost(unsigned ell);
std::size_t optimized_compare_cost(unsigned ell);
std::size_t optimized_decomp_rounds(unsigned ell);
std::size_t optimized_compare_rounds(unsigned ell);

std::size_t decomp_cost(unsigned ell, Variant v);
std::size_t compare_cost(unsigned ell, Variant v);
std::size_t decomp_rounds(unsigned ell, Variant v);
std::size_t compare_rounds(unsigned ell, Variant v);

// Bit triples consumed by one SVM pipeline (decomposition + comparison).
inline std::size_t svm_bit_cost(unsigned ell, Variant v) {
  return decomp_cost(ell, v) + compare_cost(ell, v);
}

}  // namespace privprof
