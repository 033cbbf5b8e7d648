#include "privprof/schedule.hpp"

#include <string>

#include "privprof/error.hpp"

namespace privprof {

std::string_view variant_name(Variant v) {
  return v == Variant::kBasic ? "basic" : "optimized";
}

Variant parse_variant(std::string_view s) {
  if (s == "basic") return Variant::kBasic;
  if (s == "optimized") return Variant::kOptimized;
  fail(Errc::kConfig, "unknown protocol variant '" + std::string(s) + "'");
}

std::vector<PrefixLevel> prefix_carry_levels(unsigned ell) {
  std::vector<PrefixLevel> levels;
  const unsigned m = ell - 1;  // carries c_1..c_{ell-1} feed x_2..x_ell
  for (unsigned dist = 1; dist < m; dist *= 2) {
    PrefixLevel level{dist, {}};
    for (unsigned i = dist + 1; i <= m; ++i) level.nodes.push_back({i, i > 2 * dist});
    levels.push_back(std::move(level));
  }
  return levels;
}

std::vector<std::size_t> compare_tree_levels(unsigned ell) {
  std::vector<std::size_t> sizes;
  for (std::size_t n = ell; n > 1; n = (n + 1) / 2) sizes.push_back(n);
  return sizes;
}

std::size_t optimized_decomp_cost(unsigned ell) {
  std::size_t cost = ell - 1;  // generate bits g_i = a_i b_i
  for (const auto& level : prefix_carry_levels(ell)) {
    for (const auto& node : level.nodes) cost += node.update_propagate ? 2 : 1;
  }
  return cost;
}

std::size_t optimized_compare_cost(unsigned ell) {
  std::size_t cost = ell;
  for (std::size_t n : compare_tree_levels(ell)) {
    const std::size_t next = (n + 1) / 2;
    cost += (n / 2) * (next > 1 ? 2 : 1);
  }
  return cost;
}

std::size_t optimized_decomp_rounds(unsigned ell) {
  if (ell == 1) return 0;
  return 1 + prefix_carry_levels(ell).size();
}

std::size_t optimized_compare_rounds(unsigned ell) {
  return 1 + compare_tree_levels(ell).size();
}

std::size_t decomp_cost(unsigned ell, Variant v) {
  return v == Variant::kBasic ? basic_decomp_cost(ell) : optimized_decomp_cost(ell);
}

std::size_t compare_cost(unsigned ell, Variant v) {
  return v == Variant::kBasic ? basic_compare_cost(ell) : optimized_compare_cost(ell);
}

std::size_t decomp_rounds(unsigned ell, Variant v) {
  return v == Variant::kBasic ? basic_decomp_rounds(ell) : optimized_decomp_rounds(ell);
}

std::size_t compare_rounds(unsigned ell, Variant v) {
  return v == Variant::kBasic ? basic_compare_rounds(ell) : optimized_compare_rounds(ell);
}

}  // namespace privprof
