#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace rxnkit {

/// Maximum-cardinality matching (Hopcroft-Karp). `adjacency[l]` lists the
/// right vertices admissible for left vertex l. Returns, for every left
/// vertex, its right partner or -1.
std::vector<int> maximum_bipartite_matching(std::size_t n_right,
                                            const std::vector<std::vector<int>>& adjacency);

/// True iff a perfect matching exists between two equally sized sides under
/// the predicate `admissible(left, right)`. Sides of different size never
/// match.
bool has_perfect_matching(std::size_t n_left, std::size_t n_right,
                          const std::function<bool(std::size_t, std::size_t)>& admissible);

inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

/// Minimum-cost perfect assignment over a square cost matrix (Hungarian
/// method). Entries equal to kForbidden may not be used. Returns the column
/// of every row, or nullopt when no finite assignment exists.
std::optional<std::vector<int>> min_cost_assignment(
    const std::vector<std::vector<double>>& cost);

}  // namespace rxnkit
