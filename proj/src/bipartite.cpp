#include "rxnkit/bipartite.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace rxnkit {

namespace {

constexpr int kNil = -1;
constexpr int kInf = std::numeric_limits<int>::max();

class HopcroftKarp {
 public:
  HopcroftKarp(std::size_t n_right, const std::vector<std::vector<int>>& adj)
      : adj_(adj),
        match_left_(adj.size(), kNil),
        match_right_(n_right, kNil),
        dist_(adj.size(), kInf) {}

  std::vector<int> run() {
    while (bfs()) {
      for (std::size_t l = 0; l < adj_.size(); ++l) {
        if (match_left_[l] == kNil) dfs(static_cast<int>(l));
      }
    }
    return match_left_;
  }

 private:
  bool bfs() {
    std::queue<int> q;
    for (std::size_t l = 0; l < adj_.size(); ++l) {
      if (match_left_[l] == kNil) {
        dist_[l] = 0;
        q.push(static_cast<int>(l));
      } else {
        dist_[l] = kInf;
      }
    }
    bool found_free = false;
    while (!q.empty()) {
      const int l = q.front();
      q.pop();
      for (int r : adj_[l]) {
        const int next = match_right_[r];
        if (next == kNil) {
          found_free = true;
        } else if (dist_[next] == kInf) {
          dist_[next] = dist_[l] + 1;
          q.push(next);
        }
      }
    }
    return found_free;
  }

  bool dfs(int l) {
    for (int r : adj_[l]) {
      const int next = match_right_[r];
      if (next == kNil || (dist_[next] == dist_[l] + 1 && dfs(next))) {
        match_left_[l] = r;
        match_right_[r] = l;
        return true;
      }
    }
    dist_[l] = kInf;
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> match_left_;
  std::vector<int> match_right_;
  std::vector<int> dist_;
};

}  // namespace

std::vector<int> maximum_bipartite_matching(std::size_t n_right,
                                            const std::vector<std::vector<int>>& adjacency) {
  return HopcroftKarp(n_right, adjacency).run();
}

bool has_perfect_matching(std::size_t n_left, std::size_t n_right,
                          const std::function<bool(std::size_t, std::size_t)>& admissible) {
  if (n_left != n_right) return false;
  std::vector<std::vector<int>> adj(n_left);
  for (std::size_t l = 0; l < n_left; ++l) {
    for (std::size_t r = 0; r < n_right; ++r) {
      if (admissible(l, r)) adj[l].push_back(static_cast<int>(r));
    }
    if (adj[l].empty()) return false;
  }
  const auto m = maximum_bipartite_matching(n_right, adj);
  return std::none_of(m.begin(), m.end(), [](int r) { return r == kNil; });
}

std::optional<std::vector<int>> min_cost_assignment(
    const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return std::vector<int>{};
  double max_finite = 0;
  for (const auto& row : cost) {
    if (row.size() != n) return std::nullopt;
    for (double c : row) {
      if (std::isfinite(c)) max_finite = std::max(max_finite, std::fabs(c));
    }
  }
  const double big = (max_finite + 1.0) * static_cast<double>(n + 1);

  // 1-indexed potentials formulation.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  const auto at = [&](std::size_t i, std::size_t j) {
    const double c = cost[i - 1][j - 1];
    return std::isfinite(c) ? c : big;
  };
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, kNil);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(cost[i][static_cast<std::size_t>(row_to_col[i])])) return std::nullopt;
  }
  return row_to_col;
}

}  // namespace rxnkit
