#pragma once

// Reference implementations used by the test suites. Everything here is
// deliberately naive and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <queue>
#include <vector>

namespace oracle {

// Cube coordinates of an odd-r offset cell (odd rows shifted right).
struct Cube {
  int x, y, z;
};

inline Cube to_cube(int row, int col) {
  const int x = col - (row - (row & 1)) / 2;
  const int z = row;
  return {x, -x - z, z};
}

inline int cube_distance(Cube a, Cube b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

// Adjacency matrix from cube distance 1 (no neighbour-offset tables).
inline std::vector<std::vector<bool>> adjacency(int rows, int cols) {
  const int n = rows * cols;
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      adj[a][b] = cube_distance(to_cube(a / cols, a % cols), to_cube(b / cols, b % cols)) == 1;
    }
  }
  return adj;
}

// All-pairs hop counts by Floyd-Warshall.
inline std::vector<std::vector<int>> floyd_warshall(int rows, int cols) {
  const int n = rows * cols;
  constexpr int kInf = 1 << 20;
  const auto adj = adjacency(rows, cols);
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (int i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int j = 0; j < n; ++j) {
      if (adj[i][j]) d[i][j] = 1;
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
      }
    }
  }
  return d;
}

inline int intermediates(int hops) { return hops <= 1 ? 0 : hops - 1; }

// Connected components by BFS flood fill over the target list.
inline int flood_fill_components(const std::vector<int>& targets, int rows, int cols) {
  const auto adj = adjacency(rows, cols);
  std::vector<bool> seen(targets.size(), false);
  int components = 0;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    if (seen[s]) continue;
    ++components;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < targets.size(); ++v) {
        if (!seen[v] && adj[targets[u]][targets[v]]) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
  }
  return components;
}

struct Features {
  int n_t = 0;
  int n_c = 0;
  int d_raw = 0;
  double f_t = 0.0;
  double f_c = 0.0;
  double f_d = 0.0;
};

// Feature vector computed from the oracle tables, default 6x6 grid.
inline Features features(const std::vector<int>& targets, int rows = 6, int cols = 6) {
  static const auto hops = floyd_warshall(6, 6);
  const auto& h = (rows == 6 && cols == 6) ? hops : floyd_warshall(rows, cols);
  int d_max = 0;
  for (const auto& row : h) {
    for (int v : row) d_max = std::max(d_max, intermediates(v));
  }
  Features f;
  f.n_t = static_cast<int>(targets.size());
  f.n_c = flood_fill_components(targets, rows, cols);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = i + 1; j < targets.size(); ++j) {
      f.d_raw += intermediates(h[targets[i]][targets[j]]);
    }
  }
  const double pairs = f.n_t * (f.n_t - 1) / 2.0;
  f.f_t = (f.n_t - 4) / 10.0;
  f.f_c = (f.n_c - 1) / 13.0;
  f.f_d = f.d_raw / (pairs * d_max);
  return f;
}

// Pascal's triangle up to n = 64 in unsigned 64-bit arithmetic.
inline std::uint64_t pascal(int n, int k) {
  static const auto table = [] {
    std::vector<std::vector<std::uint64_t>> t(65);
    for (int i = 0; i <= 64; ++i) {
      t[i].assign(i + 1, 1);
      for (int j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
    }
    return t;
  }();
  if (k < 0 || k > n) return 0;
  return table[n][k];
}

// A_t = sum_k (gamma lambda)^k delta_{t+k}, truncated at episode ends.
inline std::vector<double> gae_double_loop(const std::vector<double>& rewards,
                                           const std::vector<double>& values,
                                           const std::vector<bool>& done,
                                           double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  auto next_value = [&](std::size_t t) {
    if (done[t]) return 0.0;
    return t + 1 < n ? values[t + 1] : bootstrap;
  };
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double delta = rewards[k] + gamma * next_value(k) - values[k];
      adv[t] += weight * delta;
      if (done[k]) break;
      weight *= gamma * lambda;
    }
  }
  return adv;
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = sxy - sx * sy / n;
  return cov / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

// |a - b| relative to the larger magnitude, with a floor so that entries
// that are zero up to rounding do not dominate.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oracle
