#pragma once
// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "pfising/lattice.hpp"

namespace oracle {

using pfising::Site;

// log of sum over spins of exp(beta (J1 sum_h s s' + J2 sum_v s s')), antiperiodicity irrelevant for spins.
inline double brute_log_Z(int L, int M, double beta, double J1, double J2) {
  const int n = L * M;
  std::vector<double> energies;
  energies.reserve(std::size_t(1) << n);
  double emax = -std::numeric_limits<double>::infinity();
  for (long cfg = 0; cfg < (1L << n); ++cfg) {
    auto s = [&](int x, int y) { return ((cfg >> ((y - 1) * L + (x - 1))) & 1) ? 1 : -1; };
    double e = 0;
    for (int y = 1; y <= M; ++y)
      for (int x = 1; x <= L; ++x) {
        e += J1 * s(x, y) * s(x == L ? 1 : x + 1, y);
        if (y < M) e += J2 * s(x, y) * s(x, y + 1);
      }
    energies.push_back(beta * e);
    emax = std::max(emax, beta * e);
  }
  double sum = 0;
  for (double e : energies) sum += std::exp(e - emax);
  return emax + std::log(sum);
}

// Dreyfus-Wagner Steiner tree on the grid graph of the bounding box (padded by one).
inline int grid_steiner(const std::vector<Site>& terms) {
  int x0 = terms[0].x, x1 = x0, y0 = terms[0].y, y1 = y0;
  for (auto& t : terms) {
    x0 = std::min(x0, t.x); x1 = std::max(x1, t.x);
    y0 = std::min(y0, t.y); y1 = std::max(y1, t.y);
  }
  --x0; --y0; ++x1; ++y1;
  const int W = x1 - x0 + 1, H = y1 - y0 + 1, V = W * H;
  auto id = [&](int x, int y) { return (y - y0) * W + (x - x0); };
  const int INF = 1 << 28;
  // all-pairs grid distances are l1 inside a box
  auto dist = [&](int a, int b) { return std::abs(a % W - b % W) + std::abs(a / W - b / W); };
  const int k = int(terms.size());
  std::vector<std::vector<int>> dp(1 << k, std::vector<int>(V, INF));
  for (int i = 0; i < k; ++i) {
    int t = id(terms[i].x, terms[i].y);
    for (int v = 0; v < V; ++v) dp[1 << i][v] = dist(t, v);
  }
  for (int mask = 1; mask < (1 << k); ++mask) {
    if ((mask & (mask - 1)) == 0) continue;
    for (int v = 0; v < V; ++v)
      for (int sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask)
        dp[mask][v] = std::min(dp[mask][v], dp[sub][v] + dp[mask ^ sub][v]);
    std::vector<int> relaxed(V, INF);
    for (int v = 0; v < V; ++v)
      for (int u = 0; u < V; ++u) relaxed[v] = std::min(relaxed[v], dp[mask][u] + dist(u, v));
    dp[mask] = relaxed;
  }
  int best = INF;
  for (int v = 0; v < V; ++v) best = std::min(best, dp[(1 << k) - 1][v]);
  return best;
}

// (1/L) sum_{k in D_L} e^{-i k z} / (1 + t e^{i k})
inline double s_plus_fourier(int z1, int L, double t1) {
  std::complex<double> sum = 0;
  for (int m = -L / 2 + 1; m <= L / 2; ++m) {
    const double k = std::numbers::pi * (2 * m - 1) / L;
    sum += std::exp(std::complex<double>(0, -k * z1)) / (1.0 + t1 * std::exp(std::complex<double>(0, k)));
  }
  return (sum / double(L)).real();
}

}  // namespace oracle
