#include "pfising/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pfising {

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_even(int L) {
  if (L <= 0 || L % 2 != 0) throw std::invalid_argument("L must be a positive even integer");
}

int l1(Site a, Site b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

int mst_length(const std::vector<Site>& pts) {
  const std::size_t n = pts.size();
  std::vector<int> best(n, std::numeric_limits<int>::max());
  std::vector<char> used(n, 0);
  best[0] = 0;
  int total = 0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i] && (u == n || best[i] < best[u])) u = i;
    used[u] = 1;
    total += best[u];
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i]) best[i] = std::min(best[i], l1(pts[u], pts[i]));
  }
  return total;
}

}  // namespace

int per_L(int z1, int L) {
  check_even(L);
  // z1 - L*ceil(z1/L - 1/2), i.e. the representative in (-L/2, L/2]
  int r = z1 - L * floor_div(z1, L);  // in [0, L)
  return r > L / 2 ? r - L : r;
}

int s_L(int dz1, int L) {
  int p = per_L(dz1, L);
  if (2 * std::abs(p) == L) return 0;
  int wraps = (dz1 - p) / L;
  return (wraps % 2 == 0) ? 1 : -1;
}

int delta_tree(const std::vector<Site>& points) {
  if (points.size() < 2 || points.size() > 4)
    throw std::invalid_argument("delta_tree: need 2 to 4 points");
  std::vector<Site> terms(points);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  if (terms.size() <= 1) return 0;
  if (terms.size() == 2) return l1(terms[0], terms[1]);

  // Hanan grid: an optimal tree uses at most n-2 Steiner points on it.
  std::vector<int> xs, ys;
  for (auto& p : terms) { xs.push_back(p.x); ys.push_back(p.y); }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<Site> hanan;
  for (int x : xs)
    for (int y : ys) {
      Site s{x, y};
      if (!std::binary_search(terms.begin(), terms.end(), s)) hanan.push_back(s);
    }

  int best = mst_length(terms);
  std::vector<Site> pts(terms);
  const std::size_t nh = hanan.size();
  for (std::size_t i = 0; i < nh; ++i) {
    pts.push_back(hanan[i]);
    best = std::min(best, mst_length(pts));
    if (terms.size() == 4) {
      for (std::size_t j = i + 1; j < nh; ++j) {
        pts.push_back(hanan[j]);
        best = std::min(best, mst_length(pts));
        pts.pop_back();
      }
    }
    pts.pop_back();
  }
  return best;
}

CylinderGeometry::CylinderGeometry(int L, int M) : L_(L), M_(M) {
  check_even(L);
  if (M <= 0) throw std::invalid_argument("M must be positive");
}

std::vector<Site> CylinderGeometry::sites() const {
  std::vector<Site> out;
  out.reserve(num_sites());
  for (int i = 0; i < num_sites(); ++i) out.push_back(site_at(i));
  return out;
}

std::vector<Bond> CylinderGeometry::horizontal_bonds() const {
  std::vector<Bond> out;
  for (int i = 0; i < num_sites(); ++i) out.push_back({site_at(i), 1});
  return out;
}

std::vector<Bond> CylinderGeometry::vertical_bonds() const {
  std::vector<Bond> out;
  for (int i = 0; i < num_sites(); ++i) {
    Site z = site_at(i);
    if (z.y < M_) out.push_back({z, 2});
  }
  return out;
}

std::vector<Bond> CylinderGeometry::bonds() const {
  auto out = horizontal_bonds();
  auto v = vertical_bonds();
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

bool CylinderGeometry::is_bond(const Bond& b) const {
  if (!contains(b.site)) return false;
  if (b.dir == 1) return true;
  return b.dir == 2 && b.site.y < M_;
}

Site CylinderGeometry::far_end(const Bond& b) const {
  if (!is_bond(b)) throw std::invalid_argument("not a bond of this cylinder");
  if (b.dir == 1) return {b.site.x == L_ ? 1 : b.site.x + 1, b.site.y};
  return {b.site.x, b.site.y + 1};
}

int CylinderGeometry::direction(Site a, Site b) const {
  if (a.y == b.y && per(a.x - b.x) != 0 && std::abs(per(a.x - b.x)) == 1) return 1;
  if (a.x == b.x && std::abs(a.y - b.y) == 1) return 2;
  throw std::invalid_argument("sites are not adjacent");
}

int CylinderGeometry::norm1(Site a, Site b) const {
  return std::abs(per(a.x - b.x)) + std::abs(a.y - b.y);
}

int CylinderGeometry::edge_distance(Site a, Site b) const {
  auto in_range = [&](Site z) { return z.y >= 0 && z.y <= M_ + 1; };
  if (!in_range(a) || !in_range(b)) throw std::out_of_range("edge_distance: vertical coordinate outside 0..M+1");
  int p = std::abs(per(a.x - b.x));
  int to_edge = std::min(a.y + b.y, 2 * (M_ + 1) - a.y - b.y);
  return std::min(p + to_edge, L_ - p + std::abs(a.y - b.y));
}

}  // namespace pfising
