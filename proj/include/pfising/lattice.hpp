#pragma once

#include <compare>
#include <vector>

namespace pfising {

// Lattice site; x is the periodic coordinate in 1..L, y the open one in 1..M.
struct Site {
  int x = 0;
  int y = 0;
  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

inline Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
inline Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }

// Nearest-neighbour bond {site, site + e_dir}; dir is 1 (horizontal) or 2 (vertical).
struct Bond {
  Site site;
  int dir = 1;
  friend bool operator==(const Bond&, const Bond&) = default;
  friend auto operator<=>(const Bond&, const Bond&) = default;
};

inline Site unit(int dir) { return dir == 1 ? Site{1, 0} : Site{0, 1}; }

// Signed representative of z1 modulo L, in (-L/2, L/2].
int per_L(int z1, int L);

// +1 / 0 / -1 according to |z1 - z1'| <, =, > L/2; wraps by antiperiodicity beyond one period.
int s_L(int dz1, int L);

// Length of the rectilinear Steiner minimal tree on 2 to 4 points.
int delta_tree(const std::vector<Site>& points);

class CylinderGeometry {
 public:
  CylinderGeometry(int L, int M);

  int L() const { return L_; }
  int M() const { return M_; }
  int num_sites() const { return L_ * M_; }

  bool contains(Site z) const { return z.x >= 1 && z.x <= L_ && z.y >= 1 && z.y <= M_; }
  // Row-major in (y, x), 0-based.
  int site_index(Site z) const { return (z.y - 1) * L_ + (z.x - 1); }
  Site site_at(int index) const { return {index % L_ + 1, index / L_ + 1}; }

  std::vector<Site> sites() const;
  // Horizontal bonds (one per site) then vertical bonds (y < M).
  std::vector<Bond> bonds() const;
  std::vector<Bond> horizontal_bonds() const;
  std::vector<Bond> vertical_bonds() const;

  // Other endpoint of the bond, with the horizontal wrap L -> 1.
  Site far_end(const Bond& b) const;
  bool is_bond(const Bond& b) const;
  // Direction of the bond joining two adjacent sites.
  int direction(Site a, Site b) const;

  int per(int dz1) const { return per_L(dz1, L_); }
  int sign(int dz1) const { return s_L(dz1, L_); }
  int norm1(Site a, Site b) const;
  // Edge distance; both points may lie in the extended vertical range 0..M+1.
  int edge_distance(Site a, Site b) const;

 private:
  int L_;
  int M_;
};

}  // namespace pfising
