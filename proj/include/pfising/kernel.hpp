#pragma once

#include <array>
#include <compare>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pfising/lattice.hpp"

namespace pfising {

// One field label: chirality omega = +1/-1, forward-difference orders (d1, d2), site z in Z^2.
struct FieldLabel {
  int omega = 1;
  int d1 = 0;
  int d2 = 0;
  Site z;
  int order() const { return d1 + d2; }
  friend bool operator==(const FieldLabel&, const FieldLabel&) = default;
  friend auto operator<=>(const FieldLabel&, const FieldLabel&) = default;
};

using Multilabel = std::vector<FieldLabel>;

// Total derivative order of a multilabel.
int derivative_order(const Multilabel& m);
// Throws unless the length is even and positive, omega = +-1 and each d1 + d2 <= 2 with d >= 0.
void check_multilabel(const Multilabel& m);

struct Sector {
  int n = 2;
  int p = 0;
  friend bool operator==(const Sector&, const Sector&) = default;
  friend auto operator<=>(const Sector&, const Sector&) = default;
};

// Sparse real kernel on field multilabels.
//
// A translation-invariant kernel is stored through one representative per
// orbit, the one with its first point at the origin; add() shifts every entry
// there. Such kernels come only from Kernel::translation_invariant() or from
// certify_translation_invariance(), which checks a finite window exhaustively.
class Kernel {
 public:
  Kernel() = default;
  static Kernel translation_invariant();

  bool is_translation_invariant() const { return ti_; }

  // Accumulates; entries that cancel to exactly zero are erased.
  void add(Multilabel m, double value);
  double at(const Multilabel& m) const;

  const std::map<Multilabel, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<Sector> sectors() const;
  // Entries with n fields and total order p, keeping the invariance flag.
  Kernel sector(int n, int p) const;
  // Bounding box {min corner, max corner} of all positions; throws if empty.
  std::pair<Site, Site> bounding_box() const;

  Kernel& operator+=(const Kernel& other);
  Kernel& operator-=(const Kernel& other);
  Kernel scaled(double s) const;

 private:
  explicit Kernel(bool ti) : ti_(ti) {}
  std::map<Multilabel, double> entries_;
  bool ti_ = false;
};

Kernel operator+(Kernel a, const Kernel& b);
Kernel operator-(Kernel a, const Kernel& b);
// sup |a - b| over the union of supports; the flags must agree.
double max_abs_diff(const Kernel& a, const Kernel& b);
double max_abs(const Kernel& a);

// A general kernel sampled on a window is accepted if every entry's relative
// configuration appears, with the same value, at every base point that occurs.
// Returns the representative form; throws std::invalid_argument otherwise.
Kernel certify_translation_invariance(const Kernel& window_kernel, double tol = 0.0);

// Collapses all positions onto the first one and sums over the others.
Kernel localize_Ltilde(const Kernel& V);
Kernel localize_Ltilde(const Kernel& V, int n, int p);

// Horizontal-then-vertical staircase from a to b, endpoints included; empty if a == b.
std::vector<Site> canonical_path(Site a, Site b);

// One element of INT(z): the new sites y and a unit derivative e_dir added on field `field` (0-based).
struct IntTerm {
  int sigma = 1;
  std::vector<Site> y;
  int field = 1;
  int dir = 1;
};

// INT(z) for n = 2 (steps along the staircase) and n = 4 (three collapse stages).
std::vector<IntTerm> interpolation_set(const std::vector<Site>& z);

// (n,p) -> (n,p+1) interpolation; only (2,0), (2,1), (4,0) are supported.
Kernel interpolate_Rtilde(const Kernel& V, int n, int p);

// Antisymmetrizes over permutations and averages over the plane reflections.
Kernel symmetrize_A(const Kernel& V);

// Plane reflection of one label: which = 1 (first axis) or 2; returns the
// image and multiplies phase (a power of i, stored as k with i^k) accordingly.
FieldLabel reflect_label(const FieldLabel& f, int which, int& phase);

// Output sectors (2,0) and (2,1); requires the invariance certificate.
Kernel localization_operator(const Kernel& V);
Kernel localization_operator(const Kernel& V, Sector s);
// Zero on (2,0), (2,1), (4,0); interpolated on (2,2), (4,1); identity elsewhere.
Kernel renormalization_operator(const Kernel& V);
Kernel renormalization_operator(const Kernel& V, Sector s);

// sup over omega and first point of sum_z exp(kappa delta(z)) sup_D |V|, on sector (n,p); n <= 4.
double weighted_norm(const Kernel& V, int n, int p, double kappa);

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin() const { return rhs - lhs; }
};

// Both sides of the interpolation bounds and of the composite bounds for R.
std::vector<BoundCheck> verify_R_bounds(const Kernel& V, double kappa, double eps);

// The symmetric kernels of the local potentials.
Kernel F_nu();
Kernel F_zeta();
Kernel F_eta();

struct SpanProjection {
  std::vector<double> coefficients;
  double residual = 0.0;  // sup norm of V minus the fitted combination
};

SpanProjection project_onto_span(const Kernel& V, const std::vector<Kernel>& basis);

// Translation-invariant kernel with `entries` random labels in sector s, the
// other points within `radius` (sup norm) of the first, values uniform in [-1, 1].
Kernel random_kernel(std::mt19937_64& rng, Sector s, int entries, int radius);

// n, omegas, D pairs, sites, value; one entry per line after a flag line.
void write_kernel(std::ostream& os, const Kernel& V);
Kernel read_kernel(std::istream& is);

}  // namespace pfising
