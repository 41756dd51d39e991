#pragma once

#include <string>
#include <vector>

#include "pfising/grassmann.hpp"
#include "pfising/spectral.hpp"

namespace pfising {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Continuum cylinder of circumference l1 (antiperiodic) and height l2.
struct ContinuumCylinder {
  double l1 = 1.0;
  double l2 = 1.0;

  // L = 2 floor(l1 / (2a)), M = floor(l2 / a)
  int lattice_L(double a) const;
  int lattice_M(double a) const;
};

// -(1 / (2 pi t2 (1 - t2))) z1 / (z1^2 + z2^2)
double g_scal_scalar(double z1, double z2, const Couplings& c);
// anisotropic rescalings
double g_scal_first(double z1, double z2, const Couplings& c);
double g_scal_second(double z1, double z2, const Couplings& c);
// [[g1, g2], [g2, -g1]]
Block g_scal_plane(double z1, double z2, const Couplings& c);

// Continuum cylinder propagator as an alternating image sum.
// The horizontal images are summed in closed form,
//   sum_n (-1)^n / (w + n p) = pi / (p sin(pi w / p)),
// and the vertical images are added in (n2, -n2) pairs until a pair contributes <= tol.
class ScalingPropagator {
 public:
  ScalingPropagator(ContinuumCylinder cyl, const Couplings& c, double tol = 1e-10, int max_images = 10000);

  Block operator()(Point z, Point zp) const;
  // max-entry norms of the vertical image contributions: the n2 = 0 row, then the (n, -n) pairs, n = 1..N
  std::vector<double> shell_norms(Point z, Point zp, int N) const;
  const ContinuumCylinder& cylinder() const { return cyl_; }
  const Couplings& couplings() const { return coup_; }

 private:
  // sums over horizontal images of (g1, g2) at (u + n l1, v)
  std::pair<double, double> row_sum(double u, double v) const;
  Block image_term(double u, double z2, double z2p, int n2) const;

  ContinuumCylinder cyl_;
  Couplings coup_;
  double tol_;
  int max_images_;
};

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
  int pair_id = 0;
  double a = 0.0;
  int L = 0;
  int M = 0;
  double residual_norm = 0.0;
  double fitted_slope = 0.0;  // slope of this pair over the whole sweep
};

struct RateReport {
  std::vector<SweepRow> rows;
  std::vector<double> pair_slopes;
  double slope = 0.0;  // fit on the per-mesh maximum over pairs
  // residual decreases with a for every pair, allowing one inversion per pair
  bool monotone = true;
};

// a^{-1} g_c(floor(z/a), floor(z'/a)) on the lattice induced by mesh a.
Block lattice_scaled_propagator(const SpectralData& sd, double a, Point z, Point zp);

// meshes in any order; each must give L, M >= 4.
RateReport scaling_remainder_sweep(const ContinuumCylinder& cyl, const Couplings& c,
                                   const std::vector<std::pair<Point, Point>>& pairs,
                                   const std::vector<double>& meshes);

std::string to_csv(const RateReport& r);

}  // namespace pfising
