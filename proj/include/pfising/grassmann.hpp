#pragma once

#include <Eigen/Dense>
#include <memory>

#include "pfising/lattice.hpp"
#include "pfising/skew.hpp"

namespace pfising {

struct Couplings {
  double beta = 1.0;
  double J1 = 0.0;
  double J2 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;

  static Couplings from_beta(double beta, double J1, double J2);
  // Critical pair with t2 = (1 - t1)/(1 + t1); beta = 1 and J_l = atanh(t_l).
  static Couplings critical(double t1);
  // t1 = t2 = sqrt(2) - 1.
  static Couplings isotropic();

  bool is_critical() const;
  double t(int dir) const { return dir == 1 ? t1 : t2; }
  // kappa = 2 t1 t2 / (1 - t1^2)
  double kappa() const { return 2 * t1 * t2 / (1 - t1 * t1); }
};

double critical_t2(double t1);

enum class Species { HBar = 0, H = 1, VBar = 2, V = 3 };

// Flat index of a Grassmann generator: site-major in (y, x), then species.
inline int grassmann_index(const CylinderGeometry& g, Site z, Species s) {
  return 4 * g.site_index(z) + int(s);
}

SkewMatrix<double> build_action_matrix(const CylinderGeometry& g, const Couplings& c);

struct LogPartition {
  double log_abs = 0.0;
  int sign = 1;  // sign of the Pfaffian under the canonical ordering
};

LogPartition partition_function_log(const CylinderGeometry& g, const Couplings& c);

using Block = Eigen::Matrix2d;

// Exact Grassmann Gaussian: action matrix plus its cached inverse.
class ExactModel {
 public:
  ExactModel(const CylinderGeometry& g, const Couplings& c);

  const CylinderGeometry& geometry() const { return geom_; }
  const Couplings& couplings() const { return coup_; }
  const SkewMatrix<double>& action() const { return a_; }
  // <Phi_i Phi_j> = -[A^{-1}]_ij
  const SkewMatrix<double>& covariance() const { return cov_; }
  double propagator(int i, int j) const { return cov_(i, j); }
  // (VBar, V) block: phi_+ = VBar, phi_- = V.
  Block critical_block(Site z, Site zp) const;

 private:
  CylinderGeometry geom_;
  Couplings coup_;
  SkewMatrix<double> a_;
  SkewMatrix<double> cov_;
};

// s_{inf,+}(y) = (-t1)^y for y >= 0, else 0.
double s_inf_plus(int y, double t1);
// Image-sum form of s_+ on an antiperiodic ring of length L.
double s_plus(int z1, int L, double t1);
double s_minus(int z1, int L, double t1);

Block massive_propagator(const CylinderGeometry& g, const Couplings& c, Site z, Site zp);

}  // namespace pfising
