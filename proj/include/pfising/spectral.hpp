#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "pfising/grassmann.hpp"
#include "pfising/lattice.hpp"

namespace pfising {

using CBlock = Eigen::Matrix2cd;

struct Frequency {
  double k2 = 0.0;
  double norm = 0.0;  // N_M(k1, k2)
};

// M + 1/2 - sin((2M+1)k2) / (2 sin k2)
double norm_trig(double k2, int M);
// (B M cos k2M - (M+1) cos k2(M+1)) / (B cos k2M - cos k2(M+1))
double norm_ratio(double k2, int M, double B);

// |sin k2(M+1) - B sin k2 M| in extended precision
double frequency_residual(double k2, int M, double B);
// 1e-13, or the double-precision floor 2 (M+1) eps pi when that is larger (M > 71)
double residual_bound(int M);

// Roots of sin k2(M+1) = B sin k2 M, one in each (pi/(M+1))(n+1/2, n+1), n = 0..M-1.
// tol <= 0 selects 1e-14 * pi/(M+1).
std::vector<Frequency> solve_frequencies(double B, int M, double tol = 0.0);

// t2 |1 + t1 e^{ik1}|^2 / (1 - t1^2)
double B_of_k1(double k1, const Couplings& c);
// 1 - kappa (1 - cos k1); equal to B_of_k1 at criticality
double B_critical(double k1, const Couplings& c);
double Delta_of_k1(double k1, const Couplings& c);
double b_of_k1(double k1, const Couplings& c);

double symbol_denominator(double k1, double k2, const Couplings& c);
// Infinite-plane symbol of the critical propagator.
CBlock symbol(double k1, double k2, const Couplings& c);
// Reflected symbol entering the image term: [[g++, g+-(k1,-k2)], [g-+, e^{2ik2(M+1)} g--]].
CBlock image_symbol(double k1, double k2, int M, const Couplings& c);

// Antiperiodic momenta pi(2m-1)/L, m = -L/2+1..L/2.
std::vector<double> momenta(int L);

struct MomentumData {
  double k1 = 0.0;
  double B = 0.0;
  double Delta = 0.0;
  double b = 0.0;
  std::vector<Frequency> roots;  // positive frequencies, increasing
};

// One term of the double spectral sum; k2 runs over both signs of every root.
struct Mode {
  double k1 = 0.0;
  double k2 = 0.0;
  double weight = 0.0;  // 1 / (2 L N_M)
  double D = 0.0;
  CBlock direct;
  CBlock image;
};

class SpectralData {
 public:
  SpectralData(const CylinderGeometry& g, const Couplings& c);

  const CylinderGeometry& geometry() const { return geom_; }
  const Couplings& couplings() const { return coup_; }
  const std::vector<MomentumData>& per_momentum() const { return per_k1_; }
  // Ordered as (k1, root, +k2), (k1, root, -k2), ...
  const std::vector<Mode>& modes() const { return modes_; }

  // Critical propagator with an optional per-mode multiplier (nullptr means 1).
  Block evaluate(Site z, Site zp, const std::vector<double>* multiplier = nullptr) const;
  Block propagator(Site z, Site zp) const { return evaluate(z, zp); }

 private:
  CylinderGeometry geom_;
  Couplings coup_;
  std::vector<MomentumData> per_k1_;
  std::vector<Mode> modes_;
};

}  // namespace pfising
