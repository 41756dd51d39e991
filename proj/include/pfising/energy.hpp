#pragma once

#include <functional>
#include <vector>

#include "pfising/grassmann.hpp"
#include "pfising/scaling.hpp"
#include "pfising/spectral.hpp"

namespace pfising {

// E_x = sign * Phi_first Phi_second
struct FieldPair {
  int first = 0;
  int second = 0;
  double sign = 1.0;
};

// Hbar_z H_{z+e1} (the wrap bond carries -1 from antiperiodicity) or Vbar_z V_{z+e2}.
FieldPair energy_fields(const CylinderGeometry& g, const Bond& b);

// <Phi_i Phi_j> for i != j
using Covariance = std::function<double(int, int)>;

Covariance exact_covariance(const ExactModel& model);
// Critical covariance on the Vbar / V generators only.
Covariance critical_covariance(const SpectralData& sd);

// <E_1 ... E_k> by the Wick rule: Pfaffian of the 2k x 2k contraction matrix.
double wick_moment(const Covariance& cov, const std::vector<FieldPair>& fields);
// Moments of every sub-product, indexed by bitmask (bit i = factor i).
std::vector<double> subset_moments(const Covariance& cov, const std::vector<FieldPair>& fields);

// Set partitions of {0..m-1}, each block a bitmask.
std::vector<std::vector<unsigned>> set_partitions(int m);
// Joint cumulant of all m factors from subset moments, by the Mobius formula over set partitions.
double cumulant_mobius(const std::vector<double>& moments, int m);
// Same quantity by the recursion on the block holding factor 0.
double cumulant_recursive(const std::vector<double>& moments, int m);

// m = 1: <eps_x>; m >= 2: the joint cumulant <eps_1; ...; eps_m> with eps_x = sigma sigma'.
double truncated_energy_correlation(const ExactModel& model, const std::vector<Bond>& bonds);

// Vertical-bond cumulant from the spectral propagator, bonds (z, z + e2); m >= 2.
double critical_vertical_correlation(const SpectralData& sd, const std::vector<Site>& lower_ends);
// a^{-m} times the above at the sites floor(z / a).
double scaled_vertical_correlation(const SpectralData& sd, double a, const std::vector<Point>& points);

struct GibbsResult {
  double log_Z = 0.0;
  std::vector<double> moments;  // <prod eps> per bitmask over the requested bonds
  double cumulant = 0.0;        // joint cumulant of all bonds (mean for one bond)
};

// Direct sums over all 2^(LM) spin configurations.
GibbsResult brute_force_gibbs(const CylinderGeometry& g, const Couplings& c, const std::vector<Bond>& bonds,
                              int max_sites = 24);

// Antisymmetric 2m x 2m matrix with continuum propagator blocks off the diagonal.
Eigen::MatrixXd scal_moment_matrix(const ScalingPropagator& scal, const std::vector<Point>& points);
// (2 t2)^{m1} (1 - t2^2)^{m2} Pf; dirs[i] = 1 horizontal, 2 vertical.
double scal_energy_correlation(const ScalingPropagator& scal, const std::vector<Point>& points,
                               const std::vector<int>& dirs);

}  // namespace pfising
