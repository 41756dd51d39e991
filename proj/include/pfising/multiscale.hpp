#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pfising/spectral.hpp"

namespace pfising {

// eta-window [lo, hi); hi = +inf for the tail windows.
struct ScaleWindow {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  // Integral of D e^{-eta D} over the window.
  double weight(double D) const;
  // weight(D) / D, finite at D = 0 for bounded windows.
  double weight_over_D(double D) const;
  bool bounded() const { return hi < std::numeric_limits<double>::infinity(); }
};

// h* = -floor(log2 min(L, M))
int h_star(const CylinderGeometry& g);
// Single-scale window: [0,1) for h = 0, [2^(-2h-2), 2^(-2h)) for h < 0.
ScaleWindow scale_window(int h);
// Tail window [2^(-2h-2), inf) of g^(<=h); all of [0, inf) at h = 0.
ScaleWindow tail_window(int h);

// Orders of forward differences: first argument (dir 1, dir 2), second argument (dir 1, dir 2).
struct DerivOrders {
  std::array<int, 2> first{0, 0};
  std::array<int, 2> second{0, 0};
  int total() const { return first[0] + first[1] + second[0] + second[1]; }
};

// Forward differences of a propagator, taken on Site arguments.
template <typename F>
Block differentiate(F&& f, Site z, Site zp, const DerivOrders& r) {
  if (r.first[0] > 0) {
    DerivOrders q = r;
    --q.first[0];
    return differentiate(f, z + unit(1), zp, q) - differentiate(f, z, zp, q);
  }
  if (r.first[1] > 0) {
    DerivOrders q = r;
    --q.first[1];
    return differentiate(f, z + unit(2), zp, q) - differentiate(f, z, zp, q);
  }
  if (r.second[0] > 0) {
    DerivOrders q = r;
    --q.second[0];
    return differentiate(f, z, zp + unit(1), q) - differentiate(f, z, zp, q);
  }
  if (r.second[1] > 0) {
    DerivOrders q = r;
    --q.second[1];
    return differentiate(f, z, zp + unit(2), q) - differentiate(f, z, zp, q);
  }
  return f(z, zp);
}

// Infinite-plane single-scale propagator, tabulated on dz in [-N/2, N/2)^2 by the
// periodic trapezoid rule (one 2D DFT per entry) with N doubled until converged.
class PlanePropagator {
 public:
  PlanePropagator(const Couplings& c, const ScaleWindow& w, int min_radius = 0, DerivOrders r = {},
                  double tol = 1e-11, int max_grid = 2048);

  Block operator()(int dz1, int dz2) const;
  Block operator()(Site dz) const { return (*this)(dz.x, dz.y); }
  int grid() const { return n_; }
  int radius() const { return n_ / 2 - 1; }
  double last_change() const { return change_; }

 private:
  std::array<Eigen::MatrixXd, 4> tabulate(int n) const;

  Couplings coup_;
  ScaleWindow win_;
  DerivOrders r_;
  int n_ = 0;
  double change_ = 0.0;
  std::array<Eigen::MatrixXd, 4> table_;
};

class Multiscale {
 public:
  explicit Multiscale(std::shared_ptr<const SpectralData> data);

  const SpectralData& data() const { return *data_; }
  const CylinderGeometry& geometry() const { return data_->geometry(); }
  int h_star() const { return hstar_; }

  // h* <= h <= 0; h = 1 is the massive propagator.
  Block single_scale(int h, Site z, Site zp) const;
  // g^(<=h), h* <= h <= 0
  Block up_to(int h, Site z, Site zp) const;
  Block critical(Site z, Site zp) const { return data_->propagator(z, zp); }

  struct Split {
    Block bulk;
    Block edge;
  };
  Split bulk_edge(int h, Site z, Site zp) const;
  const PlanePropagator& plane(int h) const;

  // Per-mode weights for a window, in the order of SpectralData::modes().
  std::vector<double> mode_weights(const ScaleWindow& w) const;

 private:
  void check_scale(int h) const;

  std::shared_ptr<const SpectralData> data_;
  int hstar_;
  std::map<int, std::vector<double>> single_;
  std::map<int, std::vector<double>> tail_;
  mutable std::mutex plane_mutex_;
  mutable std::map<int, std::unique_ptr<PlanePropagator>> planes_;
};

// ---- decay fits ----

struct DecaySample {
  int h = 0;
  double distance = 0.0;
  double value = 0.0;  // max-norm of the 2x2 block
};

// Bound value <= C 2^h exp(-c 2^h distance): c from least squares on the log data,
// C per scale as the smallest constant covering every sample of that scale.
struct BoundFit {
  int h = 0;
  double fitted_C = 0.0;
  double fitted_c = 0.0;
  double max_residual = 0.0;  // max over samples of value - bound, with the global C
  int n_samples = 0;
};

struct DecayReport {
  std::string name;
  double C = 0.0;  // max over scales
  double c = 0.0;
  std::vector<BoundFit> per_scale;
  double C_spread() const;  // max C_h / min C_h
  bool margins_ok() const;
};

// Samples at or below `floor` (absolute) are treated as numerically zero: they enter
// neither the slope nor C, and their margin is taken against max(bound, floor).
DecayReport fit_decay_bound(const std::string& name, const std::vector<DecaySample>& samples,
                            double floor = 1e-13);
// Same bound, with c the largest rate on a geometric ladder below the least-squares
// value whose per-scale constants stay within max_spread of each other; when none
// does, the rung with the smallest spread is returned.
DecayReport fit_stable_decay_bound(const std::string& name, const std::vector<DecaySample>& samples,
                                   double max_spread, double floor = 1e-13);
// value <= C 2^h, no decay factor
DecayReport fit_scale_bound(const std::string& name, const std::vector<DecaySample>& samples);

std::string to_json(const DecayReport& r);

// ---- Gram representation ----

struct GramPair {
  Site z;
  Site zp;
  int omega = 0;   // 0 for +, 1 for -
  int omegap = 0;
  std::array<int, 2> s{0, 0};
  std::array<int, 2> sp{0, 0};
};

struct GramResult {
  double reconstructed = 0.0;
  double direct = 0.0;
  double norm_tilde_sq = 0.0;
  double norm_sq = 0.0;
};

// Explicit Gram vectors of g^(h) on the spectral modes.
class GramVectors {
 public:
  GramVectors(const Multiscale& ms, int h);

  Eigen::VectorXcd tilde(int omega, std::array<int, 2> s, Site z) const;
  Eigen::VectorXcd plain(int omega, std::array<int, 2> s, Site z) const;
  // (tilde, plain) = sum conj(tilde) * plain
  static double inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);
  GramResult check(const GramPair& p) const;
  // Largest |(sqrt x)^2 - x| over all square roots used.
  double branch_defect() const { return branch_defect_; }

 private:
  const Multiscale& ms_;
  int h_;
  std::vector<double> scale_;                 // sqrt(w / (2 L N)) per mode
  std::vector<std::array<std::array<std::complex<double>, 4>, 2>> roots_;  // per mode, per sharp
  double branch_defect_ = 0.0;
};

}  // namespace pfising
