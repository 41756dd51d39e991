#include "pfising/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pfising/parallel.hpp"
#include "pfising/report.hpp"

namespace pfising {

using std::numbers::pi;

int ContinuumCylinder::lattice_L(double a) const { return 2 * int(std::floor(l1 / (2 * a))); }
int ContinuumCylinder::lattice_M(double a) const { return int(std::floor(l2 / a)); }

namespace {
double amplitude(const Couplings& c) { return 1.0 / (2 * pi * c.t2 * (1 - c.t2)); }
}  // namespace

double g_scal_scalar(double z1, double z2, const Couplings& c) {
  return -amplitude(c) * z1 / (z1 * z1 + z2 * z2);
}

double g_scal_first(double z1, double z2, const Couplings& c) {
  return g_scal_scalar(z1 / (1 - c.t2), z2 / (1 - c.t1), c);
}

double g_scal_second(double z1, double z2, const Couplings& c) {
  return g_scal_scalar(z2 / (1 - c.t1), z1 / (1 - c.t2), c);
}

Block g_scal_plane(double z1, double z2, const Couplings& c) {
  const double g1 = g_scal_first(z1, z2, c), g2 = g_scal_second(z1, z2, c);
  Block b;
  b << g1, g2, g2, -g1;
  return b;
}

ScalingPropagator::ScalingPropagator(ContinuumCylinder cyl, const Couplings& c, double tol, int max_images)
    : cyl_(cyl), coup_(c), tol_(tol), max_images_(max_images) {
  if (!(cyl.l1 > 0 && cyl.l2 > 0)) throw std::invalid_argument("continuum cylinder needs l1, l2 > 0");
  if (!(tol > 0)) throw std::invalid_argument("image sum tolerance must be positive");
}

std::pair<double, double> ScalingPropagator::row_sum(double u, double v) const {
  // g1 = -K Re(1/w), g2 = K Im(1/w) with w = u/(1-t2) + i v/(1-t1)
  const double period = cyl_.l1 / (1 - coup_.t2);
  const std::complex<double> w(u / (1 - coup_.t2), v / (1 - coup_.t1));
  const std::complex<double> den = std::sin(pi * w / period);
  if (std::abs(den) < 1e-12) throw std::domain_error("continuum propagator: coincident points or image");
  const std::complex<double> s = (pi / period) / den;
  const double K = amplitude(coup_);
  return {-K * s.real(), K * s.imag()};
}

Block ScalingPropagator::image_term(double u, double z2, double z2p, int n2) const {
  const double l2 = cyl_.l2;
  const auto a = row_sum(u, z2 - z2p + 2 * n2 * l2);
  const auto b = row_sum(u, z2 + z2p + 2 * n2 * l2);
  const auto c = row_sum(u, z2 + z2p + 2 * (n2 - 1) * l2);
  Block t;
  t << a.first - b.first, a.second + b.second, a.second - b.second, -a.first + c.first;
  return (n2 % 2 == 0 ? 1.0 : -1.0) * t;
}

Block ScalingPropagator::operator()(Point z, Point zp) const {
  const double u = z.x - zp.x;
  Block total = image_term(u, z.y, zp.y, 0);
  for (int n = 1; n <= max_images_; ++n) {
    const Block pair = image_term(u, z.y, zp.y, n) + image_term(u, z.y, zp.y, -n);
    total += pair;
    if (n >= 2 && pair.cwiseAbs().maxCoeff() <= tol_) return total;
  }
  std::ostringstream os;
  os << "continuum propagator: image sum not converged after " << max_images_ << " pairs";
  throw std::runtime_error(os.str());
}

std::vector<double> ScalingPropagator::shell_norms(Point z, Point zp, int N) const {
  const double u = z.x - zp.x;
  std::vector<double> out{image_term(u, z.y, zp.y, 0).cwiseAbs().maxCoeff()};
  for (int n = 1; n <= N; ++n)
    out.push_back((image_term(u, z.y, zp.y, n) + image_term(u, z.y, zp.y, -n)).cwiseAbs().maxCoeff());
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Block lattice_scaled_propagator(const SpectralData& sd, double a, Point z, Point zp) {
  const Site s{int(std::floor(z.x / a)), int(std::floor(z.y / a))};
  const Site sp{int(std::floor(zp.x / a)), int(std::floor(zp.y / a))};
  return sd.propagator(s, sp) / a;
}

RateReport scaling_remainder_sweep(const ContinuumCylinder& cyl, const Couplings& c,
                                   const std::vector<std::pair<Point, Point>>& pairs,
                                   const std::vector<double>& meshes) {
  if (meshes.size() < 2) throw std::invalid_argument("scaling sweep: need >= 2 meshes");
  std::vector<double> a = meshes;
  std::sort(a.begin(), a.end(), std::greater<>());
  for (double m : a)
    if (cyl.lattice_L(m) < 4 || cyl.lattice_M(m) < 4) throw std::invalid_argument("scaling sweep: mesh too coarse");

  ScalingPropagator scal(cyl, c);
  std::vector<Block> limit(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) limit[p] = scal(pairs[p].first, pairs[p].second);

  const int nm = int(a.size()), np = int(pairs.size());
  std::vector<double> res(std::size_t(nm) * np);
  for (int m = 0; m < nm; ++m) {
    SpectralData sd(CylinderGeometry(cyl.lattice_L(a[m]), cyl.lattice_M(a[m])), c);
    parallel_for(np, [&](int p) {
      const Block lat = lattice_scaled_propagator(sd, a[m], pairs[p].first, pairs[p].second);
      res[std::size_t(m) * np + p] = (lat - limit[p]).cwiseAbs().maxCoeff();
    });
  }

  RateReport rep;
  std::vector<double> worst(nm, 0.0);
  for (int p = 0; p < np; ++p) {
    std::vector<double> ys(nm);
    int inversions = 0;
    for (int m = 0; m < nm; ++m) {
      ys[m] = res[std::size_t(m) * np + p];
      worst[m] = std::max(worst[m], ys[m]);
      if (m > 0 && ys[m] > ys[m - 1]) ++inversions;
    }
    if (inversions > 1) rep.monotone = false;
    rep.pair_slopes.push_back(loglog_slope(a, ys));
  }
  rep.slope = loglog_slope(a, worst);
  for (int p = 0; p < np; ++p)
    for (int m = 0; m < nm; ++m)
      rep.rows.push_back({p, a[m], cyl.lattice_L(a[m]), cyl.lattice_M(a[m]), res[std::size_t(m) * np + p],
                          rep.pair_slopes[p]});
  return rep;
}

std::string to_csv(const RateReport& r) {
  std::ostringstream os;
  CsvWriter w(os, {"pair_id", "a", "L", "M", "residual_norm", "fitted_slope"});
  for (const auto& row : r.rows) {
    w.cell(row.pair_id).cell(row.a).cell(row.L).cell(row.M).cell(row.residual_norm).cell(row.fitted_slope);
    w.end_row();
  }
  return os.str();
}

}  // namespace pfising
