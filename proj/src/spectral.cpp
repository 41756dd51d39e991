#include "pfising/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pfising {

using std::numbers::pi;
using cd = std::complex<double>;

double norm_trig(double k2, int M) {
  return M + 0.5 - 0.5 * std::sin((2 * M + 1) * k2) / std::sin(k2);
}

double norm_ratio(double k2, int M, double B) {
  const double cM = std::cos(k2 * M), cM1 = std::cos(k2 * (M + 1));
  return (B * M * cM - (M + 1) * cM1) / (B * cM - cM1);
}

double frequency_residual(double k2, int M, double B) {
  const long double k = k2;
  return double(std::abs(std::sin(k * (M + 1)) - (long double)B * std::sin(k * M)));
}

double residual_bound(int M) {
  // a double root is only known to half an ulp; the residual slope is up to 2(M+1)
  return std::max(1e-13, 2.0 * (M + 1) * std::numeric_limits<double>::epsilon() * pi);
}

std::vector<Frequency> solve_frequencies(double B, int M, double tol) {
  if (M < 1) throw std::invalid_argument("solve_frequencies: M must be >= 1");
  if (!(B > 0.0 && B <= 1.0)) throw std::invalid_argument("solve_frequencies: B outside (0,1]");
  const double width = pi / (M + 1);
  if (tol <= 0) tol = 1e-14 * width;
  // extended precision keeps the sign test clean near the root for large M
  const long double Bl = B;
  auto r = [&](double k) {
    const long double kl = k;
    return double(Bl * std::sin(kl * M) - std::sin(kl * (M + 1)));
  };
  auto dr = [&](double k) {
    const long double kl = k;
    return double(Bl * M * std::cos(kl * M) - (M + 1) * std::cos(kl * (M + 1)));
  };

  std::vector<Frequency> out;
  out.reserve(M);
  for (int n = 0; n < M; ++n) {
    double lo = width * (n + 0.5), hi = width * (n + 1);
    double flo = r(lo), fhi = r(hi);
    if (flo == 0.0 || fhi == 0.0 || (flo > 0) == (fhi > 0))
      throw std::logic_error("solve_frequencies: no sign change in interval " + std::to_string(n));
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = r(mid);
      if (fm == 0.0) { lo = hi = mid; break; }
      if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; } else { hi = mid; }
    }
    double k = 0.5 * (lo + hi);
    const double step = k - r(k) / dr(k);
    if (step >= lo && step <= hi && std::abs(r(step)) < std::abs(r(k))) k = step;
    if (std::abs(k - pi) <= tol) throw std::logic_error("solve_frequencies: root at pi");
    if (const double resid = frequency_residual(k, M, B); resid > residual_bound(M))
      throw std::logic_error("solve_frequencies: residual " + std::to_string(resid));
    out.push_back({k, norm_trig(k, M)});
  }
  return out;
}

double B_of_k1(double k1, const Couplings& c) {
  return c.t2 * std::norm(1.0 + c.t1 * std::polar(1.0, k1)) / (1 - c.t1 * c.t1);
}

double B_critical(double k1, const Couplings& c) { return 1.0 - c.kappa() * (1.0 - std::cos(k1)); }

double Delta_of_k1(double k1, const Couplings& c) {
  return 2 * c.t1 * std::sin(k1) / std::norm(1.0 + c.t1 * std::polar(1.0, k1));
}

double b_of_k1(double k1, const Couplings& c) {
  return (1 - c.t1 * c.t1) / std::norm(1.0 + c.t1 * std::polar(1.0, k1));
}

double symbol_denominator(double k1, double k2, const Couplings& c) {
  return 2 * (1 - c.t2) * (1 - c.t2) * (1 - std::cos(k1)) + 2 * (1 - c.t1) * (1 - c.t1) * (1 - std::cos(k2));
}

CBlock symbol(double k1, double k2, const Couplings& c) {
  const double D = symbol_denominator(k1, k2, c);
  const double B = B_critical(k1, c);
  const double u = 1 - c.t1 * c.t1;
  const cd i(0, 1);
  CBlock g;
  g << -2.0 * i * c.t1 * std::sin(k1), -u * (1.0 - B * std::exp(-i * k2)),
       u * (1.0 - B * std::exp(i * k2)), 2.0 * i * c.t1 * std::sin(k1);
  return g / D;
}

CBlock image_symbol(double k1, double k2, int M, const Couplings& c) {
  CBlock g = symbol(k1, k2, c);
  g(0, 1) = symbol(k1, -k2, c)(0, 1);
  g(1, 1) *= std::polar(1.0, 2 * k2 * (M + 1));
  return g;
}

std::vector<double> momenta(int L) {
  if (L <= 0 || L % 2) throw std::invalid_argument("momenta: L must be positive and even");
  std::vector<double> out;
  for (int m = -L / 2 + 1; m <= L / 2; ++m) out.push_back(pi * (2 * m - 1) / L);
  return out;
}

SpectralData::SpectralData(const CylinderGeometry& g, const Couplings& c) : geom_(g), coup_(c) {
  if (!c.is_critical())
    throw std::invalid_argument("spectral propagator needs critical couplings; use ExactModel off criticality");
  const int L = g.L(), M = g.M();
  for (double k1 : momenta(L)) {
    MomentumData md;
    md.k1 = k1;
    md.B = B_critical(k1, c);
    md.Delta = Delta_of_k1(k1, c);
    md.b = b_of_k1(k1, c);
    md.roots = solve_frequencies(md.B, M);
    for (const auto& f : md.roots) {
      for (double k2 : {f.k2, -f.k2}) {
        Mode m;
        m.k1 = k1;
        m.k2 = k2;
        m.weight = 1.0 / (2.0 * L * f.norm);
        m.D = symbol_denominator(k1, k2, c);
        m.direct = symbol(k1, k2, c);
        m.image = image_symbol(k1, k2, M, c);
        modes_.push_back(m);
      }
    }
    per_k1_.push_back(std::move(md));
  }
}

Block SpectralData::evaluate(Site z, Site zp, const std::vector<double>* multiplier) const {
  const int dx = z.x - zp.x, dy = z.y - zp.y, sy = z.y + zp.y;
  CBlock total = CBlock::Zero();
  // modes come in (+k2, -k2) pairs; add each pair before accumulating
  for (std::size_t m = 0; m + 1 < modes_.size(); m += 2) {
    CBlock pair = CBlock::Zero();
    for (std::size_t s = m; s < m + 2; ++s) {
      const Mode& md = modes_[s];
      const double w = md.weight * (multiplier ? (*multiplier)[s] : 1.0);
      if (w == 0.0) continue;
      pair += (w * std::polar(1.0, -md.k2 * dy)) * md.direct - (w * std::polar(1.0, -md.k2 * sy)) * md.image;
    }
    total += std::polar(1.0, -modes_[m].k1 * dx) * pair;
  }
  const double im = total.imag().cwiseAbs().maxCoeff();
  if (im > 1e-10) throw std::logic_error("spectral sum: imaginary residue " + std::to_string(im));
  return total.real();
}

}  // namespace pfising
