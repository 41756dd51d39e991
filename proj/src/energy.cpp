#include "pfising/energy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "pfising/parallel.hpp"
#include "pfising/skew.hpp"

namespace pfising {

FieldPair energy_fields(const CylinderGeometry& g, const Bond& b) {
  if (!g.is_bond(b)) throw std::invalid_argument("energy_fields: not a bond of the cylinder");
  const Site far = g.far_end(b);
  if (b.dir == 1)
    return {grassmann_index(g, b.site, Species::HBar), grassmann_index(g, far, Species::H),
            b.site.x == g.L() ? -1.0 : 1.0};
  return {grassmann_index(g, b.site, Species::VBar), grassmann_index(g, far, Species::V), 1.0};
}

Covariance exact_covariance(const ExactModel& model) {
  return [&model](int i, int j) { return model.propagator(i, j); };
}

Covariance critical_covariance(const SpectralData& sd) {
  return [&sd](int i, int j) {
    const auto& g = sd.geometry();
    auto omega = [](int idx) {
      const int s = idx % 4;
      if (s == int(Species::VBar)) return 0;
      if (s == int(Species::V)) return 1;
      throw std::invalid_argument("critical covariance: only Vbar / V generators");
    };
    return sd.propagator(g.site_at(i / 4), g.site_at(j / 4))(omega(i), omega(j));
  };
}

double wick_moment(const Covariance& cov, const std::vector<FieldPair>& fields) {
  std::vector<int> idx;
  double sign = 1.0;
  for (const auto& f : fields) {
    idx.push_back(f.first);
    idx.push_back(f.second);
    sign *= f.sign;
  }
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (idx[i] == idx[j]) throw std::invalid_argument("wick_moment: repeated generator");
  const int n = int(idx.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = cov(idx[i], idx[j]);
      m(j, i) = -m(i, j);
    }
  return sign * pfaffian_dense(m);
}

std::vector<double> subset_moments(const Covariance& cov, const std::vector<FieldPair>& fields) {
  const int m = int(fields.size());
  if (m > 20) throw std::invalid_argument("subset_moments: too many factors");
  std::vector<double> out(std::size_t(1) << m);
  for (unsigned mask = 0; mask < out.size(); ++mask) {
    std::vector<FieldPair> sub;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1u) sub.push_back(fields[i]);
    out[mask] = wick_moment(cov, sub);
  }
  return out;
}

std::vector<std::vector<unsigned>> set_partitions(int m) {
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> blocks;
  auto rec = [&](auto&& self, int i) -> void {
    if (i == m) {
      out.push_back(blocks);
      return;
    }
    // index access: the recursion appends to blocks
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      blocks[k] |= 1u << i;
      self(self, i + 1);
      blocks[k] &= ~(1u << i);
    }
    blocks.push_back(1u << i);
    self(self, i + 1);
    blocks.pop_back();
  };
  if (m > 0) rec(rec, 0);
  return out;
}

double cumulant_mobius(const std::vector<double>& moments, int m) {
  if (m < 1 || moments.size() != std::size_t(1) << m) throw std::invalid_argument("cumulant: bad moment table");
  double total = 0.0;
  for (const auto& p : set_partitions(m)) {
    const int k = int(p.size());
    double term = std::tgamma(double(k)) * ((k - 1) % 2 == 0 ? 1.0 : -1.0);
    for (unsigned b : p) term *= moments[b];
    total += term;
  }
  return total;
}

double cumulant_recursive(const std::vector<double>& moments, int m) {
  if (m < 1 || moments.size() != std::size_t(1) << m) throw std::invalid_argument("cumulant: bad moment table");
  std::map<unsigned, double> memo;
  auto kappa = [&](auto&& self, unsigned s) -> double {
    if (auto it = memo.find(s); it != memo.end()) return it->second;
    const unsigned low = s & (~s + 1u);
    const unsigned rest = s & ~low;
    double v = moments[s];
    // proper sub-blocks B = low | t with t a proper subset of rest
    for (unsigned t = (rest - 1) & rest;; t = (t - 1) & rest) {
      if (t != rest) v -= self(self, low | t) * moments[rest & ~t];
      if (t == 0) break;
    }
    return memo[s] = v;
  };
  return kappa(kappa, (1u << m) - 1u);
}

namespace {

void check_distinct(const CylinderGeometry& g, const std::vector<Bond>& bonds) {
  std::set<std::pair<std::pair<int, int>, int>> seen;
  for (const auto& b : bonds) {
    if (!g.is_bond(b)) throw std::invalid_argument("not a bond of the cylinder");
    if (!seen.insert({{b.site.x, b.site.y}, b.dir}).second) throw std::invalid_argument("repeated bond");
  }
}

}  // namespace

double truncated_energy_correlation(const ExactModel& model, const std::vector<Bond>& bonds) {
  const auto& g = model.geometry();
  const auto& c = model.couplings();
  if (bonds.empty()) throw std::invalid_argument("truncated_energy_correlation: no bonds");
  check_distinct(g, bonds);
  std::vector<FieldPair> f;
  double pref = 1.0;
  for (const auto& b : bonds) {
    f.push_back(energy_fields(g, b));
    pref *= 1 - c.t(b.dir) * c.t(b.dir);
  }
  auto cov = exact_covariance(model);
  if (bonds.size() == 1) return c.t(bonds[0].dir) + pref * wick_moment(cov, f);
  return pref * cumulant_mobius(subset_moments(cov, f), int(bonds.size()));
}

double critical_vertical_correlation(const SpectralData& sd, const std::vector<Site>& lower_ends) {
  const int m = int(lower_ends.size());
  if (m < 2) throw std::invalid_argument("critical_vertical_correlation: need m >= 2");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j)
      if (lower_ends[i] == lower_ends[j]) throw std::invalid_argument("repeated bond");
  // generator 2i is phi_+ at z_i, 2i+1 is phi_- at z_i + e2
  auto cov = [&](int i, int j) {
    const Site a = lower_ends[i / 2] + (i % 2 ? unit(2) : Site{0, 0});
    const Site b = lower_ends[j / 2] + (j % 2 ? unit(2) : Site{0, 0});
    return sd.propagator(a, b)(i % 2, j % 2);
  };
  std::vector<FieldPair> f;
  for (int i = 0; i < m; ++i) f.push_back({2 * i, 2 * i + 1, 1.0});
  const double t2 = sd.couplings().t2;
  return std::pow(1 - t2 * t2, m) * cumulant_mobius(subset_moments(cov, f), m);
}

double scaled_vertical_correlation(const SpectralData& sd, double a, const std::vector<Point>& points) {
  std::vector<Site> s;
  for (const auto& p : points) s.push_back({int(std::floor(p.x / a)), int(std::floor(p.y / a))});
  return critical_vertical_correlation(sd, s) / std::pow(a, double(points.size()));
}

namespace {

struct Partial {
  double z = 0.0;
  std::vector<double> hist;
};

Partial merge(const Partial& a, const Partial& b) {
  Partial r{a.z + b.z, a.hist};
  for (std::size_t i = 0; i < r.hist.size(); ++i) r.hist[i] += b.hist[i];
  return r;
}

Partial pairwise(const std::vector<Partial>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(pairwise(parts, lo, mid), pairwise(parts, mid, hi));
}

}  // namespace

GibbsResult brute_force_gibbs(const CylinderGeometry& g, const Couplings& c, const std::vector<Bond>& bonds,
                              int max_sites) {
  const int n = g.num_sites();
  if (n > max_sites) throw std::invalid_argument("brute_force_gibbs: lattice exceeds the site cap");
  check_distinct(g, bonds);
  const int m = int(bonds.size());
  if (m > 16) throw std::invalid_argument("brute_force_gibbs: too many bonds");

  struct Edge { int a, b; double coupling; };
  std::vector<Edge> edges;
  double emax = 0.0;
  for (const auto& b : g.bonds()) {
    const double J = c.beta * (b.dir == 1 ? c.J1 : c.J2);
    edges.push_back({g.site_index(b.site), g.site_index(g.far_end(b)), J});
    emax += std::abs(J);
  }
  std::vector<std::pair<int, int>> obs;
  for (const auto& b : bonds) obs.push_back({g.site_index(b.site), g.site_index(g.far_end(b))});

  const long total = 1L << n;
  const int chunk_bits = std::min(n, 12);
  const long chunk = 1L << chunk_bits;
  const int nchunks = int(total / chunk);
  std::vector<Partial> parts(nchunks);
  parallel_for(nchunks, [&](int k) {
    Partial p{0.0, std::vector<double>(std::size_t(1) << m, 0.0)};
    for (long cfg = long(k) * chunk; cfg < long(k + 1) * chunk; ++cfg) {
      double e = 0.0;
      for (const auto& ed : edges) e += ((cfg >> ed.a ^ cfg >> ed.b) & 1) ? -ed.coupling : ed.coupling;
      const double w = std::exp(e - emax);
      unsigned neg = 0;
      for (int i = 0; i < m; ++i)
        if ((cfg >> obs[i].first ^ cfg >> obs[i].second) & 1) neg |= 1u << i;
      p.z += w;
      p.hist[neg] += w;
    }
    parts[k] = std::move(p);
  });
  const Partial sum = pairwise(parts, 0, parts.size());

  GibbsResult r;
  r.log_Z = std::log(sum.z) + emax;
  r.moments.assign(std::size_t(1) << m, 0.0);
  for (unsigned s = 0; s < r.moments.size(); ++s) {
    double v = 0.0;
    for (unsigned neg = 0; neg < sum.hist.size(); ++neg) v += (std::popcount(s & neg) % 2 ? -1.0 : 1.0) * sum.hist[neg];
    r.moments[s] = v / sum.z;
  }
  r.cumulant = m == 0 ? 1.0 : (m == 1 ? r.moments[1] : cumulant_recursive(r.moments, m));
  return r;
}

Eigen::MatrixXd scal_moment_matrix(const ScalingPropagator& scal, const std::vector<Point>& points) {
  const int m = int(points.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      if (points[i].x == points[j].x && points[i].y == points[j].y)
        throw std::invalid_argument("scal_moment_matrix: coincident points");
      const Block b = scal(points[i], points[j]);
      M.block<2, 2>(2 * i, 2 * j) = b;
      M.block<2, 2>(2 * j, 2 * i) = -b.transpose();
    }
  return M;
}

double scal_energy_correlation(const ScalingPropagator& scal, const std::vector<Point>& points,
                               const std::vector<int>& dirs) {
  if (points.size() < 2) throw std::invalid_argument("scal_energy_correlation: need m >= 2");
  if (dirs.size() != points.size()) throw std::invalid_argument("scal_energy_correlation: one direction per point");
  const double l2 = scal.cylinder().l2, t2 = scal.couplings().t2;
  double pref = 1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].y < 0 || points[i].y > l2) throw std::invalid_argument("scal_energy_correlation: point outside");
    if (dirs[i] == 1) pref *= 2 * t2;
    else if (dirs[i] == 2) pref *= 1 - t2 * t2;
    else throw std::invalid_argument("scal_energy_correlation: direction must be 1 or 2");
  }
  return pref * pfaffian_dense(scal_moment_matrix(scal, points));
}

}  // namespace pfising
