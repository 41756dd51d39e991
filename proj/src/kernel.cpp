#include "pfising/kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pfising/parallel.hpp"

namespace pfising {

namespace {

using Contribution = std::vector<std::pair<Multilabel, double>>;

// Runs f on every entry in parallel and merges the outputs in entry order,
// so the sums do not depend on the thread count.
template <typename F>
Kernel transform_entries(const Kernel& V, Kernel out, F&& f) {
  std::vector<const std::pair<const Multilabel, double>*> items;
  for (auto& e : V.entries()) items.push_back(&e);
  std::vector<Contribution> parts(items.size());
  parallel_for(static_cast<int>(items.size()), [&](int i) { parts[i] = f(items[i]->first, items[i]->second); });
  for (auto& part : parts)
    for (auto& [m, v] : part) out.add(m, v);
  return out;
}

Kernel like(const Kernel& V) { return V.is_translation_invariant() ? Kernel::translation_invariant() : Kernel(); }

std::vector<Site> positions(const Multilabel& m) {
  std::vector<Site> z;
  for (auto& f : m) z.push_back(f.z);
  return z;
}

bool has_repeat(const Multilabel& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      if (m[i] == m[j]) return true;
  return false;
}

int permutation_sign(const std::vector<int>& p) {
  int inv = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2 ? -1 : 1;
}

void require_ti(const Kernel& V, const char* who) {
  if (!V.is_translation_invariant())
    throw std::invalid_argument(std::string(who) + ": kernel lacks the translation-invariance certificate");
}

}  // namespace

int derivative_order(const Multilabel& m) {
  int p = 0;
  for (auto& f : m) p += f.order();
  return p;
}

void check_multilabel(const Multilabel& m) {
  if (m.empty() || m.size() % 2) throw std::invalid_argument("multilabel: length must be even and positive");
  for (auto& f : m) {
    if (f.omega != 1 && f.omega != -1) throw std::invalid_argument("multilabel: omega must be +1 or -1");
    if (f.d1 < 0 || f.d2 < 0 || f.d1 + f.d2 > 2) throw std::invalid_argument("multilabel: derivative label outside D");
  }
}

Kernel Kernel::translation_invariant() { return Kernel(true); }

void Kernel::add(Multilabel m, double value) {
  check_multilabel(m);
  if (ti_) {
    const Site base = m[0].z;
    for (auto& f : m) f.z = f.z - base;
  }
  if (value == 0.0) return;
  auto [it, fresh] = entries_.try_emplace(std::move(m), value);
  if (!fresh) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  }
}

double Kernel::at(const Multilabel& m) const {
  Multilabel key = m;
  if (ti_ && !key.empty()) {
    const Site base = key[0].z;
    for (auto& f : key) f.z = f.z - base;
  }
  auto it = entries_.find(key);
  return it == entries_.end() ? 0.0 : it->second;
}

std::vector<Sector> Kernel::sectors() const {
  std::set<Sector> s;
  for (auto& [m, v] : entries_) s.insert({static_cast<int>(m.size()), derivative_order(m)});
  return {s.begin(), s.end()};
}

Kernel Kernel::sector(int n, int p) const {
  Kernel out(ti_);
  for (auto& [m, v] : entries_)
    if (static_cast<int>(m.size()) == n && derivative_order(m) == p) out.entries_.emplace(m, v);
  return out;
}

std::pair<Site, Site> Kernel::bounding_box() const {
  if (entries_.empty()) throw std::logic_error("bounding_box: empty kernel");
  Site lo = entries_.begin()->first[0].z, hi = lo;
  for (auto& [m, v] : entries_)
    for (auto& f : m) {
      lo = {std::min(lo.x, f.z.x), std::min(lo.y, f.z.y)};
      hi = {std::max(hi.x, f.z.x), std::max(hi.y, f.z.y)};
    }
  return {lo, hi};
}

Kernel& Kernel::operator+=(const Kernel& other) {
  if (other.ti_ != ti_) throw std::invalid_argument("kernel sum: invariance flags differ");
  for (auto& [m, v] : other.entries_) add(m, v);
  return *this;
}

Kernel& Kernel::operator-=(const Kernel& other) {
  if (other.ti_ != ti_) throw std::invalid_argument("kernel difference: invariance flags differ");
  for (auto& [m, v] : other.entries_) add(m, -v);
  return *this;
}

Kernel Kernel::scaled(double s) const {
  Kernel out(ti_);
  for (auto& [m, v] : entries_) out.add(m, s * v);
  return out;
}

Kernel operator+(Kernel a, const Kernel& b) { return a += b; }
Kernel operator-(Kernel a, const Kernel& b) { return a -= b; }

double max_abs_diff(const Kernel& a, const Kernel& b) {
  if (a.is_translation_invariant() != b.is_translation_invariant())
    throw std::invalid_argument("max_abs_diff: invariance flags differ");
  double d = 0.0;
  for (auto& [m, v] : a.entries()) d = std::max(d, std::abs(v - b.at(m)));
  for (auto& [m, v] : b.entries()) d = std::max(d, std::abs(v - a.at(m)));
  return d;
}

double max_abs(const Kernel& a) {
  double d = 0.0;
  for (auto& [m, v] : a.entries()) d = std::max(d, std::abs(v));
  return d;
}

Kernel certify_translation_invariance(const Kernel& window_kernel, double tol) {
  if (window_kernel.is_translation_invariant()) return window_kernel;
  std::set<Site> bases;
  std::map<Multilabel, std::map<Site, double>> orbits;
  for (auto& [m, v] : window_kernel.entries()) {
    bases.insert(m[0].z);
    Multilabel rel = m;
    for (auto& f : rel) f.z = f.z - m[0].z;
    orbits[rel][m[0].z] = v;
  }
  Kernel out = Kernel::translation_invariant();
  for (auto& [rel, at_base] : orbits) {
    const double ref = at_base.begin()->second;
    for (const Site& b : bases) {
      auto it = at_base.find(b);
      if (it == at_base.end() || std::abs(it->second - ref) > tol)
        throw std::invalid_argument("certify_translation_invariance: shift test failed");
    }
    out.add(rel, ref);
  }
  return out;
}

Kernel localize_Ltilde(const Kernel& V) {
  Kernel out = like(V);
  for (auto& [m, v] : V.entries()) {
    Multilabel local = m;
    for (auto& f : local) f.z = m[0].z;
    out.add(local, v);
  }
  return out;
}

Kernel localize_Ltilde(const Kernel& V, int n, int p) { return localize_Ltilde(V.sector(n, p)); }

std::vector<Site> canonical_path(Site a, Site b) {
  std::vector<Site> path;
  if (a == b) return path;
  Site cur = a;
  path.push_back(cur);
  const int sx = b.x > a.x ? 1 : -1, sy = b.y > a.y ? 1 : -1;
  while (cur.x != b.x) {
    cur.x += sx;
    path.push_back(cur);
  }
  while (cur.y != b.y) {
    cur.y += sy;
    path.push_back(cur);
  }
  return path;
}

namespace {

// Steps of the staircase from a to b: forward steps put the derivative at the
// earlier site with sign +, backward steps at the later one with sign -.
std::vector<std::pair<int, std::pair<Site, int>>> staircase_steps(Site a, Site b) {
  std::vector<std::pair<int, std::pair<Site, int>>> steps;
  auto path = canonical_path(a, b);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Site d = path[k + 1] - path[k];
    const int dir = d.x != 0 ? 1 : 2;
    const bool forward = d.x + d.y > 0;
    steps.push_back({forward ? 1 : -1, {forward ? path[k] : path[k + 1], dir}});
  }
  return steps;
}

}  // namespace

std::vector<IntTerm> interpolation_set(const std::vector<Site>& z) {
  std::vector<IntTerm> out;
  if (z.size() == 2) {
    for (auto& [sigma, step] : staircase_steps(z[0], z[1])) out.push_back({sigma, {z[0], step.first}, 1, step.second});
    return out;
  }
  if (z.size() != 4) throw std::invalid_argument("interpolation_set: n must be 2 or 4");
  // phi1 phi2 phi3 phi4 - phi1 phi1 phi1 phi1, telescoped field by field from the right.
  for (int moving = 3; moving >= 1; --moving) {
    for (auto& [sigma, step] : staircase_steps(z[0], z[moving])) {
      std::vector<Site> y(4);
      for (int j = 0; j < 4; ++j) y[j] = j < moving ? z[0] : z[j];
      y[moving] = step.first;
      out.push_back({sigma, y, moving, step.second});
    }
  }
  return out;
}

Kernel interpolate_Rtilde(const Kernel& V, int n, int p) {
  const Sector s{n, p};
  if (s != Sector{2, 0} && s != Sector{2, 1} && s != Sector{4, 0})
    throw std::invalid_argument("interpolate_Rtilde: unsupported sector");
  const Kernel src = V.sector(n, p);
  return transform_entries(src, like(V), [](const Multilabel& m, double v) {
    Contribution c;
    for (auto& t : interpolation_set(positions(m))) {
      Multilabel out = m;
      for (std::size_t j = 0; j < out.size(); ++j) out[j].z = t.y[j];
      (t.dir == 1 ? out[t.field].d1 : out[t.field].d2) += 1;
      c.push_back({std::move(out), t.sigma * v});
    }
    return c;
  });
}

FieldLabel reflect_label(const FieldLabel& f, int which, int& phase) {
  FieldLabel g = f;
  if (which == 1) {
    // phi_{+-} -> +-i phi_{+-}; d_1^k picks (-1)^k and a shift by -k e1.
    phase += f.omega == 1 ? 1 : 3;
    if (f.d1 % 2) phase += 2;
    g.z = {-f.z.x - f.d1, f.z.y};
  } else {
    // phi_{+-} -> i phi_{-+}
    phase += 1;
    if (f.d2 % 2) phase += 2;
    g.omega = -f.omega;
    g.z = {f.z.x, -f.z.y - f.d2};
  }
  return g;
}

Kernel symmetrize_A(const Kernel& V) {
  return transform_entries(V, like(V), [](const Multilabel& m, double v) {
    Contribution c;
    const int n = static_cast<int>(m.size());
    std::vector<int> perm(n);
    double nfact = 1.0;
    for (int k = 2; k <= n; ++k) nfact *= k;
    for (int g = 0; g < 4; ++g) {
      Multilabel img = m;
      int phase = 0;
      for (auto& f : img) {
        if (g & 1) f = reflect_label(f, 1, phase);
        if (g & 2) f = reflect_label(f, 2, phase);
      }
      phase %= 4;
      if (phase % 2) throw std::logic_error("symmetrize_A: odd phase on an even monomial");
      // A repeated label is fixed by a transposition, so the antisymmetric part vanishes there.
      if (has_repeat(img)) continue;
      const double coef = (phase == 0 ? 1.0 : -1.0) * v / (4.0 * nfact);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        Multilabel out(n);
        for (int j = 0; j < n; ++j) out[j] = img[perm[j]];
        c.push_back({std::move(out), permutation_sign(perm) * coef});
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return c;
  });
}

namespace {

Kernel localize_all(const Kernel& V) {
  Kernel out = symmetrize_A(localize_Ltilde(V, 2, 0));
  out += symmetrize_A(localize_Ltilde(V, 2, 1) + localize_Ltilde(interpolate_Rtilde(V, 2, 0)));
  return out;
}

Kernel renormalize_all(const Kernel& V) {
  Kernel out = like(V);
  const Kernel r21 = interpolate_Rtilde(V, 2, 0);
  out += symmetrize_A(V.sector(2, 2) + interpolate_Rtilde(V, 2, 1) + interpolate_Rtilde(r21, 2, 1));
  out += symmetrize_A(V.sector(4, 1) + interpolate_Rtilde(V, 4, 0));
  for (auto s : V.sectors()) {
    const bool handled = (s.n == 2 && s.p <= 2) || (s.n == 4 && s.p <= 1);
    if (!handled) out += V.sector(s.n, s.p);
  }
  return out;
}

}  // namespace

Kernel localization_operator(const Kernel& V) {
  require_ti(V, "localization_operator");
  return localize_all(V);
}

Kernel localization_operator(const Kernel& V, Sector s) { return localization_operator(V).sector(s.n, s.p); }

Kernel renormalization_operator(const Kernel& V) {
  require_ti(V, "renormalization_operator");
  return renormalize_all(V);
}

Kernel renormalization_operator(const Kernel& V, Sector s) { return renormalization_operator(V).sector(s.n, s.p); }

double weighted_norm(const Kernel& V, int n, int p, double kappa) {
  if (n > 4) throw std::invalid_argument("weighted_norm: tree distance needs n <= 4");
  // (omegas, first point) -> (sites -> sup_D |V|)
  std::map<std::pair<std::vector<int>, Site>, std::map<std::vector<Site>, double>> groups;
  for (auto& [m, v] : V.entries()) {
    if (static_cast<int>(m.size()) != n || derivative_order(m) != p) continue;
    std::vector<int> om;
    for (auto& f : m) om.push_back(f.omega);
    auto& slot = groups[{om, m[0].z}][positions(m)];
    slot = std::max(slot, std::abs(v));
  }
  double best = 0.0;
  for (auto& [key, sites] : groups) {
    double sum = 0.0;
    for (auto& [z, sup] : sites) sum += std::exp(kappa * delta_tree(z)) * sup;
    best = std::max(best, sum);
  }
  return best;
}

std::vector<BoundCheck> verify_R_bounds(const Kernel& V, double kappa, double eps) {
  if (kappa < 0.0 || eps <= 0.0) throw std::invalid_argument("verify_R_bounds: need kappa >= 0, eps > 0");
  std::vector<BoundCheck> out;
  const Kernel r21 = interpolate_Rtilde(V, 2, 0);
  const double v20 = weighted_norm(V, 2, 0, kappa + eps);
  const double v21 = weighted_norm(V, 2, 1, kappa + eps);
  const double v40 = weighted_norm(V, 4, 0, kappa + eps);
  out.push_back({"Rtilde(2,1)", weighted_norm(r21, 2, 1, kappa), v20 / eps});
  out.push_back({"Rtilde(2,2)", weighted_norm(interpolate_Rtilde(V, 2, 1), 2, 2, kappa), v21 / eps});
  out.push_back({"Rtilde(4,1)", weighted_norm(interpolate_Rtilde(V, 4, 0), 4, 1, kappa), 3.0 * v40 / eps});
  const double v20_2 = weighted_norm(V, 2, 0, kappa + 2 * eps);
  out.push_back({"RtildeRtilde(2,2)", weighted_norm(interpolate_Rtilde(r21, 2, 1), 2, 2, kappa), v20_2 / (eps * eps)});
  const Kernel R = renormalize_all(V);
  out.push_back({"R(2,2)", weighted_norm(R, 2, 2, kappa),
                 weighted_norm(V, 2, 2, kappa) + v21 / eps + v20_2 / (eps * eps)});
  out.push_back({"R(4,1)", weighted_norm(R, 4, 1, kappa), weighted_norm(V, 4, 1, kappa) + 3.0 * v40 / eps});
  return out;
}

namespace {

// sum_omega sum_z sign(omega) phi_{omega,z} dsym_dir phi_{mate(omega),z}, with
// dsym = (d(z) + d(z - e_dir)) / 2 written as forward differences.
Kernel symmetric_derivative_kernel(int dir, bool flip, bool weight_by_omega) {
  Kernel raw = Kernel::translation_invariant();
  for (int omega : {1, -1}) {
    const double w = weight_by_omega ? omega : 1.0;
    const int mate = flip ? -omega : omega;
    FieldLabel second{mate, dir == 1 ? 1 : 0, dir == 2 ? 1 : 0, {0, 0}};
    raw.add({{omega, 0, 0, {0, 0}}, second}, 0.5 * w);
    second.z = dir == 1 ? Site{-1, 0} : Site{0, -1};
    raw.add({{omega, 0, 0, {0, 0}}, second}, 0.5 * w);
  }
  return symmetrize_A(raw);
}

}  // namespace

Kernel F_nu() {
  Kernel raw = Kernel::translation_invariant();
  for (int omega : {1, -1}) raw.add({{omega, 0, 0, {0, 0}}, {-omega, 0, 0, {0, 0}}}, 0.5 * omega);
  return symmetrize_A(raw);
}

Kernel F_zeta() { return symmetric_derivative_kernel(1, false, true); }
Kernel F_eta() { return symmetric_derivative_kernel(2, true, false); }

SpanProjection project_onto_span(const Kernel& V, const std::vector<Kernel>& basis) {
  std::set<Multilabel> support;
  for (auto& [m, v] : V.entries()) support.insert(m);
  for (auto& b : basis)
    for (auto& [m, v] : b.entries()) support.insert(m);
  const int rows = static_cast<int>(support.size()), cols = static_cast<int>(basis.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  int r = 0;
  for (auto& m : support) {
    for (int c = 0; c < cols; ++c) A(r, c) = basis[c].at(m);
    rhs(r) = V.at(m);
    ++r;
  }
  SpanProjection out;
  Eigen::VectorXd x = cols ? Eigen::VectorXd(A.colPivHouseholderQr().solve(rhs)) : Eigen::VectorXd();
  out.coefficients.assign(x.data(), x.data() + x.size());
  out.residual = rows ? (rhs - A * x).cwiseAbs().maxCoeff() : 0.0;
  return out;
}

void write_kernel(std::ostream& os, const Kernel& V) {
  os << "kernel translation_invariant " << (V.is_translation_invariant() ? 1 : 0) << '\n';
  char buf[32];
  for (auto& [m, v] : V.entries()) {
    os << m.size();
    for (auto& f : m) os << ' ' << (f.omega > 0 ? '+' : '-');
    for (auto& f : m) os << ' ' << f.d1 << ' ' << f.d2;
    for (auto& f : m) os << ' ' << f.z.x << ' ' << f.z.y;
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ' ' << buf << '\n';
  }
}

Kernel read_kernel(std::istream& is) {
  std::string line, word;
  if (!std::getline(is, line)) throw std::invalid_argument("read_kernel: empty input");
  std::istringstream head(line);
  int flag = -1;
  std::string tag;
  head >> tag >> word >> flag;
  if (tag != "kernel" || word != "translation_invariant" || (flag != 0 && flag != 1))
    throw std::invalid_argument("read_kernel: bad header");
  Kernel V = flag ? Kernel::translation_invariant() : Kernel();
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream in(line);
    int n = 0;
    if (!(in >> n) || n <= 0 || n % 2) throw std::invalid_argument("read_kernel: bad n on line " + std::to_string(lineno));
    Multilabel m(n);
    for (auto& f : m) {
      char c = 0;
      in >> c;
      if (c != '+' && c != '-') throw std::invalid_argument("read_kernel: bad omega on line " + std::to_string(lineno));
      f.omega = c == '+' ? 1 : -1;
    }
    for (auto& f : m) in >> f.d1 >> f.d2;
    for (auto& f : m) in >> f.z.x >> f.z.y;
    double v = 0.0;
    in >> v;
    if (!in || (in >> word)) throw std::invalid_argument("read_kernel: malformed line " + std::to_string(lineno));
    V.add(m, v);
  }
  return V;
}

}  // namespace pfising

namespace pfising {

Kernel random_kernel(std::mt19937_64& rng, Sector s, int entries, int radius) {
  if (s.n < 2 || s.n % 2 || s.p < 0 || s.p > 2 * s.n) throw std::invalid_argument("random_kernel: bad sector");
  std::uniform_int_distribution<int> coord(-radius, radius), field(0, s.n - 1), dir(1, 2), sign(0, 1);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  Kernel V = Kernel::translation_invariant();
  for (int e = 0; e < entries; ++e) {
    Multilabel m(s.n);
    for (int j = 0; j < s.n; ++j) {
      m[j].omega = sign(rng) ? 1 : -1;
      if (j > 0) m[j].z = {coord(rng), coord(rng)};
    }
    for (int k = 0; k < s.p;) {
      auto& f = m[field(rng)];
      if (f.order() == 2) continue;
      (dir(rng) == 1 ? f.d1 : f.d2) += 1;
      ++k;
    }
    V.add(m, value(rng));
  }
  return V;
}

}  // namespace pfising
