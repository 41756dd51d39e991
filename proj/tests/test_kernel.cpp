#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "pfising/kernel.hpp"

using namespace pfising;

namespace {

FieldLabel fl(int omega, int d1, int d2, int x, int y) { return {omega, d1, d2, {x, y}}; }

// Pairing sum_Psi V(Psi) det[d^{D_i} f_k(omega_i, z_i)]_{i,k} with random test
// functions supported on a box. The determinant is antisymmetric in the fields,
// vanishes on repeated labels and expands derivatives like the fields do, so
// equivalent kernels give equal pairings. Invariant kernels are summed over all
// translations that reach the box.
class Pairing {
 public:
  Pairing(unsigned seed, int radius, int functions = 4) : R_(radius), K_(functions) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    f_.resize(2 * (2 * R_ + 1) * (2 * R_ + 1) * K_);
    for (auto& x : f_) x = gauss(rng);
  }

  double operator()(const Kernel& V) const {
    double total = 0.0;
    for (auto& [m, v] : V.entries()) {
      // translations keeping every field's stencil on the box; a row outside vanishes
      Site lo{-1000, -1000}, hi{1000, 1000};
      if (!V.is_translation_invariant()) lo = hi = {0, 0};
      for (auto& f : m) {
        lo = {std::max(lo.x, -R_ - f.d1 - f.z.x), std::max(lo.y, -R_ - f.d2 - f.z.y)};
        hi = {std::min(hi.x, R_ - f.z.x), std::min(hi.y, R_ - f.z.y)};
      }
      const int n = static_cast<int>(m.size());
      Eigen::MatrixXd c(n, n);
      for (int tx = lo.x; tx <= hi.x; ++tx)
        for (int ty = lo.y; ty <= hi.y; ++ty) {
          for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) c(i, k) = derivative(m[i], {tx, ty}, k);
          total += v * c.determinant();
        }
    }
    return total;
  }

 private:
  double value(int omega, Site z, int k) const {
    if (std::abs(z.x) > R_ || std::abs(z.y) > R_) return 0.0;
    const int w = 2 * R_ + 1;
    return f_[(((omega > 0 ? 0 : 1) * w + z.x + R_) * w + z.y + R_) * K_ + k];
  }
  double derivative(const FieldLabel& l, Site shift, int k) const {
    static const int binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
    double s = 0.0;
    for (int a = 0; a <= l.d1; ++a)
      for (int b = 0; b <= l.d2; ++b) {
        const int sgn = (l.d1 - a + l.d2 - b) % 2 ? -1 : 1;
        s += sgn * binom[l.d1][a] * binom[l.d2][b] * value(l.omega, l.z + shift + Site{a, b}, k);
      }
    return s;
  }
  int R_, K_;
  std::vector<double> f_;
};

Kernel symmetric_random(std::mt19937_64& rng, std::vector<Sector> sectors, int entries = 6, int radius = 2) {
  Kernel V = Kernel::translation_invariant();
  for (auto s : sectors) V += random_kernel(rng, s, entries, radius);
  return symmetrize_A(V);
}

}  // namespace

TEST_CASE("kernel storage and sectors") {
  Kernel V = Kernel::translation_invariant();
  V.add({fl(1, 0, 0, 3, 4), fl(-1, 1, 0, 4, 4)}, 0.5);
  CHECK(V.at({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 1, 0)}) == 0.5);
  CHECK(V.at({fl(1, 0, 0, -7, 2), fl(-1, 1, 0, -6, 2)}) == 0.5);
  V.add({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 1, 0)}, -0.5);
  CHECK(V.empty());
  CHECK_THROWS(V.add({fl(1, 0, 0, 0, 0)}, 1.0));
  CHECK_THROWS(V.add({fl(1, 2, 1, 0, 0), fl(1, 0, 0, 0, 0)}, 1.0));
  CHECK_THROWS(V.add({fl(0, 0, 0, 0, 0), fl(1, 0, 0, 0, 0)}, 1.0));
  V.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 2, -1)}, 1.0);
  V.add({fl(1, 0, 1, 0, 0), fl(1, 0, 0, 1, 0), fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 0, 0)}, 2.0);
  CHECK(V.sectors() == std::vector<Sector>{{2, 0}, {4, 1}});
  CHECK(V.sector(4, 1).size() == 1);
  auto [lo, hi] = V.bounding_box();
  CHECK(lo == Site{0, -1});
  CHECK(hi == Site{2, 0});
}

TEST_CASE("translation invariance certificate") {
  Kernel window;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      window.add({fl(1, 0, 0, x, y), fl(-1, 0, 0, x + 1, y)}, 0.25);
      window.add({fl(1, 0, 0, x, y), fl(1, 0, 1, x, y - 2)}, -1.5);
    }
  CHECK_THROWS_AS(localization_operator(window), std::invalid_argument);
  Kernel V = certify_translation_invariance(window);
  CHECK(V.is_translation_invariant());
  CHECK(V.size() == 2);
  CHECK(V.at({fl(1, 0, 0, 9, 9), fl(1, 0, 1, 9, 7)}) == -1.5);

  Kernel broken = window;
  broken.add({fl(1, 0, 0, 1, 1), fl(-1, 0, 0, 2, 1)}, 1e-3);
  CHECK_THROWS(certify_translation_invariance(broken));
  Kernel missing = window;
  missing.add({fl(1, 0, 0, 1, 1), fl(-1, 0, 0, 2, 1)}, -0.25);
  CHECK_THROWS(certify_translation_invariance(missing));
}

TEST_CASE("Ltilde") {
  Kernel V = Kernel::translation_invariant();
  V.add({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 1, 0)}, 1.0);
  Kernel L = localize_Ltilde(V);
  CHECK(L.size() == 1);
  CHECK(L.at({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 0, 0)}) == 1.0);
  CHECK(max_abs_diff(localize_Ltilde(L), L) == 0.0);

  std::mt19937_64 rng(3);
  Kernel W = random_kernel(rng, {4, 0}, 30, 3);
  Kernel pos = Kernel::translation_invariant();
  double mass = 0.0;
  for (auto& [m, v] : W.entries()) {
    pos.add(m, std::abs(v));
    mass += std::abs(v);
  }
  double lmass = 0.0;
  const Kernel lpos = localize_Ltilde(pos);
  for (auto& [m, v] : lpos.entries()) lmass += std::abs(v);
  CHECK(lmass <= mass + 1e-12);
  CHECK(localize_Ltilde(W, 2, 0).empty());
}

TEST_CASE("canonical path") {
  CHECK(canonical_path({0, 0}, {2, 1}) == std::vector<Site>{{0, 0}, {1, 0}, {2, 0}, {2, 1}});
  CHECK(canonical_path({1, 1}, {1, 1}).empty());
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> c(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    Site a{c(rng), c(rng)}, b{c(rng), c(rng)};
    auto path = canonical_path(a, b);
    if (a == b) continue;
    CHECK(static_cast<int>(path.size()) - 1 == std::abs(a.x - b.x) + std::abs(a.y - b.y));
    // covariance under both axis reflections and a translation
    for (int axis = 1; axis <= 2; ++axis) {
      auto S = [&](Site z) { return axis == 1 ? Site{-z.x + 3, z.y} : Site{z.x, -z.y - 2}; };
      auto image = canonical_path(S(a), S(b));
      REQUIRE(image.size() == path.size());
      for (std::size_t k = 0; k < path.size(); ++k) CHECK(image[k] == S(path[k]));
    }
  }
}

TEST_CASE("Rtilde") {
  Kernel V = Kernel::translation_invariant();
  V.add({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 1, 0)}, 0.7);
  Kernel R = interpolate_Rtilde(V, 2, 0);
  CHECK(R.size() == 1);
  CHECK(R.at({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 0, 0)}) == 0.7);

  // a backward step carries sigma = -
  Kernel B = Kernel::translation_invariant();
  B.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 0, -1)}, 1.0);
  CHECK(interpolate_Rtilde(B, 2, 0).at({fl(1, 0, 0, 0, 0), fl(1, 0, 1, 0, -1)}) == -1.0);

  Kernel local = Kernel::translation_invariant();
  local.add({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 0, 0)}, 1.0);
  CHECK(interpolate_Rtilde(local, 2, 1).empty());
  CHECK_THROWS_AS(interpolate_Rtilde(local, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(interpolate_Rtilde(local, 4, 1), std::invalid_argument);

  std::mt19937_64 rng(5);
  for (Sector s : {Sector{2, 0}, Sector{2, 1}, Sector{4, 0}}) {
    Kernel W = random_kernel(rng, s, 20, 3);
    Kernel out = interpolate_Rtilde(W, s.n, s.p);
    for (auto sec : out.sectors()) CHECK(sec == Sector{s.n, s.p + 1});
  }
}

TEST_CASE("INT sets") {
  // |INT(z)| is the sum of the path lengths from z1
  std::vector<Site> z = {{0, 0}, {2, -1}, {-1, 1}, {0, 0}};
  CHECK(interpolation_set(z).size() == 3 + 2 + 0);
  for (auto& t : interpolation_set(z)) {
    CHECK(t.y[0] == z[0]);
    for (int j = 1; j < t.field; ++j) CHECK(t.y[j] == z[0]);
    for (int j = t.field + 1; j < 4; ++j) CHECK(t.y[j] == z[j]);
  }
  CHECK_THROWS(interpolation_set({{0, 0}, {1, 0}, {2, 0}}));
}

TEST_CASE("pairing oracle respects the elementary operations") {
  Pairing P(17, 5);
  // permutation with sign
  Kernel a = Kernel::translation_invariant(), b = Kernel::translation_invariant();
  a.add({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 1, 2), fl(1, 0, 0, 0, 1), fl(1, 0, 1, -1, 0)}, 0.9);
  b.add({fl(-1, 1, 0, 1, 2), fl(1, 0, 0, 0, 0), fl(1, 0, 0, 0, 1), fl(1, 0, 1, -1, 0)}, -0.9);
  CHECK(P(a) == doctest::Approx(P(b)).epsilon(1e-12));
  // derivative expansion: d1 phi_z = phi_{z+e1} - phi_z
  Kernel c = Kernel::translation_invariant(), d = Kernel::translation_invariant();
  c.add({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 2, 1)}, 1.3);
  d.add({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 3, 1)}, 1.3);
  d.add({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 2, 1)}, -1.3);
  CHECK(P(c) == doctest::Approx(P(d)).epsilon(1e-12));
  // repeated labels pair to zero
  Kernel e = Kernel::translation_invariant();
  e.add({fl(1, 0, 1, 0, 0), fl(1, 0, 1, 0, 0)}, 2.0);
  CHECK(std::abs(P(e)) < 1e-12);
  CHECK(std::abs(P(c)) > 1e-3);
}

TEST_CASE("Rtilde interpolation is equivalent to V - Ltilde V") {
  Pairing P(23, 4);
  std::mt19937_64 rng(29);
  for (Sector s : {Sector{2, 0}, Sector{2, 1}, Sector{4, 0}}) {
    for (int trial = 0; trial < 3; ++trial) {
      Kernel V = random_kernel(rng, s, 5, 2);
      const double lhs = P(V - localize_Ltilde(V));
      const double rhs = P(interpolate_Rtilde(V, s.n, s.p));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("symmetrization") {
  std::mt19937_64 rng(31);
  for (Sector s : {Sector{2, 0}, Sector{2, 1}, Sector{2, 2}, Sector{4, 0}, Sector{4, 1}}) {
    Kernel V = random_kernel(rng, s, 8, 2);
    Kernel A = symmetrize_A(V);
    CHECK(max_abs_diff(symmetrize_A(A), A) < 1e-14);
    for (double kappa : {0.0, 0.3, 1.0}) CHECK(weighted_norm(A, s.n, s.p, kappa) <= weighted_norm(V, s.n, s.p, kappa) + 1e-14);
  }
  // phi_+ phi_+ at one site is a repeated label
  Kernel rep = Kernel::translation_invariant();
  rep.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 0, 0)}, 1.0);
  CHECK(symmetrize_A(rep).empty());
  // reflections: a derivative in the reflected direction flips sign and shifts
  int phase = 0;
  FieldLabel g = reflect_label(fl(1, 1, 0, 2, 3), 1, phase);
  CHECK(g == fl(1, 1, 0, -3, 3));
  CHECK(phase == 3);
  phase = 0;
  g = reflect_label(fl(-1, 0, 2, 2, 3), 2, phase);
  CHECK(g == fl(1, 0, 2, 2, -5));
  CHECK(phase == 1);
}

TEST_CASE("local kernels F") {
  Kernel nu = F_nu(), zeta = F_zeta(), eta = F_eta();
  CHECK(max_abs_diff(symmetrize_A(nu), nu) < 1e-15);
  CHECK(max_abs_diff(symmetrize_A(zeta), zeta) < 1e-15);
  CHECK(max_abs_diff(symmetrize_A(eta), eta) < 1e-15);
  // the potential (1/2) sum omega phi_omega phi_-omega
  CHECK(nu.at({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 0, 0)}) == doctest::Approx(0.5));
  CHECK(nu.at({fl(-1, 0, 0, 0, 0), fl(1, 0, 0, 0, 0)}) == doctest::Approx(-0.5));
  CHECK(zeta.sectors() == std::vector<Sector>{{2, 1}});
  CHECK(eta.sectors() == std::vector<Sector>{{2, 1}});
  auto p = project_onto_span(zeta, {zeta, eta});
  CHECK(p.residual < 1e-14);
  CHECK(p.coefficients[0] == doctest::Approx(1.0));
  CHECK(std::abs(p.coefficients[1]) < 1e-14);
  // same potentials up to the equivalence: the pairing of F_zeta equals that of its unsymmetrized form
  Pairing P(41, 4);
  Kernel raw = Kernel::translation_invariant();
  for (int omega : {1, -1}) {
    raw.add({fl(omega, 0, 0, 0, 0), fl(omega, 1, 0, 0, 0)}, 0.5 * omega);
    raw.add({fl(omega, 0, 0, 0, 0), fl(omega, 1, 0, -1, 0)}, 0.5 * omega);
  }
  CHECK(P(raw) == doctest::Approx(P(zeta)).epsilon(1e-10));
}

TEST_CASE("localization") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(localization_operator(symmetric_random(rng, {{4, 0}})).empty());

    Kernel V21 = symmetric_random(rng, {{2, 1}});
    const Kernel L21 = localization_operator(V21);
    auto p1 = project_onto_span(L21, {F_zeta(), F_eta()});
    CHECK(max_abs(L21) > 1e-3);
    CHECK(p1.residual <= 1e-12);

    Kernel V20 = symmetric_random(rng, {{2, 0}});
    auto p0 = project_onto_span(localization_operator(V20), {F_nu(), F_zeta(), F_eta()});
    CHECK(p0.residual <= 1e-12);
    CHECK(std::abs(p0.coefficients[0]) + std::abs(p0.coefficients[1]) + std::abs(p0.coefficients[2]) > 1e-3);
  }
  Kernel L = localization_operator(F_nu() + F_zeta().scaled(2.0) - F_eta());
  CHECK(max_abs_diff(L, F_nu() + F_zeta().scaled(2.0) - F_eta()) < 1e-14);
}

TEST_CASE("remarks on L and R") {
  std::mt19937_64 rng(47);
  Pairing P(53, 4);
  for (int trial = 0; trial < 5; ++trial) {
    Kernel V = symmetric_random(rng, {{2, 0}, {2, 1}, {2, 2}, {4, 0}, {4, 1}}, 4, 2);
    Kernel L = localization_operator(V);
    CHECK(max_abs_diff(localization_operator(L), L) < 1e-13);
    CHECK(max_abs(renormalization_operator(L)) < 1e-13);
    // V - L V ~ R V
    Kernel R = renormalization_operator(V);
    const double lhs = P(V - L), rhs = P(R);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9).scale(1.0));
    for (auto s : R.sectors()) CHECK(((s.n == 2 && s.p == 2) || (s.n == 4 && s.p == 1)));
  }
  Kernel V60 = random_kernel(rng, {6, 0}, 5, 2);
  CHECK(max_abs_diff(renormalization_operator(V60), V60) == 0.0);
  CHECK_THROWS_AS(renormalization_operator(Kernel()), std::invalid_argument);
}

TEST_CASE("weighted norm") {
  Kernel V = Kernel::translation_invariant();
  V.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 2, 1)}, -2.0);
  V.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 0, 0)}, 0.5);  // repeated points: delta = 0
  V.add({fl(-1, 0, 0, 0, 0), fl(1, 0, 0, 1, 0)}, 7.0);
  CHECK(weighted_norm(V, 2, 0, 0.0) == doctest::Approx(7.0));
  CHECK(weighted_norm(V, 2, 0, 1.0) == doctest::Approx(std::max(2.0 * std::exp(3.0) + 0.5, 7.0 * std::exp(1.0))));
  // sup over D at a fixed site tuple
  Kernel D = Kernel::translation_invariant();
  D.add({fl(1, 1, 0, 0, 0), fl(1, 0, 0, 1, 0)}, 1.0);
  D.add({fl(1, 0, 0, 0, 0), fl(1, 0, 1, 1, 0)}, -3.0);
  CHECK(weighted_norm(D, 2, 1, 0.0) == doctest::Approx(3.0));
  // a general kernel takes the worst first point
  Kernel G;
  G.add({fl(1, 0, 0, 0, 0), fl(1, 0, 0, 1, 0)}, 1.0);
  G.add({fl(1, 0, 0, 5, 5), fl(1, 0, 0, 6, 5)}, 2.0);
  G.add({fl(1, 0, 0, 5, 5), fl(1, 0, 0, 5, 6)}, 2.0);
  CHECK(weighted_norm(G, 2, 0, 0.0) == doctest::Approx(4.0));
  std::mt19937_64 rng(59);
  Kernel W = random_kernel(rng, {4, 1}, 20, 3);
  CHECK(weighted_norm(W, 4, 1, 0.2) <= weighted_norm(W, 4, 1, 0.4));
  CHECK_THROWS(weighted_norm(W, 6, 0, 0.0));
}

TEST_CASE("R bounds") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    Kernel V = random_kernel(rng, {2, 0}, 6, 4);
    for (double kappa : {0.0, 0.2})
      for (double eps : {0.1, 0.5})
        for (auto& b : verify_R_bounds(V, kappa, eps)) CHECK_MESSAGE(b.margin() >= 0.0, b.name);
  }
  for (auto& b : verify_R_bounds(Kernel::translation_invariant(), 0.1, 0.1)) {
    CHECK(b.lhs == 0.0);
    CHECK(b.rhs == 0.0);
  }
  Kernel local = Kernel::translation_invariant();
  local.add({fl(1, 0, 0, 0, 0), fl(-1, 0, 0, 0, 0)}, 1.0);
  auto checks = verify_R_bounds(local, 0.0, 0.5);
  CHECK(checks[0].lhs == 0.0);
  CHECK(checks[0].margin() >= 0.0);
  CHECK_THROWS(verify_R_bounds(local, -1.0, 0.5));
  CHECK_THROWS(verify_R_bounds(local, 0.0, 0.0));
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(67);
  Kernel V = random_kernel(rng, {4, 1}, 10, 3) + random_kernel(rng, {2, 2}, 10, 3);
  std::stringstream ss;
  write_kernel(ss, V);
  Kernel W = read_kernel(ss);
  CHECK(W.is_translation_invariant());
  CHECK(max_abs_diff(V, W) == 0.0);
  std::stringstream bad("kernel translation_invariant 0\n2 + - 0 0 0 0 0 0 1 0\n");
  CHECK_THROWS(read_kernel(bad));
  std::stringstream good("kernel translation_invariant 0\n2 + - 0 0 1 0 0 0 1 0 0.25\n");
  Kernel G = read_kernel(good);
  CHECK(G.at({fl(1, 0, 0, 0, 0), fl(-1, 1, 0, 1, 0)}) == 0.25);
}
