#include "pfising/grassmann.hpp"

#include <cmath>
#include <stdexcept>

namespace pfising {

namespace {

void check_t(double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("couplings: t must lie in (0,1)");
}

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

double critical_t2(double t1) { return (1 - t1) / (1 + t1); }

Couplings Couplings::from_beta(double beta, double J1, double J2) {
  if (!(beta > 0) || !(J1 > 0) || !(J2 > 0)) throw std::invalid_argument("couplings: beta, J1, J2 must be positive");
  Couplings c{beta, J1, J2, std::tanh(beta * J1), std::tanh(beta * J2)};
  check_t(c.t1);
  check_t(c.t2);
  return c;
}

Couplings Couplings::critical(double t1) {
  check_t(t1);
  double t2 = critical_t2(t1);
  return Couplings{1.0, std::atanh(t1), std::atanh(t2), t1, t2};
}

Couplings Couplings::isotropic() {
  double t = std::sqrt(2.0) - 1.0;
  return Couplings{1.0, std::atanh(t), std::atanh(t), t, t};
}

bool Couplings::is_critical() const { return std::abs(t1 * t2 + t1 + t2 - 1.0) <= 1e-14; }

SkewMatrix<double> build_action_matrix(const CylinderGeometry& g, const Couplings& c) {
  const int L = g.L(), M = g.M();
  SkewMatrix<double> a(4 * g.num_sites());
  auto id = [&](Site z, Species s) { return grassmann_index(g, z, s); };
  using S = Species;
  for (Site z : g.sites()) {
    if (z.x < L)
      a.add(id(z, S::HBar), id({z.x + 1, z.y}, S::H), c.t1);
    else
      a.add(id(z, S::HBar), id({1, z.y}, S::H), -c.t1);  // H_{L+1} = -H_1
    if (z.y < M) a.add(id(z, S::VBar), id({z.x, z.y + 1}, S::V), c.t2);
    a.add(id(z, S::HBar), id(z, S::H), 1.0);
    a.add(id(z, S::VBar), id(z, S::V), 1.0);
    a.add(id(z, S::VBar), id(z, S::HBar), 1.0);
    a.add(id(z, S::V), id(z, S::HBar), 1.0);
    a.add(id(z, S::H), id(z, S::VBar), 1.0);
    a.add(id(z, S::V), id(z, S::H), 1.0);
  }
  return a;
}

LogPartition partition_function_log(const CylinderGeometry& g, const Couplings& c) {
  auto pf = pfaffian_log(build_action_matrix(g, c));
  if (pf.phase == 0.0) throw SingularMatrixError(0.0, "partition_function_log: singular action matrix");
  const double LM = g.num_sites();
  const double vbonds = double(g.L()) * (g.M() - 1);
  LogPartition out;
  out.log_abs = LM * std::log(2.0) + LM * std::log(std::cosh(c.beta * c.J1)) +
                vbonds * std::log(std::cosh(c.beta * c.J2)) + pf.log_abs;
  out.sign = pf.phase > 0 ? 1 : -1;
  return out;
}

ExactModel::ExactModel(const CylinderGeometry& g, const Couplings& c)
    : geom_(g), coup_(c), a_(build_action_matrix(g, c)) {
  auto inv = skew_inverse(a_);
  cov_ = SkewMatrix<double>::from_upper(-inv.dense());
}

Block ExactModel::critical_block(Site z, Site zp) const {
  const int p = grassmann_index(geom_, z, Species::VBar), m = grassmann_index(geom_, z, Species::V);
  const int pp = grassmann_index(geom_, zp, Species::VBar), mp = grassmann_index(geom_, zp, Species::V);
  Block b;
  b << cov_(p, pp), cov_(p, mp), cov_(m, pp), cov_(m, mp);
  return b;
}

double s_inf_plus(int y, double t1) { return y >= 0 ? std::pow(-t1, y) : 0.0; }

double s_plus(int z1, int L, double t1) {
  // first image with nonnegative argument, then a geometric series with ratio -t1^L
  const int n0 = -floor_div(z1, L);
  const int y0 = z1 + n0 * L;
  const double sign = (n0 % 2 == 0) ? 1.0 : -1.0;
  return sign * std::pow(-t1, y0) / (1.0 + std::pow(t1, L));
}

double s_minus(int z1, int L, double t1) { return s_plus(-z1, L, t1); }

Block massive_propagator(const CylinderGeometry& g, const Couplings& c, Site z, Site zp) {
  Block b = Block::Zero();
  if (z.y != zp.y) return b;
  const int d = z.x - zp.x;
  b(0, 1) = s_plus(d, g.L(), c.t1);
  b(1, 0) = -s_minus(d, g.L(), c.t1);
  return b;
}

}  // namespace pfising
