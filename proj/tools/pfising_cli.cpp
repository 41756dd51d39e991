// Batch front end: exact runs, verification suites and CSV export.
//
// Exit codes: 0 success, 1 usage error, 2 a tolerance check failed.
#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <random>
#include <sstream>

#include "pfising/acceptance.hpp"
#include "pfising/energy.hpp"
#include "pfising/grassmann.hpp"
#include "pfising/kernel.hpp"
#include "pfising/multiscale.hpp"
#include "pfising/parallel.hpp"
#include "pfising/report.hpp"
#include "pfising/scaling.hpp"
#include "pfising/spectral.hpp"

using namespace pfising;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags win over the config file; the file wins over the defaults.
struct Options {
  std::string config_path;
  json file = json::object();

  int L = 4, M = 3;
  double beta = 0.0, J1 = 1.0, J2 = 1.0;
  bool critical = false;
  std::string t1 = "isotropic";
  double l1 = 1.0, l2 = 1.0;
  std::string meshes = "16,32,64";
  std::string pairs_path, bonds_path, kernel_path;
  std::string out_path, failure_path;
  double tol = 0.0;
  unsigned seed = 7;
  int samples = 25;
  int threads = 0;
  bool oracle = false;
  bool check_telescoping = false;
  std::string suite = "all";
  double kappa = 0.2, eps = 0.5;
};

std::multimap<std::string, CLI::Option*> registered;

bool given(const std::string& name) {
  auto [lo, hi] = registered.equal_range(name);
  for (auto it = lo; it != hi; ++it)
    if (it->second->count() > 0) return true;
  return false;
}

template <typename T>
void add(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  registered.emplace(name, app->add_option("--" + name, target, help));
}

void add_flag(CLI::App* app, const std::string& name, bool& target, const std::string& help) {
  registered.emplace(name, app->add_flag("--" + name, target, help));
}

// Takes the config-file value for `name` unless the flag was given.
template <typename T>
void merge(Options& o, const std::string& name, T& target) {
  if (given(name)) return;
  if (!o.file.contains(name)) return;
  try {
    target = o.file.at(name).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config key '" + name + "': " + e.what());
  }
}

void merge_all(Options& o) {
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw UsageError("cannot open config " + o.config_path);
    try {
      o.file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    if (!o.file.is_object()) throw UsageError("config must be a JSON object");
  }
  merge(o, "L", o.L);
  merge(o, "M", o.M);
  merge(o, "beta", o.beta);
  merge(o, "J1", o.J1);
  merge(o, "J2", o.J2);
  merge(o, "critical", o.critical);
  if (o.file.contains("t1") && o.file["t1"].is_number() && !given("t1"))
    o.t1 = fmt(o.file["t1"].get<double>());
  else
    merge(o, "t1", o.t1);
  merge(o, "l1", o.l1);
  merge(o, "l2", o.l2);
  merge(o, "meshes", o.meshes);
  merge(o, "pairs", o.pairs_path);
  merge(o, "bonds", o.bonds_path);
  merge(o, "kernel", o.kernel_path);
  merge(o, "out", o.out_path);
  merge(o, "failure-json", o.failure_path);
  merge(o, "tol", o.tol);
  merge(o, "seed", o.seed);
  merge(o, "samples", o.samples);
  merge(o, "threads", o.threads);
  merge(o, "oracle", o.oracle);
  merge(o, "check-telescoping", o.check_telescoping);
  merge(o, "suite", o.suite);
  merge(o, "kappa", o.kappa);
  merge(o, "eps", o.eps);
  if (o.tol < 0) throw UsageError("tolerance must be positive");
  if (o.threads < 0) throw UsageError("threads must be positive");
  if (o.threads > 0) setenv("PFISING_THREADS", std::to_string(o.threads).c_str(), 1);
}

Couplings couplings(const Options& o) {
  if (o.critical) {
    if (o.t1 == "isotropic") return Couplings::isotropic();
    try {
      std::size_t pos = 0;
      const double t = std::stod(o.t1, &pos);
      if (pos != o.t1.size()) throw std::invalid_argument("");
      return Couplings::critical(t);
    } catch (const std::logic_error&) {
      throw UsageError("--t1 takes a number in (0,1) or 'isotropic'");
    }
  }
  if (o.beta <= 0) throw UsageError("give --beta (with --J1 --J2) or --critical");
  return Couplings::from_beta(o.beta, o.J1, o.J2);
}

CylinderGeometry geometry(const Options& o) {
  if (o.L <= 0 || o.L % 2 != 0) throw UsageError("L must be a positive even integer");
  if (o.M <= 0) throw UsageError("M must be positive");
  return CylinderGeometry(o.L, o.M);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// [[x, y, x', y'], ...]
template <typename P>
std::vector<std::pair<P, P>> read_pairs(const std::string& path) {
  const json j = read_json(path);
  std::vector<std::pair<P, P>> out;
  if (!j.is_array()) throw UsageError(path + ": expected a list of [x, y, x', y']");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4) throw UsageError(path + ": each pair is [x, y, x', y']");
    out.push_back({P{e[0].get<decltype(P::x)>(), e[1].get<decltype(P::y)>()},
                   P{e[2].get<decltype(P::x)>(), e[3].get<decltype(P::y)>()}});
  }
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct Failure {
  std::string check;
  double value;
  double tolerance;
};

int finish(const Options& o, const std::string& command, const std::vector<Failure>& failures) {
  if (failures.empty()) return 0;
  json j{{"schema", 1}, {"command", command}, {"status", "fail"}, {"seed", o.seed}, {"failures", json::array()}};
  for (const auto& f : failures) j["failures"].push_back({{"check", f.check}, {"value", f.value}, {"tolerance", f.tolerance}});
  std::cerr << j.dump() << "\n";
  if (!o.failure_path.empty()) std::ofstream(o.failure_path) << j.dump(2) << "\n";
  return 2;
}

double tol_or(const Options& o, double fallback) { return o.tol > 0 ? o.tol : fallback; }

double maxabs(const Block& b) { return b.cwiseAbs().maxCoeff(); }

// ---- commands ----

int cmd_partition(const Options& o) {
  const auto g = geometry(o);
  const auto c = couplings(o);
  const auto lz = partition_function_log(g, c);
  Output out(o.out_path);
  std::vector<std::string> header = {"L", "M", "beta", "J1", "J2", "t1", "t2", "log_Z", "pf_sign"};
  if (o.oracle) header.insert(header.end(), {"oracle_log_Z", "rel_error"});
  CsvWriter w(out.stream(), header);
  w.cell(g.L()).cell(g.M()).cell(c.beta).cell(c.J1).cell(c.J2).cell(c.t1).cell(c.t2).cell(lz.log_abs).cell(lz.sign);
  std::vector<Failure> fails;
  if (o.oracle) {
    if (g.num_sites() > 24) throw UsageError("--oracle needs L*M <= 24");
    const double ref = brute_force_gibbs(g, c, {}).log_Z;
    const double err = std::abs(lz.log_abs - ref) / std::abs(ref);
    w.cell(ref).cell(err);
    if (err > tol_or(o, 1e-10)) fails.push_back({"partition_rel_error", err, tol_or(o, 1e-10)});
  }
  w.end_row();
  return finish(o, "partition", fails);
}

int cmd_propagator(const Options& o) {
  const auto g = geometry(o);
  const auto c = couplings(o);
  if (!c.is_critical()) throw UsageError("propagator needs critical couplings (--critical)");
  SpectralData sd(g, c);
  std::vector<std::pair<Site, Site>> pairs;
  if (!o.pairs_path.empty()) {
    pairs = read_pairs<Site>(o.pairs_path);
  } else {
    for (Site z : g.sites())
      for (Site w : g.sites()) pairs.push_back({z, w});
  }
  for (auto& [z, w] : pairs)
    if (z.y < 0 || z.y > g.M() + 1 || w.y < 0 || w.y > g.M() + 1) throw UsageError("pair outside 0..M+1");
  std::unique_ptr<ExactModel> exact;
  if (o.oracle) exact = std::make_unique<ExactModel>(g, c);
  Output out(o.out_path);
  std::vector<std::string> header = {"x", "y", "xp", "yp", "g_pp", "g_pm", "g_mp", "g_mm"};
  if (o.oracle) header.push_back("oracle_error");
  CsvWriter wr(out.stream(), header);
  double worst = 0.0;
  for (auto [z, w] : pairs) {
    const Block b = sd.propagator(z, w);
    wr.cell(z.x).cell(z.y).cell(w.x).cell(w.y).cell(b(0, 0)).cell(b(0, 1)).cell(b(1, 0)).cell(b(1, 1));
    if (o.oracle) {
      if (!g.contains(z) || !g.contains(w)) throw UsageError("--oracle needs sites inside the cylinder");
      const double e = maxabs(b - exact->critical_block(z, w));
      worst = std::max(worst, e);
      wr.cell(e);
    }
    wr.end_row();
  }
  std::vector<Failure> fails;
  if (o.oracle && worst > tol_or(o, 1e-9)) fails.push_back({"propagator_vs_inverse", worst, tol_or(o, 1e-9)});
  return finish(o, "propagator", fails);
}

std::vector<std::pair<Site, Site>> random_pairs(const CylinderGeometry& g, unsigned seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ux(1, g.L()), uy(1, g.M());
  std::vector<std::pair<Site, Site>> out;
  for (int k = 0; k < n; ++k) {
    const int x = ux(rng), y = uy(rng), xp = ux(rng), yp = uy(rng);
    out.push_back({{x, y}, {xp, yp}});
  }
  return out;
}

int cmd_multiscale(const Options& o) {
  const auto g = geometry(o);
  const auto c = couplings(o);
  if (!c.is_critical()) throw UsageError("multiscale needs critical couplings (--critical)");
  if (o.samples <= 0) throw UsageError("--samples must be positive");
  Multiscale ms(std::make_shared<const SpectralData>(g, c));
  const auto pairs = o.pairs_path.empty() ? random_pairs(g, o.seed, o.samples) : read_pairs<Site>(o.pairs_path);
  for (int h = ms.h_star(); h <= 0; ++h) ms.plane(h);

  struct Row {
    int h;
    double single, upto, bulk, edge, residual;
  };
  const int nh = 1 - ms.h_star();
  std::vector<std::vector<Row>> rows(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    auto [z, w] = pairs[i];
    const Block gc = ms.critical(z, w);
    for (int h = ms.h_star(); h <= 0; ++h) {
      Block acc = ms.up_to(h, z, w), split = acc;
      for (int j = h + 1; j <= 0; ++j) {
        acc += ms.single_scale(j, z, w);
        const auto s = ms.bulk_edge(j, z, w);
        split += s.bulk + s.edge;
      }
      const auto be = ms.bulk_edge(h, z, w);
      rows[i].push_back({h, maxabs(ms.single_scale(h, z, w)), maxabs(ms.up_to(h, z, w)), maxabs(be.bulk),
                         maxabs(be.edge), std::max(maxabs(acc - gc), maxabs(split - gc))});
    }
  });
  Output out(o.out_path);
  CsvWriter wr(out.stream(), {"x", "y", "xp", "yp", "h", "single_scale", "up_to", "bulk", "edge",
                              "telescoping_residual"});
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (int k = 0; k < nh; ++k) {
      const auto& r = rows[i][k];
      wr.cell(pairs[i].first.x).cell(pairs[i].first.y).cell(pairs[i].second.x).cell(pairs[i].second.y);
      wr.cell(r.h).cell(r.single).cell(r.upto).cell(r.bulk).cell(r.edge).cell(r.residual);
      wr.end_row();
      worst = std::max(worst, r.residual);
    }
  std::vector<Failure> fails;
  if (o.check_telescoping && worst > tol_or(o, 1e-9)) fails.push_back({"telescoping", worst, tol_or(o, 1e-9)});
  return finish(o, "multiscale", fails);
}

std::vector<double> parse_meshes(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const double n = std::stod(item);
      if (!(n > 0)) throw std::invalid_argument("");
      out.push_back(1.0 / n);
    } catch (const std::logic_error&) {
      throw UsageError("--meshes takes inverse mesh sizes, e.g. 16,32,64");
    }
  }
  if (out.size() < 2) throw UsageError("--meshes needs at least two values");
  return out;
}

int cmd_scaling(const Options& o) {
  if (!(o.l1 > 0) || !(o.l2 > 0)) throw UsageError("l1 and l2 must be positive");
  Options crit = o;
  crit.critical = true;
  const auto c = couplings(crit);
  const ContinuumCylinder cyl{o.l1, o.l2};
  std::vector<std::pair<Point, Point>> pairs;
  if (!o.pairs_path.empty())
    pairs = read_pairs<Point>(o.pairs_path);
  else
    pairs = {{{0.25 * o.l1, 0.5 * o.l2}, {0.75 * o.l1, 0.5 * o.l2}}};
  const auto rep = scaling_remainder_sweep(cyl, c, pairs, parse_meshes(o.meshes));
  Output out(o.out_path);
  out.stream() << to_csv(rep);
  return 0;
}

int cmd_correlations(const Options& o) {
  const auto g = geometry(o);
  const auto c = couplings(o);
  if (o.bonds_path.empty()) throw UsageError("correlations needs --bonds (a JSON list of [x, y, dir])");
  const json j = read_json(o.bonds_path);
  std::vector<Bond> bonds;
  if (!j.is_array()) throw UsageError("bonds: expected a list");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 3) throw UsageError("each bond is [x, y, dir]");
    Bond b{{e[0].get<int>(), e[1].get<int>()}, e[2].get<int>()};
    if (!g.is_bond(b)) throw UsageError("not a bond of the cylinder");
    bonds.push_back(b);
  }
  if (bonds.empty()) throw UsageError("no bonds");
  ExactModel model(g, c);
  const double pf = truncated_energy_correlation(model, bonds);
  Output out(o.out_path);
  std::vector<std::string> header = {"m", "cumulant"};
  if (o.oracle) header.insert(header.end(), {"oracle", "abs_error"});
  CsvWriter w(out.stream(), header);
  w.cell(static_cast<int>(bonds.size())).cell(pf);
  std::vector<Failure> fails;
  if (o.oracle) {
    if (g.num_sites() > 24) throw UsageError("--oracle needs L*M <= 24");
    const double bf = brute_force_gibbs(g, c, bonds).cumulant;
    w.cell(bf).cell(std::abs(pf - bf));
    if (std::abs(pf - bf) > tol_or(o, 1e-9)) fails.push_back({"cumulant_vs_brute_force", std::abs(pf - bf), tol_or(o, 1e-9)});
  }
  w.end_row();
  return finish(o, "correlations", fails);
}

int cmd_kernels(const Options& o) {
  Kernel V;
  if (!o.kernel_path.empty()) {
    std::ifstream in(o.kernel_path);
    if (!in) throw UsageError("cannot open " + o.kernel_path);
    try {
      V = read_kernel(in);
    } catch (const std::exception& e) {
      throw UsageError(std::string("kernel file: ") + e.what());
    }
  } else {
    std::mt19937_64 rng(o.seed);
    V = Kernel::translation_invariant();
    for (Sector s : {Sector{2, 0}, Sector{2, 1}, Sector{2, 2}, Sector{4, 0}, Sector{4, 1}})
      V += random_kernel(rng, s, 4, 2);
  }
  if (!V.is_translation_invariant()) V = certify_translation_invariance(V);
  const Kernel sym = symmetrize_A(V);
  const Kernel local = localization_operator(sym);
  const auto proj = project_onto_span(local, {F_nu(), F_zeta(), F_eta()});
  const auto bounds = verify_R_bounds(V, o.kappa, o.eps);

  Output out(o.out_path);
  CsvWriter w(out.stream(), {"quantity", "lhs", "rhs", "margin"});
  const char* names[] = {"coefficient_nu", "coefficient_zeta", "coefficient_eta"};
  for (int k = 0; k < 3; ++k) w.cell(names[k]).cell(proj.coefficients[k]).cell("").cell("").end_row();
  w.cell("span_residual").cell(proj.residual).cell("").cell("").end_row();
  w.cell("idempotence").cell(max_abs_diff(localization_operator(local), local)).cell("").cell("").end_row();
  std::vector<Failure> fails;
  for (const auto& b : bounds) {
    w.cell(b.name).cell(b.lhs).cell(b.rhs).cell(b.margin()).end_row();
    if (b.margin() < 0) fails.push_back({b.name, b.lhs, b.rhs});
  }
  if (proj.residual > tol_or(o, 1e-12)) fails.push_back({"span_residual", proj.residual, tol_or(o, 1e-12)});
  return finish(o, "kernels", fails);
}

std::vector<int> parse_suite(const std::string& s) {
  if (s == "all") return {};
  std::vector<int> ids;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const int id = std::stoi(item);
      if (id < 1 || id > 10) throw std::invalid_argument("");
      ids.push_back(id);
    } catch (const std::logic_error&) {
      throw UsageError("--suite takes 'all' or criterion ids 1..10, e.g. 1,4,7");
    }
  }
  return ids;
}

int cmd_verify(const Options& o) {
  const auto results = run_acceptance(o.seed, parse_suite(o.suite));
  Output out(o.out_path);
  std::vector<Failure> fails;
  for (const auto& r : results) {
    out.stream() << format_line(r) << "\n";
    if (!r.pass) fails.push_back({"criterion " + std::to_string(r.id) + ": " + r.detail, 0.0, 0.0});
  }
  return finish(o, "verify", fails);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pfising: exact critical Ising propagators on the cylinder"};
  app.require_subcommand(1);
  Options o;

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Cmd cmds[] = {{"partition", "log Z and Pfaffian sign", cmd_partition},
                      {"propagator", "critical propagator blocks", cmd_propagator},
                      {"multiscale", "single-scale, bulk/edge and telescoping table", cmd_multiscale},
                      {"scaling", "scaling-limit remainder sweep", cmd_scaling},
                      {"correlations", "truncated energy correlations", cmd_correlations},
                      {"kernels", "localization and interpolation bounds on a kernel", cmd_kernels},
                      {"verify", "acceptance suite", cmd_verify}};
  std::map<CLI::App*, const Cmd*> by_app;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    by_app[sub] = &c;
    sub->add_option("--config", o.config_path, "JSON file with the same keys as the flags");
    add(sub, "out", o.out_path, "output path (default stdout)");
    add(sub, "failure-json", o.failure_path, "also write the failure record here");
    add(sub, "tol", o.tol, "override the default tolerance");
    add(sub, "seed", o.seed, "seed for random choices");
    add(sub, "threads", o.threads, "worker threads (default PFISING_THREADS)");
    const std::string name = c.name;
    if (name == "scaling") {
      add(sub, "l1", o.l1, "circumference");
      add(sub, "l2", o.l2, "height");
      add(sub, "meshes", o.meshes, "inverse mesh sizes, comma separated");
      add(sub, "pairs", o.pairs_path, "JSON list of [x, y, x', y'] points");
      add(sub, "t1", o.t1, "critical t1, or 'isotropic'");
      continue;
    }
    if (name == "kernels") {
      add(sub, "kernel", o.kernel_path, "kernel file (default: a random kernel from --seed)");
      add(sub, "kappa", o.kappa, "decay weight");
      add(sub, "eps", o.eps, "interpolation parameter");
      continue;
    }
    if (name == "verify") {
      add(sub, "suite", o.suite, "'all' or comma-separated criterion ids");
      continue;
    }
    add(sub, "L", o.L, "circumference (even)");
    add(sub, "M", o.M, "height");
    add(sub, "beta", o.beta, "inverse temperature");
    add(sub, "J1", o.J1, "horizontal coupling");
    add(sub, "J2", o.J2, "vertical coupling");
    add_flag(sub, "critical", o.critical, "critical couplings from --t1");
    add(sub, "t1", o.t1, "critical t1, or 'isotropic'");
    if (name == "partition" || name == "propagator" || name == "correlations")
      add_flag(sub, "oracle", o.oracle, "compare with the dense or brute-force oracle");
    if (name == "propagator" || name == "multiscale") add(sub, "pairs", o.pairs_path, "JSON list of [x, y, x', y']");
    if (name == "multiscale") {
      add(sub, "samples", o.samples, "random pairs when --pairs is absent");
      add_flag(sub, "check-telescoping", o.check_telescoping, "fail unless the telescoping residual is small");
    }
    if (name == "correlations") add(sub, "bonds", o.bonds_path, "JSON list of [x, y, dir]");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    merge_all(o);
    for (auto [sub, c] : by_app)
      if (sub->parsed()) return c->run(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
