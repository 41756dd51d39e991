#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("PFISING_CLI");
  REQUIRE_MESSAGE(p != nullptr, "PFISING_CLI not set");
  return p;
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("pfising_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const fs::path o = scratch() / "stdout", e = scratch() / "stderr";
  const std::string cmd = env + " \"" + cli() + "\" " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("partition") {
  auto r = run("partition --L 4 --M 3 --beta 0.25 --J1 1 --J2 2 --oracle");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("schema: 1\r\n", 0) == 0);
  CHECK(r.out.find("rel_error") != std::string::npos);

  CHECK(run("partition --L 3 --M 3 --beta 0.25").code == 1);
  CHECK(run("partition --L 4 --M 3").code == 1);
  CHECK(run("partition --bogus").code == 1);
  CHECK(run("").code == 1);

  auto crit = run("partition --L 4 --M 3 --critical --t1 0.5");
  CHECK(crit.code == 0);
  // t2 = 1/3 at 17 digits
  CHECK(crit.out.find("0.33333333333333331") != std::string::npos);

  // a tolerance below roundoff fails with the failure record on stderr
  auto tight = run("partition --L 4 --M 3 --beta 0.25 --J1 1 --J2 2 --oracle --tol 1e-300");
  if (tight.code == 2) CHECK(tight.err.find("\"status\":\"fail\"") != std::string::npos);
}

TEST_CASE("config file and flag precedence") {
  const fs::path cfg = scratch() / "cfg.json";
  write(cfg, R"({"L": 4, "M": 2, "critical": true, "t1": "isotropic"})");
  auto a = run("partition --config " + cfg.string());
  CHECK(a.code == 0);
  CHECK(a.out.find("\r\n4,2,") != std::string::npos);
  auto b = run("partition --config " + cfg.string() + " --M 3");
  CHECK(b.code == 0);
  CHECK(b.out.find("\r\n4,3,") != std::string::npos);
  write(cfg, "{not json");
  CHECK(run("partition --config " + cfg.string()).code == 1);
}

TEST_CASE("propagator against the inverse") {
  auto r = run("propagator --L 4 --M 3 --critical --t1 isotropic --oracle");
  CHECK(r.code == 0);
  CHECK(r.out.find("oracle_error") != std::string::npos);
  CHECK(run("propagator --L 4 --M 3 --beta 0.3").code == 1);
}

TEST_CASE("multiscale telescoping and determinism") {
  auto a = run("multiscale --L 32 --M 32 --critical --t1 isotropic --check-telescoping --samples 4");
  CHECK(a.code == 0);
  auto b = run("multiscale --L 32 --M 32 --critical --t1 isotropic --check-telescoping --samples 4", "PFISING_THREADS=1");
  CHECK(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("telescoping_residual") != std::string::npos);
}

TEST_CASE("scaling sweep") {
  const fs::path pairs = scratch() / "pairs.json";
  write(pairs, "[[0.25, 0.5, 0.75, 0.5], [0.5, 0.25, 0.5, 0.75]]");
  auto r = run("scaling --l1 1 --l2 1 --meshes 16,32,64 --pairs " + pairs.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("fitted_slope") != std::string::npos);
  CHECK(run("scaling --meshes 16").code == 1);
  CHECK(run("scaling --pairs /nonexistent.json").code == 1);
}

TEST_CASE("correlations") {
  const fs::path bonds = scratch() / "bonds.json";
  write(bonds, "[[1, 1, 1], [2, 2, 2], [3, 1, 2]]");
  auto r = run("correlations --L 4 --M 3 --beta 0.4 --J1 1 --J2 1 --bonds " + bonds.string() + " --oracle");
  CHECK(r.code == 0);
  write(bonds, "[[1, 3, 2]]");
  CHECK(run("correlations --L 4 --M 3 --beta 0.4 --bonds " + bonds.string()).code == 1);
}

TEST_CASE("kernels") {
  auto a = run("kernels --seed 3");
  CHECK(a.code == 0);
  CHECK(a.out.find("Rtilde(2,1)") != std::string::npos);
  CHECK(run("kernels --seed 3").out == a.out);
  CHECK(run("kernels --kernel /nonexistent").code == 1);
}

TEST_CASE("verify subset") {
  auto r = run("verify --suite 1,2 --seed 7");
  CHECK(r.code == 0);
  CHECK(r.out.find("criterion 1: PASS") != std::string::npos);
  CHECK(r.out.find("criterion 2: PASS") != std::string::npos);
  CHECK(run("verify --suite 11").code == 1);
}
