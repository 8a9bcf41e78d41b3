// End-to-end checks of the dicke_sim binary: file outputs, exit codes,
// strict config validation, reproducibility.  The binary path comes from
// the DICKE_SIM_BIN environment variable (set by ctest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
  const char* env = std::getenv("DICKE_SIM_BIN");
  REQUIRE_MESSAGE(env != nullptr, "DICKE_SIM_BIN must point at the dicke_sim binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dicke_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), ("missing file " + p.string()).c_str());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("steady task: all-down dark state at N=4") {
  const auto dir = fresh_dir("steady");
  const int code =
      run("steady --set model.n_atoms=4 --set model.gamma=1.0 --out " + dir.string());
  CHECK(code == 0);
  const json obs = json::parse(slurp(dir / "steady_obs.json"));
  CHECK(obs.at("Sz_over_N").get<double>() == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(fs::exists(dir / "pm.csv"));

  const json manifest = json::parse(slurp(dir / "manifest.json"));
  // every artifact is listed; nothing stray in the directory
  std::set<std::string> listed;
  for (const auto& f : manifest.at("files")) listed.insert(f.at("name").get<std::string>());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    CHECK(listed.count(name) == 1);
  }
  CHECK(listed.count("steady_obs.json") == 1);
}

TEST_CASE("spectrum task: N=1 vacuum eigenvalues in reduced units") {
  const auto dir = fresh_dir("spectrum");
  const int code = run(
      "spectrum --set model.n_atoms=1 --set model.gamma=2.0 --set model.rabi=0 --out " +
      dir.string());
  CHECK(code == 0);
  const std::string csv = slurp(dir / "spectrum.csv");
  std::vector<double> re;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) re.push_back(std::stod(line.substr(0, line.find(','))));
  REQUIRE(re.size() == 4);
  CHECK(re[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  CHECK(re[1] == doctest::Approx(-2.0));
  CHECK(re[2] == doctest::Approx(-2.0));
  CHECK(re[3] == doctest::Approx(-4.0));
}

TEST_CASE("config file plus --set override") {
  const auto dir = fresh_dir("config");
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "run.json";
  std::ofstream(cfg_path) << R"({
    "task": "steady",
    "model": {"n_atoms": 2, "gamma": 1.0, "rabi": 0.0},
    "output_dir": ")" << (dir / "out").string() << R"("
  })";
  CHECK(run("--config " + cfg_path.string()) == 0);
  // override the atom number on the command line
  CHECK(run("--config " + cfg_path.string() + " --set model.n_atoms=6 --out " +
            (dir / "out2").string()) == 0);
  const json m2 = json::parse(slurp(dir / "out2" / "manifest.json"));
  CHECK(m2.at("config").at("model").at("n_atoms").get<int>() == 6);
}

TEST_CASE("strict config: unknown keys exit with code 2") {
  const auto dir = fresh_dir("badkey");
  CHECK(run("steady --set model.n_atoms=2 --set model.gamma=1 --set model.typo=3 --out " +
            dir.string()) == 2);
  CHECK(run("steady --set model.n_atoms=2 --set model.gamma=1 --set nonsense.x=1 --out " +
            dir.string()) == 2);
  // invalid physical parameters are config errors as well
  CHECK(run("steady --set model.n_atoms=2 --set model.gamma=1 --set model.n_bar=-1 --out " +
            dir.string()) == 2);
  // missing required keys
  CHECK(run("steady --set model.gamma=1 --out " + dir.string()) == 2);
  // no task at all
  CHECK(run("--set model.n_atoms=2 --set model.gamma=1") == 2);
}

TEST_CASE("resource cap exceeded exits with code 4") {
  const auto dir = fresh_dir("cap");
  // dense spectrum beyond the dense cap: suggests the iterative path
  CHECK(run("spectrum --set model.n_atoms=100 --set model.drive_ratio=1.0 --out " +
            dir.string()) == 4);
  CHECK(fs::exists(dir / "error.json"));
}

TEST_CASE("evolve + fourier tasks write the full artifact set") {
  const auto dir = fresh_dir("fourier");
  const int code = run(
      "fourier --set model.n_atoms=10 --set model.drive_ratio=1.8"
      " --set evolve.t_final=60 --set evolve.sample_dt=0.05"
      " --set fourier.transient_cut=10 --out " +
      dir.string());
  CHECK(code == 0);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "fourier.csv"));
  const json peaks = json::parse(slurp(dir / "fourier_peaks.json"));
  REQUIRE(!peaks.at("peaks").empty());
  CHECK(peaks.at("peaks")[0].at("freq").get<double>() > 1.0);

  const std::string trace = slurp(dir / "trace.csv");
  CHECK(trace.rfind("t,Sz_over_N,Sx_over_N,Sy_over_N", 0) == 0);
}

TEST_CASE("wigner task writes matching csv and binary grids") {
  const auto dir = fresh_dir("wigner");
  const int code = run(
      "wigner --set model.n_atoms=8 --set model.drive_ratio=0.75 --set model.n_bar=0.5"
      " --set wigner.n_theta=33 --set wigner.n_phi=32 --out " +
      dir.string());
  CHECK(code == 0);
  const std::string csv = slurp(dir / "wigner.csv");
  CHECK(csv.rfind("theta,phi,W", 0) == 0);
  CHECK(fs::file_size(dir / "wigner.bin") == 8 + 16 + 32 + 33 * 32 * 8);
}

TEST_CASE("sweep-squeeze task emits table, metadata and per-point errors") {
  const auto dir = fresh_dir("sweep");
  const int code = run(
      "sweep-squeeze --set model.n_atoms=8 --set model.drive_ratio=1.8"
      " --set sweep.points=[0.0,0.5] --out " +
      dir.string());
  CHECK(code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.find("delta_omega") != std::string::npos);
  const json meta = json::parse(slurp(dir / "sweep.meta.json"));
  CHECK(meta.at("axis") == "n_bar");
  CHECK(meta.at("points").size() == 2);
  CHECK(meta.at("units") == "NGamma/2");
}

TEST_CASE("reruns into fresh directories reproduce value-identical CSVs") {
  const auto d1 = fresh_dir("repro1"), d2 = fresh_dir("repro2");
  const std::string args =
      "spectrum --set model.n_atoms=12 --set model.drive_ratio=1.5 --set model.n_bar=0.3"
      " --set spectrum.k=6 --out ";
  CHECK(run(args + d1.string()) == 0);
  CHECK(run(args + d2.string()) == 0);
  CHECK(slurp(d1 / "spectrum.csv") == slurp(d2 / "spectrum.csv"));
  CHECK(slurp(d1 / "gaps.json") == slurp(d2 / "gaps.json"));
}
