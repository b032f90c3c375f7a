#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
const std::string kCli = TOFBEAM_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tofbeam_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args, const TempDir& tmp) {
  const auto out_f = tmp.path / "stdout.txt";
  const auto err_f = tmp.path / "stderr.txt";
  const std::string cmd = kCli + " " + args + " >" + out_f.string() + " 2>" +
                          err_f.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const TempDir& tmp, const json& j, const char* name) {
  const auto p = tmp.path / name;
  std::ofstream(p) << j.dump();
  return p;
}

json gaussian_config(double mfd) {
  return {{"mode",
           {{"mfd_um", mfd},
            {"wavelength_um", 1.55},
            {"center_um", {0.0, 0.0}},
            {"modes", json::array({{{"l", 0}, {"p", 0}, {"weight", 1.0}}})}}}};
}
}  // namespace

TEST_CASE("no subcommand is a usage error") {
  TempDir tmp;
  CHECK(run("", tmp).exit_code == 2);
  CHECK(run("frobnicate", tmp).exit_code == 2);
}

TEST_CASE("simulate then analyze round trip") {
  TempDir tmp;
  const auto cfg = write_config(tmp, gaussian_config(10.4), "run.json");
  const auto events = (tmp.path / "events.csv").string();
  const auto r = run("simulate --config " + cfg.string() + " --n 150000 --seed 9 --out " +
                         events,
                     tmp);
  REQUIRE(r.exit_code == 0);
  const auto summary = json::parse(r.out);
  CHECK(summary["n_events"].get<std::uint64_t>() == 150000);

  const auto out_dir = (tmp.path / "analysis").string();
  const auto a = run("analyze --events " + events + " --max-p 2 --out " + out_dir +
                         " --svg",
                     tmp);
  REQUIRE(a.exit_code == 0);
  const auto fit = json::parse(a.out);
  CHECK(fit["mfd_um"].get<double>() == doctest::Approx(10.4).epsilon(0.03));
  CHECK(fs::exists(fs::path(out_dir) / "fit.json"));
  CHECK(fs::exists(fs::path(out_dir) / "profile.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "histogram.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "profile.svg"));
}

TEST_CASE("simulate output is byte-identical across runs and thread settings") {
  TempDir tmp;
  const auto cfg = write_config(tmp, gaussian_config(10.4), "run.json");
  const auto a = (tmp.path / "a.csv").string();
  const auto b = (tmp.path / "b.csv").string();
  REQUIRE(run("simulate --config " + cfg.string() + " --n 20000 --seed 3 --out " + a,
              tmp).exit_code == 0);
  setenv("TOFBEAM_THREADS", "4", 1);
  REQUIRE(run("simulate --config " + cfg.string() + " --n 20000 --seed 3 --out " + b,
              tmp).exit_code == 0);
  unsetenv("TOFBEAM_THREADS");
  CHECK(slurp_file(a) == slurp_file(b));
}

TEST_CASE("simulate validation failures exit 2 with json on stderr") {
  TempDir tmp;
  const auto cfg = write_config(tmp, gaussian_config(10.4), "run.json");
  const auto r = run("simulate --config " + cfg.string() + " --n 0 --out x.csv", tmp);
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).contains("error"));
  CHECK(run("simulate --config /nope.json --n 10 --out x.csv", tmp).exit_code == 2);

  auto bad = gaussian_config(-4.0);
  const auto bad_cfg = write_config(tmp, bad, "bad.json");
  const auto rb = run("simulate --config " + bad_cfg.string() + " --n 10 --out x.csv", tmp);
  CHECK(rb.exit_code == 2);
  CHECK(json::parse(rb.err)["error"].get<std::string>().size() > 0);
}

TEST_CASE("couple reports efficiency and solved offsets") {
  TempDir tmp;
  const auto r = run("couple --mfd-um 10.4 --diameter-um 20 --offset-um 0", tmp);
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["efficiency"].get<double>() ==
        doctest::Approx(0.9993).epsilon(2e-4));

  const auto s = run("couple --mfd-um 10.4 --diameter-um 35 --solve-offset "
                     "--loss-budget 0.01",
                     tmp);
  REQUIRE(s.exit_code == 0);
  CHECK(json::parse(s.out)["max_offset_um"].get<double>() ==
        doctest::Approx(11.2).epsilon(0.01));

  // infeasible budget: aligned loss already too big
  const auto f = run("couple --mfd-um 10.4 --diameter-um 5 --solve-offset "
                     "--loss-budget 0.01",
                     tmp);
  CHECK(f.exit_code == 2);
}

TEST_CASE("couple grid writes a tolerance matrix") {
  TempDir tmp;
  const auto out_dir = (tmp.path / "tol").string();
  const auto r = run("couple --mfd-um 4.7 --diameter-um 7.5 --diameter-um 12.5 "
                     "--offset-um 0 --offset-um 1 --offset-um 2 --grid --out " +
                         out_dir + " --svg",
                     tmp);
  REQUIRE(r.exit_code == 0);
  const auto csv = slurp_file(fs::path(out_dir) / "tolerance.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  CHECK(fs::exists(fs::path(out_dir) / "tolerance.svg"));
}

TEST_CASE("stack subcommand") {
  TempDir tmp;
  const auto r = run("stack --reference --mosi-n 5.0 --mosi-k 4.0", tmp);
  REQUIRE(r.exit_code == 0);
  const auto j = json::parse(r.out);
  const double sum = j["reflectance"].get<double>() + j["transmittance"].get<double>() +
                     j["absorptance"].get<double>();
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  json custom = {{"wavelength_nm", 1550.0},
                 {"ambient_n", 1.0},
                 {"substrate_n", 3.48},
                 {"layers", json::array({{{"thickness_nm", 266.7}, {"n", 1.453}, {"k", 0.0}}})}};
  const auto cfg = write_config(tmp, custom, "stack.json");
  const auto c = run("stack --config " + cfg.string() + " --out " +
                         (tmp.path / "stackout").string(),
                     tmp);
  REQUIRE(c.exit_code == 0);
  CHECK(fs::exists(tmp.path / "stackout" / "response.json"));

  CHECK(run("stack", tmp).exit_code == 2);
}

TEST_CASE("analyze on a missing csv exits 2") {
  TempDir tmp;
  const auto r = run("analyze --events /missing.csv --out " + (tmp.path / "a").string(),
                     tmp);
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).contains("error"));
}
