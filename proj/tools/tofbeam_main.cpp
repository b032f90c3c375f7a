// tofbeam command-line front end. Talks to the core exclusively through the
// C API of the shared library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tofbeam/tofbeam_c.h"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(tb_status s) { return s == TB_ENUMERIC ? kExitNumeric : kExitUsage; }

[[noreturn]] void fail(tb_status s) {
  json j;
  j["error"] = tb_last_error();
  std::cerr << j.dump() << '\n';
  std::exit(exit_code(s));
}

[[noreturn]] void fail_usage(const std::string& msg) {
  json j;
  j["error"] = msg;
  std::cerr << j.dump() << '\n';
  std::exit(kExitUsage);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_usage("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

unsigned thread_count() {
  if (const char* env = std::getenv("TOFBEAM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

struct ModespecHandle {
  tb_modespec* ptr = nullptr;
  ~ModespecHandle() { tb_modespec_free(ptr); }
};

struct GeometryHandle {
  tb_geometry* ptr = nullptr;
  ~GeometryHandle() { tb_geometry_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { tb_string_free(ptr); }
};

void load_run_config(const std::string& path, ModespecHandle& mode, GeometryHandle& geom) {
  const json cfg = json::parse(slurp(path), nullptr, false);
  if (cfg.is_discarded()) fail_usage("malformed config JSON: " + path);
  if (!cfg.contains("mode")) fail_usage("config is missing \"mode\": " + path);
  tb_status s = tb_modespec_from_json(cfg["mode"].dump().c_str(), &mode.ptr);
  if (s != TB_OK) fail(s);
  if (cfg.contains("geometry"))
    s = tb_geometry_from_json(cfg["geometry"].dump().c_str(), &geom.ptr);
  else
    s = tb_geometry_default(&geom.ptr);
  if (s != TB_OK) fail(s);
}

int cmd_simulate(const std::string& config, std::uint64_t n, std::uint64_t seed,
                 const std::string& out) {
  if (n < 1) fail_usage("n_events must be >= 1");
  ModespecHandle mode;
  GeometryHandle geom;
  load_run_config(config, mode, geom);
  OwnedString summary;
  const tb_status s = tb_simulate_csv(mode.ptr, geom.ptr, n, seed, thread_count(),
                                      out.c_str(), &summary.ptr);
  if (s != TB_OK) fail(s);
  std::cout << summary.ptr << '\n';
  return 0;
}

int cmd_analyze(const std::string& events, const std::string& geometry_path,
                int max_p, double bin_width, const std::string& out_dir, bool svg) {
  GeometryHandle geom;
  tb_status s = geometry_path.empty()
                    ? tb_geometry_default(&geom.ptr)
                    : tb_geometry_from_json(slurp(geometry_path).c_str(), &geom.ptr);
  if (s != TB_OK) fail(s);
  OwnedString fit;
  s = tb_analyze_csv(events.c_str(), geom.ptr, max_p, bin_width, out_dir.c_str(),
                     svg ? 1 : 0, &fit.ptr);
  if (s != TB_OK) fail(s);
  std::cout << fit.ptr << '\n';
  return 0;
}

void write_couple_svg(const std::vector<double>& diameters,
                      const std::vector<double>& offsets,
                      const std::vector<std::vector<double>>& loss,
                      const std::string& path) {
  // Coupling loss vs. diameter, one curve per offset, log-y.
  constexpr int W = 640, H = 400, M = 50;
  const double x0 = diameters.front(), x1 = diameters.back();
  const double ymin = 1e-6, ymax = 1.0;
  auto px = [&](double d) { return M + (d - x0) / (x1 - x0) * (W - 2 * M); };
  auto py = [&](double l) {
    const double v = std::log10(std::clamp(l, ymin, ymax));
    return H - M - (v - std::log10(ymin)) / (std::log10(ymax) - std::log10(ymin)) * (H - 2 * M);
  };
  std::ofstream svg(path, std::ios::binary);
  if (!svg) fail_usage("cannot open for writing: " + path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette[j % 8] << "\" points=\"";
    for (std::size_t i = 0; i < diameters.size(); ++i)
      svg << px(diameters[i]) << ',' << py(loss[i][j]) << ' ';
    svg << "\"/>\n";
  }
  svg << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\""
      << H - M << "\" stroke=\"black\"/>\n<line x1=\"" << M << "\" y1=\"" << M
      << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\">active area diameter (um)</text>\n"
      << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2
      << ")\" text-anchor=\"middle\">coupling loss (log)</text>\n</svg>\n";
}

int cmd_couple(const std::string& config, double mfd, double wavelength,
               std::vector<double> diameters, std::vector<double> offsets,
               double loss_budget, bool solve_offset, bool grid,
               const std::string& out_dir, bool svg) {
  ModespecHandle mode;
  tb_status s;
  if (!config.empty())
    s = tb_modespec_from_json(slurp(config).c_str(), &mode.ptr);
  else
    s = tb_modespec_gaussian(mfd, wavelength, &mode.ptr);
  if (s != TB_OK) fail(s);
  if (diameters.empty()) fail_usage("--diameter-um is required");

  if (solve_offset) {
    json out;
    double v = 0.0;
    s = tb_max_tolerable_offset(mode.ptr, diameters.front(), loss_budget, &v);
    if (s != TB_OK) fail(s);
    out["max_offset_um"] = v;
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  if (grid) {
    if (offsets.empty()) fail_usage("--grid requires --offset-um values");
    OwnedString csv;
    s = tb_tolerance_curve_csv(mode.ptr, diameters.data(), diameters.size(),
                               offsets.data(), offsets.size(), &csv.ptr);
    if (s != TB_OK) fail(s);
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream f(std::filesystem::path(out_dir) / "tolerance.csv", std::ios::binary);
      f << csv.ptr;
      if (svg) {
        // Re-evaluate losses for plotting from the same grid.
        std::vector<std::vector<double>> loss(diameters.size(),
                                              std::vector<double>(offsets.size()));
        for (std::size_t i = 0; i < diameters.size(); ++i)
          for (std::size_t j = 0; j < offsets.size(); ++j) {
            double eff = 0.0;
            s = tb_coupling_efficiency(mode.ptr, diameters[i], offsets[j], &eff);
            if (s != TB_OK) fail(s);
            loss[i][j] = 1.0 - eff;
          }
        write_couple_svg(diameters, offsets, loss,
                         (std::filesystem::path(out_dir) / "tolerance.svg").string());
      }
    } else {
      std::cout << csv.ptr;
    }
    return 0;
  }
  const double offset = offsets.empty() ? 0.0 : offsets.front();
  double eff = 0.0;
  s = tb_coupling_efficiency(mode.ptr, diameters.front(), offset, &eff);
  if (s != TB_OK) fail(s);
  json out;
  out["efficiency"] = eff;
  out["loss"] = 1.0 - eff;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_stack(const std::string& config, bool builtin, double mosi_n, double mosi_k,
              bool low_index_adjacent, const std::string& out_dir) {
  tb_stackspec* stack = nullptr;
  tb_status s;
  if (builtin)
    s = tb_stackspec_reference(mosi_n, mosi_k, low_index_adjacent ? 1 : 0, &stack);
  else if (!config.empty())
    s = tb_stackspec_from_json(slurp(config).c_str(), &stack);
  else
    fail_usage("stack: provide --config or --reference");
  if (s != TB_OK) fail(s);

  OwnedString resp;
  s = tb_tmm_response_json(stack, &resp.ptr);
  tb_stackspec_free(stack);
  if (s != TB_OK) fail(s);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(std::filesystem::path(out_dir) / "response.json", std::ios::binary);
    f << resp.ptr << '\n';
  }
  std::cout << resp.ptr << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential-readout SNSPD imaging simulator and analysis chain"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample detection events to CSV");
  std::string sim_config, sim_out = "events.csv";
  std::uint64_t sim_n = 100000, sim_seed = 0;
  sim->add_option("--config", sim_config, "Run config JSON (mode + geometry)")->required();
  sim->add_option("--n", sim_n, "Number of events");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "Output event CSV path");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Reconstruct and fit an event CSV");
  std::string ana_events, ana_geom, ana_out = "analysis";
  int ana_maxp = 2;
  double ana_bin = 5.0;
  bool ana_svg = false;
  ana->add_option("--events", ana_events, "Event CSV path")->required();
  ana->add_option("--geometry", ana_geom, "DetectorGeometry JSON path");
  ana->add_option("--max-p", ana_maxp, "Highest radial mode order to consider");
  ana->add_option("--bin-width", ana_bin, "Histogram bin width (ps)");
  ana->add_option("--out", ana_out, "Output directory");
  ana->add_flag("--svg", ana_svg, "Also write SVG plots");

  // couple
  auto* cpl = app.add_subcommand("couple", "Coupling efficiency over a circular active area");
  std::string cpl_config, cpl_out;
  double cpl_mfd = 10.5, cpl_wl = 1.55, cpl_budget = 0.01;
  std::vector<double> cpl_d, cpl_o;
  bool cpl_solve = false, cpl_grid = false, cpl_svg = false;
  cpl->add_option("--config", cpl_config, "ModeSpec JSON path (overrides --mfd-um)");
  cpl->add_option("--mfd-um", cpl_mfd, "Gaussian MFD (um)");
  cpl->add_option("--wavelength-um", cpl_wl, "Wavelength (um)");
  cpl->add_option("--diameter-um", cpl_d, "Active-area diameter(s) (um)");
  cpl->add_option("--offset-um", cpl_o, "Misalignment offset(s) (um)");
  cpl->add_option("--loss-budget", cpl_budget, "Loss budget for --solve-offset");
  cpl->add_flag("--solve-offset", cpl_solve, "Solve the max tolerable offset");
  cpl->add_flag("--grid", cpl_grid, "Emit a loss matrix over all diameters x offsets");
  cpl->add_option("--out", cpl_out, "Output directory");
  cpl->add_flag("--svg", cpl_svg, "Also write an SVG of the curves");

  // stack
  auto* stk = app.add_subcommand("stack", "Transfer-matrix stack response");
  std::string stk_config, stk_out;
  bool stk_builtin = false, stk_low = false;
  double stk_n = 0.0, stk_k = 0.0;
  stk->add_option("--config", stk_config, "StackSpec JSON path");
  stk->add_flag("--reference", stk_builtin, "Use the built-in DBR+MoSi+AR recipe");
  stk->add_option("--mosi-n", stk_n, "MoSi refractive index (required with --reference)");
  stk->add_option("--mosi-k", stk_k, "MoSi extinction coefficient");
  stk->add_flag("--low-index-adjacent", stk_low, "Put the low-index DBR layer next to the absorber");
  stk->add_option("--out", stk_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (sim->parsed()) return cmd_simulate(sim_config, sim_n, sim_seed, sim_out);
  if (ana->parsed())
    return cmd_analyze(ana_events, ana_geom, ana_maxp, ana_bin, ana_out, ana_svg);
  if (cpl->parsed())
    return cmd_couple(cpl_config, cpl_mfd, cpl_wl, cpl_d, cpl_o, cpl_budget, cpl_solve,
                      cpl_grid, cpl_out, cpl_svg);
  if (stk->parsed())
    return cmd_stack(stk_config, stk_builtin, stk_n, stk_k, stk_low, stk_out);
  return kExitUsage;
}
