#include "tofbeam/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
using nlohmann::json;

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw invalid_input("malformed JSON");
  return j;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw invalid_input("events CSV: bad number at line " + std::to_string(line));
  return v;
}
}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string modespec_to_json(const ModeSpec& spec) {
  json j;
  j["mfd_um"] = spec.mfd_um;
  j["wavelength_um"] = spec.wavelength_um;
  j["center_um"] = {spec.center_x_um, spec.center_y_um};
  j["modes"] = json::array();
  for (const auto& m : spec.modes)
    j["modes"].push_back({{"l", m.l}, {"p", m.p}, {"weight", m.weight}});
  return j.dump(2);
}

ModeSpec modespec_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    ModeSpec spec;
    spec.mfd_um = j.at("mfd_um").get<double>();
    spec.wavelength_um = j.at("wavelength_um").get<double>();
    if (j.contains("center_um")) {
      spec.center_x_um = j.at("center_um").at(0).get<double>();
      spec.center_y_um = j.at("center_um").at(1).get<double>();
    }
    spec.modes.clear();
    for (const auto& m : j.at("modes"))
      spec.modes.push_back({m.at("l").get<int>(), m.at("p").get<int>(),
                            m.at("weight").get<double>()});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("ModeSpec JSON: ") + e.what());
  }
}

std::string geometry_to_json(const DetectorGeometry& geom) {
  json j;
  j["column_pitch_um"] = geom.column_pitch_um;
  j["wire_width_um"] = geom.wire_width_um;
  j["n_columns"] = geom.n_columns;
  j["path_increment_per_column_um"] = geom.path_increment_um;
  j["pulse_velocity_c"] = geom.pulse_velocity_c;
  j["jitter_sigma_ps"] = geom.jitter_sigma_ps;
  j["active_diameter_um"] = geom.active_diameter_um;
  return j.dump(2);
}

DetectorGeometry geometry_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    DetectorGeometry g;
    if (j.contains("column_pitch_um")) g.column_pitch_um = j["column_pitch_um"].get<double>();
    if (j.contains("wire_width_um")) g.wire_width_um = j["wire_width_um"].get<double>();
    if (j.contains("n_columns")) g.n_columns = j["n_columns"].get<int>();
    if (j.contains("path_increment_per_column_um"))
      g.path_increment_um = j["path_increment_per_column_um"].get<double>();
    if (j.contains("pulse_velocity_c")) g.pulse_velocity_c = j["pulse_velocity_c"].get<double>();
    if (j.contains("jitter_sigma_ps")) g.jitter_sigma_ps = j["jitter_sigma_ps"].get<double>();
    if (j.contains("active_diameter_um"))
      g.active_diameter_um = j["active_diameter_um"].get<double>();
    g.validate();
    return g;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("DetectorGeometry JSON: ") + e.what());
  }
}

std::string stackspec_to_json(const StackSpec& stack) {
  json j;
  j["wavelength_nm"] = stack.wavelength_nm;
  j["ambient_n"] = stack.ambient_n;
  j["substrate_n"] = stack.substrate_n;
  j["layers"] = json::array();
  for (const auto& l : stack.layers)
    j["layers"].push_back({{"thickness_nm", l.thickness_nm}, {"n", l.n}, {"k", l.k}});
  return j.dump(2);
}

StackSpec stackspec_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    StackSpec s;
    s.wavelength_nm = j.at("wavelength_nm").get<double>();
    s.ambient_n = j.at("ambient_n").get<double>();
    s.substrate_n = j.at("substrate_n").get<double>();
    for (const auto& l : j.at("layers"))
      s.layers.push_back({l.at("thickness_nm").get<double>(), l.at("n").get<double>(),
                          l.at("k").get<double>()});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("StackSpec JSON: ") + e.what());
  }
}

std::string stackresponse_to_json(const StackResponse& resp) {
  json j;
  j["reflectance"] = resp.reflectance;
  j["transmittance"] = resp.transmittance;
  j["absorptance"] = resp.absorptance;
  j["per_layer_absorption"] = resp.per_layer_absorption;
  return j.dump(2);
}

std::string fit_to_json(const ModeFitResult& fit) {
  json j;
  j["mfd_um"] = fit.mfd_um;
  j["mfd_sigma_um"] = fit.mfd_sigma_um;
  j["center_x_um"] = fit.center_x_um;
  j["chi2_per_dof"] = fit.chi2_per_dof;
  j["weights"] = json::array();
  for (std::size_t p = 0; p < fit.weights.size(); ++p)
    j["weights"].push_back({{"p", static_cast<int>(p)},
                            {"weight", fit.weights[p]},
                            {"sigma", fit.weight_sigmas[p]}});
  return j.dump(2);
}

void write_events_csv(const std::vector<EventRecord>& events, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "event_id,true_column,true_x_um,true_y_um,t_pos_ps,t_neg_ps\n";
  std::string line;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    line.clear();
    line += std::to_string(i);
    line += ',';
    line += std::to_string(e.true_column);
    line += ',';
    line += format_double(e.true_x_um);
    line += ',';
    line += format_double(e.true_y_um);
    line += ',';
    line += format_double(e.tags.t_pos_ps);
    line += ',';
    line += format_double(e.tags.t_neg_ps);
    line += '\n';
    out << line;
  }
  if (!out) throw io_error("write failed: " + path);
}

std::vector<EventRecord> read_events_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "event_id,true_column,true_x_um,true_y_um,t_pos_ps,t_neg_ps")
    throw invalid_input("events CSV: missing or wrong header in " + path);

  std::vector<EventRecord> events;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<std::string, 6> fields;
    std::size_t start = 0, field = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 6)
          throw invalid_input("events CSV: too many fields at line " + std::to_string(lineno));
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 6)
      throw invalid_input("events CSV: expected 6 fields at line " + std::to_string(lineno));
    EventRecord e;
    e.true_column = static_cast<int>(parse_double(fields[1], lineno));
    e.true_x_um = parse_double(fields[2], lineno);
    e.true_y_um = parse_double(fields[3], lineno);
    e.tags.t_pos_ps = parse_double(fields[4], lineno);
    e.tags.t_neg_ps = parse_double(fields[5], lineno);
    events.push_back(e);
  }
  return events;
}

void write_profile_csv(const ColumnProfile& profile, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "column_x_um,counts\n";
  for (std::size_t k = 0; k < profile.x_um.size(); ++k)
    out << format_double(profile.x_um[k]) << ',' << profile.counts[k] << '\n';
}

void write_histogram_csv(const DtHistogram& hist, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "bin_lo_ps,bin_hi_ps,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out << format_double(hist.bin_edges_ps[i]) << ',' << format_double(hist.bin_edges_ps[i + 1]) << ','
        << hist.counts[i] << '\n';
}

namespace {
constexpr int kW = 640, kH = 400, kMargin = 50;

struct SvgCanvas {
  std::ostringstream body;
  double x0, x1, y0, y1;  // data ranges

  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kW - 2 * kMargin); }
  double py(double y) const { return kH - kMargin - (y - y0) / (y1 - y0) * (kH - 2 * kMargin); }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& style) {
    body << "<polyline fill=\"none\" style=\"" << style << "\" points=\"";
    for (const auto& [x, y] : pts) body << px(x) << ',' << py(y) << ' ';
    body << "\"/>\n";
  }

  void circle(double x, double y, const std::string& fill) {
    body << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
         << "\" r=\"3\" fill=\"" << fill << "\"/>\n";
  }

  void save(const std::string& path, const std::string& xlabel,
            const std::string& ylabel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
        << "\" height=\"" << kH << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
        << xlabel << "</text>\n"
        << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
        << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n"
        << body.str() << "</svg>\n";
  }
};
}  // namespace

void write_profile_svg(const ColumnProfile& profile, const ModeFitResult& fit,
                       const DetectorGeometry& geom, const std::string& path) {
  if (profile.x_um.empty() || profile.total == 0)
    throw invalid_input("write_profile_svg: empty profile");
  // Per-column density normalized over the pitch, overlaid with the fit marginal.
  const double pitch = geom.column_pitch_um;
  SvgCanvas svg;
  svg.x0 = profile.x_um.front() - pitch;
  svg.x1 = profile.x_um.back() + pitch;
  svg.y0 = 0.0;

  std::vector<std::pair<double, double>> data;
  double ymax = 0.0;
  for (std::size_t k = 0; k < profile.x_um.size(); ++k) {
    const double density = static_cast<double>(profile.counts[k]) /
                           static_cast<double>(profile.total) / pitch;
    data.emplace_back(profile.x_um[k], density);
    ymax = std::max(ymax, density);
  }

  const double w = 0.5 * fit.mfd_um;
  std::vector<std::pair<double, double>> curve;
  for (int i = 0; i <= 400; ++i) {
    const double x = svg.x0 + (svg.x1 - svg.x0) * i / 400.0;
    double m = 0.0;
    for (std::size_t p = 0; p < fit.weights.size(); ++p)
      if (fit.weights[p] > 0.0)
        m += fit.weights[p] * lg_marginal(static_cast<int>(p), w, x - fit.center_x_um);
    curve.emplace_back(x, m);
    ymax = std::max(ymax, m);
  }
  svg.y1 = 1.1 * ymax;
  svg.polyline(curve, "stroke:#1f77b4;stroke-width:1.5");
  for (const auto& [x, y] : data) svg.circle(x, y, "#ff7f0e");
  svg.save(path, "x (um)", "marginal density (1/um)");
}

void write_tail_svg(const ColumnProfile& profile, const ModeFitResult& fit,
                    const std::string& path) {
  if (profile.x_um.empty() || profile.total == 0)
    throw invalid_input("write_tail_svg: empty profile");
  SvgCanvas svg;
  svg.x0 = 0.0;
  svg.x1 = std::max(std::abs(profile.x_um.front()), std::abs(profile.x_um.back()));
  svg.y0 = 0.0;
  svg.y1 = 1.05;

  std::vector<std::pair<double, double>> curve;
  for (int i = 0; i <= 200; ++i) {
    const double x = svg.x1 * i / 200.0;
    curve.emplace_back(x, tail_power_fit(fit, x));
  }
  svg.polyline(curve, "stroke:#1f77b4;stroke-width:1.5;stroke-dasharray:5 3");
  for (const auto& x : profile.x_um) {
    const double xa = std::abs(x - fit.center_x_um);
    svg.circle(xa, tail_power_profile(profile, fit.center_x_um, xa), "#ff7f0e");
  }
  svg.save(path, "|x| (um)", "fractional power outside |x|");
}

}  // namespace tofbeam
