#include "tofbeam/tofbeam_c.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "tofbeam/analysis.hpp"
#include "tofbeam/beam.hpp"
#include "tofbeam/coupling.hpp"
#include "tofbeam/detector.hpp"
#include "tofbeam/errors.hpp"
#include "tofbeam/io.hpp"
#include "tofbeam/stack.hpp"

struct tb_modespec {
  tofbeam::ModeSpec spec;
};
struct tb_geometry {
  tofbeam::DetectorGeometry geom;
};
struct tb_stackspec {
  tofbeam::StackSpec stack;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
tb_status guarded(Fn&& fn) {
  try {
    fn();
    return TB_OK;
  } catch (const tofbeam::invalid_input& e) {
    g_last_error = e.what();
    return TB_EINVAL;
  } catch (const tofbeam::io_error& e) {
    g_last_error = e.what();
    return TB_EIO;
  } catch (const tofbeam::numerical_error& e) {
    g_last_error = e.what();
    return TB_ENUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TB_EIO;
  }
}

}  // namespace

extern "C" {

const char* tb_last_error(void) { return g_last_error.c_str(); }

void tb_string_free(char* s) { std::free(s); }

tb_status tb_modespec_from_json(const char* json, tb_modespec** out) {
  if (!json || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = new tb_modespec{tofbeam::modespec_from_json(json)}; });
}

tb_status tb_modespec_gaussian(double mfd_um, double wavelength_um, tb_modespec** out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    tofbeam::ModeSpec spec;
    spec.mfd_um = mfd_um;
    spec.wavelength_um = wavelength_um;
    spec.validate();
    *out = new tb_modespec{spec};
  });
}

tb_status tb_modespec_to_json(const tb_modespec* spec, char** json_out) {
  if (!spec || !json_out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *json_out = dup_string(tofbeam::modespec_to_json(spec->spec)); });
}

void tb_modespec_free(tb_modespec* spec) { delete spec; }

tb_status tb_intensity_2d(const tb_modespec* spec, double x_um, double y_um, double* out) {
  if (!spec || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = tofbeam::intensity_2d(spec->spec, x_um, y_um); });
}

tb_status tb_marginal_1d(const tb_modespec* spec, double x_um, double* out) {
  if (!spec || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = tofbeam::marginal_1d(spec->spec, x_um); });
}

tb_status tb_rayleigh_range(double mfd_um, double wavelength_um, double* out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = tofbeam::rayleigh_range(mfd_um, wavelength_um); });
}

tb_status tb_beam_radius_at(double w0_um, double z_r_um, double z_um, double* out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = tofbeam::beam_radius_at(w0_um, z_r_um, z_um); });
}

tb_status tb_infer_path_length(double mfd_initial_um, double mfd_final_um,
                               double wavelength_um, double* out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    *out = tofbeam::infer_path_length(mfd_initial_um, mfd_final_um, wavelength_um);
  });
}

tb_status tb_geometry_default(tb_geometry** out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = new tb_geometry{}; });
}

tb_status tb_geometry_from_json(const char* json, tb_geometry** out) {
  if (!json || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = new tb_geometry{tofbeam::geometry_from_json(json)}; });
}

tb_status tb_geometry_to_json(const tb_geometry* geom, char** json_out) {
  if (!geom || !json_out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *json_out = dup_string(tofbeam::geometry_to_json(geom->geom)); });
}

void tb_geometry_free(tb_geometry* geom) { delete geom; }

tb_status tb_simulate_csv(const tb_modespec* spec, const tb_geometry* geom,
                          uint64_t n, uint64_t seed, unsigned n_threads,
                          const char* csv_path, char** summary_json_out) {
  if (!spec || !geom || !csv_path) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    double acceptance = 0.0;
    const auto events =
        tofbeam::sample_events(spec->spec, geom->geom, n, seed, n_threads, &acceptance);
    tofbeam::write_events_csv(events, csv_path);
    if (summary_json_out) {
      nlohmann::json j;
      j["n_events"] = n;
      j["seed"] = seed;
      j["acceptance_rate"] = acceptance;
      *summary_json_out = dup_string(j.dump(2));
    }
  });
}

tb_status tb_analyze_csv(const char* events_csv, const tb_geometry* geom, int max_p,
                         double hist_bin_width_ps, const char* out_dir, int write_svg,
                         char** fit_json_out) {
  if (!events_csv || !geom) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    const auto events = tofbeam::read_events_csv(events_csv);
    if (events.empty()) throw tofbeam::invalid_input("events CSV has no rows");
    std::vector<tofbeam::TimeTagPair> pairs;
    pairs.reserve(events.size());
    for (const auto& e : events) pairs.push_back(e.tags);

    const auto& g = geom->geom;
    const auto hist = tofbeam::build_histogram(pairs, hist_bin_width_ps);
    const auto comb = tofbeam::lock_comb(hist, g.timing_pitch_ps());
    const auto profile = tofbeam::bin_to_columns(pairs, comb, g);
    const auto fit = tofbeam::fit_modes(profile, g, max_p);

    if (out_dir && *out_dir) {
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      tofbeam::write_histogram_csv(hist, (dir / "histogram.csv").string());
      tofbeam::write_profile_csv(profile, (dir / "profile.csv").string());
      std::ofstream fout(dir / "fit.json", std::ios::binary);
      fout << tofbeam::fit_to_json(fit) << '\n';
      if (write_svg) {
        tofbeam::write_profile_svg(profile, fit, g, (dir / "profile.svg").string());
        tofbeam::write_tail_svg(profile, fit, (dir / "tail.svg").string());
      }
    }
    if (fit_json_out) *fit_json_out = dup_string(tofbeam::fit_to_json(fit));
  });
}

tb_status tb_stackspec_from_json(const char* json, tb_stackspec** out) {
  if (!json || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *out = new tb_stackspec{tofbeam::stackspec_from_json(json)}; });
}

tb_status tb_stackspec_reference(double mosi_n, double mosi_k,
                                     int low_index_adjacent, tb_stackspec** out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    const auto ordering = low_index_adjacent
                              ? tofbeam::DbrOrdering::LowIndexAdjacentToAbsorber
                              : tofbeam::DbrOrdering::HighIndexAdjacentToAbsorber;
    *out = new tb_stackspec{tofbeam::reference_stack(mosi_n, mosi_k, ordering)};
  });
}

tb_status tb_stackspec_to_json(const tb_stackspec* stack, char** json_out) {
  if (!stack || !json_out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] { *json_out = dup_string(tofbeam::stackspec_to_json(stack->stack)); });
}

void tb_stackspec_free(tb_stackspec* stack) { delete stack; }

tb_status tb_tmm_response_json(const tb_stackspec* stack, char** json_out) {
  if (!stack || !json_out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    *json_out = dup_string(tofbeam::stackresponse_to_json(tofbeam::tmm_response(stack->stack)));
  });
}

tb_status tb_multipass_path_length(double per_pass_absorption,
                                   double single_pass_path_um, double* out) {
  if (!out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    *out = tofbeam::multipass_path_length(per_pass_absorption, single_pass_path_um);
  });
}

tb_status tb_coupling_efficiency(const tb_modespec* spec, double active_diameter_um,
                                 double offset_um, double* out) {
  if (!spec || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    *out = tofbeam::coupling_efficiency(spec->spec, active_diameter_um, offset_um);
  });
}

tb_status tb_max_tolerable_offset(const tb_modespec* spec, double active_diameter_um,
                                  double loss_budget, double* out) {
  if (!spec || !out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    *out = tofbeam::max_tolerable_offset(spec->spec, active_diameter_um, loss_budget);
  });
}

tb_status tb_tolerance_curve_csv(const tb_modespec* spec, const double* diameters_um,
                                 size_t n_diameters, const double* offsets_um,
                                 size_t n_offsets, char** csv_out) {
  if (!spec || !diameters_um || !offsets_um || !csv_out) {
    g_last_error = "null argument";
    return TB_EINVAL;
  }
  return guarded([&] {
    const std::vector<double> d(diameters_um, diameters_um + n_diameters);
    const std::vector<double> o(offsets_um, offsets_um + n_offsets);
    const auto curve = tofbeam::tolerance_curve(spec->spec, d, o);
    std::string csv = "diameter_um";
    for (double off : curve.offsets_um) csv += ",offset_" + tofbeam::format_double(off);
    csv += '\n';
    for (std::size_t i = 0; i < curve.diameters_um.size(); ++i) {
      csv += tofbeam::format_double(curve.diameters_um[i]);
      for (std::size_t j = 0; j < curve.offsets_um.size(); ++j)
        csv += ',' + tofbeam::format_double(curve.loss[i][j]);
      csv += '\n';
    }
    *csv_out = dup_string(csv);
  });
}

}  // extern "C"
