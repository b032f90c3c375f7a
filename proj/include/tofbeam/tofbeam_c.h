/* C API for the tofbeam shared library.
 *
 * All functions return a tb_status; outputs are written through pointers.
 * On failure, tb_last_error() returns a thread-local description of the most
 * recent error. Strings returned through char** are heap-allocated and must
 * be released with tb_string_free(); handles with their matching _free().
 */
#ifndef TOFBEAM_C_H
#define TOFBEAM_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define TB_API __declspec(dllexport)
#else
#define TB_API __attribute__((visibility("default")))
#endif

typedef enum tb_status {
  TB_OK = 0,
  TB_EINVAL = 2,   /* invalid input / precondition violation */
  TB_ENUMERIC = 3, /* numerical failure */
  TB_EIO = 4       /* file I/O failure */
} tb_status;

typedef struct tb_modespec tb_modespec;
typedef struct tb_geometry tb_geometry;
typedef struct tb_stackspec tb_stackspec;

TB_API const char* tb_last_error(void);
TB_API void tb_string_free(char* s);

/* ---- beam modes ---- */

TB_API tb_status tb_modespec_from_json(const char* json, tb_modespec** out);
TB_API tb_status tb_modespec_gaussian(double mfd_um, double wavelength_um,
                                      tb_modespec** out);
TB_API tb_status tb_modespec_to_json(const tb_modespec* spec, char** json_out);
TB_API void tb_modespec_free(tb_modespec* spec);

TB_API tb_status tb_intensity_2d(const tb_modespec* spec, double x_um, double y_um,
                                 double* out);
TB_API tb_status tb_marginal_1d(const tb_modespec* spec, double x_um, double* out);
TB_API tb_status tb_rayleigh_range(double mfd_um, double wavelength_um, double* out);
TB_API tb_status tb_beam_radius_at(double w0_um, double z_r_um, double z_um,
                                   double* out);
TB_API tb_status tb_infer_path_length(double mfd_initial_um, double mfd_final_um,
                                      double wavelength_um, double* out);

/* ---- detector geometry & simulation ---- */

TB_API tb_status tb_geometry_default(tb_geometry** out);
TB_API tb_status tb_geometry_from_json(const char* json, tb_geometry** out);
TB_API tb_status tb_geometry_to_json(const tb_geometry* geom, char** json_out);
TB_API void tb_geometry_free(tb_geometry* geom);

/* Writes the event CSV and, when summary_json_out is non-null, a summary
 * {"n_events", "acceptance_rate", "seed"}. Deterministic for a fixed seed,
 * independent of n_threads. */
TB_API tb_status tb_simulate_csv(const tb_modespec* spec, const tb_geometry* geom,
                                 uint64_t n, uint64_t seed, unsigned n_threads,
                                 const char* csv_path, char** summary_json_out);

/* ---- analysis chain ---- */

/* Runs histogram -> comb lock -> column binning -> mode fit -> tail power on
 * an event CSV. Writes <out_dir>/fit.json, profile.csv, histogram.csv and,
 * when write_svg != 0, profile.svg and tail.svg. fit_json_out receives the
 * fit result. */
TB_API tb_status tb_analyze_csv(const char* events_csv, const tb_geometry* geom,
                                int max_p, double hist_bin_width_ps,
                                const char* out_dir, int write_svg,
                                char** fit_json_out);

/* ---- multilayer stack ---- */

TB_API tb_status tb_stackspec_from_json(const char* json, tb_stackspec** out);
TB_API tb_status tb_stackspec_reference(double mosi_n, double mosi_k,
                                            int low_index_adjacent,
                                            tb_stackspec** out);
TB_API tb_status tb_stackspec_to_json(const tb_stackspec* stack, char** json_out);
TB_API void tb_stackspec_free(tb_stackspec* stack);

TB_API tb_status tb_tmm_response_json(const tb_stackspec* stack, char** json_out);
TB_API tb_status tb_multipass_path_length(double per_pass_absorption,
                                          double single_pass_path_um, double* out);

/* ---- coupling ---- */

TB_API tb_status tb_coupling_efficiency(const tb_modespec* spec,
                                        double active_diameter_um, double offset_um,
                                        double* out);
TB_API tb_status tb_max_tolerable_offset(const tb_modespec* spec,
                                         double active_diameter_um,
                                         double loss_budget, double* out);
/* CSV matrix of losses: header row of offsets, one row per diameter. */
TB_API tb_status tb_tolerance_curve_csv(const tb_modespec* spec,
                                        const double* diameters_um, size_t n_diameters,
                                        const double* offsets_um, size_t n_offsets,
                                        char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* TOFBEAM_C_H */
