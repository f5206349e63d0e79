/* egomd — coarse-grained molecular dynamics toolkit, C API.
 *
 * Opaque handles + status codes over the C++ core. Every function returns
 * EGOMD_OK on success; on failure, egomd_last_error() carries a thread-local
 * message describing what went wrong. Handles returned through out-pointers
 * are owned by the caller and released with the matching *_free.
 *
 * Units at this boundary: lengths nm, times ps, temperatures K, pressures
 * bar, densities g/cm^3, diffusion m^2/s, viscosity mPa s, NEMD amplitude
 * nm/ps^2.
 */
#ifndef EGOMD_H
#define EGOMD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum egomd_status {
    EGOMD_OK = 0,
    EGOMD_USER_ERROR = 1,     /* bad input: files, arguments, schemas */
    EGOMD_NUMERIC_ERROR = 2,  /* numerical failure: blow-up, no signal, no convergence */
    EGOMD_PARTIAL_FAILURE = 3 /* some replicas failed; manifest records which */
} egomd_status;

const char* egomd_version(void);
const char* egomd_last_error(void);

typedef struct egomd_forcefield egomd_forcefield;
typedef struct egomd_system egomd_system;
typedef struct egomd_trajectory egomd_trajectory;
typedef struct egomd_curve egomd_curve;

/* ---- force fields ----------------------------------------------------- */

/* Accepts a file path or the bundled name "ego_water_293K". */
egomd_status egomd_forcefield_load(const char* name_or_path, egomd_forcefield** out);
egomd_status egomd_forcefield_save(const egomd_forcefield* ff, const char* path);
void egomd_forcefield_free(egomd_forcefield* ff);

/* ---- systems ----------------------------------------------------------- */

/* Single-species fluid of `molecule_count` molecules ("PW", "EGO2", ...). */
egomd_status egomd_system_build(const egomd_forcefield* ff, const char* species, int molecule_count,
                                double density_gcm3, double temperature_k, uint64_t seed,
                                egomd_system** out);
/* Oligomer/PW binary mixture at the given oligomer weight fraction. */
egomd_status egomd_system_build_mixture(const egomd_forcefield* ff, const char* species,
                                        double weight_fraction, int total_beads, double density_gcm3,
                                        double temperature_k, uint64_t seed, egomd_system** out);
void egomd_system_free(egomd_system* sys);
int egomd_system_size(const egomd_system* sys);
double egomd_system_density(const egomd_system* sys);

/* ---- molecular dynamics ------------------------------------------------ */

typedef struct egomd_run_options {
    const char* ensemble; /* "nve" | "nvt" | "npt" */
    double dt_ps;
    double temperature_k;
    double pressure_bar;
    double thermostat_tau_ps; /* <= 0: default 1.0 */
    double barostat_tau_ps;   /* <= 0: default 5.0 */
    double duration_ps;
    double sample_interval_ps;
    double settle_ps;            /* capped-force NVT settle before the run; 0 skips */
    double nemd_amplitude;       /* cosine forcing, nm/ps^2; 0 = unforced */
    const char* trajectory_path; /* optional output file; NULL = in-memory only */
} egomd_run_options;

/* Advances the system in place and returns the sampled trajectory. */
egomd_status egomd_run_md(egomd_system* sys, const egomd_forcefield* ff,
                          const egomd_run_options* options, egomd_trajectory** out_traj);

/* ---- trajectories ------------------------------------------------------ */

egomd_status egomd_trajectory_open(const char* path, egomd_trajectory** out);
void egomd_trajectory_free(egomd_trajectory* traj);
int egomd_trajectory_frame_count(const egomd_trajectory* traj);
egomd_status egomd_trajectory_export_xyz(const egomd_trajectory* traj, const char* path);

/* ---- analysis ----------------------------------------------------------- */

egomd_status egomd_density(const egomd_trajectory* traj, double t_begin_ps, double t_end_ps,
                           double* mean_gcm3, double* std_error);

egomd_status egomd_msd(const egomd_trajectory* traj, const char* species, double max_lag_ps,
                       double origin_stride_ps, egomd_curve** out);
int egomd_curve_size(const egomd_curve* curve);
egomd_status egomd_curve_point(const egomd_curve* curve, int index, double* x, double* y);
void egomd_curve_free(egomd_curve* curve);

egomd_status egomd_diffusion_from_msd(const egomd_curve* curve, double fit_begin_ps,
                                      double fit_end_ps, double* d_m2s, double* r_squared,
                                      int* poor_fit);

egomd_status egomd_viscosity_nemd(const egomd_trajectory* traj, double amplitude, double discard_ps,
                                  double* eta_cg_mpas, double* std_error);

egomd_status egomd_end_to_end_relaxation(const egomd_trajectory* traj, const char* species,
                                         double* tau_ps);

/* ---- scaling relations and scalar helpers ------------------------------ */

egomd_status egomd_time_mapping(double d_cg_water_m2s, double d_exp_water_m2s, double* s);
egomd_status egomd_scale_diffusion(double d_cg_m2s, double s, int molecules_per_bead, double* d_aa_m2s);
egomd_status egomd_scale_viscosity(double eta_cg, double s, double* eta_aa);
egomd_status egomd_rmse_log_diffusion(const double* d_exp, const double* d_aa, int count, double* rmse);
/* pass = 1 when sh_max stays below 1/tau_longest */
egomd_status egomd_max_shear_rate(double amplitude, double rho_kg_m3, double eta_cg_pas,
                                  double l_z_nm, double tau_longest_ps, double* sh_max_per_ps,
                                  int* pass);
/* literal_form = 1: published coefficients; 0: population-average inversion.
 * valid = 0 flags a non-positive (unphysical) result. */
egomd_status egomd_water_diffusion_from_nmr(double d_oh_m2s, double d_ego_m2s, double chi,
                                            int literal_form, double* d_w_m2s, int* valid);

/* ---- workflows (what the CLI drives) ----------------------------------- */

egomd_status egomd_cmd_run(const char* config_path, const char* outdir, int resume, int jobs,
                           char* manifest_path_buf, size_t buf_len);

typedef struct egomd_analyze_options {
    const char* kind;         /* "density" | "msd" | "viscosity" | "relaxation" */
    const char* species;      /* may be NULL */
    const char* scaling_file; /* may be NULL: adds AA-scale columns when given */
    const char* outdir;       /* may be NULL: <manifest dir>/analysis */
    double window_begin_ps, window_end_ps; /* < 0 selects defaults */
    double max_lag_ps, origin_stride_ps, discard_ps, fit_begin_ps, fit_end_ps;
} egomd_analyze_options;

egomd_status egomd_cmd_analyze(const char* manifest_path, const egomd_analyze_options* options);
egomd_status egomd_cmd_invert(const char* traj_xyz_path, const char* mapping_path, int m,
                              double temperature_k, const char* out_path);
egomd_status egomd_cmd_calibrate(const char* manifest_path, const char* outdir);
egomd_status egomd_cmd_verify(const char* manifest_path);
egomd_status egomd_cmd_export(const char* traj_path, const char* out_xyz_path);

#ifdef __cplusplus
}
#endif

#endif /* EGOMD_H */
