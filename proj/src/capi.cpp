#include "egomd.h"

#include <cstring>
#include <string>

#include "egomd/analysis.hpp"
#include "egomd/calibrate.hpp"
#include "egomd/engine.hpp"
#include "egomd/errors.hpp"
#include "egomd/forcefield.hpp"
#include "egomd/version.hpp"
#include "egomd/workflows.hpp"

struct egomd_forcefield {
    egomd::ForceField ff;
};
struct egomd_system {
    egomd::SystemState state;
};
struct egomd_trajectory {
    egomd::Trajectory traj;
};
struct egomd_curve {
    egomd::MsdCurve curve;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
egomd_status guarded(Fn&& fn) {
    try {
        fn();
        return EGOMD_OK;
    } catch (const egomd::UserError& e) {
        set_error(e.what());
        return EGOMD_USER_ERROR;
    } catch (const egomd::NumericError& e) {
        set_error(e.what());
        return EGOMD_NUMERIC_ERROR;
    } catch (const std::exception& e) {
        set_error(e.what());
        return EGOMD_NUMERIC_ERROR;
    }
}

egomd_status require(bool ok, const char* msg) {
    if (!ok) {
        set_error(msg);
        return EGOMD_USER_ERROR;
    }
    return EGOMD_OK;
}

}  // namespace

extern "C" {

const char* egomd_version(void) { return egomd::kVersion; }

const char* egomd_last_error(void) { return g_last_error.c_str(); }

egomd_status egomd_forcefield_load(const char* name_or_path, egomd_forcefield** out) {
    if (auto st = require(name_or_path && out, "null argument")) return st;
    return guarded([&] { *out = new egomd_forcefield{egomd::resolve_forcefield(name_or_path)}; });
}

egomd_status egomd_forcefield_save(const egomd_forcefield* ff, const char* path) {
    if (auto st = require(ff && path, "null argument")) return st;
    return guarded([&] { ff->ff.save(path); });
}

void egomd_forcefield_free(egomd_forcefield* ff) { delete ff; }

egomd_status egomd_system_build(const egomd_forcefield* ff, const char* species, int molecule_count,
                                double density_gcm3, double temperature_k, uint64_t seed,
                                egomd_system** out) {
    if (auto st = require(ff && species && out, "null argument")) return st;
    return guarded([&] {
        std::vector<egomd::MoleculeTemplate> templates = {egomd::standard_molecule(species)};
        auto topo = std::make_shared<egomd::Topology>(
            ff->ff.bead_types, templates,
            std::vector<std::pair<std::string, int>>{{species, molecule_count}});
        const auto eq = ff->ff.equilibrium_bond_lengths(*topo);
        *out = new egomd_system{egomd::build_system(topo, density_gcm3, temperature_k, seed, &eq)};
    });
}

egomd_status egomd_system_build_mixture(const egomd_forcefield* ff, const char* species,
                                        double weight_fraction, int total_beads, double density_gcm3,
                                        double temperature_k, uint64_t seed, egomd_system** out) {
    if (auto st = require(ff && species && out, "null argument")) return st;
    return guarded([&] {
        egomd::MixtureSpec spec;
        spec.species = species;
        spec.weight_fraction = weight_fraction;
        spec.temperature = temperature_k;
        auto topo = egomd::compose_mixture(ff->ff, spec, total_beads);
        const auto eq = ff->ff.equilibrium_bond_lengths(*topo);
        *out = new egomd_system{egomd::build_system(topo, density_gcm3, temperature_k, seed, &eq)};
    });
}

void egomd_system_free(egomd_system* sys) { delete sys; }

int egomd_system_size(const egomd_system* sys) { return sys ? sys->state.size() : 0; }

double egomd_system_density(const egomd_system* sys) { return sys ? sys->state.density_gcm3() : 0.0; }

egomd_status egomd_run_md(egomd_system* sys, const egomd_forcefield* ff,
                          const egomd_run_options* options, egomd_trajectory** out_traj) {
    if (auto st = require(sys && ff && options && options->ensemble, "null argument")) return st;
    return guarded([&] {
        egomd::IntegratorConfig cfg;
        cfg.ensemble = egomd::ensemble_from_string(options->ensemble);
        if (options->dt_ps > 0) cfg.dt = options->dt_ps;
        if (options->temperature_k > 0) cfg.temperature = options->temperature_k;
        if (options->pressure_bar > 0) cfg.pressure_bar = options->pressure_bar;
        if (options->thermostat_tau_ps > 0) cfg.thermostat_tau = options->thermostat_tau_ps;
        if (options->barostat_tau_ps > 0) cfg.barostat_tau = options->barostat_tau_ps;
        cfg.validate();

        if (options->settle_ps > 0) {
            egomd::settle_overlaps(sys->state, ff->ff, cfg.temperature, options->settle_ps);
            sys->state.time = 0.0;
        }

        egomd::RunOptions run_opts;
        run_opts.duration = options->duration_ps;
        run_opts.sample_interval = options->sample_interval_ps > 0 ? options->sample_interval_ps : 1.0;
        if (options->nemd_amplitude > 0) run_opts.forcing = egomd::NemdForcing{options->nemd_amplitude};
        if (options->trajectory_path) run_opts.trajectory_path = options->trajectory_path;
        auto traj = egomd::run(sys->state, ff->ff, cfg, run_opts);
        if (out_traj) *out_traj = new egomd_trajectory{std::move(traj)};
    });
}

egomd_status egomd_trajectory_open(const char* path, egomd_trajectory** out) {
    if (auto st = require(path && out, "null argument")) return st;
    return guarded([&] { *out = new egomd_trajectory{egomd::Trajectory::load(path)}; });
}

void egomd_trajectory_free(egomd_trajectory* traj) { delete traj; }

int egomd_trajectory_frame_count(const egomd_trajectory* traj) {
    return traj ? traj->traj.frame_count() : 0;
}

egomd_status egomd_trajectory_export_xyz(const egomd_trajectory* traj, const char* path) {
    if (auto st = require(traj && path, "null argument")) return st;
    return guarded([&] { egomd::export_xyz(traj->traj, path); });
}

egomd_status egomd_density(const egomd_trajectory* traj, double t_begin_ps, double t_end_ps,
                           double* mean_gcm3, double* std_error) {
    if (auto st = require(traj && mean_gcm3, "null argument")) return st;
    return guarded([&] {
        const auto r = egomd::density(traj->traj, t_begin_ps, t_end_ps);
        *mean_gcm3 = r.mean;
        if (std_error) *std_error = r.std_error;
    });
}

egomd_status egomd_msd(const egomd_trajectory* traj, const char* species, double max_lag_ps,
                       double origin_stride_ps, egomd_curve** out) {
    if (auto st = require(traj && species && out, "null argument")) return st;
    return guarded(
        [&] { *out = new egomd_curve{egomd::msd(traj->traj, species, max_lag_ps, origin_stride_ps)}; });
}

int egomd_curve_size(const egomd_curve* curve) {
    return curve ? static_cast<int>(curve->curve.lag.size()) : 0;
}

egomd_status egomd_curve_point(const egomd_curve* curve, int index, double* x, double* y) {
    if (auto st = require(curve && x && y, "null argument")) return st;
    if (index < 0 || index >= static_cast<int>(curve->curve.lag.size())) {
        set_error("curve index out of range");
        return EGOMD_USER_ERROR;
    }
    *x = curve->curve.lag[index];
    *y = curve->curve.value[index];
    return EGOMD_OK;
}

void egomd_curve_free(egomd_curve* curve) { delete curve; }

egomd_status egomd_diffusion_from_msd(const egomd_curve* curve, double fit_begin_ps, double fit_end_ps,
                                      double* d_m2s, double* r_squared, int* poor_fit) {
    if (auto st = require(curve && d_m2s, "null argument")) return st;
    return guarded([&] {
        const auto r = egomd::diffusion_from_msd(curve->curve, fit_begin_ps, fit_end_ps);
        *d_m2s = r.d;
        if (r_squared) *r_squared = r.r_squared;
        if (poor_fit) *poor_fit = r.poor_fit ? 1 : 0;
    });
}

egomd_status egomd_viscosity_nemd(const egomd_trajectory* traj, double amplitude, double discard_ps,
                                  double* eta_cg_mpas, double* std_error) {
    if (auto st = require(traj && eta_cg_mpas, "null argument")) return st;
    return guarded([&] {
        const auto r = egomd::viscosity_from_nemd(traj->traj, egomd::NemdForcing{amplitude}, discard_ps);
        *eta_cg_mpas = r.mean;
        if (std_error) *std_error = r.std_error;
    });
}

egomd_status egomd_end_to_end_relaxation(const egomd_trajectory* traj, const char* species,
                                         double* tau_ps) {
    if (auto st = require(traj && species && tau_ps, "null argument")) return st;
    return guarded([&] { *tau_ps = egomd::end_to_end_relaxation(traj->traj, species).tau; });
}

egomd_status egomd_time_mapping(double d_cg_water_m2s, double d_exp_water_m2s, double* s) {
    if (auto st = require(s != nullptr, "null argument")) return st;
    return guarded([&] { *s = egomd::compute_time_mapping(d_cg_water_m2s, d_exp_water_m2s); });
}

egomd_status egomd_scale_diffusion(double d_cg_m2s, double s, int molecules_per_bead, double* d_aa_m2s) {
    if (auto st = require(d_aa_m2s != nullptr, "null argument")) return st;
    return guarded([&] { *d_aa_m2s = egomd::scale_diffusion(d_cg_m2s, {s, molecules_per_bead}); });
}

egomd_status egomd_scale_viscosity(double eta_cg, double s, double* eta_aa) {
    if (auto st = require(eta_aa != nullptr, "null argument")) return st;
    return guarded([&] { *eta_aa = egomd::scale_viscosity(eta_cg, s); });
}

egomd_status egomd_rmse_log_diffusion(const double* d_exp, const double* d_aa, int count, double* rmse) {
    if (auto st = require(d_exp && d_aa && rmse && count > 0, "null or empty argument")) return st;
    return guarded([&] {
        std::vector<std::pair<double, double>> pairs;
        for (int i = 0; i < count; ++i) pairs.emplace_back(d_exp[i], d_aa[i]);
        *rmse = egomd::rmse_log_diffusion(pairs);
    });
}

egomd_status egomd_max_shear_rate(double amplitude, double rho_kg_m3, double eta_cg_pas,
                                  double l_z_nm, double tau_longest_ps, double* sh_max_per_ps,
                                  int* pass) {
    if (auto st = require(sh_max_per_ps != nullptr, "null argument")) return st;
    return guarded([&] {
        const auto g = egomd::max_shear_rate(amplitude, rho_kg_m3, eta_cg_pas, l_z_nm, tau_longest_ps);
        *sh_max_per_ps = g.sh_max;
        if (pass) *pass = g.verdict == egomd::ShearRateVerdict::Pass ? 1 : 0;
    });
}

egomd_status egomd_water_diffusion_from_nmr(double d_oh_m2s, double d_ego_m2s, double chi,
                                            int literal_form, double* d_w_m2s, int* valid) {
    if (auto st = require(d_w_m2s != nullptr, "null argument")) return st;
    return guarded([&] {
        const auto r = egomd::water_diffusion_from_nmr(
            d_oh_m2s, d_ego_m2s, chi,
            literal_form ? egomd::NmrForm::Literal : egomd::NmrForm::PopulationAverage);
        *d_w_m2s = r.d_w;
        if (valid) *valid = r.valid ? 1 : 0;
    });
}

egomd_status egomd_cmd_run(const char* config_path, const char* outdir, int resume, int jobs,
                           char* manifest_path_buf, size_t buf_len) {
    if (auto st = require(config_path && outdir, "null argument")) return st;
    egomd::RunManifest manifest;
    const egomd_status st = guarded(
        [&] { manifest = egomd::cmd_run(config_path, outdir, resume != 0, jobs > 0 ? jobs : 1); });
    if (st != EGOMD_OK) return st;
    if (manifest_path_buf && buf_len > 0) {
        const std::string path = std::string(outdir) + "/manifest.txt";
        std::snprintf(manifest_path_buf, buf_len, "%s", path.c_str());
    }
    if (!manifest.all_ok()) {
        set_error("one or more replicas failed; see the manifest for per-replica status");
        return EGOMD_PARTIAL_FAILURE;
    }
    return EGOMD_OK;
}

egomd_status egomd_cmd_analyze(const char* manifest_path, const egomd_analyze_options* options) {
    if (auto st = require(manifest_path && options && options->kind, "null argument")) return st;
    return guarded([&] {
        egomd::AnalyzeOptions opts;
        opts.kind = options->kind;
        if (options->species) opts.species = options->species;
        if (options->scaling_file) opts.scaling_file = options->scaling_file;
        if (options->outdir) opts.outdir = options->outdir;
        opts.window_begin = options->window_begin_ps;
        opts.window_end = options->window_end_ps;
        opts.max_lag = options->max_lag_ps;
        opts.origin_stride = options->origin_stride_ps;
        opts.discard = options->discard_ps;
        opts.fit_begin = options->fit_begin_ps;
        opts.fit_end = options->fit_end_ps;
        egomd::cmd_analyze(manifest_path, opts);
    });
}

egomd_status egomd_cmd_invert(const char* traj_xyz_path, const char* mapping_path, int m,
                              double temperature_k, const char* out_path) {
    if (auto st = require(traj_xyz_path && mapping_path && out_path, "null argument")) return st;
    return guarded([&] { egomd::cmd_invert(traj_xyz_path, mapping_path, m, temperature_k, out_path); });
}

egomd_status egomd_cmd_calibrate(const char* manifest_path, const char* outdir) {
    if (auto st = require(manifest_path && outdir, "null argument")) return st;
    return guarded([&] {
        const auto outcome = egomd::cmd_calibrate(manifest_path, outdir);
        if (!outcome.converged)
            throw egomd::NumericError("step 3/4 alternation did not converge; best-so-far written "
                                      "with NOT_CONVERGED status");
    });
}

egomd_status egomd_cmd_verify(const char* manifest_path) {
    if (auto st = require(manifest_path != nullptr, "null argument")) return st;
    return guarded([&] { egomd::cmd_verify(manifest_path); });
}

egomd_status egomd_cmd_export(const char* traj_path, const char* out_xyz_path) {
    if (auto st = require(traj_path && out_xyz_path, "null argument")) return st;
    return guarded([&] { egomd::cmd_export(traj_path, out_xyz_path); });
}

}  // extern "C"
