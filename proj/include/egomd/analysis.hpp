#pragma once

#include <optional>
#include <string>
#include <vector>

#include "egomd/engine.hpp"
#include "egomd/trajectory.hpp"

namespace egomd {

// Time-mapping factor S plus the cube-root hydrodynamic-radius factor for
// beads containing n molecules.
struct ScalingParams {
    double s = 1.0;  // dimensionless time mapping
    int n = 1;       // atomistic molecules per CG molecule

    double diffusivity_factor() const;  // n^(1/3)
    void validate() const;

    void save(const std::string& path) const;
    static ScalingParams load(const std::string& path);
};

struct MeanWithError {
    double mean = 0.0;
    double std_error = 0.0;
};

// Block-averaged standard error of the mean (5 blocks, mirroring the
// 5-replica protocol).
MeanWithError block_average(const std::vector<double>& samples, int blocks = 5);

// Mass density over [t0, t1] in g/cm^3.
MeanWithError density(const Trajectory& traj, double t_begin, double t_end);

struct MsdCurve {
    std::vector<double> lag;    // ps, starting at 0
    std::vector<double> value;  // nm^2
    std::vector<int> origins;   // time origins contributing per lag
    std::string species;
};

// Center-of-mass MSD per species, averaged over molecules and over time
// origins on the origin_stride grid. Uses the unwrapped position stream.
MsdCurve msd(const Trajectory& traj, const std::string& species, double max_lag, double origin_stride);

struct DiffusionResult {
    double d = 0.0;        // m^2/s
    double slope = 0.0;    // nm^2/ps
    double r_squared = 0.0;
    bool poor_fit = false;  // R^2 < 0.9
};

// Einstein relation: D = slope/6 over the fit window, converted to m^2/s.
DiffusionResult diffusion_from_msd(const MsdCurve& curve, double fit_begin, double fit_end);

// S = cbrt(3) * D_cg_water / D_exp_water.
double compute_time_mapping(double d_cg_water, double d_exp_water);

// D_AA = S^-1 * n^(1/3) * D_CG.
double scale_diffusion(double d_cg, const ScalingParams& sp);

// eta_AA = S * eta_CG.
double scale_viscosity(double eta_cg, double s);

// Reciprocal-viscosity estimator over the retained frames of a cosine-forced
// trajectory; returns eta = 1/<eta^-1> in mPa s with block-averaged error.
MeanWithError viscosity_from_nemd(const Trajectory& traj, const NemdForcing& forcing, double discard);

enum class ShearRateVerdict { Pass, Warn };

struct ShearRateGuard {
    double sh_max = 0.0;  // 1/ps
    ShearRateVerdict verdict = ShearRateVerdict::Pass;
};

// sh_max = A * (rho/eta) * (l_z / 2 pi); WARN when it exceeds the inverse of
// the longest correlation time. SI inputs except A (nm/ps^2) and l_z (nm).
ShearRateGuard max_shear_rate(double amplitude, double rho_kg_m3, double eta_cg_pas, double l_z_nm,
                              double tau_longest_ps);

struct RelaxationResult {
    double tau = 0.0;  // ps
    std::vector<double> lag;
    std::vector<double> correlation;
};

// Rotational relaxation of the unit end-to-end vector: single-exponential fit
// of C(tau) over the window C in [0.8, 0.1].
RelaxationResult end_to_end_relaxation(const Trajectory& traj, const std::string& species);

struct NmrWaterDiffusion {
    double d_w = 0.0;
    bool valid = true;  // false when the literal form goes non-positive
};

// Fast-exchange correction for the water self-diffusion coefficient measured
// through the hydroxyl peak. The literal form implements the published
// coefficients; the population-average form inverts
// D_OH = chi*D_EGO + (1-chi)*D_w.
enum class NmrForm { Literal, PopulationAverage };
NmrWaterDiffusion water_diffusion_from_nmr(double d_oh, double d_ego, double chi,
                                           NmrForm form = NmrForm::Literal);

// Least-squares helper shared by the estimators: fit y = a + b x.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace egomd
