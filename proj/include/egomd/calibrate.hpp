#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "egomd/analysis.hpp"
#include "egomd/forcefield.hpp"

namespace egomd {

// A pure liquid (weight_fraction = 1) or a binary species/PW mixture at the
// given oligomer weight fraction.
struct MixtureSpec {
    std::string species;
    double weight_fraction = 1.0;  // mass fraction of `species`
    double temperature = 293.0;
    double pressure_bar = units::kAtmInBar;

    bool pure() const { return weight_fraction >= 1.0 - 1e-12; }
    std::string label() const;
};

struct CalibrationTarget {
    enum class Kind { Density, Diffusion };
    Kind kind = Kind::Density;
    MixtureSpec system;
    std::string species;  // diffusion: which component the value refers to
    double value = 0.0;   // g/cm^3 or m^2/s
    std::string source;   // experiment label

    void validate() const;
};

// Molecule counts realizing a mixture at ~total_beads beads. Pure systems get
// round(total/size) molecules; binary systems match the weight fraction by
// integer rounding of the PW count.
TopologyPtr compose_mixture(const ForceField& ff, const MixtureSpec& spec, int total_beads);

// The expensive primitive behind every calibration objective. The real
// implementation runs MD; the surrogate implements closed forms with a known
// optimum so the full pipeline can be exercised in seconds.
class Simulator {
public:
    virtual ~Simulator() = default;
    virtual double density_gcm3(const ForceField& ff, const MixtureSpec& spec) = 0;
    virtual double diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                                    const std::string& species) = 0;
    // Human-readable settings fingerprint; part of the cache key.
    virtual std::string fingerprint() const = 0;
};

struct RunLengths {
    double settle = 10.0;          // capped-force NVT settle, ps
    double melt = 40.0;            // hot pre-settle erasing the build lattice, ps
    double npt_equilibration = 60.0;
    double npt_production = 140.0;  // density from the last half
    double nvt_production = 600.0;  // diffusion
    double ego13_nvt_factor = 10.0;  // the long-chain systems need 10x sampling
    double msd_fit_begin = -1.0;     // ps; < 0 selects 10% of the max lag
    int target_beads = 600;
};

// Desk lengths are scaled-down stand-ins for the production protocol
// (2 ns NpT, 3/30 ns NVT); the estimator formulas are identical.
RunLengths desk_run_lengths();
RunLengths paper_run_lengths();

class RealSimulator : public Simulator {
public:
    RealSimulator(RunLengths lengths, std::uint64_t seed) : lengths_(lengths), seed_(seed) {}
    double density_gcm3(const ForceField& ff, const MixtureSpec& spec) override;
    double diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                            const std::string& species) override;
    std::string fingerprint() const override;

private:
    SystemState equilibrated(const ForceField& ff, const MixtureSpec& spec);
    RunLengths lengths_;
    std::uint64_t seed_;
};

// Closed-form pseudo-simulator with a known optimum at the Table-3 values.
// Densities respond monotonically to epsilon (so bisection works); log10
// diffusion errors are linear in the searched parameters and vanish exactly
// at the optimum.
class SurrogateSimulator : public Simulator {
public:
    double density_gcm3(const ForceField& ff, const MixtureSpec& spec) override;
    double diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                            const std::string& species) override;
    std::string fingerprint() const override;

    // experimental-style diffusion table the surrogate is engineered around
    static double reference_diffusion(const std::string& species, double weight_fraction);

    double sigma_pw0 = 0.40, sigma_pa0 = 0.45, sigma_pb0 = 0.46, gamma0 = 1.13;
    double eps_pw0 = 2.650, eps_pa0 = 4.356, eps_pb0 = 3.523;
    double s0 = 6.19;
    double d_exp_water = 2.0e-9;

private:
    double epsilon_curve(const std::string& bead, double sigma) const;
};

// Content-hash cache around any simulator: repeated evaluations with the same
// (force field, system, settings) are read back from disk, which is what
// makes interrupted calibrations resumable.
class CachingSimulator : public Simulator {
public:
    CachingSimulator(Simulator& inner, std::string cache_dir)
        : inner_(inner), cache_dir_(std::move(cache_dir)) {}
    double density_gcm3(const ForceField& ff, const MixtureSpec& spec) override;
    double diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                            const std::string& species) override;
    std::string fingerprint() const override { return inner_.fingerprint(); }
    int hits() const { return hits_; }
    int misses() const { return misses_; }

private:
    double cached(const std::string& key, const std::function<double()>& compute);
    Simulator& inner_;
    std::string cache_dir_;
    int hits_ = 0;
    int misses_ = 0;
};

// Eq-16 objective: sqrt(mean((log10 D_exp - log10 D_aa)^2)).
double rmse_log_diffusion(const std::vector<std::pair<double, double>>& exp_aa_pairs);

struct GridPoint {
    double parameter = 0.0;
    double objective = 0.0;  // RMSE or |density error|
    bool failed = false;
    std::string note;
};

struct CalibrationReport {
    int step = 0;
    std::string parameter_name;
    std::vector<GridPoint> grid;
    double selected = 0.0;
    double selected_objective = 0.0;
    double s_value = 0.0;  // step 1 only
    std::vector<std::string> trace;
    bool converged = true;

    // invariant: `selected` minimizes the recorded objective over non-failed
    // grid points; throws NumericError otherwise
    void check_argmin_consistency() const;
    std::string to_csv() const;
};

struct DensityMatch {
    double epsilon = 0.0;
    std::vector<std::pair<double, double>> trace;  // (epsilon, density)
};

// Bisection on epsilon of `bead_name` until the simulated density of `system`
// hits the target within tol_rel. The bracket must straddle the target and
// density must increase with epsilon over it.
DensityMatch match_density(const ForceField& ff, const std::string& bead_name,
                           const MixtureSpec& system, double target_gcm3, double eps_lo,
                           double eps_hi, Simulator& sim, double tol_rel = 0.005);

struct Step1Result {
    double epsilon_pw = 0.0;
    double s = 0.0;
    double d_cg_water = 0.0;  // m^2/s
    CalibrationReport report;
};

Step1Result step1_water(ForceField& ff, double sigma_pw, double d_exp_water, double density_target,
                        double eps_lo, double eps_hi, Simulator& sim);

struct Step2Result {
    double sigma_pa = 0.0;
    double epsilon_pa = 0.0;
    CalibrationReport report;
};

// For each sigma on the grid: match epsilon_PA on the pure-EGO2 density, run
// the listed mixtures, scale D via Eq. 10 and minimize the Eq. 16 RMSE.
Step2Result step2_pa(ForceField& ff, const std::vector<double>& sigma_grid, double s_value,
                     double density_target, const std::vector<CalibrationTarget>& diffusion_targets,
                     double eps_lo, double eps_hi, Simulator& sim);

struct Step34Result {
    double sigma_pb = 0.0;
    double epsilon_pb = 0.0;
    double gamma = 1.0;
    CalibrationReport report_sigma;  // step 3
    CalibrationReport report_gamma;  // step 4
    bool converged = true;
    int cycles = 0;
};

Step34Result step34_pb_gamma(ForceField& ff, const std::vector<double>& sigma_grid,
                             const std::vector<double>& gamma_grid, double s_value,
                             double density_target,
                             const std::vector<CalibrationTarget>& ego3_targets,
                             const std::vector<CalibrationTarget>& ego13_targets, double eps_lo,
                             double eps_hi, Simulator& sim, int max_cycles = 5,
                             bool gamma_first = false);

// Calibration manifest file (egomd-calibration format).
struct CalibrationManifest {
    std::string mode = "surrogate";  // surrogate | desk | paper
    std::uint64_t seed = 1;
    std::string base_forcefield = "ego_water_293K";
    double sigma_pw = 0.40;
    double d_exp_water = 2.0e-9;
    double eps_lo = 0.5, eps_hi = 10.0;
    int max_cycles = 5;

    struct StepSpec {
        bool present = false;
        double density_target = 0.0;
        std::vector<double> grid;
        std::vector<CalibrationTarget> diffusion_targets;
    };
    StepSpec step1, step2, step3, step4;

    static CalibrationManifest load(const std::string& path);
    static CalibrationManifest from_text(const std::string& content, const std::string& path);
};

std::vector<double> parse_grid(const std::vector<std::string>& tokens, const std::string& context);

}  // namespace egomd
