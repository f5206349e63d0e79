#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "egomd/calibrate.hpp"
#include "egomd/engine.hpp"

namespace egomd {

// Run configuration file (egomd-run format). Physical quantities carry unit
// annotations in the file; values here are already in internal units.
struct RunConfig {
    std::string forcefield = "ego_water_293K";
    std::string mode = "desk";
    std::uint64_t seed = 12345;
    int replicas = 5;

    // system composition: explicit molecule counts, or an oligomer/PW mixture
    std::vector<std::pair<std::string, int>> molecules;
    std::optional<std::pair<std::string, double>> mixture;  // species, weight fraction
    int beads = 600;                                        // target size for mixtures
    double build_density = 1.0;                             // g/cm^3 for the initial lattice
    std::string restart;                                    // checkpoint path, overrides building

    IntegratorConfig integrator;
    double settle = 10.0;          // capped-force NVT settle after building, ps
    double melt = 20.0;            // hot pre-settle after building, ps (0 disables)
    double equilibration = 0.0;    // NpT stage before production, ps
    double duration = 100.0;       // production, ps
    double sample_interval = 1.0;  // ps
    std::optional<NemdForcing> forcing;

    static RunConfig load(const std::string& path);
    static RunConfig from_text(const std::string& content, const std::string& path);
};

struct ReplicaRecord {
    int index = 0;
    std::uint64_t seed = 0;
    std::string trajectory;       // path relative to the manifest directory
    std::string trajectory_hash;  // content hash of the file
    std::string checkpoint;
    std::string status;  // ok | failed: <reason>
};

struct RunManifest {
    std::string config_hash;
    std::string forcefield_id;
    std::string toolkit_version;
    std::string units_stamp;
    std::string mode;
    double nemd_amplitude = 0.0;  // 0: unforced
    double duration = 0.0;
    std::vector<ReplicaRecord> replicas;

    bool all_ok() const;
    void save(const std::string& path) const;  // atomic
    static RunManifest load(const std::string& path);
};

// Executes the replica protocol (build, settle, NpT equilibration, production
// in the configured ensemble), writes one trajectory per replica plus the
// manifest. Refuses to overwrite an existing manifest unless resume is set;
// with resume, completed replicas (hash-verified) are skipped.
RunManifest cmd_run(const std::string& config_path, const std::string& outdir, bool resume = false,
                    int jobs = 1);

struct AnalyzeOptions {
    std::string kind;     // density | msd | viscosity | relaxation
    std::string species;  // msd/relaxation; empty = every species
    double window_begin = -1.0, window_end = -1.0;  // density window, ps
    double max_lag = -1.0;                          // msd, ps (default 0.4 * duration)
    double origin_stride = -1.0;                    // msd, ps
    double discard = -1.0;                          // viscosity, ps (default 0.25 * duration)
    double fit_begin = -1.0, fit_end = -1.0;        // diffusion fit window, ps
    std::string scaling_file;                       // optional S file: adds AA columns
    std::string outdir;
};

// Per-replica analysis, replica mean and standard error; CSV plus a
// structured-text summary in outdir. Returns the summary text.
std::string cmd_analyze(const std::string& manifest_path, const AnalyzeOptions& options);

// Boltzmann-inversion pipeline over an XYZ-extended atomistic trajectory:
// map, histogram, renormalize, invert, fit. Writes (and returns) a bonded
// parameter block in the force-field file format.
std::string cmd_invert(const std::string& traj_path, const std::string& mapping_path, int m,
                       double temperature, const std::string& out_path);

struct CalibrateOutcome {
    ForceField forcefield;
    double s_value = 0.0;
    std::vector<std::string> report_paths;
    bool converged = true;
};

CalibrateOutcome cmd_calibrate(const std::string& manifest_path, const std::string& outdir);

// Re-hashes the config and every artifact listed in the manifest; throws
// UserError naming the first mismatch.
void cmd_verify(const std::string& manifest_path);

void cmd_export(const std::string& traj_path, const std::string& out_path);

}  // namespace egomd
