#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egomd/core.hpp"
#include "egomd/forcefield.hpp"
#include "egomd/neighbor.hpp"
#include "egomd/potentials.hpp"
#include "egomd/trajectory.hpp"
#include "egomd/units.hpp"

namespace egomd {

enum class Ensemble { NVE, NVT, NPT };

std::string to_string(Ensemble e);
Ensemble ensemble_from_string(const std::string& s);

struct IntegratorConfig {
    Ensemble ensemble = Ensemble::NVT;
    double dt = 0.010;              // ps (production CG time step)
    double temperature = 293.0;     // K
    double pressure_bar = units::kAtmInBar;
    double thermostat_tau = 1.0;    // ps; +inf decouples (NVE limit)
    double barostat_tau = 5.0;      // ps; +inf decouples (NVT limit)
    double neighbor_skin = 0.2;     // nm
    bool cap_forces = false;        // equilibration-only overlap handling
    std::uint64_t seed = 0;

    void validate() const;
};

// Spatially periodic body force a_x(z) = A cos(2 pi z / l_z).
struct NemdForcing {
    double amplitude = 0.0005;  // nm/ps^2

    double wavenumber(const Vec3& box) const;  // 2 pi / l_z, 1/nm
};

// Adds m_i * A cos(k z_i) along x for every bead (z wrapped into [0, l_z)).
void apply_cosine_acceleration(const SystemState& state, const NemdForcing& forcing,
                               std::vector<Vec3>& forces);

// Mass-weighted cosine Fourier amplitude of v_x: the instantaneous streaming
// profile V in v_x(z) ~= V cos(k z).
double cosine_velocity_amplitude(const SystemState& state, double wavenumber);

struct EnergyBreakdown {
    double bond = 0.0;
    double angle = 0.0;
    double nonbonded = 0.0;
    double kinetic = 0.0;
    double virial = 0.0;  // sum r.f over interactions, for the pressure

    double potential() const { return bond + angle + nonbonded; }
    double total() const { return potential() + kinetic; }
};

// Force evaluation bound to one force field + topology. Owns the neighbor
// list and the precombined LJ pair table; rebuilds the list on the
// half-skin displacement trigger.
class ForceCompute {
public:
    ForceCompute(const ForceField& ff, TopologyPtr topology, double skin = 0.2, bool cap_forces = false);

    const EnergyBreakdown& compute(const SystemState& state, std::vector<Vec3>& forces);
    const EnergyBreakdown& last() const { return energies_; }
    const NeighborList& neighbor_list() const { return nlist_; }
    double r_cut() const { return r_cut_; }
    void invalidate() { nlist_valid_ = false; }

private:
    struct PairEntry {
        double sigma2, epsilon, shift, r_cut2;
    };
    const PairEntry& pair_entry(int type_i, int type_j) const {
        return pair_table_[type_i * n_types_ + type_j];
    }

    TopologyPtr topology_;
    int n_types_ = 0;
    double r_cut_ = 1.4;
    double skin_ = 0.2;
    bool cap_forces_ = false;
    std::vector<PairEntry> pair_table_;
    std::vector<MixturePotential> bond_pots_;   // per topology bond kind (owned copies)
    std::vector<MixturePotential> angle_pots_;  // per topology angle kind
    NeighborList nlist_;
    bool nlist_valid_ = false;
    EnergyBreakdown energies_;
};

// Eq-2 style energy breakdown (bond + angle + nonbonded) plus kinetic energy,
// with 1-2/1-3 exclusions applied. Convenience wrapper that builds a fresh
// neighbor list.
EnergyBreakdown total_energy(const SystemState& state, const ForceField& ff);

// Relaxes residual overlap in a freshly built configuration: capped-force NVT
// with displacement clamping and periodic velocity rescaling, then exact
// rescale to the target temperature with net momentum removed. Leaves
// state.time untouched relative to entry.
void settle_overlaps(SystemState& state, const ForceField& ff, double temperature, double duration,
                     double dt = 0.005);

// Full from-scratch liquid preparation: overlap settle at an elevated melt
// temperature (erases the build lattice; cold dense systems would otherwise
// anneal into it), then re-settle at the target temperature.
void prepare_liquid(SystemState& state, const ForceField& ff, double temperature, double settle_ps,
                    double melt_ps);

// Velocity-Verlet core with Nose-Hoover thermostat (single chain) and an
// isotropic MTK-style barostat. All updates are deterministic; the integrator
// carries no RNG.
class Integrator {
public:
    Integrator(const ForceField& ff, TopologyPtr topology, IntegratorConfig cfg);

    void step(SystemState& state, const NemdForcing* forcing = nullptr);

    const IntegratorConfig& config() const { return cfg_; }
    const EnergyBreakdown& energies() const { return forces_engine_.last(); }
    ForceCompute& force_compute() { return forces_engine_; }

    // NVE: total energy. NVT: + thermostat terms. NPT: + barostat terms and
    // P_ext V. Constant along the trajectory up to integration error.
    double conserved_energy(const SystemState& state);

private:
    void ensure_forces(const SystemState& state);
    void kick(SystemState& state, const std::vector<Vec3>& forces, double dt_half);
    void drift(SystemState& state, double dt);
    void thermostat_half(SystemState& state, double dt_half, const NemdForcing* forcing);
    void barostat_kick(SystemState& state, double dt_half);
    void npt_drift(SystemState& state, double dt);
    double thermal_kinetic(const SystemState& state, const NemdForcing* forcing) const;

    IntegratorConfig cfg_;
    ForceCompute forces_engine_;
    std::vector<Vec3> forces_;  // interaction forces at the current positions
    std::vector<Vec3> total_;   // interaction + external forcing scratch
    bool forces_valid_ = false;
    double nf_ = 0.0;       // kinetic degrees of freedom (3N - 3)
    double q_mass_ = 0.0;   // thermostat inertia
    double w_mass_ = 0.0;   // barostat inertia
};

struct RunOptions {
    double duration = 0.0;         // ps
    double sample_interval = 1.0;  // ps
    std::optional<NemdForcing> forcing;
    std::string trajectory_path;   // empty: in-memory only
    std::string checkpoint_path;   // empty: no checkpoints
    int checkpoint_every_steps = 50000;
    std::map<std::string, std::string> metadata;
    bool keep_frames_in_memory = true;
    std::function<void(int step, const SystemState&)> on_sample;  // optional hook
};

// Integrates `state` for the requested duration, sampling frames on the
// sample_interval grid (frame 0 = initial state). Propagates step errors with
// the frame index attached.
Trajectory run(SystemState& state, const ForceField& ff, const IntegratorConfig& cfg,
               const RunOptions& opts);

}  // namespace egomd
