#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "egomd/vec3.hpp"

namespace egomd {

struct BeadType {
    std::string name;
    double mass = 0.0;     // amu
    double sigma = 0.0;    // nm
    double epsilon = 0.0;  // kJ/mol

    void validate() const;
};

// Lorentz-Berthelot by default; per-pair gamma multiplies the geometric-mean
// epsilon. Overrides are stored symmetrically.
class MixingRule {
public:
    void set_gamma(const std::string& type_i, const std::string& type_j, double gamma);
    double gamma(const std::string& type_i, const std::string& type_j) const;  // 1.0 if no override
    bool has_override(const std::string& type_i, const std::string& type_j) const;
    const std::map<std::pair<std::string, std::string>, double>& overrides() const { return overrides_; }

private:
    static std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b);
    std::map<std::pair<std::string, std::string>, double> overrides_;
};

struct MoleculeTemplate {
    std::string name;
    std::vector<std::string> bead_types;           // sequence of bead type names
    std::vector<std::array<int, 2>> bonds;         // index pairs within the molecule
    std::vector<std::array<int, 3>> angles;        // i-j-k triples, j is the vertex
    int molecules_per_bead = 1;                    // n: atomistic molecules per CG molecule

    int size() const { return static_cast<int>(bead_types.size()); }
};

// Standard species: PW (one bead, n=3) and EGO<k> chains PA-(PB)^(k-2)-PA
// with consecutive bonds and angles (EGO2 = PA-PA, EGO3 = PA-PB-PA, ...).
MoleculeTemplate standard_molecule(const std::string& name);
bool is_standard_molecule(const std::string& name);

// Fully flattened system composition. Built once, then shared immutably by
// states, trajectories and analysis.
class Topology {
public:
    Topology(std::vector<BeadType> bead_types,
             std::vector<MoleculeTemplate> templates,
             std::vector<std::pair<std::string, int>> counts);  // template name -> molecule count

    int bead_count() const { return static_cast<int>(bead_type_index_.size()); }
    int molecule_count() const { return static_cast<int>(molecule_first_bead_.size()); }

    const std::vector<BeadType>& bead_types() const { return bead_types_; }
    const BeadType& bead_type(int bead) const { return bead_types_[bead_type_index_[bead]]; }
    int bead_type_index(int bead) const { return bead_type_index_[bead]; }
    double bead_mass(int bead) const { return bead_types_[bead_type_index_[bead]].mass; }
    double total_mass() const { return total_mass_; }

    int molecule_of_bead(int bead) const { return molecule_index_[bead]; }
    int molecule_first_bead(int mol) const { return molecule_first_bead_[mol]; }
    int molecule_size(int mol) const { return molecule_size_[mol]; }
    const std::string& molecule_species(int mol) const;
    int molecule_template_index(int mol) const { return molecule_template_[mol]; }
    const MoleculeTemplate& template_of(int mol) const { return templates_[molecule_template_[mol]]; }
    const std::vector<MoleculeTemplate>& templates() const { return templates_; }
    const std::vector<std::pair<std::string, int>>& counts() const { return counts_; }

    struct Bond { int i, j; int type_pair;  /* index into bond_kinds() */ };
    struct Angle { int i, j, k; int type_triple; };
    const std::vector<Bond>& bonds() const { return bonds_; }
    const std::vector<Angle>& angles() const { return angles_; }
    // Distinct (type_i,type_j) names for bonds and (i,j,k) for angles, in
    // first-seen order; force fields assign potentials per kind.
    const std::vector<std::pair<std::string, std::string>>& bond_kinds() const { return bond_kinds_; }
    const std::vector<std::array<std::string, 3>>& angle_kinds() const { return angle_kinds_; }

    // 1-2 and 1-3 intramolecular pairs, i < j, sorted.
    const std::vector<std::pair<int, int>>& exclusions() const { return exclusions_; }
    bool excluded(int i, int j) const;

    const std::vector<int>& molecules_of_species(const std::string& species) const;
    bool has_species(const std::string& species) const;

private:
    std::vector<BeadType> bead_types_;
    std::vector<MoleculeTemplate> templates_;
    std::vector<std::pair<std::string, int>> counts_;

    std::vector<int> bead_type_index_;
    std::vector<int> molecule_index_;
    std::vector<int> molecule_first_bead_;
    std::vector<int> molecule_size_;
    std::vector<int> molecule_template_;
    std::vector<Bond> bonds_;
    std::vector<Angle> angles_;
    std::vector<std::pair<std::string, std::string>> bond_kinds_;
    std::vector<std::array<std::string, 3>> angle_kinds_;
    std::vector<std::pair<int, int>> exclusions_;
    std::map<std::string, std::vector<int>> species_molecules_;
    double total_mass_ = 0.0;
};

using TopologyPtr = std::shared_ptr<const Topology>;

struct ThermostatState {
    double xi = 0.0;    // Nose-Hoover coordinate (conserved-energy bookkeeping)
    double v_xi = 0.0;  // its velocity
};

struct BarostatState {
    double v_eps = 0.0;  // strain rate of the isotropic cell
};

// Positions are kept unwrapped; wrapped copies are derived on demand. MSD
// needs the unwrapped stream, everything with periodic images goes through
// minimum_image/wrap helpers.
struct SystemState {
    TopologyPtr topology;
    std::vector<Vec3> positions;   // nm, unwrapped
    std::vector<Vec3> velocities;  // nm/ps
    Vec3 box;                      // nm, orthorhombic
    double time = 0.0;             // ps
    ThermostatState thermostat;
    BarostatState barostat;

    int size() const { return static_cast<int>(positions.size()); }
    double volume() const { return box.x * box.y * box.z; }
    double density_gcm3() const;
    Vec3 wrapped_position(int bead) const;
    std::vector<Vec3> wrapped_positions() const;
};

// Component-wise r_i - r_j shifted into (-L/2, L/2].
Vec3 minimum_image_displacement(const Vec3& r_i, const Vec3& r_j, const Vec3& box);
double wrap_coordinate(double x, double length);  // into [0, L)

// Perturbed-lattice initial configuration at the box implied by the target
// density, Maxwell-Boltzmann velocities rescaled to the exact temperature,
// net momentum removed.
SystemState build_system(TopologyPtr topology, double target_density_gcm3, double temperature,
                         std::uint64_t seed,
                         const std::map<std::string, double>* equilibrium_bond_length = nullptr);

Vec3 molecule_center_of_mass(const SystemState& state, int molecule_index);

Vec3 total_momentum(const SystemState& state);            // amu nm/ps
double kinetic_energy(const std::vector<Vec3>& velocities,
                      const Topology& topology);           // kJ/mol
double kinetic_temperature(const SystemState& state);      // K, N_f = 3N-3

void remove_net_momentum(SystemState& state);
void rescale_to_temperature(SystemState& state, double temperature);

}  // namespace egomd
