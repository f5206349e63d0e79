#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "egomd/core.hpp"
#include "egomd/potentials.hpp"

namespace egomd {

// Bonded potentials are assigned per type pattern: a block either names the
// pairs/triples it covers ("PA-PA PA-PB PB-PB") or applies to everything
// ("*"). First matching block wins.
struct BondedBlock {
    BondedKind kind = BondedKind::Bond;
    std::vector<std::string> patterns;  // "PA-PB" / "PA-PB-PB" / "*"
    MixturePotentialParams params;
};

class ForceField {
public:
    ForceField() = default;
    // the prepared-potential cache is per-instance and never copied
    ForceField(const ForceField& other)
        : name(other.name), bead_types(other.bead_types), mixing(other.mixing), r_cut(other.r_cut),
          bonded(other.bonded) {}
    ForceField& operator=(const ForceField& other) {
        if (this != &other) {
            name = other.name;
            bead_types = other.bead_types;
            mixing = other.mixing;
            r_cut = other.r_cut;
            bonded = other.bonded;
            cache_.clear();
        }
        return *this;
    }
    ForceField(ForceField&&) = default;
    ForceField& operator=(ForceField&&) = default;

    std::string name = "unnamed";
    std::vector<BeadType> bead_types;
    MixingRule mixing;
    double r_cut = 1.4;  // nm
    std::vector<BondedBlock> bonded;

    const BeadType& bead_type(const std::string& name) const;
    bool has_bead_type(const std::string& name) const;

    // Prepared evaluators, constructed lazily and cached.
    const MixturePotential& bond_potential(const std::string& type_a, const std::string& type_b) const;
    const MixturePotential& angle_potential(const std::string& type_a, const std::string& type_b,
                                            const std::string& type_c) const;

    // Equilibrium bond length per bond kind name "A-B" (argmin of the bond
    // potential), used by the initial-configuration builder.
    std::map<std::string, double> equilibrium_bond_lengths(const Topology& topology) const;

    void validate() const;

    std::string to_text() const;
    static ForceField from_text(const std::string& content, const std::string& path);
    static ForceField load(const std::string& path);
    void save(const std::string& path) const;

    // Tables 1-3 of the calibrated EGO/water force field at 293 K.
    static ForceField bundled_ego_water_293k();

private:
    const MixturePotential& resolve(BondedKind kind, const std::string& key) const;
    mutable std::map<std::string, std::unique_ptr<MixturePotential>> cache_;
};

// Recognizes "ego_water_293K" as the bundled force field, otherwise loads
// from the path.
ForceField resolve_forcefield(const std::string& name_or_path);

}  // namespace egomd
