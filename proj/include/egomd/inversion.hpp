#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egomd/potentials.hpp"
#include "egomd/trajectory.hpp"
#include "egomd/vec3.hpp"

namespace egomd {

// Atoms-to-beads mapping. Shared atoms carry fractional weights; weights of a
// shared atom must sum to 1 across groups.
struct CgMapping {
    struct Group {
        std::string bead_name;
        std::vector<int> atom_indices;
        std::vector<double> weights;
    };
    std::vector<Group> groups;
    std::map<std::string, double> mass_overrides;  // element name -> amu

    void validate(int atom_count) const;
    static CgMapping load(const std::string& path);
    static CgMapping from_text(const std::string& content, const std::string& path);
};

// Built-in element masses (amu) used when an XYZ frame supplies names only;
// mapping files may override.
double element_mass(const std::string& name, const std::map<std::string, double>& overrides);

// Weighted center of mass per group: sum(w m r) / sum(w m).
std::vector<Vec3> map_frame(const std::vector<Vec3>& atom_positions,
                            const std::vector<double>& atom_masses, const CgMapping& mapping);

struct HistogramSet {
    BondedKind kind = BondedKind::Bond;
    double lo = 0.0, hi = 0.0;  // nm or degrees
    std::vector<double> counts;
    double overflow_lo = 0.0, overflow_hi = 0.0;
    std::vector<double> p;  // renormalized probability density, empty until renormalize()
    bool normalized = false;

    int bins() const { return static_cast<int>(counts.size()); }
    double bin_width() const { return (hi - lo) / bins(); }
    double center(int i) const { return lo + (i + 0.5) * bin_width(); }
    double total_count() const;
};

HistogramSet histogram(const std::vector<double>& samples, BondedKind kind, double lo, double hi,
                       int bins);

// Bond lengths / angles (degrees) collected over frames of CG positions.
// Bonds and angles are index pairs/triples into each frame. An optional box
// applies minimum-image convention (omit for gas phase).
std::vector<double> collect_bond_lengths(const std::vector<std::vector<Vec3>>& frames,
                                         const std::vector<std::array<int, 2>>& bonds,
                                         const Vec3* box = nullptr);
std::vector<double> collect_angles(const std::vector<std::vector<Vec3>>& frames,
                                   const std::vector<std::array<int, 3>>& angles,
                                   const Vec3* box = nullptr);

// Divides out the geometric phase-space factor (L^2 for bonds, sin(theta) for
// angles) and normalizes to unit integral.
HistogramSet renormalize(const HistogramSet& h);

// U = -kT ln P at occupied bin centers, minimum shifted to zero. Unoccupied
// bins are masked (absent from the output).
struct TabulatedPotential {
    std::vector<double> q;
    std::vector<double> u;  // kJ/mol
};
TabulatedPotential boltzmann_invert(const HistogramSet& h, double temperature);

struct MixtureFitResult {
    MixturePotentialParams params;
    double rms_residual = 0.0;  // in probability-density units
    bool converged = false;
    int best_start = -1;
};

// Nonlinear least squares of the Gaussian-mixture density against the
// renormalized P (probability space). Multi-start with quantile-based
// component placement; components returned sorted by descending area.
MixtureFitResult fit_mixture(const HistogramSet& renormalized, int m, double temperature_ref,
                             std::uint64_t seed = 0, int restarts = 8);

// U-space variant: converts a tabulated potential back to Boltzmann weights
// at the reference temperature and fits those.
MixtureFitResult fit_mixture_from_potential(const TabulatedPotential& u, BondedKind kind, int m,
                                            double temperature_ref, std::uint64_t seed = 0);

}  // namespace egomd
