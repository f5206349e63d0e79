#pragma once

#include <array>
#include <string>
#include <vector>

#include "egomd/core.hpp"
#include "egomd/vec3.hpp"

namespace egomd {

struct LJPairParams {
    double sigma = 0.0;    // nm
    double epsilon = 0.0;  // kJ/mol
    double r_cut = 1.4;    // nm
    double shift = 0.0;    // kJ/mol, chosen so U(r_cut) = 0

    void validate() const;
};

// Fills the energy shift for a truncated-and-shifted 12-6 potential.
LJPairParams make_lj_pair(double sigma, double epsilon, double r_cut);

// Energy includes the cutoff shift; force_magnitude = -dU/dr (positive =
// repulsive). Both are zero at and beyond r_cut.
struct EnergyForce {
    double energy = 0.0;
    double force = 0.0;
};
EnergyForce lj_energy_force(double r, const LJPairParams& p);

LJPairParams combine_params(const BeadType& type_i, const BeadType& type_j, const MixingRule& rule,
                            double r_cut = 1.4);

enum class BondedKind { Bond, Angle };

struct GaussComponent {
    double area = 0.0;    // A_l
    double center = 0.0;  // mu_l (nm for bonds, degrees for angles)
    double width = 0.0;   // xi_l (same unit as center)
};

struct MixturePotentialParams {
    BondedKind kind = BondedKind::Bond;
    double temperature_ref = 293.0;  // K, the k_B T multiplying the log
    std::vector<GaussComponent> components;

    void validate() const;
};

// -k_B T ln(sum of Gaussians), offset so min U = 0 over the tabulation
// domain, with quadratic extrapolation outside it. Prepares the offset and
// edge coefficients once; evaluation is then a pure function.
class MixturePotential {
public:
    explicit MixturePotential(MixturePotentialParams params);

    // Returns (U, dU/dQ). Q in nm for bonds, degrees for angles.
    EnergyForce energy_deriv(double q) const;

    double domain_lo() const { return lo_; }
    double domain_hi() const { return hi_; }
    double argmin() const { return argmin_; }
    const MixturePotentialParams& params() const { return params_; }

    // Normalized mixture density at q (the model of Eq-space probability).
    double density(double q) const;

private:
    double raw_energy(double q) const;       // -kT ln S(q), no offset
    double raw_derivative(double q) const;   // its derivative

    MixturePotentialParams params_;
    double lo_ = 0.0, hi_ = 0.0;
    double offset_ = 0.0;
    double argmin_ = 0.0;
    // quadratic tails: U(q) = edge_u + edge_du*(q-edge) + 0.5*edge_k*(q-edge)^2
    double lo_u_ = 0.0, lo_du_ = 0.0, lo_k_ = 0.0;
    double hi_u_ = 0.0, hi_du_ = 0.0, hi_k_ = 0.0;
};

struct BondForces {
    Vec3 f_i, f_j;
    double energy = 0.0;
    double virial = 0.0;  // r . f contribution
};

struct AngleForces {
    Vec3 f_i, f_j, f_k;
    double energy = 0.0;
};

BondForces bond_force(const SystemState& state, int bead_i, int bead_j, const MixturePotential& pot);
AngleForces angle_force(const SystemState& state, int bead_i, int bead_j, int bead_k,
                        const MixturePotential& pot);

}  // namespace egomd
