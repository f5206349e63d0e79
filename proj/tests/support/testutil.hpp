#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "egomd/core.hpp"
#include "egomd/forcefield.hpp"
#include "egomd/rng.hpp"

namespace egomd::test {

// Single-species LJ fluid force field (no bonded terms).
inline ForceField lj_forcefield(const std::string& type = "PW", double mass = 54.0, double sigma = 0.40,
                                double epsilon = 2.650, double r_cut = 1.4) {
    ForceField ff;
    ff.name = "test_lj";
    ff.r_cut = r_cut;
    ff.bead_types = {{type, mass, sigma, epsilon}};
    return ff;
}

inline TopologyPtr fluid_topology(const ForceField& ff, const std::string& species, int count) {
    std::vector<MoleculeTemplate> templates = {standard_molecule(species)};
    return std::make_shared<Topology>(ff.bead_types, templates,
                                      std::vector<std::pair<std::string, int>>{{species, count}});
}

// State with beads at explicit positions, zero velocities.
inline SystemState state_at(TopologyPtr topo, const std::vector<Vec3>& positions, const Vec3& box) {
    SystemState s;
    s.topology = std::move(topo);
    s.positions = positions;
    s.velocities.assign(positions.size(), Vec3{});
    s.box = box;
    return s;
}

// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Inverse-CDF sampler over a tabulated density: the independent oracle used
// by inversion tests (never routed through the code under test).
class TabulatedSampler {
public:
    TabulatedSampler(std::function<double(double)> density, double lo, double hi, int grid = 20000)
        : lo_(lo), hi_(hi) {
        cdf_.resize(grid + 1, 0.0);
        const double h = (hi - lo) / grid;
        double acc = 0.0;
        double prev = density(lo);
        for (int i = 1; i <= grid; ++i) {
            const double cur = density(lo + i * h);
            acc += 0.5 * (prev + cur) * h;
            cdf_[i] = acc;
            prev = cur;
        }
        for (auto& c : cdf_) c /= acc;
    }

    double sample(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t hi_idx = std::max<std::size_t>(1, it - cdf_.begin());
        const double c0 = cdf_[hi_idx - 1];
        const double c1 = cdf_[hi_idx];
        const double f = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        const double h = (hi_ - lo_) / (cdf_.size() - 1);
        return lo_ + (static_cast<double>(hi_idx - 1) + f) * h;
    }

private:
    double lo_, hi_;
    std::vector<double> cdf_;
};

}  // namespace egomd::test
