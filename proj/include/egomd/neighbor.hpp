#pragma once

#include <utility>
#include <vector>

#include "egomd/core.hpp"

namespace egomd {

// Verlet pair list (i < j), bonded 1-2/1-3 pairs excluded. Built from a cell
// grid when the box admits >= 3 cells per axis, otherwise by a direct
// minimum-image double loop (valid because the box must fit 2*(r_cut+skin)).
struct NeighborList {
    std::vector<std::pair<int, int>> pairs;
    double r_cut = 0.0;
    double skin = 0.0;
    std::vector<Vec3> build_positions;  // unwrapped, at build time
    Vec3 build_box;
};

NeighborList build_neighbor_list(const SystemState& state, double r_cut, double skin);

// True when a particle may have moved far enough (or the box shrunk enough)
// for the list to miss a pair inside r_cut.
bool neighbor_list_stale(const NeighborList& list, const SystemState& state);

// O(N^2) reference used by tests and by the small-system fallback.
std::vector<std::pair<int, int>> brute_force_pairs(const SystemState& state, double range,
                                                   bool apply_exclusions);

}  // namespace egomd
