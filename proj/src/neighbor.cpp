#include "egomd/neighbor.hpp"

#include <algorithm>
#include <cmath>

#include "egomd/errors.hpp"

namespace egomd {

std::vector<std::pair<int, int>> brute_force_pairs(const SystemState& state, double range,
                                                   bool apply_exclusions) {
    const double range2 = range * range;
    const auto wrapped = state.wrapped_positions();
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < state.size(); ++i) {
        for (int j = i + 1; j < state.size(); ++j) {
            const Vec3 d = minimum_image_displacement(wrapped[i], wrapped[j], state.box);
            if (norm2(d) >= range2) continue;
            if (apply_exclusions && state.topology->excluded(i, j)) continue;
            pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

NeighborList build_neighbor_list(const SystemState& state, double r_cut, double skin) {
    const double range = r_cut + skin;
    for (int axis = 0; axis < 3; ++axis) {
        if (state.box[axis] < 2.0 * range) {
            static const char* names[] = {"x", "y", "z"};
            throw UserError(std::string("box too small for cutoff along ") + names[axis] + ": " +
                            std::to_string(state.box[axis]) + " nm < 2*(r_cut+skin) = " +
                            std::to_string(2.0 * range) + " nm");
        }
    }

    NeighborList list;
    list.r_cut = r_cut;
    list.skin = skin;
    list.build_positions = state.positions;
    list.build_box = state.box;

    const int ncx = static_cast<int>(state.box.x / range);
    const int ncy = static_cast<int>(state.box.y / range);
    const int ncz = static_cast<int>(state.box.z / range);
    if (ncx < 3 || ncy < 3 || ncz < 3) {
        list.pairs = brute_force_pairs(state, range, true);
        return list;
    }

    const auto wrapped = state.wrapped_positions();
    const int ncells = ncx * ncy * ncz;
    std::vector<int> head(ncells, -1);
    std::vector<int> next(state.size(), -1);
    auto cell_of = [&](const Vec3& r) {
        int cx = std::min(static_cast<int>(r.x / state.box.x * ncx), ncx - 1);
        int cy = std::min(static_cast<int>(r.y / state.box.y * ncy), ncy - 1);
        int cz = std::min(static_cast<int>(r.z / state.box.z * ncz), ncz - 1);
        return (cz * ncy + cy) * ncx + cx;
    };
    for (int i = 0; i < state.size(); ++i) {
        const int c = cell_of(wrapped[i]);
        next[i] = head[c];
        head[c] = i;
    }

    const double range2 = range * range;
    const Topology& topo = *state.topology;
    for (int cz = 0; cz < ncz; ++cz) {
        for (int cy = 0; cy < ncy; ++cy) {
            for (int cx = 0; cx < ncx; ++cx) {
                const int c = (cz * ncy + cy) * ncx + cx;
                for (int dz = -1; dz <= 1; ++dz) {
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int nx = (cx + dx + ncx) % ncx;
                            const int ny = (cy + dy + ncy) % ncy;
                            const int nz = (cz + dz + ncz) % ncz;
                            const int nc = (nz * ncy + ny) * ncx + nx;
                            if (nc < c) continue;  // visit each cell pair once
                            for (int i = head[c]; i >= 0; i = next[i]) {
                                const int j_start = (nc == c) ? next[i] : head[nc];
                                for (int j = j_start; j >= 0; j = next[j]) {
                                    const Vec3 d =
                                        minimum_image_displacement(wrapped[i], wrapped[j], state.box);
                                    if (norm2(d) >= range2) continue;
                                    if (topo.excluded(i, j)) continue;
                                    list.pairs.emplace_back(std::min(i, j), std::max(i, j));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // Cell pairs sharing two beads across periodic wrap can report a pair
    // twice when ncells per axis == 3; dedupe keeps the invariant exact.
    std::sort(list.pairs.begin(), list.pairs.end());
    list.pairs.erase(std::unique(list.pairs.begin(), list.pairs.end()), list.pairs.end());
    return list;
}

bool neighbor_list_stale(const NeighborList& list, const SystemState& state) {
    double box_shift = 0.0;
    for (int axis = 0; axis < 3; ++axis)
        box_shift = std::max(box_shift,
                             std::abs(state.box[axis] - list.build_box[axis]) / list.build_box[axis]);
    const double budget = 0.5 * list.skin - (list.r_cut + list.skin) * box_shift;
    if (budget <= 0.0) return true;
    const double budget2 = budget * budget;
    for (std::size_t i = 0; i < list.build_positions.size(); ++i) {
        if (norm2(state.positions[i] - list.build_positions[i]) > budget2) return true;
    }
    return false;
}

}  // namespace egomd
