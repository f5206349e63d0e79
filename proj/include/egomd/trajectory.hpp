#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "egomd/core.hpp"

namespace egomd {

struct Frame {
    double time = 0.0;  // ps
    Vec3 box;
    std::vector<Vec3> positions;   // unwrapped
    std::vector<Vec3> velocities;  // nm/ps

    Vec3 wrapped_position(int bead) const;
};

// Time-ordered frames plus the topology and sampling metadata needed to
// interpret them. Wrapped coordinates are derived from the unwrapped stream
// and the box.
struct Trajectory {
    TopologyPtr topology;
    std::vector<Frame> frames;
    double sample_interval = 0.0;  // ps
    std::map<std::string, std::string> metadata;  // config hash, seed, ff id, ...

    int frame_count() const { return static_cast<int>(frames.size()); }
    void validate() const;  // strictly increasing times, constant bead count

    static Trajectory load(const std::string& path);
    void save(const std::string& path) const;
};

// Streaming writer: self-describing JSON header (unit system, bead count,
// topology, stride, metadata) followed by fixed-size binary frames.
class TrajectoryWriter {
public:
    TrajectoryWriter(const std::string& path, TopologyPtr topology, double sample_interval,
                     const std::map<std::string, std::string>& metadata);
    ~TrajectoryWriter();

    void append(const SystemState& state);
    void close();
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    int bead_count_ = 0;
};

// XYZ-extended text: bead count line, then a comment line carrying time and
// box ("t= <ps> box= lx ly lz"), then "<name> x y z vx vy vz" per bead.
// The same schema is accepted as atomistic input by the inversion tools
// (velocities optional there, box optional for gas phase).
void export_xyz(const Trajectory& traj, const std::string& path);
std::string frame_to_xyz(const Frame& frame, const Topology& topology);

struct XyzFrame {
    double time = 0.0;
    std::optional<Vec3> box;
    std::vector<std::string> names;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;  // empty when the file has none
};
std::vector<XyzFrame> load_xyz(const std::string& path);

// Full-state checkpoint: SystemState + RNG stream + step counter, bit-exact
// on resume.
struct Checkpoint {
    SystemState state;
    std::string rng_state;
    long step = 0;
    std::map<std::string, std::string> metadata;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace egomd
