#include "egomd/trajectory.hpp"

#include <cstring>
#include <sstream>

#include <json.hpp>

#include "egomd/errors.hpp"
#include "egomd/textdoc.hpp"

namespace egomd {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'G', 'M', 'D', 'T', 'R', 'J', '1'};

json topology_to_json(const Topology& topo) {
    json j;
    for (const auto& bt : topo.bead_types())
        j["bead_types"].push_back({{"name", bt.name},
                                   {"mass", bt.mass},
                                   {"sigma", bt.sigma},
                                   {"epsilon", bt.epsilon}});
    for (const auto& t : topo.templates()) {
        json jt;
        jt["name"] = t.name;
        jt["beads"] = t.bead_types;
        for (const auto& b : t.bonds) jt["bonds"].push_back({b[0], b[1]});
        for (const auto& a : t.angles) jt["angles"].push_back({a[0], a[1], a[2]});
        jt["n"] = t.molecules_per_bead;
        j["molecules"].push_back(jt);
    }
    for (const auto& [name, count] : topo.counts()) j["counts"].push_back({{"name", name}, {"count", count}});
    return j;
}

TopologyPtr topology_from_json(const json& j) {
    std::vector<BeadType> bead_types;
    for (const auto& b : j.at("bead_types"))
        bead_types.push_back({b.at("name").get<std::string>(), b.at("mass").get<double>(),
                              b.at("sigma").get<double>(), b.at("epsilon").get<double>()});
    std::vector<MoleculeTemplate> templates;
    for (const auto& m : j.at("molecules")) {
        MoleculeTemplate t;
        t.name = m.at("name").get<std::string>();
        t.bead_types = m.at("beads").get<std::vector<std::string>>();
        if (m.contains("bonds"))
            for (const auto& b : m.at("bonds")) t.bonds.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
        if (m.contains("angles"))
            for (const auto& a : m.at("angles"))
                t.angles.push_back({a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<int>()});
        t.molecules_per_bead = m.at("n").get<int>();
        templates.push_back(std::move(t));
    }
    std::vector<std::pair<std::string, int>> counts;
    for (const auto& c : j.at("counts"))
        counts.emplace_back(c.at("name").get<std::string>(), c.at("count").get<int>());
    return std::make_shared<Topology>(std::move(bead_types), std::move(templates), std::move(counts));
}

void write_doubles(std::ostream& os, const double* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

bool read_doubles(std::istream& is, double* data, std::size_t count) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    return static_cast<std::size_t>(is.gcount()) == count * sizeof(double);
}

json state_to_json(const SystemState& state) {
    json j;
    j["time"] = state.time;
    j["box"] = {state.box.x, state.box.y, state.box.z};
    json pos = json::array();
    json vel = json::array();
    for (const auto& r : state.positions) {
        pos.push_back(r.x);
        pos.push_back(r.y);
        pos.push_back(r.z);
    }
    for (const auto& v : state.velocities) {
        vel.push_back(v.x);
        vel.push_back(v.y);
        vel.push_back(v.z);
    }
    j["positions"] = std::move(pos);
    j["velocities"] = std::move(vel);
    j["thermostat"] = {{"xi", state.thermostat.xi}, {"v_xi", state.thermostat.v_xi}};
    j["barostat"] = {{"v_eps", state.barostat.v_eps}};
    j["topology"] = topology_to_json(*state.topology);
    return j;
}

SystemState state_from_json(const json& j) {
    SystemState state;
    state.topology = topology_from_json(j.at("topology"));
    state.time = j.at("time").get<double>();
    state.box = {j.at("box").at(0).get<double>(), j.at("box").at(1).get<double>(),
                 j.at("box").at(2).get<double>()};
    const auto& pos = j.at("positions");
    const auto& vel = j.at("velocities");
    if (pos.size() % 3 != 0 || pos.size() != vel.size())
        throw UserError("checkpoint: malformed position/velocity arrays");
    state.positions.resize(pos.size() / 3);
    state.velocities.resize(vel.size() / 3);
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        state.positions[i] = {pos.at(3 * i).get<double>(), pos.at(3 * i + 1).get<double>(),
                              pos.at(3 * i + 2).get<double>()};
        state.velocities[i] = {vel.at(3 * i).get<double>(), vel.at(3 * i + 1).get<double>(),
                               vel.at(3 * i + 2).get<double>()};
    }
    state.thermostat.xi = j.at("thermostat").at("xi").get<double>();
    state.thermostat.v_xi = j.at("thermostat").at("v_xi").get<double>();
    state.barostat.v_eps = j.at("barostat").at("v_eps").get<double>();
    if (static_cast<int>(state.positions.size()) != state.topology->bead_count())
        throw UserError("checkpoint: bead count does not match topology");
    return state;
}

}  // namespace

Vec3 Frame::wrapped_position(int bead) const {
    const Vec3& r = positions[bead];
    return {wrap_coordinate(r.x, box.x), wrap_coordinate(r.y, box.y), wrap_coordinate(r.z, box.z)};
}

void Trajectory::validate() const {
    const int n = topology ? topology->bead_count() : 0;
    double prev = -1.0;
    for (const auto& f : frames) {
        if (static_cast<int>(f.positions.size()) != n || static_cast<int>(f.velocities.size()) != n)
            throw UserError("trajectory: frame bead count differs from topology");
        if (!frames.empty() && f.time <= prev && &f != &frames.front())
            throw UserError("trajectory: frame times not strictly increasing");
        prev = f.time;
    }
}

TrajectoryWriter::TrajectoryWriter(const std::string& path, TopologyPtr topology, double sample_interval,
                                   const std::map<std::string, std::string>& metadata)
    : path_(path), bead_count_(topology->bead_count()) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw UserError("cannot open trajectory for writing: " + path);
    json header;
    header["units"] = {{"length", "nm"}, {"time", "ps"}, {"mass", "amu"}, {"energy", "kJ/mol"}};
    header["bead_count"] = bead_count_;
    header["sample_interval"] = sample_interval;
    header["metadata"] = metadata;
    header["topology"] = topology_to_json(*topology);
    const std::string htext = header.dump();
    out_.write(kMagic, sizeof kMagic);
    const std::uint64_t hlen = htext.size();
    out_.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out_.write(htext.data(), static_cast<std::streamsize>(htext.size()));
}

TrajectoryWriter::~TrajectoryWriter() {
    if (out_.is_open()) out_.close();
}

void TrajectoryWriter::append(const SystemState& state) {
    if (state.size() != bead_count_) throw UserError("trajectory writer: bead count changed");
    double head[4] = {state.time, state.box.x, state.box.y, state.box.z};
    write_doubles(out_, head, 4);
    write_doubles(out_, &state.positions[0].x, static_cast<std::size_t>(bead_count_) * 3);
    write_doubles(out_, &state.velocities[0].x, static_cast<std::size_t>(bead_count_) * 3);
    if (!out_) throw UserError("trajectory write failed: " + path_);
}

void TrajectoryWriter::close() {
    if (out_.is_open()) {
        out_.flush();
        out_.close();
    }
}

void Trajectory::save(const std::string& path) const {
    TrajectoryWriter writer(path, topology, sample_interval, metadata);
    SystemState tmp;
    tmp.topology = topology;
    for (const auto& f : frames) {
        tmp.time = f.time;
        tmp.box = f.box;
        tmp.positions = f.positions;
        tmp.velocities = f.velocities;
        writer.append(tmp);
    }
    writer.close();
}

Trajectory Trajectory::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open trajectory: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw UserError("not an egomd trajectory: " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<std::uint64_t>(in.gcount()) != hlen)
        throw UserError("truncated trajectory header: " + path);

    json header = json::parse(htext);
    Trajectory traj;
    traj.topology = topology_from_json(header.at("topology"));
    traj.sample_interval = header.at("sample_interval").get<double>();
    if (header.contains("metadata"))
        traj.metadata = header.at("metadata").get<std::map<std::string, std::string>>();
    const int n = header.at("bead_count").get<int>();
    if (n != traj.topology->bead_count()) throw UserError("trajectory header bead count mismatch");

    for (;;) {
        double head[4];
        if (!read_doubles(in, head, 4)) break;
        Frame f;
        f.time = head[0];
        f.box = {head[1], head[2], head[3]};
        f.positions.resize(n);
        f.velocities.resize(n);
        if (!read_doubles(in, &f.positions[0].x, static_cast<std::size_t>(n) * 3) ||
            !read_doubles(in, &f.velocities[0].x, static_cast<std::size_t>(n) * 3))
            throw UserError("truncated trajectory frame in " + path);
        traj.frames.push_back(std::move(f));
    }
    traj.validate();
    return traj;
}

std::string frame_to_xyz(const Frame& frame, const Topology& topology) {
    std::ostringstream os;
    const int n = static_cast<int>(frame.positions.size());
    os << n << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "t= %.6f box= %.9g %.9g %.9g\n", frame.time, frame.box.x,
                  frame.box.y, frame.box.z);
    os << buf;
    for (int i = 0; i < n; ++i) {
        const Vec3& r = frame.positions[i];
        const Vec3& v = frame.velocities[i];
        std::snprintf(buf, sizeof buf, "%s %.9g %.9g %.9g %.9g %.9g %.9g\n",
                      topology.bead_type(i).name.c_str(), r.x, r.y, r.z, v.x, v.y, v.z);
        os << buf;
    }
    return os.str();
}

void export_xyz(const Trajectory& traj, const std::string& path) {
    std::ostringstream os;
    for (const auto& f : traj.frames) os << frame_to_xyz(f, *traj.topology);
    atomic_write(path, os.str());
}

std::vector<XyzFrame> load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open xyz file: " + path);
    std::vector<XyzFrame> frames;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        int n = 0;
        try {
            n = std::stoi(line);
        } catch (const std::exception&) {
            throw UserError(path + ":" + std::to_string(line_no) + ": expected atom count");
        }
        XyzFrame frame;
        if (!std::getline(in, line)) throw UserError(path + ": truncated frame header");
        ++line_no;
        {
            std::istringstream cs(line);
            std::string tok;
            while (cs >> tok) {
                if (tok == "t=") cs >> frame.time;
                else if (tok == "box=") {
                    Vec3 b;
                    cs >> b.x >> b.y >> b.z;
                    frame.box = b;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            if (!std::getline(in, line)) throw UserError(path + ": truncated frame body");
            ++line_no;
            std::istringstream as(line);
            std::string name;
            Vec3 r;
            if (!(as >> name >> r.x >> r.y >> r.z))
                throw UserError(path + ":" + std::to_string(line_no) + ": expected 'name x y z'");
            Vec3 v;
            if (as >> v.x >> v.y >> v.z) frame.velocities.push_back(v);
            frame.names.push_back(name);
            frame.positions.push_back(r);
        }
        if (!frame.velocities.empty() && frame.velocities.size() != frame.positions.size())
            throw UserError(path + ": some atoms have velocities and some do not");
        frames.push_back(std::move(frame));
    }
    return frames;
}

void Checkpoint::save(const std::string& path) const {
    json j;
    j["format"] = "egomd-checkpoint";
    j["version"] = 1;
    j["state"] = state_to_json(state);
    j["rng"] = rng_state;
    j["step"] = step;
    j["metadata"] = metadata;
    atomic_write(path, j.dump());
}

Checkpoint Checkpoint::load(const std::string& path) {
    const json j = json::parse(read_file(path));
    if (j.value("format", "") != "egomd-checkpoint")
        throw UserError(path + ": not an egomd checkpoint");
    Checkpoint c;
    c.state = state_from_json(j.at("state"));
    c.rng_state = j.at("rng").get<std::string>();
    c.step = j.at("step").get<long>();
    if (j.contains("metadata")) c.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return c;
}

}  // namespace egomd
