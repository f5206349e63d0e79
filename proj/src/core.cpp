#include "egomd/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "egomd/errors.hpp"
#include "egomd/rng.hpp"
#include "egomd/units.hpp"

namespace egomd {

void BeadType::validate() const {
    if (name.empty()) throw UserError("bead type with empty name");
    if (!(mass > 0.0)) throw UserError("bead type " + name + ": mass must be > 0");
    if (!(sigma > 0.0)) throw UserError("bead type " + name + ": sigma must be > 0");
    if (!(epsilon > 0.0)) throw UserError("bead type " + name + ": epsilon must be > 0");
}

std::pair<std::string, std::string> MixingRule::ordered(const std::string& a, const std::string& b) {
    return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void MixingRule::set_gamma(const std::string& type_i, const std::string& type_j, double gamma) {
    if (!(gamma > 0.0)) throw UserError("mixing override " + type_i + "-" + type_j + ": gamma must be > 0");
    overrides_[ordered(type_i, type_j)] = gamma;
}

double MixingRule::gamma(const std::string& type_i, const std::string& type_j) const {
    const auto it = overrides_.find(ordered(type_i, type_j));
    return it == overrides_.end() ? 1.0 : it->second;
}

bool MixingRule::has_override(const std::string& type_i, const std::string& type_j) const {
    return overrides_.count(ordered(type_i, type_j)) > 0;
}

bool is_standard_molecule(const std::string& name) {
    if (name == "PW") return true;
    if (name.rfind("EGO", 0) != 0 || name.size() <= 3) return false;
    for (std::size_t i = 3; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    return std::stoi(name.substr(3)) >= 2;
}

MoleculeTemplate standard_molecule(const std::string& name) {
    MoleculeTemplate t;
    t.name = name;
    if (name == "PW") {
        t.bead_types = {"PW"};
        t.molecules_per_bead = 3;  // one PW bead stands for three waters
        return t;
    }
    if (!is_standard_molecule(name))
        throw UserError("unknown molecule species '" + name + "' (expected PW or EGO<k>, k >= 2)");
    const int k = std::stoi(name.substr(3));
    t.bead_types.push_back("PA");
    for (int i = 0; i < k - 2; ++i) t.bead_types.push_back("PB");
    t.bead_types.push_back("PA");
    for (int i = 0; i + 1 < k; ++i) t.bonds.push_back({i, i + 1});
    for (int i = 0; i + 2 < k; ++i) t.angles.push_back({i, i + 1, i + 2});
    t.molecules_per_bead = 1;
    return t;
}

Topology::Topology(std::vector<BeadType> bead_types,
                   std::vector<MoleculeTemplate> templates,
                   std::vector<std::pair<std::string, int>> counts)
    : bead_types_(std::move(bead_types)), templates_(std::move(templates)), counts_(std::move(counts)) {
    std::map<std::string, int> type_index;
    for (std::size_t i = 0; i < bead_types_.size(); ++i) {
        bead_types_[i].validate();
        if (!type_index.emplace(bead_types_[i].name, static_cast<int>(i)).second)
            throw UserError("duplicate bead type '" + bead_types_[i].name + "'");
    }
    std::map<std::string, int> template_index;
    for (std::size_t t = 0; t < templates_.size(); ++t) {
        const auto& tpl = templates_[t];
        if (!template_index.emplace(tpl.name, static_cast<int>(t)).second)
            throw UserError("duplicate molecule template '" + tpl.name + "'");
        if (tpl.bead_types.empty()) throw UserError("molecule " + tpl.name + ": no beads");
        if (tpl.molecules_per_bead < 1)
            throw UserError("molecule " + tpl.name + ": molecules-per-bead n must be >= 1");
        for (const auto& bt : tpl.bead_types)
            if (!type_index.count(bt))
                throw UserError("molecule " + tpl.name + ": unknown bead type '" + bt + "'");
        std::set<std::pair<int, int>> bond_set;
        for (const auto& b : tpl.bonds) {
            if (b[0] < 0 || b[0] >= tpl.size() || b[1] < 0 || b[1] >= tpl.size() || b[0] == b[1])
                throw UserError("molecule " + tpl.name + ": bond index out of range");
            const auto key = std::minmax(b[0], b[1]);
            if (!bond_set.insert(key).second)
                throw UserError("molecule " + tpl.name + ": duplicate bond");
        }
        for (const auto& a : tpl.angles) {
            for (int idx : a)
                if (idx < 0 || idx >= tpl.size())
                    throw UserError("molecule " + tpl.name + ": angle index out of range");
            if (!bond_set.count(std::minmax(a[0], a[1])) || !bond_set.count(std::minmax(a[1], a[2])))
                throw UserError("molecule " + tpl.name + ": angle vertex not bonded to both ends");
        }
    }

    long total_molecules = 0;
    for (const auto& [name, count] : counts_) {
        if (count < 0) throw UserError("negative molecule count for " + name);
        total_molecules += count;
    }
    if (total_molecules == 0) throw UserError("topology contains no molecules");

    std::map<std::pair<std::string, std::string>, int> bond_kind_index;
    std::map<std::array<std::string, 3>, int> angle_kind_index;

    int bead = 0;
    int mol = 0;
    for (const auto& [name, count] : counts_) {
        const auto ti = template_index.find(name);
        if (ti == template_index.end()) throw UserError("no molecule template named '" + name + "'");
        const auto& tpl = templates_[ti->second];
        for (int c = 0; c < count; ++c, ++mol) {
            molecule_first_bead_.push_back(bead);
            molecule_size_.push_back(tpl.size());
            molecule_template_.push_back(ti->second);
            species_molecules_[name].push_back(mol);
            for (const auto& bt : tpl.bead_types) {
                bead_type_index_.push_back(type_index[bt]);
                molecule_index_.push_back(mol);
                total_mass_ += bead_types_[type_index[bt]].mass;
                ++bead;
            }
            const int base = molecule_first_bead_.back();
            for (const auto& b : tpl.bonds) {
                auto names = std::make_pair(tpl.bead_types[b[0]], tpl.bead_types[b[1]]);
                if (names.second < names.first) std::swap(names.first, names.second);
                auto [it, inserted] = bond_kind_index.emplace(names, static_cast<int>(bond_kinds_.size()));
                if (inserted) bond_kinds_.push_back(names);
                bonds_.push_back({base + b[0], base + b[1], it->second});
                exclusions_.emplace_back(std::min(base + b[0], base + b[1]),
                                         std::max(base + b[0], base + b[1]));
            }
            for (const auto& a : tpl.angles) {
                std::array<std::string, 3> names = {tpl.bead_types[a[0]], tpl.bead_types[a[1]],
                                                    tpl.bead_types[a[2]]};
                if (names[2] < names[0]) std::swap(names[0], names[2]);
                auto [it, inserted] = angle_kind_index.emplace(names, static_cast<int>(angle_kinds_.size()));
                if (inserted) angle_kinds_.push_back(names);
                angles_.push_back({base + a[0], base + a[1], base + a[2], it->second});
                exclusions_.emplace_back(std::min(base + a[0], base + a[2]),
                                         std::max(base + a[0], base + a[2]));
            }
        }
    }
    std::sort(exclusions_.begin(), exclusions_.end());
    exclusions_.erase(std::unique(exclusions_.begin(), exclusions_.end()), exclusions_.end());
}

const std::string& Topology::molecule_species(int mol) const {
    return templates_[molecule_template_[mol]].name;
}

bool Topology::excluded(int i, int j) const {
    const auto key = std::make_pair(std::min(i, j), std::max(i, j));
    return std::binary_search(exclusions_.begin(), exclusions_.end(), key);
}

const std::vector<int>& Topology::molecules_of_species(const std::string& species) const {
    const auto it = species_molecules_.find(species);
    if (it == species_molecules_.end())
        throw UserError("no molecules of species '" + species + "' in this system");
    return it->second;
}

bool Topology::has_species(const std::string& species) const {
    return species_molecules_.count(species) > 0;
}

double SystemState::density_gcm3() const {
    return topology->total_mass() / volume() * units::kDensityToGramPerCm3;
}

Vec3 SystemState::wrapped_position(int bead) const {
    const Vec3& r = positions[bead];
    return {wrap_coordinate(r.x, box.x), wrap_coordinate(r.y, box.y), wrap_coordinate(r.z, box.z)};
}

std::vector<Vec3> SystemState::wrapped_positions() const {
    std::vector<Vec3> out(positions.size());
    for (int i = 0; i < size(); ++i) out[i] = wrapped_position(i);
    return out;
}

double wrap_coordinate(double x, double length) {
    double w = x - length * std::floor(x / length);
    if (w >= length) w -= length;  // guards the x = -eps rounding case
    return w;
}

namespace {
inline double min_image_component(double d, double length) {
    // shift by an integer multiple of L into (-L/2, L/2]
    return d - length * std::ceil(d / length - 0.5);
}
}  // namespace

Vec3 minimum_image_displacement(const Vec3& r_i, const Vec3& r_j, const Vec3& box) {
    const Vec3 d = r_i - r_j;
    return {min_image_component(d.x, box.x), min_image_component(d.y, box.y),
            min_image_component(d.z, box.z)};
}

Vec3 molecule_center_of_mass(const SystemState& state, int molecule_index) {
    const Topology& topo = *state.topology;
    if (molecule_index < 0 || molecule_index >= topo.molecule_count())
        throw UserError("molecule index out of range");
    const int first = topo.molecule_first_bead(molecule_index);
    const int n = topo.molecule_size(molecule_index);
    Vec3 com{};
    double mass = 0.0;
    for (int b = first; b < first + n; ++b) {
        const double m = topo.bead_mass(b);
        com += m * state.positions[b];
        mass += m;
    }
    return com / mass;
}

Vec3 total_momentum(const SystemState& state) {
    Vec3 p{};
    for (int i = 0; i < state.size(); ++i) p += state.topology->bead_mass(i) * state.velocities[i];
    return p;
}

double kinetic_energy(const std::vector<Vec3>& velocities, const Topology& topology) {
    double ke = 0.0;
    for (std::size_t i = 0; i < velocities.size(); ++i)
        ke += 0.5 * topology.bead_mass(static_cast<int>(i)) * norm2(velocities[i]);
    return ke;
}

double kinetic_temperature(const SystemState& state) {
    const int nf = 3 * state.size() - 3;
    return 2.0 * kinetic_energy(state.velocities, *state.topology) / (nf * units::kBoltzmann);
}

void remove_net_momentum(SystemState& state) {
    const Vec3 p = total_momentum(state);
    const Vec3 v_com = p / state.topology->total_mass();
    for (auto& v : state.velocities) v -= v_com;
}

void rescale_to_temperature(SystemState& state, double temperature) {
    const double t_now = kinetic_temperature(state);
    if (!(t_now > 0.0)) throw NumericError("cannot rescale a zero-temperature state");
    const double s = std::sqrt(temperature / t_now);
    for (auto& v : state.velocities) v *= s;
}

SystemState build_system(TopologyPtr topology, double target_density_gcm3, double temperature,
                         std::uint64_t seed, const std::map<std::string, double>* equilibrium_bond_length) {
    if (!(target_density_gcm3 > 0.0)) throw UserError("target density must be > 0");
    const Topology& topo = *topology;

    const double volume = topo.total_mass() * units::kDensityToGramPerCm3 / target_density_gcm3;
    const double edge = std::cbrt(volume);

    double min_sigma = topo.bead_types()[0].sigma;
    for (const auto& bt : topo.bead_types()) min_sigma = std::min(min_sigma, bt.sigma);

    const int n_mol = topo.molecule_count();
    int cells = 1;
    while (cells * cells * cells < n_mol) ++cells;
    const double spacing = edge / cells;
    if (spacing < 0.5 * min_sigma)
        throw UserError("target density too high: lattice spacing " + std::to_string(spacing) +
                        " nm < 0.5 * min(sigma) = " + std::to_string(0.5 * min_sigma) + " nm");

    SystemState state;
    state.topology = topology;
    state.box = {edge, edge, edge};
    state.positions.resize(topo.bead_count());
    state.velocities.resize(topo.bead_count());

    Rng rng(seed);

    // Molecules on a jittered cubic lattice; chains grown as random walks with
    // bond lengths at the supplied equilibrium value (fallback 0.9*sigma keeps
    // bonded beads inside any reasonable restoring well).
    for (int mol = 0; mol < n_mol; ++mol) {
        const int cx = mol % cells;
        const int cy = (mol / cells) % cells;
        const int cz = mol / (cells * cells);
        Vec3 site{(cx + 0.5) * spacing, (cy + 0.5) * spacing, (cz + 0.5) * spacing};
        site += Vec3{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)} * spacing;

        const auto& tpl = topo.template_of(mol);
        const int first = topo.molecule_first_bead(mol);
        state.positions[first] = site;
        for (std::size_t b = 1; b < tpl.bead_types.size(); ++b) {
            double bond_len = 0.9 * topo.bead_type(first + static_cast<int>(b)).sigma;
            if (equilibrium_bond_length) {
                auto key = std::make_pair(tpl.bead_types[b - 1], tpl.bead_types[b]);
                if (key.second < key.first) std::swap(key.first, key.second);
                const auto it = equilibrium_bond_length->find(key.first + "-" + key.second);
                if (it != equilibrium_bond_length->end()) bond_len = it->second;
            }
            // nearly-straight growth with a small random kink avoids overlap
            // of next-nearest beads at dense packing
            Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
            if (b >= 2) {
                const Vec3 prev = state.positions[first + static_cast<int>(b) - 1] -
                                  state.positions[first + static_cast<int>(b) - 2];
                dir = prev / norm(prev) + 0.35 * dir / norm(dir);
            }
            dir /= norm(dir);
            state.positions[first + static_cast<int>(b)] =
                state.positions[first + static_cast<int>(b) - 1] + bond_len * dir;
        }
    }

    for (int i = 0; i < topo.bead_count(); ++i) {
        const double s = std::sqrt(units::kBoltzmann * temperature / topo.bead_mass(i));
        state.velocities[i] = {s * rng.normal(), s * rng.normal(), s * rng.normal()};
    }
    remove_net_momentum(state);
    rescale_to_temperature(state, temperature);
    return state;
}

}  // namespace egomd
