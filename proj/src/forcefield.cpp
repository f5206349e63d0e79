#include "egomd/forcefield.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "egomd/errors.hpp"
#include "egomd/textdoc.hpp"

namespace egomd {

const BeadType& ForceField::bead_type(const std::string& type_name) const {
    for (const auto& bt : bead_types)
        if (bt.name == type_name) return bt;
    throw UserError("force field '" + name + "' has no bead type '" + type_name + "'");
}

bool ForceField::has_bead_type(const std::string& type_name) const {
    return std::any_of(bead_types.begin(), bead_types.end(),
                       [&](const BeadType& bt) { return bt.name == type_name; });
}

namespace {
std::string bond_key(const std::string& a, const std::string& b) {
    return a <= b ? a + "-" + b : b + "-" + a;
}
std::string angle_key(const std::string& a, const std::string& b, const std::string& c) {
    return a <= c ? a + "-" + b + "-" + c : c + "-" + b + "-" + a;
}
}  // namespace

const MixturePotential& ForceField::resolve(BondedKind kind, const std::string& key) const {
    const std::string cache_key = (kind == BondedKind::Bond ? "b:" : "a:") + key;
    const auto it = cache_.find(cache_key);
    if (it != cache_.end()) return *it->second;

    for (const auto& block : bonded) {
        if (block.kind != kind) continue;
        for (const auto& pattern : block.patterns) {
            std::string normalized = pattern;
            if (pattern != "*") {
                std::vector<std::string> parts;
                std::string tok;
                std::istringstream is(pattern);
                while (std::getline(is, tok, '-')) parts.push_back(tok);
                if (kind == BondedKind::Bond && parts.size() == 2)
                    normalized = bond_key(parts[0], parts[1]);
                else if (kind == BondedKind::Angle && parts.size() == 3)
                    normalized = angle_key(parts[0], parts[1], parts[2]);
            }
            if (normalized == "*" || normalized == key) {
                auto pot = std::make_unique<MixturePotential>(block.params);
                const auto& ref = *pot;
                cache_[cache_key] = std::move(pot);
                return ref;
            }
        }
    }
    throw UserError("force field '" + name + "' has no " +
                    (kind == BondedKind::Bond ? std::string("bond") : std::string("angle")) +
                    " potential matching " + key);
}

const MixturePotential& ForceField::bond_potential(const std::string& a, const std::string& b) const {
    return resolve(BondedKind::Bond, bond_key(a, b));
}

const MixturePotential& ForceField::angle_potential(const std::string& a, const std::string& b,
                                                    const std::string& c) const {
    return resolve(BondedKind::Angle, angle_key(a, b, c));
}

std::map<std::string, double> ForceField::equilibrium_bond_lengths(const Topology& topology) const {
    std::map<std::string, double> out;
    for (const auto& [a, b] : topology.bond_kinds()) {
        const auto& pot = bond_potential(a, b);
        out[bond_key(a, b)] = pot.argmin();
    }
    return out;
}

void ForceField::validate() const {
    if (bead_types.empty()) throw UserError("force field '" + name + "': no bead types");
    for (const auto& bt : bead_types) bt.validate();
    if (!(r_cut > 0.0)) throw UserError("force field '" + name + "': r_cut must be > 0");
    for (const auto& [pair, gamma] : mixing.overrides()) {
        if (!has_bead_type(pair.first) || !has_bead_type(pair.second))
            throw UserError("mixing override references unknown bead type " + pair.first + "-" + pair.second);
        (void)gamma;
    }
    for (const auto& block : bonded) block.params.validate();
}

std::string ForceField::to_text() const {
    std::ostringstream os;
    os << "# egomd force field\n";
    os << "format egomd-ff 1\n";
    os << "name = " << name << "\n";
    os << "r_cut = " << r_cut << " nm\n";
    char buf[160];
    for (const auto& bt : bead_types) {
        os << "\n[bead " << bt.name << "]\n";
        std::snprintf(buf, sizeof buf, "mass = %.6g amu\nsigma = %.6g nm\nepsilon = %.6g kJ/mol\n",
                      bt.mass, bt.sigma, bt.epsilon);
        os << buf;
    }
    for (const auto& [pair, gamma] : mixing.overrides()) {
        os << "\n[mix " << pair.first << " " << pair.second << "]\n";
        std::snprintf(buf, sizeof buf, "gamma = %.6g\n", gamma);
        os << buf;
    }
    for (const auto& block : bonded) {
        os << "\n[" << (block.kind == BondedKind::Bond ? "bond" : "angle");
        for (const auto& p : block.patterns) os << " " << p;
        os << "]\n";
        std::snprintf(buf, sizeof buf, "tref = %.6g K\n", block.params.temperature_ref);
        os << buf;
        const char* unit = block.kind == BondedKind::Bond ? "nm" : "deg";
        os << "# gauss = area  center(" << unit << ")  width(" << unit << ")\n";
        for (const auto& c : block.params.components) {
            std::snprintf(buf, sizeof buf, "gauss = %.6g %.6g %.6g\n", c.area, c.center, c.width);
            os << buf;
        }
    }
    return os.str();
}

ForceField ForceField::from_text(const std::string& content, const std::string& path) {
    const TextDoc doc = parse_textdoc(content, path);
    expect_format(doc, "egomd-ff", 1);

    ForceField ff;
    ff.name = doc.top.get_string("name", "unnamed");
    ff.r_cut = doc.top.get_number("r_cut", 1.4, "nm");

    for (const auto& s : doc.sections) {
        if (s.name == "bead") {
            if (s.args.size() != 1) throw UserError(path + ": [bead] needs exactly one type name");
            BeadType bt;
            bt.name = s.args[0];
            bt.mass = s.get_number("mass", "amu");
            bt.sigma = s.get_number("sigma", "nm");
            bt.epsilon = s.get_number("epsilon", "kJ/mol");
            ff.bead_types.push_back(bt);
        } else if (s.name == "mix") {
            if (s.args.size() != 2) throw UserError(path + ": [mix] needs two type names");
            ff.mixing.set_gamma(s.args[0], s.args[1], s.get_number("gamma"));
        } else if (s.name == "bond" || s.name == "angle") {
            BondedBlock block;
            block.kind = s.name == "bond" ? BondedKind::Bond : BondedKind::Angle;
            block.patterns = s.args.empty() ? std::vector<std::string>{"*"} : s.args;
            block.params.kind = block.kind;
            block.params.temperature_ref = s.get_number("tref", "K");
            for (const auto& kv : s.entries) {
                if (kv.key != "gauss") continue;
                if (kv.tokens.size() < 3)
                    throw UserError(path + ":" + std::to_string(kv.line) + ": gauss row needs A mu xi");
                GaussComponent c;
                c.area = parse_number(kv.tokens[0], "gauss area");
                c.center = parse_number(kv.tokens[1], "gauss center");
                c.width = parse_number(kv.tokens[2], "gauss width");
                block.params.components.push_back(c);
            }
            ff.bonded.push_back(std::move(block));
        } else {
            throw UserError(path + ": unknown section [" + s.name + "]");
        }
    }
    ff.validate();
    return ff;
}

ForceField ForceField::load(const std::string& path) { return from_text(read_file(path), path); }

void ForceField::save(const std::string& path) const { atomic_write(path, to_text()); }

ForceField ForceField::bundled_ego_water_293k() {
    ForceField ff;
    ff.name = "ego_water_293K";
    ff.r_cut = 1.4;
    ff.bead_types = {
        {"PA", 53.0, 0.45, 4.356},
        {"PB", 44.0, 0.46, 3.523},
        {"PW", 54.0, 0.40, 2.650},
    };
    ff.mixing.set_gamma("PB", "PW", 1.13);

    BondedBlock bond;
    bond.kind = BondedKind::Bond;
    bond.patterns = {"PA-PA", "PA-PB", "PB-PB"};
    bond.params.kind = BondedKind::Bond;
    bond.params.temperature_ref = 293.0;
    bond.params.components = {
        {0.382, 0.305, 0.023},
        {0.229, 0.338, 0.020},
        {0.028, 0.266, 0.018},
    };
    ff.bonded.push_back(bond);

    BondedBlock angle;
    angle.kind = BondedKind::Angle;
    angle.patterns = {"PA-PB-PB", "PB-PB-PB", "PA-PB-PA"};
    angle.params.kind = BondedKind::Angle;
    angle.params.temperature_ref = 293.0;
    angle.params.components = {
        {238.840, 190.567, 57.471},
        {45.375, 123.986, 24.819},
        {31.826, 101.560, 14.765},
    };
    ff.bonded.push_back(angle);

    ff.validate();
    return ff;
}

ForceField resolve_forcefield(const std::string& name_or_path) {
    if (name_or_path == "ego_water_293K" && !std::filesystem::exists(name_or_path))
        return ForceField::bundled_ego_water_293k();
    return ForceField::load(name_or_path);
}

}  // namespace egomd
