#include "egomd/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "egomd/errors.hpp"
#include "egomd/units.hpp"

namespace egomd {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = 180.0 / kPi;
constexpr double kMinSeparation = 1e-6;   // nm, coincident-bead guard
constexpr double kSinThetaFloor = 1e-6;   // angle singularity guard
constexpr int kScanPoints = 4096;
}  // namespace

void LJPairParams::validate() const {
    if (!(sigma > 0.0)) throw UserError("LJ pair: sigma must be > 0");
    if (!(epsilon > 0.0)) throw UserError("LJ pair: epsilon must be > 0");
    if (!(r_cut > sigma)) throw UserError("LJ pair: r_cut must exceed sigma");
}

namespace {
double lj_unshifted(double r, double sigma, double epsilon) {
    const double sr2 = sigma * sigma / (r * r);
    const double sr6 = sr2 * sr2 * sr2;
    return 4.0 * epsilon * sr6 * (sr6 - 1.0);
}
}  // namespace

LJPairParams make_lj_pair(double sigma, double epsilon, double r_cut) {
    LJPairParams p;
    p.sigma = sigma;
    p.epsilon = epsilon;
    p.r_cut = r_cut;
    p.validate();
    p.shift = -lj_unshifted(r_cut, sigma, epsilon);
    return p;
}

EnergyForce lj_energy_force(double r, const LJPairParams& p) {
    if (!(r > 0.0)) throw NumericError("LJ evaluation at non-positive separation");
    if (r >= p.r_cut) return {0.0, 0.0};
    const double sr2 = p.sigma * p.sigma / (r * r);
    const double sr6 = sr2 * sr2 * sr2;
    const double energy = 4.0 * p.epsilon * sr6 * (sr6 - 1.0) + p.shift;
    const double force = 24.0 * p.epsilon * sr6 * (2.0 * sr6 - 1.0) / r;  // -dU/dr
    return {energy, force};
}

LJPairParams combine_params(const BeadType& type_i, const BeadType& type_j, const MixingRule& rule,
                            double r_cut) {
    const double sigma = 0.5 * (type_i.sigma + type_j.sigma);
    const double epsilon =
        rule.gamma(type_i.name, type_j.name) * std::sqrt(type_i.epsilon * type_j.epsilon);
    return make_lj_pair(sigma, epsilon, r_cut);
}

void MixturePotentialParams::validate() const {
    if (components.empty()) throw UserError("mixture potential: needs at least one component");
    if (!(temperature_ref > 0.0)) throw UserError("mixture potential: reference temperature must be > 0");
    for (const auto& c : components) {
        if (!(c.area > 0.0)) throw UserError("mixture potential: component area must be > 0");
        if (!(c.width > 0.0)) throw UserError("mixture potential: component width must be > 0");
    }
}

MixturePotential::MixturePotential(MixturePotentialParams params) : params_(std::move(params)) {
    params_.validate();

    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (const auto& c : params_.components) {
        lo = std::min(lo, c.center - 8.0 * c.width);
        hi = std::max(hi, c.center + 8.0 * c.width);
    }
    if (params_.kind == BondedKind::Bond) {
        lo = std::max(lo, 1e-4);
    } else {
        lo = std::max(lo, 0.5);    // degrees; the engine floors sin(theta) anyway
        hi = std::min(hi, 179.5);
    }
    if (!(hi > lo)) throw UserError("mixture potential: empty tabulation domain");
    lo_ = lo;
    hi_ = hi;

    double min_u = std::numeric_limits<double>::max();
    double arg = lo;
    for (int i = 0; i <= kScanPoints; ++i) {
        const double q = lo_ + (hi_ - lo_) * i / kScanPoints;
        const double u = raw_energy(q);
        if (u < min_u) {
            min_u = u;
            arg = q;
        }
    }
    // polish the scan minimum by bisecting the derivative inside one cell
    const double cell = (hi_ - lo_) / kScanPoints;
    double a = std::max(lo_, arg - cell);
    double b = std::min(hi_, arg + cell);
    if (raw_derivative(a) < 0.0 && raw_derivative(b) > 0.0) {
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (a + b);
            (raw_derivative(mid) < 0.0 ? a : b) = mid;
        }
        arg = 0.5 * (a + b);
        min_u = raw_energy(arg);
    }
    offset_ = min_u;
    argmin_ = arg;

    const double h = (hi_ - lo_) / kScanPoints;
    auto curvature = [&](double q) {
        const double c = (raw_energy(q + h) - 2.0 * raw_energy(q) + raw_energy(q - h)) / (h * h);
        return std::max(c, 0.0);  // keep the tail confining
    };
    lo_u_ = raw_energy(lo_) - offset_;
    lo_du_ = raw_derivative(lo_);
    lo_k_ = curvature(lo_ + h);
    hi_u_ = raw_energy(hi_) - offset_;
    hi_du_ = raw_derivative(hi_);
    hi_k_ = curvature(hi_ - h);
}

double MixturePotential::raw_energy(double q) const {
    // log-sum-exp over log(A_l/(xi_l sqrt(pi/2))) - (q-mu_l)^2/(2 xi_l^2)
    const double kt = units::kBoltzmann * params_.temperature_ref;
    double max_log = std::numeric_limits<double>::lowest();
    for (const auto& c : params_.components) {
        const double d = (q - c.center) / c.width;
        const double lg = std::log(c.area / (c.width * std::sqrt(kPi / 2.0))) - 0.5 * d * d;
        max_log = std::max(max_log, lg);
    }
    double sum = 0.0;
    for (const auto& c : params_.components) {
        const double d = (q - c.center) / c.width;
        const double lg = std::log(c.area / (c.width * std::sqrt(kPi / 2.0))) - 0.5 * d * d;
        sum += std::exp(lg - max_log);
    }
    return -kt * (max_log + std::log(sum));
}

double MixturePotential::raw_derivative(double q) const {
    const double kt = units::kBoltzmann * params_.temperature_ref;
    double s = 0.0;
    double ds = 0.0;
    // S is well scaled near the support; derivative ratio is safe with the
    // same max-log trick.
    double max_log = std::numeric_limits<double>::lowest();
    for (const auto& c : params_.components) {
        const double d = (q - c.center) / c.width;
        max_log = std::max(max_log, std::log(c.area / (c.width * std::sqrt(kPi / 2.0))) - 0.5 * d * d);
    }
    for (const auto& c : params_.components) {
        const double d = (q - c.center) / c.width;
        const double g = std::exp(std::log(c.area / (c.width * std::sqrt(kPi / 2.0))) - 0.5 * d * d - max_log);
        s += g;
        ds += g * (-(q - c.center) / (c.width * c.width));
    }
    return -kt * ds / s;
}

EnergyForce MixturePotential::energy_deriv(double q) const {
    if (q < lo_) {
        const double d = q - lo_;
        return {lo_u_ + lo_du_ * d + 0.5 * lo_k_ * d * d, lo_du_ + lo_k_ * d};
    }
    if (q > hi_) {
        const double d = q - hi_;
        return {hi_u_ + hi_du_ * d + 0.5 * hi_k_ * d * d, hi_du_ + hi_k_ * d};
    }
    return {raw_energy(q) - offset_, raw_derivative(q)};
}

double MixturePotential::density(double q) const {
    double s = 0.0;
    double total = 0.0;
    for (const auto& c : params_.components) {
        const double d = (q - c.center) / c.width;
        s += c.area / (c.width * std::sqrt(kPi / 2.0)) * std::exp(-0.5 * d * d);
        total += c.area * std::sqrt(2.0 * kPi) / std::sqrt(kPi / 2.0);  // = 2*A_l
    }
    return s / total;
}

BondForces bond_force(const SystemState& state, int bead_i, int bead_j, const MixturePotential& pot) {
    if (pot.params().kind != BondedKind::Bond) throw UserError("bond_force: potential is not a bond kind");
    const Vec3 d = minimum_image_displacement(state.positions[bead_i], state.positions[bead_j], state.box);
    const double len = norm(d);
    if (len < kMinSeparation) throw NumericError("coincident bonded beads");
    const auto [energy, du_dl] = pot.energy_deriv(len);
    const Vec3 f_i = (-du_dl / len) * d;
    return {f_i, -f_i, energy, dot(d, f_i)};
}

AngleForces angle_force(const SystemState& state, int bead_i, int bead_j, int bead_k,
                        const MixturePotential& pot) {
    if (pot.params().kind != BondedKind::Angle) throw UserError("angle_force: potential is not an angle kind");
    const Vec3 a = minimum_image_displacement(state.positions[bead_i], state.positions[bead_j], state.box);
    const Vec3 b = minimum_image_displacement(state.positions[bead_k], state.positions[bead_j], state.box);
    const double la = norm(a);
    const double lb = norm(b);
    if (la < kMinSeparation || lb < kMinSeparation) throw NumericError("coincident beads in angle");

    double cos_t = dot(a, b) / (la * lb);
    cos_t = std::clamp(cos_t, -1.0, 1.0);
    const double sin_t = std::max(std::sqrt(1.0 - cos_t * cos_t), kSinThetaFloor);
    const double theta_deg = std::acos(cos_t) * kDeg;

    const auto [energy, du_dtheta_deg] = pot.energy_deriv(theta_deg);
    const double du_dtheta = du_dtheta_deg * kDeg;  // to per-radian

    // dtheta/dr via d(cos)/dr, with sin floored near the collinear states
    const Vec3 dcos_di = (b / (la * lb)) - (cos_t / (la * la)) * a;
    const Vec3 dcos_dk = (a / (la * lb)) - (cos_t / (lb * lb)) * b;
    const double pref = du_dtheta / sin_t;

    AngleForces out;
    out.f_i = pref * dcos_di;
    out.f_k = pref * dcos_dk;
    out.f_j = -(out.f_i + out.f_k);
    out.energy = energy;
    return out;
}

}  // namespace egomd
