#include "egomd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "egomd/errors.hpp"
#include "egomd/textdoc.hpp"
#include "egomd/units.hpp"

namespace egomd {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double ScalingParams::diffusivity_factor() const { return std::cbrt(static_cast<double>(n)); }

void ScalingParams::validate() const {
    if (!(s > 0.0)) throw UserError("scaling: S must be > 0");
    if (n < 1) throw UserError("scaling: n must be a positive integer");
}

void ScalingParams::save(const std::string& path) const {
    std::ostringstream os;
    os << "# egomd time-mapping parameters\n";
    os << "format egomd-scaling 1\n";
    os << "S = " << s << "\n";
    os << "n = " << n << "\n";
    atomic_write(path, os.str());
}

ScalingParams ScalingParams::load(const std::string& path) {
    const TextDoc doc = load_textdoc(path);
    expect_format(doc, "egomd-scaling", 1);
    ScalingParams sp;
    sp.s = doc.top.get_number("S");
    sp.n = static_cast<int>(doc.top.get_integer("n", 1));
    sp.validate();
    return sp;
}

MeanWithError block_average(const std::vector<double>& samples, int blocks) {
    MeanWithError out;
    if (samples.empty()) throw UserError("block average of an empty sample set");
    double sum = 0.0;
    for (double v : samples) sum += v;
    out.mean = sum / static_cast<double>(samples.size());
    if (static_cast<int>(samples.size()) < 2 * blocks) return out;  // error bar omitted

    const std::size_t block_len = samples.size() / blocks;
    std::vector<double> block_means;
    for (int b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (std::size_t i = b * block_len; i < (b + 1) * block_len; ++i) s += samples[i];
        block_means.push_back(s / static_cast<double>(block_len));
    }
    double var = 0.0;
    for (double m : block_means) var += (m - out.mean) * (m - out.mean);
    var /= blocks - 1;
    out.std_error = std::sqrt(var / blocks);
    return out;
}

namespace {
std::vector<int> frames_in_window(const Trajectory& traj, double t_begin, double t_end) {
    std::vector<int> idx;
    for (int i = 0; i < traj.frame_count(); ++i) {
        const double t = traj.frames[i].time;
        if (t >= t_begin - 1e-9 && t <= t_end + 1e-9) idx.push_back(i);
    }
    return idx;
}
}  // namespace

MeanWithError density(const Trajectory& traj, double t_begin, double t_end) {
    if (traj.frames.empty()) throw UserError("density: empty trajectory");
    const double t_first = traj.frames.front().time;
    const double t_last = traj.frames.back().time;
    if (t_begin < t_first - 1e-9 || t_end > t_last + 1e-9 || t_begin >= t_end)
        throw UserError("density: window [" + std::to_string(t_begin) + ", " + std::to_string(t_end) +
                        "] ps outside trajectory [" + std::to_string(t_first) + ", " +
                        std::to_string(t_last) + "] ps");
    const auto idx = frames_in_window(traj, t_begin, t_end);
    if (idx.empty()) throw UserError("density: no frames in window");
    const double mass = traj.topology->total_mass();
    std::vector<double> samples;
    samples.reserve(idx.size());
    for (int i : idx) {
        const Vec3& b = traj.frames[i].box;
        samples.push_back(mass / (b.x * b.y * b.z) * units::kDensityToGramPerCm3);
    }
    return block_average(samples);
}

MsdCurve msd(const Trajectory& traj, const std::string& species, double max_lag, double origin_stride) {
    if (!traj.topology->has_species(species))
        throw UserError("msd: species '" + species + "' not present in the trajectory");
    if (traj.frame_count() < 2) throw UserError("msd: need at least two frames");
    const double dt = traj.frames[1].time - traj.frames[0].time;
    const auto& molecules = traj.topology->molecules_of_species(species);

    // per-frame COM positions of the selected molecules (unwrapped stream)
    const int n_mol = static_cast<int>(molecules.size());
    const int n_frames = traj.frame_count();
    std::vector<Vec3> com(static_cast<std::size_t>(n_frames) * n_mol);
    const Topology& topo = *traj.topology;
    for (int f = 0; f < n_frames; ++f) {
        for (int m = 0; m < n_mol; ++m) {
            const int mol = molecules[m];
            const int first = topo.molecule_first_bead(mol);
            Vec3 c{};
            double mass = 0.0;
            for (int b = first; b < first + topo.molecule_size(mol); ++b) {
                c += topo.bead_mass(b) * traj.frames[f].positions[b];
                mass += topo.bead_mass(b);
            }
            com[static_cast<std::size_t>(f) * n_mol + m] = c / mass;
        }
    }

    const int max_lag_frames = std::min<int>(n_frames - 1, static_cast<int>(std::floor(max_lag / dt + 0.5)));
    const int origin_step = std::max(1, static_cast<int>(std::floor(origin_stride / dt + 0.5)));

    MsdCurve curve;
    curve.species = species;
    for (int lag = 0; lag <= max_lag_frames; ++lag) {
        double acc = 0.0;
        int count = 0;
        for (int origin = 0; origin + lag < n_frames; origin += origin_step) {
            for (int m = 0; m < n_mol; ++m) {
                const Vec3 d = com[static_cast<std::size_t>(origin + lag) * n_mol + m] -
                               com[static_cast<std::size_t>(origin) * n_mol + m];
                acc += norm2(d);
            }
            ++count;
        }
        curve.lag.push_back(lag * dt);
        curve.value.push_back(acc / (static_cast<double>(count) * n_mol));
        curve.origins.push_back(count);
    }
    return curve;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw UserError("linear fit needs >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw NumericError("degenerate linear fit (constant x)");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

DiffusionResult diffusion_from_msd(const MsdCurve& curve, double fit_begin, double fit_end) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.lag.size(); ++i) {
        if (curve.lag[i] >= fit_begin - 1e-9 && curve.lag[i] <= fit_end + 1e-9) {
            x.push_back(curve.lag[i]);
            y.push_back(curve.value[i]);
        }
    }
    if (x.size() < 2) throw UserError("diffusion fit window contains fewer than 2 MSD points");
    const LinearFit fit = linear_fit(x, y);
    DiffusionResult out;
    out.slope = fit.slope;
    out.r_squared = fit.r_squared;
    out.d = fit.slope / 6.0 * units::kDiffusionToM2PerS;
    out.poor_fit = fit.r_squared < 0.9;
    return out;
}

double compute_time_mapping(double d_cg_water, double d_exp_water) {
    if (!(d_cg_water > 0.0) || !(d_exp_water > 0.0))
        throw UserError("time mapping needs positive diffusion coefficients");
    return std::cbrt(3.0) * d_cg_water / d_exp_water;
}

double scale_diffusion(double d_cg, const ScalingParams& sp) {
    sp.validate();
    return sp.diffusivity_factor() * d_cg / sp.s;
}

double scale_viscosity(double eta_cg, double s) {
    if (!(eta_cg > 0.0) || !(s > 0.0)) throw UserError("viscosity scaling needs positive inputs");
    return s * eta_cg;
}

MeanWithError viscosity_from_nemd(const Trajectory& traj, const NemdForcing& forcing, double discard) {
    if (!(forcing.amplitude > 0.0))
        throw UserError("viscosity estimator undefined for zero forcing amplitude");
    if (traj.frames.empty()) throw UserError("viscosity: empty trajectory");

    const Topology& topo = *traj.topology;
    const double total_mass = topo.total_mass();
    std::vector<double> inv_eta;  // internal units: nm ps / amu
    for (const auto& f : traj.frames) {
        if (f.time < discard - 1e-9) continue;
        const double k = 2.0 * kPi / f.box.z;
        const double rho = total_mass / (f.box.x * f.box.y * f.box.z);  // amu/nm^3
        double mv_cos = 0.0;
        for (std::size_t i = 0; i < f.positions.size(); ++i) {
            const double z = wrap_coordinate(f.positions[i].z, f.box.z);
            mv_cos += topo.bead_mass(static_cast<int>(i)) * f.velocities[i].x * std::cos(k * z);
        }
        inv_eta.push_back(2.0 * k * k / (rho * forcing.amplitude) * mv_cos / total_mass);
    }
    if (inv_eta.empty()) throw UserError("viscosity: no frames after the discard window");

    const MeanWithError inv = block_average(inv_eta);
    if (!(inv.mean > 0.0))
        throw NumericError("viscosity estimator: mean reciprocal viscosity is not positive "
                           "(signal below noise)");
    MeanWithError out;
    out.mean = 1.0 / inv.mean * units::kViscosityToMPaS;
    // first-order error propagation through the reciprocal
    out.std_error = inv.std_error / (inv.mean * inv.mean) * units::kViscosityToMPaS;
    return out;
}

ShearRateGuard max_shear_rate(double amplitude, double rho_kg_m3, double eta_cg_pas, double l_z_nm,
                              double tau_longest_ps) {
    if (!(rho_kg_m3 > 0.0) || !(eta_cg_pas > 0.0) || !(l_z_nm > 0.0) || !(tau_longest_ps > 0.0))
        throw UserError("max shear rate needs positive density, viscosity, box height and correlation time");
    if (amplitude < 0.0) throw UserError("max shear rate: amplitude must be >= 0");
    // (rho/eta) [s/m^2] -> [ps/nm^2]: 1 s/m^2 = 1e12 ps / 1e18 nm^2 = 1e-6 ps/nm^2
    const double rho_over_eta = rho_kg_m3 / eta_cg_pas * 1e-6;  // ps/nm^2
    ShearRateGuard out;
    out.sh_max = amplitude * rho_over_eta * l_z_nm / (2.0 * kPi);  // 1/ps
    out.verdict = out.sh_max < 1.0 / tau_longest_ps ? ShearRateVerdict::Pass : ShearRateVerdict::Warn;
    return out;
}

RelaxationResult end_to_end_relaxation(const Trajectory& traj, const std::string& species) {
    if (!traj.topology->has_species(species))
        throw UserError("relaxation: species '" + species + "' not present");
    const auto& molecules = traj.topology->molecules_of_species(species);
    const Topology& topo = *traj.topology;
    if (topo.molecule_size(molecules.front()) < 2)
        throw UserError("relaxation: species '" + species + "' has fewer than 2 beads");
    if (traj.frame_count() < 2) throw UserError("relaxation: need at least two frames");

    const int n_frames = traj.frame_count();
    const int n_mol = static_cast<int>(molecules.size());
    const double dt = traj.frames[1].time - traj.frames[0].time;

    std::vector<Vec3> u(static_cast<std::size_t>(n_frames) * n_mol);
    for (int f = 0; f < n_frames; ++f) {
        for (int m = 0; m < n_mol; ++m) {
            const int mol = molecules[m];
            const int first = topo.molecule_first_bead(mol);
            const int last = first + topo.molecule_size(mol) - 1;
            const Vec3 e = traj.frames[f].positions[last] - traj.frames[f].positions[first];
            const double len = norm(e);
            if (!(len > 0.0)) throw NumericError("relaxation: zero end-to-end vector");
            u[static_cast<std::size_t>(f) * n_mol + m] = e / len;
        }
    }

    RelaxationResult out;
    const int max_lag = n_frames - 1;
    for (int lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        long count = 0;
        for (int origin = 0; origin + lag < n_frames; ++origin) {
            for (int m = 0; m < n_mol; ++m) {
                acc += dot(u[static_cast<std::size_t>(origin) * n_mol + m],
                           u[static_cast<std::size_t>(origin + lag) * n_mol + m]);
                ++count;
            }
        }
        out.lag.push_back(lag * dt);
        out.correlation.push_back(acc / static_cast<double>(count));
    }

    const double min_c = *std::min_element(out.correlation.begin(), out.correlation.end());
    if (min_c > 0.5)
        throw NumericError("relaxation: correlation never decays below 0.5; trajectory too short");

    std::vector<double> x, y;
    for (std::size_t i = 0; i < out.lag.size(); ++i) {
        if (out.correlation[i] <= 0.8 && out.correlation[i] >= 0.1) {
            x.push_back(out.lag[i]);
            y.push_back(std::log(out.correlation[i]));
        }
        if (out.correlation[i] < 0.1) break;  // fit window ends at first drop below 0.1
    }
    if (x.size() < 2) throw NumericError("relaxation: too few points in the C in [0.8, 0.1] window");
    const LinearFit fit = linear_fit(x, y);
    if (!(fit.slope < 0.0)) throw NumericError("relaxation: correlation does not decay");
    out.tau = -1.0 / fit.slope;
    return out;
}

NmrWaterDiffusion water_diffusion_from_nmr(double d_oh, double d_ego, double chi, NmrForm form) {
    if (!(chi > 0.0) || !(chi < 1.0)) throw UserError("NMR correction: chi must be in (0, 1)");
    NmrWaterDiffusion out;
    if (form == NmrForm::Literal) {
        out.d_w = chi / (1.0 - chi) * d_oh - 1.0 / (1.0 - chi) * d_ego;
    } else {
        out.d_w = (d_oh - chi * d_ego) / (1.0 - chi);
    }
    out.valid = out.d_w > 0.0;
    return out;
}

}  // namespace egomd
