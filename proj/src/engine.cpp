#include "egomd/engine.hpp"

#include <algorithm>
#include <cmath>

#include "egomd/errors.hpp"
#include "egomd/rng.hpp"
#include "egomd/units.hpp"

namespace egomd {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kOverlapFloor = 1e-4;  // nm

// sinh(x)/x with the small-argument series
double sinhx_over_x(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sinh(x) / x;
}
}  // namespace

std::string to_string(Ensemble e) {
    switch (e) {
        case Ensemble::NVE: return "nve";
        case Ensemble::NVT: return "nvt";
        case Ensemble::NPT: return "npt";
    }
    return "?";
}

Ensemble ensemble_from_string(const std::string& s) {
    if (s == "nve" || s == "NVE") return Ensemble::NVE;
    if (s == "nvt" || s == "NVT") return Ensemble::NVT;
    if (s == "npt" || s == "NPT" || s == "NpT") return Ensemble::NPT;
    throw UserError("unknown ensemble '" + s + "' (expected nve|nvt|npt)");
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw UserError("integrator: dt must be > 0");
    if (ensemble != Ensemble::NVE && !(temperature > 0.0))
        throw UserError("integrator: temperature must be > 0 for NVT/NPT");
    if (!(thermostat_tau > 0.0)) throw UserError("integrator: thermostat tau must be > 0");
    if (!(barostat_tau > 0.0)) throw UserError("integrator: barostat tau must be > 0");
}

double NemdForcing::wavenumber(const Vec3& box) const { return 2.0 * kPi / box.z; }

void apply_cosine_acceleration(const SystemState& state, const NemdForcing& forcing,
                               std::vector<Vec3>& forces) {
    const double k = forcing.wavenumber(state.box);
    for (int i = 0; i < state.size(); ++i) {
        const double z = wrap_coordinate(state.positions[i].z, state.box.z);
        forces[i].x += state.topology->bead_mass(i) * forcing.amplitude * std::cos(k * z);
    }
}

double cosine_velocity_amplitude(const SystemState& state, double wavenumber) {
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < state.size(); ++i) {
        const double m = state.topology->bead_mass(i);
        const double c = std::cos(wavenumber * wrap_coordinate(state.positions[i].z, state.box.z));
        num += m * state.velocities[i].x * c;
        den += m * c * c;
    }
    return den > 0.0 ? num / den : 0.0;
}

ForceCompute::ForceCompute(const ForceField& ff, TopologyPtr topology, double skin, bool cap_forces)
    : topology_(std::move(topology)), r_cut_(ff.r_cut), skin_(skin), cap_forces_(cap_forces) {
    const auto& types = topology_->bead_types();
    n_types_ = static_cast<int>(types.size());
    pair_table_.resize(static_cast<std::size_t>(n_types_) * n_types_);
    for (int a = 0; a < n_types_; ++a) {
        for (int b = 0; b < n_types_; ++b) {
            // mixing uses the force field's parameters for these type names
            const LJPairParams p =
                combine_params(ff.bead_type(types[a].name), ff.bead_type(types[b].name), ff.mixing, r_cut_);
            pair_table_[static_cast<std::size_t>(a) * n_types_ + b] = {p.sigma * p.sigma, p.epsilon,
                                                                       p.shift, p.r_cut * p.r_cut};
        }
    }
    for (const auto& [ta, tb] : topology_->bond_kinds()) bond_pots_.push_back(ff.bond_potential(ta, tb));
    for (const auto& [ta, tb, tc] : topology_->angle_kinds())
        angle_pots_.push_back(ff.angle_potential(ta, tb, tc));
}

const EnergyBreakdown& ForceCompute::compute(const SystemState& state, std::vector<Vec3>& forces) {
    if (!nlist_valid_ || neighbor_list_stale(nlist_, state)) {
        nlist_ = build_neighbor_list(state, r_cut_, skin_);
        nlist_valid_ = true;
    }

    forces.assign(state.positions.size(), Vec3{});
    energies_ = EnergyBreakdown{};

    const Topology& topo = *topology_;
    const Vec3* pos = state.positions.data();
    const double bx = state.box.x, by = state.box.y, bz = state.box.z;
    const double ibx = 1.0 / bx, iby = 1.0 / by, ibz = 1.0 / bz;

    double e_nb = 0.0;
    double virial = 0.0;
    for (const auto& [i, j] : nlist_.pairs) {
        // nearest image via round-to-nearest (tie convention irrelevant here:
        // both candidates have the same squared distance)
        double dx = pos[i].x - pos[j].x;
        double dy = pos[i].y - pos[j].y;
        double dz = pos[i].z - pos[j].z;
        dx -= bx * std::rint(dx * ibx);
        dy -= by * std::rint(dy * iby);
        dz -= bz * std::rint(dz * ibz);
        double r2 = dx * dx + dy * dy + dz * dz;
        const PairEntry& p = pair_entry(topo.bead_type_index(i), topo.bead_type_index(j));
        if (r2 >= p.r_cut2) continue;
        if (r2 < kOverlapFloor * kOverlapFloor) {
            if (!cap_forces_) throw NumericError("bead overlap below hard floor (r < 1e-4 nm)");
            r2 = kOverlapFloor * kOverlapFloor;
        }
        if (cap_forces_ && r2 < 0.25 * p.sigma2) r2 = 0.25 * p.sigma2;  // cap at the r = sigma/2 value
        const double inv_r2 = 1.0 / r2;
        const double sr2 = p.sigma2 * inv_r2;
        const double sr6 = sr2 * sr2 * sr2;
        const double coef = 24.0 * p.epsilon * sr6 * (2.0 * sr6 - 1.0) * inv_r2;
        const double fx = coef * dx, fy = coef * dy, fz = coef * dz;
        forces[i].x += fx;
        forces[i].y += fy;
        forces[i].z += fz;
        forces[j].x -= fx;
        forces[j].y -= fy;
        forces[j].z -= fz;
        e_nb += 4.0 * p.epsilon * sr6 * (sr6 - 1.0) + p.shift;
        virial += dx * fx + dy * fy + dz * fz;
    }
    energies_.nonbonded = e_nb;
    energies_.virial = virial;

    for (std::size_t b = 0; b < topo.bonds().size(); ++b) {
        const auto& bond = topo.bonds()[b];
        const BondForces bf = bond_force(state, bond.i, bond.j, bond_pots_[bond.type_pair]);
        forces[bond.i] += bf.f_i;
        forces[bond.j] += bf.f_j;
        energies_.bond += bf.energy;
        energies_.virial += bf.virial;
    }

    for (std::size_t a = 0; a < topo.angles().size(); ++a) {
        const auto& ang = topo.angles()[a];
        const AngleForces af = angle_force(state, ang.i, ang.j, ang.k, angle_pots_[ang.type_triple]);
        forces[ang.i] += af.f_i;
        forces[ang.j] += af.f_j;
        forces[ang.k] += af.f_k;
        energies_.angle += af.energy;
        const Vec3 ra = minimum_image_displacement(state.positions[ang.i], state.positions[ang.j], state.box);
        const Vec3 rb = minimum_image_displacement(state.positions[ang.k], state.positions[ang.j], state.box);
        energies_.virial += dot(ra, af.f_i) + dot(rb, af.f_k);
    }

    energies_.kinetic = kinetic_energy(state.velocities, topo);
    return energies_;
}

EnergyBreakdown total_energy(const SystemState& state, const ForceField& ff) {
    ForceCompute fc(ff, state.topology);
    std::vector<Vec3> forces;
    return fc.compute(state, forces);
}

void settle_overlaps(SystemState& state, const ForceField& ff, double temperature, double duration,
                     double dt) {
    IntegratorConfig cfg;
    cfg.ensemble = Ensemble::NVT;
    cfg.dt = dt;
    cfg.temperature = temperature;
    cfg.thermostat_tau = 0.5;
    cfg.cap_forces = true;
    Integrator integ(ff, state.topology, cfg);
    const long steps = std::lround(duration / dt);
    const long rescale_every = std::max<long>(1, std::lround(0.25 / dt));
    const double t0 = state.time;
    for (long i = 0; i < steps; ++i) {
        integ.step(state);
        if ((i + 1) % rescale_every == 0) {
            remove_net_momentum(state);
            rescale_to_temperature(state, temperature);
        }
    }
    remove_net_momentum(state);
    rescale_to_temperature(state, temperature);
    state.time = t0;
}

void prepare_liquid(SystemState& state, const ForceField& ff, double temperature, double settle_ps,
                    double melt_ps) {
    if (melt_ps > 0.0) settle_overlaps(state, ff, std::max(600.0, 2.0 * temperature), melt_ps);
    settle_overlaps(state, ff, temperature, settle_ps);
}

Integrator::Integrator(const ForceField& ff, TopologyPtr topology, IntegratorConfig cfg)
    : cfg_(cfg), forces_engine_(ff, topology, cfg.neighbor_skin, cfg.cap_forces) {
    cfg_.validate();
    const int n = topology->bead_count();
    nf_ = 3.0 * n - 3.0;
    const double kt = units::kBoltzmann * cfg_.temperature;
    q_mass_ = nf_ * kt * cfg_.thermostat_tau * cfg_.thermostat_tau;
    w_mass_ = (nf_ + 3.0) * kt * cfg_.barostat_tau * cfg_.barostat_tau;
}

void Integrator::ensure_forces(const SystemState& state) {
    if (!forces_valid_) {
        forces_engine_.compute(state, forces_);
        forces_valid_ = true;
    }
}

void Integrator::kick(SystemState& state, const std::vector<Vec3>& forces, double dt_half) {
    for (int i = 0; i < state.size(); ++i)
        state.velocities[i] += (dt_half / state.topology->bead_mass(i)) * forces[i];
}

void Integrator::drift(SystemState& state, double dt) {
    const double skin = cfg_.neighbor_skin;
    for (int i = 0; i < state.size(); ++i) {
        Vec3 dr = dt * state.velocities[i];
        if (norm2(dr) > skin * skin) {
            if (!cfg_.cap_forces)
                throw NumericError("integration blow-up: bead " + std::to_string(i) + " moved " +
                                   std::to_string(norm(dr)) + " nm in one step");
            dr *= 0.5 * skin / norm(dr);  // equilibration mode: clamp, do not abort
        }
        state.positions[i] += dr;
    }
    state.time += dt;
}

double Integrator::thermal_kinetic(const SystemState& state, const NemdForcing* forcing) const {
    if (!forcing) return kinetic_energy(state.velocities, *state.topology);
    // subtract the instantaneous cosine streaming profile so the thermostat
    // never couples to the driven mode
    const double k = forcing->wavenumber(state.box);
    const double v_amp = cosine_velocity_amplitude(state, k);
    double ke = 0.0;
    for (int i = 0; i < state.size(); ++i) {
        const double m = state.topology->bead_mass(i);
        Vec3 v = state.velocities[i];
        v.x -= v_amp * std::cos(k * wrap_coordinate(state.positions[i].z, state.box.z));
        ke += 0.5 * m * norm2(v);
    }
    return ke;
}

void Integrator::thermostat_half(SystemState& state, double dt_half, const NemdForcing* forcing) {
    if (!std::isfinite(cfg_.thermostat_tau)) return;
    const double kt = units::kBoltzmann * cfg_.temperature;
    const bool couple_baro = cfg_.ensemble == Ensemble::NPT && std::isfinite(cfg_.barostat_tau);
    const double target = couple_baro ? (nf_ + 1.0) * kt : nf_ * kt;

    auto xi_force = [&](double kin2) {
        double g = kin2 - target;
        if (couple_baro) g += w_mass_ * state.barostat.v_eps * state.barostat.v_eps;
        return g / q_mass_;
    };

    double kin2 = 2.0 * thermal_kinetic(state, forcing);
    state.thermostat.v_xi += xi_force(kin2) * dt_half / 2.0;

    const double scale = std::exp(-state.thermostat.v_xi * dt_half);
    if (forcing) {
        const double k = forcing->wavenumber(state.box);
        const double v_amp = cosine_velocity_amplitude(state, k);
        for (int i = 0; i < state.size(); ++i) {
            const double u = v_amp * std::cos(k * wrap_coordinate(state.positions[i].z, state.box.z));
            state.velocities[i].x = u + scale * (state.velocities[i].x - u);
            state.velocities[i].y *= scale;
            state.velocities[i].z *= scale;
        }
    } else {
        for (auto& v : state.velocities) v *= scale;
    }
    if (couple_baro) state.barostat.v_eps *= scale;
    state.thermostat.xi += state.thermostat.v_xi * dt_half;

    kin2 = 2.0 * thermal_kinetic(state, forcing);
    state.thermostat.v_xi += xi_force(kin2) * dt_half / 2.0;
}

void Integrator::barostat_kick(SystemState& state, double dt_half) {
    const double kin2 = 2.0 * kinetic_energy(state.velocities, *state.topology);
    const double volume = state.volume();
    const double p_int = (kin2 + forces_engine_.last().virial) / (3.0 * volume);
    const double p_ext = cfg_.pressure_bar * units::kBarToInternalPressure;
    const double g_eps = (3.0 * volume * (p_int - p_ext) + (3.0 / nf_) * kin2) / w_mass_;
    state.barostat.v_eps += g_eps * dt_half;
}

void Integrator::npt_drift(SystemState& state, double dt) {
    const double v_eps = state.barostat.v_eps;
    const double volume_scale = std::exp(3.0 * v_eps * dt);
    if (std::abs(volume_scale - 1.0) > 0.01)
        throw NumericError("barostat instability: volume changed by " +
                           std::to_string((volume_scale - 1.0) * 100.0) + "% in one step");
    const double cell_scale = std::exp(v_eps * dt);
    const double drift_scale = std::exp(v_eps * dt / 2.0) * sinhx_over_x(v_eps * dt / 2.0);
    const double skin = cfg_.neighbor_skin;
    for (int i = 0; i < state.size(); ++i) {
        Vec3 dr = dt * drift_scale * state.velocities[i];
        if (norm2(dr) > skin * skin) {
            if (!cfg_.cap_forces)
                throw NumericError("integration blow-up: bead " + std::to_string(i) + " moved " +
                                   std::to_string(norm(dr)) + " nm in one step");
            dr *= 0.5 * skin / norm(dr);
        }
        state.positions[i] = cell_scale * state.positions[i] + dr;
    }
    state.box *= cell_scale;
    state.time += dt;
}

void Integrator::step(SystemState& state, const NemdForcing* forcing) {
    const double dt = cfg_.dt;
    // forces_ caches interaction forces only; the position-dependent forcing
    // term is added into the working array at each half-kick
    ensure_forces(state);
    auto total_forces = [&]() {
        total_ = forces_;
        if (forcing) apply_cosine_acceleration(state, *forcing, total_);
        return std::cref(total_);
    };

    const bool thermo = cfg_.ensemble != Ensemble::NVE && std::isfinite(cfg_.thermostat_tau);
    const bool baro = cfg_.ensemble == Ensemble::NPT && std::isfinite(cfg_.barostat_tau);

    if (thermo) thermostat_half(state, dt / 2.0, forcing);

    if (baro) {
        barostat_kick(state, dt / 2.0);
        const double alpha = 1.0 + 3.0 / nf_;
        const double x = alpha * state.barostat.v_eps * dt / 2.0;
        const double vs = std::exp(-x);
        const double fs = std::exp(-x / 2.0) * sinhx_over_x(x / 2.0);
        const auto& f1 = total_forces().get();
        for (int i = 0; i < state.size(); ++i)
            state.velocities[i] =
                vs * state.velocities[i] + (dt / 2.0 * fs / state.topology->bead_mass(i)) * f1[i];
        npt_drift(state, dt);
        forces_engine_.compute(state, forces_);
        const auto& f2 = total_forces().get();
        for (int i = 0; i < state.size(); ++i)
            state.velocities[i] =
                vs * state.velocities[i] + (dt / 2.0 * fs / state.topology->bead_mass(i)) * f2[i];
        barostat_kick(state, dt / 2.0);
    } else {
        kick(state, total_forces().get(), dt / 2.0);
        drift(state, dt);
        forces_engine_.compute(state, forces_);
        kick(state, total_forces().get(), dt / 2.0);
    }

    if (thermo) thermostat_half(state, dt / 2.0, forcing);
    forces_valid_ = true;
}

double Integrator::conserved_energy(const SystemState& state) {
    ensure_forces(state);
    const EnergyBreakdown& e = forces_engine_.last();
    double h = e.potential() + kinetic_energy(state.velocities, *state.topology);
    const double kt = units::kBoltzmann * cfg_.temperature;
    const bool thermo = cfg_.ensemble != Ensemble::NVE && std::isfinite(cfg_.thermostat_tau);
    const bool baro = cfg_.ensemble == Ensemble::NPT && std::isfinite(cfg_.barostat_tau);
    if (thermo) {
        const double target = baro ? (nf_ + 1.0) * kt : nf_ * kt;
        h += 0.5 * q_mass_ * state.thermostat.v_xi * state.thermostat.v_xi + target * state.thermostat.xi;
    }
    if (baro) {
        h += 0.5 * w_mass_ * state.barostat.v_eps * state.barostat.v_eps +
             cfg_.pressure_bar * units::kBarToInternalPressure * state.volume();
    }
    return h;
}

Trajectory run(SystemState& state, const ForceField& ff, const IntegratorConfig& cfg,
               const RunOptions& opts) {
    if (!(opts.duration >= 0.0)) throw UserError("run: duration must be >= 0");
    if (!(opts.sample_interval > 0.0)) throw UserError("run: sample interval must be > 0");
    if (opts.forcing && !(opts.forcing->amplitude >= 0.0))
        throw UserError("run: forcing amplitude must be >= 0");

    Integrator integrator(ff, state.topology, cfg);
    const long n_steps = std::lround(opts.duration / cfg.dt);
    const long sample_every = std::max<long>(1, std::lround(opts.sample_interval / cfg.dt));

    Trajectory traj;
    traj.topology = state.topology;
    traj.sample_interval = opts.sample_interval;
    traj.metadata = opts.metadata;
    traj.metadata["ensemble"] = to_string(cfg.ensemble);
    if (opts.forcing) traj.metadata["nemd_amplitude"] = std::to_string(opts.forcing->amplitude);

    std::unique_ptr<TrajectoryWriter> writer;
    if (!opts.trajectory_path.empty())
        writer = std::make_unique<TrajectoryWriter>(opts.trajectory_path, state.topology,
                                                    opts.sample_interval, traj.metadata);

    auto sample = [&](long step) {
        if (opts.keep_frames_in_memory) {
            Frame f;
            f.time = state.time;
            f.box = state.box;
            f.positions = state.positions;
            f.velocities = state.velocities;
            traj.frames.push_back(std::move(f));
        }
        if (writer) writer->append(state);
        if (opts.on_sample) opts.on_sample(static_cast<int>(step), state);
    };

    sample(0);
    const NemdForcing* forcing = opts.forcing ? &*opts.forcing : nullptr;
    for (long step = 1; step <= n_steps; ++step) {
        try {
            integrator.step(state, forcing);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(step) + " (t = " + std::to_string(state.time) +
                               " ps): " + e.what());
        }
        if (step % sample_every == 0 || step == n_steps) sample(step);
        if (!opts.checkpoint_path.empty() && opts.checkpoint_every_steps > 0 &&
            step % opts.checkpoint_every_steps == 0) {
            Checkpoint cp;
            cp.state = state;
            cp.step = step;
            cp.metadata = traj.metadata;
            cp.save(opts.checkpoint_path);
        }
    }
    if (writer) writer->close();
    return traj;
}

}  // namespace egomd
