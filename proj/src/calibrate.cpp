#include "egomd/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "egomd/engine.hpp"
#include "egomd/errors.hpp"
#include "egomd/textdoc.hpp"

namespace egomd {

using nlohmann::json;

std::string MixtureSpec::label() const {
    char buf[96];
    if (pure()) {
        std::snprintf(buf, sizeof buf, "pure %s", species.c_str());
    } else {
        std::snprintf(buf, sizeof buf, "%s/PW W=%.3g", species.c_str(), weight_fraction);
    }
    return buf;
}

void CalibrationTarget::validate() const {
    if (!(value > 0.0)) throw UserError("calibration target must be positive");
    if (system.weight_fraction < 0.0 || system.weight_fraction > 1.0)
        throw UserError("weight fraction must lie in [0, 1]");
}

TopologyPtr compose_mixture(const ForceField& ff, const MixtureSpec& spec, int total_beads) {
    const MoleculeTemplate main_tpl = standard_molecule(spec.species);
    double main_mass = 0.0;
    for (const auto& t : main_tpl.bead_types) main_mass += ff.bead_type(t).mass;

    std::vector<MoleculeTemplate> templates = {main_tpl};
    std::vector<std::pair<std::string, int>> counts;
    if (spec.pure()) {
        const int n = std::max(1, total_beads / main_tpl.size());
        counts = {{spec.species, n}};
    } else {
        if (spec.species == "PW") throw UserError("mixture: species must be an oligomer, solvent is PW");
        templates.push_back(standard_molecule("PW"));
        const double pw_mass = ff.bead_type("PW").mass;
        const double w = spec.weight_fraction;
        // choose counts so n_s*M_s : n_w*M_w matches w : (1-w) at ~total beads
        const double beads_per_main = main_tpl.size() + main_mass * (1.0 - w) / (w * pw_mass);
        int n_main = std::max(1, static_cast<int>(std::lround(total_beads / beads_per_main)));
        int n_pw = std::max(1, static_cast<int>(std::lround(n_main * main_mass * (1.0 - w) / (w * pw_mass))));
        counts = {{spec.species, n_main}, {"PW", n_pw}};
    }
    return std::make_shared<Topology>(ff.bead_types, templates, counts);
}

RunLengths desk_run_lengths() { return RunLengths{}; }

RunLengths paper_run_lengths() {
    RunLengths lengths;
    lengths.settle = 20.0;
    lengths.melt = 100.0;
    lengths.npt_equilibration = 1000.0;
    lengths.npt_production = 1000.0;  // 2 ns NpT total, density from the last 1 ns
    lengths.nvt_production = 3000.0;
    lengths.msd_fit_begin = 1000.0;  // drop the first 1 ns of MSD data
    lengths.target_beads = 3000;
    return lengths;
}

SystemState RealSimulator::equilibrated(const ForceField& ff, const MixtureSpec& spec) {
    auto topo = compose_mixture(ff, spec, lengths_.target_beads);
    const auto eq_bonds = ff.equilibrium_bond_lengths(*topo);
    auto state = build_system(topo, 1.0, spec.temperature, seed_, &eq_bonds);

    prepare_liquid(state, ff, spec.temperature, lengths_.settle, lengths_.melt);

    IntegratorConfig npt;
    npt.ensemble = Ensemble::NPT;
    npt.dt = 0.010;
    npt.temperature = spec.temperature;
    npt.pressure_bar = spec.pressure_bar;
    RunOptions opts;
    opts.duration = lengths_.npt_equilibration;
    opts.sample_interval = 5.0;
    opts.keep_frames_in_memory = false;
    run(state, ff, npt, opts);
    return state;
}

double RealSimulator::density_gcm3(const ForceField& ff, const MixtureSpec& spec) {
    auto state = equilibrated(ff, spec);
    IntegratorConfig npt;
    npt.ensemble = Ensemble::NPT;
    npt.dt = 0.010;
    npt.temperature = spec.temperature;
    npt.pressure_bar = spec.pressure_bar;
    RunOptions opts;
    opts.duration = lengths_.npt_production;
    opts.sample_interval = 1.0;
    state.time = 0.0;
    const auto traj = run(state, ff, npt, opts);
    return density(traj, 0.5 * lengths_.npt_production, lengths_.npt_production).mean;
}

double RealSimulator::diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                                       const std::string& species) {
    auto state = equilibrated(ff, spec);
    IntegratorConfig nvt;
    nvt.ensemble = Ensemble::NVT;
    nvt.dt = 0.010;
    nvt.temperature = spec.temperature;
    RunOptions opts;
    const double factor = spec.species == "EGO13" ? lengths_.ego13_nvt_factor : 1.0;
    opts.duration = factor * lengths_.nvt_production;
    opts.sample_interval = 0.5 * factor;
    state.time = 0.0;
    const auto traj = run(state, ff, nvt, opts);
    const double max_lag = 0.4 * factor * lengths_.nvt_production;
    const auto curve = msd(traj, species, max_lag, 10.0 * opts.sample_interval);
    const double fit_begin = lengths_.msd_fit_begin > 0 ? lengths_.msd_fit_begin : 0.1 * max_lag;
    const auto fit = diffusion_from_msd(curve, fit_begin, 0.9 * max_lag);
    return fit.d;
}

std::string RealSimulator::fingerprint() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "real settle=%g+%g npt=%g+%g nvt=%g beads=%d seed=%llu",
                  lengths_.melt, lengths_.settle, lengths_.npt_equilibration, lengths_.npt_production,
                  lengths_.nvt_production, lengths_.target_beads,
                  static_cast<unsigned long long>(seed_));
    return buf;
}

double SurrogateSimulator::epsilon_curve(const std::string& bead, double sigma) const {
    if (bead == "PW") return eps_pw0 * std::pow(sigma_pw0 / sigma, 3.0);
    if (bead == "PA") return eps_pa0 * std::pow(sigma_pa0 / sigma, 3.0);
    if (bead == "PB") return eps_pb0 * std::pow(sigma_pb0 / sigma, 3.0);
    throw UserError("surrogate: unknown bead " + bead);
}

double SurrogateSimulator::density_gcm3(const ForceField& ff, const MixtureSpec& spec) {
    if (!spec.pure()) throw UserError("surrogate densities are defined for pure systems only");
    std::string bead;
    double target = 0.0;
    if (spec.species == "PW") {
        bead = "PW";
        target = 0.998;
    } else if (spec.species == "EGO2") {
        bead = "PA";
        target = 1.118;
    } else if (spec.species == "EGO4") {
        bead = "PB";
        target = 1.125;
    } else {
        throw UserError("surrogate density undefined for " + spec.species);
    }
    const auto& bt = ff.bead_type(bead);
    return target * std::pow(bt.epsilon / epsilon_curve(bead, bt.sigma), 0.3);
}

double SurrogateSimulator::reference_diffusion(const std::string& species, double weight_fraction) {
    // log-linear in W, the shape the measurements show
    if (species == "PW") return 2.0e-9 * std::pow(10.0, -0.8 * weight_fraction);
    if (species == "EGO2") return 0.80e-9 * std::pow(10.0, -1.0 * weight_fraction);
    if (species == "EGO3") return 0.65e-9 * std::pow(10.0, -1.1 * weight_fraction);
    if (species == "EGO13") return 0.25e-9 * std::pow(10.0, -1.3 * weight_fraction);
    throw UserError("surrogate has no reference diffusion for " + species);
}

double SurrogateSimulator::diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                                            const std::string& species) {
    const int n = standard_molecule(species).molecules_per_bead;
    if (spec.pure() && spec.species == "PW") {
        // the step-1 water run: S comes out as s0 exactly at sigma_PW = 0.40
        const double sigma = ff.bead_type("PW").sigma;
        return s0 * d_exp_water / std::cbrt(3.0) * (1.0 + 0.5 * (sigma - sigma_pw0));
    }
    const double c = 0.8 + 0.3 * spec.weight_fraction + (species == "PW" ? 0.1 : 0.0);
    double h = 0.0;
    if (spec.species == "EGO2") {
        h = c * 5.0 * (ff.bead_type("PA").sigma - sigma_pa0);
    } else if (spec.species == "EGO3") {
        h = c * (5.0 * (ff.bead_type("PB").sigma - sigma_pb0) +
                 0.4 * (ff.mixing.gamma("PB", "PW") - gamma0));
    } else if (spec.species == "EGO13") {
        h = c * (6.0 * (ff.mixing.gamma("PB", "PW") - gamma0) +
                 0.8 * (ff.bead_type("PB").sigma - sigma_pb0));
    } else {
        throw UserError("surrogate diffusion undefined for " + spec.label());
    }
    const double d_aa = reference_diffusion(species, spec.weight_fraction) * std::pow(10.0, h);
    return d_aa * s0 / std::cbrt(static_cast<double>(n));
}

std::string SurrogateSimulator::fingerprint() const { return "surrogate v1"; }

double CachingSimulator::cached(const std::string& key, const std::function<double()>& compute) {
    namespace fs = std::filesystem;
    const std::string hash = content_hash(key);
    const fs::path file = fs::path(cache_dir_) / (hash + ".json");
    if (fs::exists(file)) {
        const json j = json::parse(read_file(file.string()));
        if (j.value("key", "") == key) {
            ++hits_;
            return j.at("value").get<double>();
        }
    }
    const double value = compute();
    ++misses_;
    json j;
    j["key"] = key;
    j["value"] = value;
    atomic_write(file.string(), j.dump());
    return value;
}

double CachingSimulator::density_gcm3(const ForceField& ff, const MixtureSpec& spec) {
    const std::string key = "density|" + fingerprint() + "|" + spec.label() + "|" + ff.to_text();
    return cached(key, [&] { return inner_.density_gcm3(ff, spec); });
}

double CachingSimulator::diffusion_cg_m2s(const ForceField& ff, const MixtureSpec& spec,
                                          const std::string& species) {
    const std::string key =
        "diffusion|" + fingerprint() + "|" + spec.label() + "|" + species + "|" + ff.to_text();
    return cached(key, [&] { return inner_.diffusion_cg_m2s(ff, spec, species); });
}

double rmse_log_diffusion(const std::vector<std::pair<double, double>>& exp_aa_pairs) {
    if (exp_aa_pairs.empty()) throw UserError("RMSE needs at least one pair");
    double acc = 0.0;
    for (const auto& [d_exp, d_aa] : exp_aa_pairs) {
        if (!(d_exp > 0.0) || !(d_aa > 0.0))
            throw UserError("RMSE of log diffusion needs positive values");
        const double diff = std::log10(d_exp) - std::log10(d_aa);
        acc += diff * diff;
    }
    return std::sqrt(acc / static_cast<double>(exp_aa_pairs.size()));
}

void CalibrationReport::check_argmin_consistency() const {
    double best = std::numeric_limits<double>::max();
    double best_param = 0.0;
    bool any = false;
    for (const auto& g : grid) {
        if (g.failed) continue;
        if (g.objective < best) {
            best = g.objective;
            best_param = g.parameter;
            any = true;
        }
    }
    if (!any) throw NumericError("calibration step " + std::to_string(step) + ": every grid point failed");
    if (best_param != selected)
        throw NumericError("calibration report inconsistency: selected " + std::to_string(selected) +
                           " but grid argmin is " + std::to_string(best_param));
}

std::string CalibrationReport::to_csv() const {
    std::ostringstream os;
    os << "# calibration step " << step << "\n";
    os << "# parameter: " << parameter_name << "\n";
    os << "# selected: " << selected << " (objective " << selected_objective << ")\n";
    if (s_value > 0.0) os << "# S: " << s_value << "\n";
    os << "# converged: " << (converged ? "yes" : "no") << "\n";
    for (const auto& t : trace) os << "# trace: " << t << "\n";
    os << parameter_name << ",objective,failed,note\n";
    char buf[256];
    for (const auto& g : grid) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%d,%s\n", g.parameter, g.objective,
                      g.failed ? 1 : 0, g.note.c_str());
        os << buf;
    }
    return os.str();
}

DensityMatch match_density(const ForceField& base, const std::string& bead_name,
                           const MixtureSpec& system, double target_gcm3, double eps_lo,
                           double eps_hi, Simulator& sim, double tol_rel) {
    if (!(target_gcm3 > 0.0)) throw UserError("density target must be positive");
    if (!(eps_lo > 0.0) || !(eps_hi > eps_lo)) throw UserError("bad epsilon bracket");

    ForceField ff = base;
    auto eval = [&](double eps) {
        for (auto& bt : ff.bead_types)
            if (bt.name == bead_name) bt.epsilon = eps;
        return sim.density_gcm3(ff, system);
    };

    DensityMatch out;
    double rho_lo = eval(eps_lo);
    double rho_hi = eval(eps_hi);
    out.trace.emplace_back(eps_lo, rho_lo);
    out.trace.emplace_back(eps_hi, rho_hi);
    if (!(rho_lo < rho_hi))
        throw NumericError("density(epsilon) is not increasing over the bracket [" +
                           std::to_string(eps_lo) + ", " + std::to_string(eps_hi) +
                           "]; the state point may not be a stable liquid at this sigma");
    if (!(rho_lo < target_gcm3 && target_gcm3 < rho_hi))
        throw NumericError("epsilon bracket does not straddle the density target " +
                           std::to_string(target_gcm3) + " (got " + std::to_string(rho_lo) + " .. " +
                           std::to_string(rho_hi) + "); adjust sigma toward the stable-liquid range");

    double lo = eps_lo, hi = eps_hi;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rho = eval(mid);
        out.trace.emplace_back(mid, rho);
        if (std::abs(rho - target_gcm3) < tol_rel * target_gcm3) {
            out.epsilon = mid;
            return out;
        }
        (rho < target_gcm3 ? lo : hi) = mid;
    }
    throw NumericError("density bisection did not converge within 60 iterations");
}

Step1Result step1_water(ForceField& ff, double sigma_pw, double d_exp_water, double density_target,
                        double eps_lo, double eps_hi, Simulator& sim) {
    for (auto& bt : ff.bead_types)
        if (bt.name == "PW") bt.sigma = sigma_pw;

    MixtureSpec water;
    water.species = "PW";

    Step1Result out;
    const auto match = match_density(ff, "PW", water, density_target, eps_lo, eps_hi, sim);
    out.epsilon_pw = match.epsilon;
    for (auto& bt : ff.bead_types)
        if (bt.name == "PW") bt.epsilon = match.epsilon;

    out.d_cg_water = sim.diffusion_cg_m2s(ff, water, "PW");
    out.s = compute_time_mapping(out.d_cg_water, d_exp_water);

    out.report.step = 1;
    out.report.parameter_name = "epsilon_PW";
    for (const auto& [eps, rho] : match.trace)
        out.report.grid.push_back({eps, std::abs(rho - density_target), false, ""});
    out.report.selected = match.epsilon;
    out.report.selected_objective = out.report.grid.back().objective;
    out.report.s_value = out.s;
    char buf[128];
    std::snprintf(buf, sizeof buf, "D_cg_water = %.6g m2/s -> S = %.6g", out.d_cg_water, out.s);
    out.report.trace.push_back(buf);
    out.report.check_argmin_consistency();
    return out;
}

namespace {

// Eq-16 objective at the current parameters: run every listed mixture, scale
// per species (n = 1 for oligomers, 3 for water) and pool
double diffusion_rmse(const ForceField& ff, double s_value,
                      const std::vector<CalibrationTarget>& targets, Simulator& sim) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& t : targets) {
        const double d_cg = sim.diffusion_cg_m2s(ff, t.system, t.species);
        const int n = standard_molecule(t.species).molecules_per_bead;
        const double d_aa = scale_diffusion(d_cg, {s_value, n});
        pairs.emplace_back(t.value, d_aa);
    }
    return rmse_log_diffusion(pairs);
}

}  // namespace

Step2Result step2_pa(ForceField& ff, const std::vector<double>& sigma_grid, double s_value,
                     double density_target, const std::vector<CalibrationTarget>& diffusion_targets,
                     double eps_lo, double eps_hi, Simulator& sim) {
    if (sigma_grid.empty()) throw UserError("step 2: empty sigma grid");
    MixtureSpec ego2;
    ego2.species = "EGO2";

    Step2Result out;
    out.report.step = 2;
    out.report.parameter_name = "sigma_PA";

    double best = std::numeric_limits<double>::max();
    for (const double sigma : sigma_grid) {
        ForceField trial = ff;
        for (auto& bt : trial.bead_types)
            if (bt.name == "PA") bt.sigma = sigma;
        GridPoint point;
        point.parameter = sigma;
        try {
            const auto match = match_density(trial, "PA", ego2, density_target, eps_lo, eps_hi, sim);
            for (auto& bt : trial.bead_types)
                if (bt.name == "PA") bt.epsilon = match.epsilon;
            point.objective = diffusion_rmse(trial, s_value, diffusion_targets, sim);
            char buf[64];
            std::snprintf(buf, sizeof buf, "epsilon_PA=%.6g", match.epsilon);
            point.note = buf;
            if (point.objective < best) {
                best = point.objective;
                out.sigma_pa = sigma;
                out.epsilon_pa = match.epsilon;
            }
        } catch (const std::exception& e) {
            point.failed = true;
            point.note = e.what();
        }
        out.report.grid.push_back(point);
    }
    out.report.selected = out.sigma_pa;
    out.report.selected_objective = best;
    out.report.check_argmin_consistency();

    for (auto& bt : ff.bead_types) {
        if (bt.name == "PA") {
            bt.sigma = out.sigma_pa;
            bt.epsilon = out.epsilon_pa;
        }
    }
    return out;
}

Step34Result step34_pb_gamma(ForceField& ff, const std::vector<double>& sigma_grid,
                             const std::vector<double>& gamma_grid, double s_value,
                             double density_target,
                             const std::vector<CalibrationTarget>& ego3_targets,
                             const std::vector<CalibrationTarget>& ego13_targets, double eps_lo,
                             double eps_hi, Simulator& sim, int max_cycles, bool gamma_first) {
    if (sigma_grid.empty() || gamma_grid.empty()) throw UserError("step 3/4: empty grid");
    MixtureSpec ego4;
    ego4.species = "EGO4";

    Step34Result out;
    out.sigma_pb = ff.bead_type("PB").sigma;
    out.gamma = 1.0;  // first execution of step 3 runs with gamma = 1
    double eps_pb = ff.bead_type("PB").epsilon;

    auto select_sigma = [&](CalibrationReport& report) {
        report = CalibrationReport{};
        report.step = 3;
        report.parameter_name = "sigma_PB";
        double best = std::numeric_limits<double>::max();
        double best_sigma = out.sigma_pb;
        double best_eps = eps_pb;
        for (const double sigma : sigma_grid) {
            ForceField trial = ff;
            for (auto& bt : trial.bead_types)
                if (bt.name == "PB") bt.sigma = sigma;
            trial.mixing.set_gamma("PB", "PW", out.gamma);
            GridPoint point;
            point.parameter = sigma;
            try {
                const auto match =
                    match_density(trial, "PB", ego4, density_target, eps_lo, eps_hi, sim);
                for (auto& bt : trial.bead_types)
                    if (bt.name == "PB") bt.epsilon = match.epsilon;
                point.objective = diffusion_rmse(trial, s_value, ego3_targets, sim);
                char buf[64];
                std::snprintf(buf, sizeof buf, "epsilon_PB=%.6g", match.epsilon);
                point.note = buf;
                if (point.objective < best) {
                    best = point.objective;
                    best_sigma = sigma;
                    best_eps = match.epsilon;
                }
            } catch (const std::exception& e) {
                point.failed = true;
                point.note = e.what();
            }
            report.grid.push_back(point);
        }
        report.selected = best_sigma;
        report.selected_objective = best;
        report.check_argmin_consistency();
        const bool changed = best_sigma != out.sigma_pb;
        out.sigma_pb = best_sigma;
        eps_pb = best_eps;
        return changed;
    };

    auto select_gamma = [&](CalibrationReport& report) {
        report = CalibrationReport{};
        report.step = 4;
        report.parameter_name = "gamma";
        double best = std::numeric_limits<double>::max();
        double best_gamma = out.gamma;
        for (const double gamma : gamma_grid) {
            ForceField trial = ff;
            for (auto& bt : trial.bead_types) {
                if (bt.name == "PB") {
                    bt.sigma = out.sigma_pb;
                    bt.epsilon = eps_pb;
                }
            }
            trial.mixing.set_gamma("PB", "PW", gamma);
            GridPoint point;
            point.parameter = gamma;
            try {
                point.objective = diffusion_rmse(trial, s_value, ego13_targets, sim);
                if (point.objective < best) {
                    best = point.objective;
                    best_gamma = gamma;
                }
            } catch (const std::exception& e) {
                point.failed = true;
                point.note = e.what();
            }
            report.grid.push_back(point);
        }
        report.selected = best_gamma;
        report.selected_objective = best;
        report.check_argmin_consistency();
        const bool changed = best_gamma != out.gamma;
        out.gamma = best_gamma;
        return changed;
    };

    out.converged = false;
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        out.cycles = cycle + 1;
        bool changed_a, changed_b;
        if (gamma_first) {
            changed_a = select_gamma(out.report_gamma);
            changed_b = select_sigma(out.report_sigma);
        } else {
            changed_a = select_sigma(out.report_sigma);
            changed_b = select_gamma(out.report_gamma);
        }
        char buf[128];
        std::snprintf(buf, sizeof buf, "cycle %d: sigma_PB=%.6g gamma=%.6g", cycle + 1, out.sigma_pb,
                      out.gamma);
        out.report_sigma.trace.push_back(buf);
        out.report_gamma.trace.push_back(buf);
        if (!changed_a && !changed_b) {
            out.converged = true;
            break;
        }
    }
    out.report_sigma.converged = out.converged;
    out.report_gamma.converged = out.converged;
    out.epsilon_pb = eps_pb;

    for (auto& bt : ff.bead_types) {
        if (bt.name == "PB") {
            bt.sigma = out.sigma_pb;
            bt.epsilon = out.epsilon_pb;
        }
    }
    ff.mixing.set_gamma("PB", "PW", out.gamma);
    return out;
}

std::vector<double> parse_grid(const std::vector<std::string>& tokens, const std::string& context) {
    if (tokens.empty()) throw UserError(context + ": empty grid");
    std::vector<double> grid;
    if (tokens.size() == 1 && tokens[0].find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        if (std::sscanf(tokens[0].c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0.0))
            throw UserError(context + ": expected lo:hi:step");
        for (double v = lo; v <= hi + 0.5 * step; v += step) grid.push_back(v);
    } else {
        for (const auto& t : tokens) grid.push_back(parse_number(t, context));
    }
    if (grid.empty()) throw UserError(context + ": empty grid");
    return grid;
}

CalibrationManifest CalibrationManifest::from_text(const std::string& content, const std::string& path) {
    const TextDoc doc = parse_textdoc(content, path);
    expect_format(doc, "egomd-calibration", 1);

    CalibrationManifest m;
    m.mode = doc.top.get_string("mode", "surrogate");
    if (m.mode != "surrogate" && m.mode != "desk" && m.mode != "paper")
        throw UserError(path + ": mode must be surrogate|desk|paper");
    m.seed = static_cast<std::uint64_t>(doc.top.get_integer("seed", 1));
    m.base_forcefield = doc.top.get_string("base_forcefield", "ego_water_293K");
    m.sigma_pw = doc.top.get_number("sigma_pw", 0.40, "nm");
    m.d_exp_water = doc.top.get_number("d_exp_water", 2.0e-9, "m2/s");
    if (const auto* kv = doc.top.find("epsilon_bracket")) {
        if (kv->tokens.size() < 2) throw UserError(path + ": epsilon_bracket needs two values");
        m.eps_lo = parse_number(kv->tokens[0], "epsilon_bracket");
        m.eps_hi = parse_number(kv->tokens[1], "epsilon_bracket");
    }
    m.max_cycles = static_cast<int>(doc.top.get_integer("max_cycles", 5));

    auto parse_step = [&](const Section& s, StepSpec& spec, bool wants_grid, const char* grid_key) {
        spec.present = true;
        if (s.has("density_target")) spec.density_target = s.get_number("density_target", "g/cm3");
        if (wants_grid) spec.grid = parse_grid(s.require(grid_key).tokens, grid_key);
        for (const auto& kv : s.entries) {
            if (kv.key != "diffusion") continue;
            if (kv.tokens.size() < 4)
                throw UserError(path + ":" + std::to_string(kv.line) +
                                ": diffusion row needs: mixture-species W measured-species value");
            CalibrationTarget t;
            t.kind = CalibrationTarget::Kind::Diffusion;
            t.system.species = kv.tokens[0];
            t.system.weight_fraction = parse_number(kv.tokens[1], "weight fraction");
            t.species = kv.tokens[2];
            t.value = parse_number(kv.tokens[3], "diffusion value");
            if (kv.tokens.size() > 4 && kv.tokens[4] != "m2/s") t.source = kv.tokens[4];
            t.validate();
            spec.diffusion_targets.push_back(t);
        }
    };

    for (const auto& s : doc.sections) {
        if (s.name == "step1") parse_step(s, m.step1, false, "");
        else if (s.name == "step2") parse_step(s, m.step2, true, "sigma_grid");
        else if (s.name == "step3") parse_step(s, m.step3, true, "sigma_grid");
        else if (s.name == "step4") parse_step(s, m.step4, true, "gamma_grid");
        else throw UserError(path + ": unknown section [" + s.name + "]");
    }
    if (!m.step1.present) throw UserError(path + ": calibration needs at least [step1]");
    if (m.step3.present != m.step4.present)
        throw UserError(path + ": steps 3 and 4 alternate and must both be present");
    return m;
}

CalibrationManifest CalibrationManifest::load(const std::string& path) {
    return from_text(read_file(path), path);
}

}  // namespace egomd
