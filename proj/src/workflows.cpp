#include "egomd/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <sstream>

#include "egomd/analysis.hpp"
#include "egomd/errors.hpp"
#include "egomd/inversion.hpp"
#include "egomd/textdoc.hpp"
#include "egomd/version.hpp"

namespace egomd {

namespace fs = std::filesystem;

RunConfig RunConfig::from_text(const std::string& content, const std::string& path) {
    const TextDoc doc = parse_textdoc(content, path);
    expect_format(doc, "egomd-run", 1);

    RunConfig cfg;
    cfg.forcefield = doc.top.get_string("forcefield", cfg.forcefield);
    cfg.mode = doc.top.get_string("mode", "desk");
    if (cfg.mode != "desk" && cfg.mode != "paper") throw UserError(path + ": mode must be desk|paper");
    cfg.seed = static_cast<std::uint64_t>(doc.top.get_integer("seed", 12345));
    cfg.replicas = static_cast<int>(doc.top.get_integer("replicas", 5));
    if (cfg.replicas < 1) throw UserError(path + ": replicas must be >= 1");

    if (const Section* s = doc.first_section("system")) {
        for (const auto& kv : s->entries) {
            if (kv.key == "molecules") {
                if (kv.tokens.size() != 2)
                    throw UserError(path + ":" + std::to_string(kv.line) + ": molecules = <species> <count>");
                cfg.molecules.emplace_back(kv.tokens[0],
                                           static_cast<int>(parse_number(kv.tokens[1], "count")));
            } else if (kv.key == "mixture") {
                if (kv.tokens.size() != 2)
                    throw UserError(path + ":" + std::to_string(kv.line) + ": mixture = <species> <W>");
                cfg.mixture = {kv.tokens[0], parse_number(kv.tokens[1], "weight fraction")};
            }
        }
        cfg.beads = static_cast<int>(s->get_integer("beads", 600));
        cfg.build_density = s->get_number("density", 1.0, "g/cm3");
        cfg.restart = s->get_string("restart", "");
        if (cfg.molecules.empty() && !cfg.mixture && cfg.restart.empty())
            throw UserError(path + ": [system] needs molecules, mixture or restart");
    } else if (doc.top.get_string("restart", "").empty()) {
        throw UserError(path + ": missing [system] section");
    }

    if (const Section* s = doc.first_section("integrator")) {
        cfg.integrator.ensemble = ensemble_from_string(s->get_string("ensemble", "nvt"));
        cfg.integrator.dt = s->get_number("dt", 0.010, "ps");
        cfg.integrator.temperature = s->get_number("temperature", 293.0, "K");
        cfg.integrator.pressure_bar = s->get_number("pressure", units::kAtmInBar, "bar");
        cfg.integrator.thermostat_tau = s->get_number("thermostat_tau", 1.0, "ps");
        cfg.integrator.barostat_tau = s->get_number("barostat_tau", 5.0, "ps");
        cfg.integrator.neighbor_skin = s->get_number("neighbor_skin", 0.2, "nm");
    }
    cfg.integrator.validate();

    if (const Section* s = doc.first_section("run")) {
        cfg.settle = s->get_number("settle", 10.0, "ps");
        cfg.melt = s->get_number("melt", 20.0, "ps");
        cfg.equilibration = s->get_number("equilibration", 0.0, "ps");
        cfg.duration = s->get_number("duration", 100.0, "ps");
        cfg.sample_interval = s->get_number("sample_interval", 1.0, "ps");
    }
    if (const Section* s = doc.first_section("nemd")) {
        NemdForcing forcing;
        forcing.amplitude = s->get_number("amplitude", 0.0005, "nm/ps2");
        if (forcing.amplitude < 0.0) throw UserError(path + ": forcing amplitude must be >= 0");
        cfg.forcing = forcing;
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) { return from_text(read_file(path), path); }

bool RunManifest::all_ok() const {
    return std::all_of(replicas.begin(), replicas.end(),
                       [](const ReplicaRecord& r) { return r.status == "ok"; });
}

void RunManifest::save(const std::string& path) const {
    std::ostringstream os;
    os << "# egomd run manifest\n";
    os << "format egomd-manifest 1\n";
    os << "config_hash = " << config_hash << "\n";
    os << "forcefield_id = " << forcefield_id << "\n";
    os << "toolkit_version = " << toolkit_version << "\n";
    os << "units = " << units_stamp << "\n";
    os << "mode = " << mode << "\n";
    os << "nemd_amplitude = " << nemd_amplitude << "\n";
    os << "duration = " << duration << " ps\n";
    for (const auto& r : replicas) {
        os << "\n[replica " << r.index << "]\n";
        os << "seed = " << r.seed << "\n";
        os << "trajectory = " << r.trajectory << "\n";
        os << "trajectory_hash = " << r.trajectory_hash << "\n";
        if (!r.checkpoint.empty()) os << "checkpoint = " << r.checkpoint << "\n";
        os << "status = " << r.status << "\n";
    }
    atomic_write(path, os.str());
}

RunManifest RunManifest::load(const std::string& path) {
    const TextDoc doc = load_textdoc(path);
    expect_format(doc, "egomd-manifest", 1);
    RunManifest m;
    m.config_hash = doc.top.get_string("config_hash");
    m.forcefield_id = doc.top.get_string("forcefield_id", "");
    m.toolkit_version = doc.top.get_string("toolkit_version", "");
    m.mode = doc.top.get_string("mode", "desk");
    m.nemd_amplitude = doc.top.get_number("nemd_amplitude", 0.0);
    m.duration = doc.top.get_number("duration", 0.0, "ps");
    if (const auto* kv = doc.top.find("units")) {
        std::string joined;
        for (const auto& t : kv->tokens) {
            if (!joined.empty()) joined += " ";
            joined += t;
        }
        m.units_stamp = joined;
    }
    for (const auto& s : doc.sections) {
        if (s.name != "replica") continue;
        ReplicaRecord r;
        r.index = s.args.empty() ? static_cast<int>(m.replicas.size())
                                 : static_cast<int>(parse_number(s.args[0], "replica index"));
        r.seed = static_cast<std::uint64_t>(s.get_integer("seed"));
        r.trajectory = s.get_string("trajectory");
        r.trajectory_hash = s.get_string("trajectory_hash", "");
        r.checkpoint = s.get_string("checkpoint", "");
        // failure statuses carry a whole message; rejoin the tokens
        for (const auto& tok : s.require("status").tokens) {
            if (!r.status.empty()) r.status += " ";
            r.status += tok;
        }
        m.replicas.push_back(r);
    }
    return m;
}

namespace {

TopologyPtr topology_from_config(const ForceField& ff, const RunConfig& cfg) {
    if (cfg.mixture) {
        MixtureSpec spec;
        spec.species = cfg.mixture->first;
        spec.weight_fraction = cfg.mixture->second;
        spec.temperature = cfg.integrator.temperature;
        spec.pressure_bar = cfg.integrator.pressure_bar;
        return compose_mixture(ff, spec, cfg.beads);
    }
    std::vector<MoleculeTemplate> templates;
    std::vector<std::pair<std::string, int>> counts;
    for (const auto& [species, count] : cfg.molecules) {
        templates.push_back(standard_molecule(species));
        counts.emplace_back(species, count);
    }
    return std::make_shared<Topology>(ff.bead_types, templates, counts);
}

struct ReplicaOutcome {
    ReplicaRecord record;
    bool failed = false;
};

ReplicaOutcome run_replica(const RunConfig& cfg, const ForceField& ff, const std::string& outdir,
                           const std::string& config_hash, int index) {
    ReplicaOutcome out;
    out.record.index = index;
    out.record.seed = cfg.seed + static_cast<std::uint64_t>(index);
    const std::string traj_name = "replica_" + std::to_string(index) + ".trj";
    const std::string chk_name = "replica_" + std::to_string(index) + ".chk";
    out.record.trajectory = traj_name;
    out.record.checkpoint = chk_name;
    try {
        SystemState state;
        if (!cfg.restart.empty()) {
            state = Checkpoint::load(cfg.restart).state;
        } else {
            auto topo = topology_from_config(ff, cfg);
            const auto eq_bonds = ff.equilibrium_bond_lengths(*topo);
            state = build_system(topo, cfg.build_density, cfg.integrator.temperature,
                                 out.record.seed, &eq_bonds);
            prepare_liquid(state, ff, cfg.integrator.temperature, cfg.settle, cfg.melt);
        }

        if (cfg.equilibration > 0.0) {
            IntegratorConfig npt = cfg.integrator;
            npt.ensemble = Ensemble::NPT;
            RunOptions eq;
            eq.duration = cfg.equilibration;
            eq.sample_interval = std::max(1.0, cfg.sample_interval);
            eq.keep_frames_in_memory = false;
            run(state, ff, npt, eq);
        }

        state.time = 0.0;
        RunOptions opts;
        opts.duration = cfg.duration;
        opts.sample_interval = cfg.sample_interval;
        opts.forcing = cfg.forcing;
        opts.trajectory_path = (fs::path(outdir) / traj_name).string();
        opts.checkpoint_path = (fs::path(outdir) / chk_name).string();
        opts.keep_frames_in_memory = false;
        opts.metadata["config_hash"] = config_hash;
        opts.metadata["seed"] = std::to_string(out.record.seed);
        opts.metadata["forcefield"] = ff.name;
        run(state, ff, cfg.integrator, opts);

        // final checkpoint for bit-exact resume of follow-on production
        Checkpoint cp;
        cp.state = state;
        cp.step = std::lround(cfg.duration / cfg.integrator.dt);
        cp.metadata = opts.metadata;
        cp.save(opts.checkpoint_path);

        out.record.trajectory_hash = file_hash(opts.trajectory_path);
        out.record.status = "ok";
    } catch (const std::exception& e) {
        out.failed = true;
        out.record.status = std::string("failed: ") + e.what();
    }
    return out;
}

}  // namespace

RunManifest cmd_run(const std::string& config_path, const std::string& outdir, bool resume, int jobs) {
    const std::string config_text = read_file(config_path);
    const RunConfig cfg = RunConfig::from_text(config_text, config_path);
    const std::string config_hash = content_hash(config_text);
    const ForceField ff = resolve_forcefield(cfg.forcefield);

    fs::create_directories(outdir);
    const std::string manifest_path = (fs::path(outdir) / "manifest.txt").string();

    RunManifest previous;
    bool have_previous = false;
    if (fs::exists(manifest_path)) {
        if (!resume)
            throw UserError("output already contains a manifest: " + manifest_path +
                            " (pass resume to continue an interrupted run)");
        previous = RunManifest::load(manifest_path);
        if (previous.config_hash != config_hash)
            throw UserError("resume refused: config hash changed since the previous run");
        have_previous = true;
    }

    RunManifest manifest;
    manifest.config_hash = config_hash;
    manifest.forcefield_id = ff.name;
    manifest.toolkit_version = kVersion;
    manifest.units_stamp = kUnitsStamp;
    manifest.mode = cfg.mode;
    manifest.nemd_amplitude = cfg.forcing ? cfg.forcing->amplitude : 0.0;
    manifest.duration = cfg.duration;
    manifest.replicas.resize(cfg.replicas);

    auto completed_previously = [&](int index) -> const ReplicaRecord* {
        if (!have_previous) return nullptr;
        for (const auto& r : previous.replicas) {
            if (r.index == index && r.status == "ok") {
                const auto path = fs::path(outdir) / r.trajectory;
                if (fs::exists(path) && file_hash(path.string()) == r.trajectory_hash) return &r;
            }
        }
        return nullptr;
    };

    std::vector<int> pending;
    for (int i = 0; i < cfg.replicas; ++i) {
        if (const ReplicaRecord* done = completed_previously(i)) {
            manifest.replicas[i] = *done;
        } else {
            pending.push_back(i);
        }
    }

    const int workers = std::max(1, jobs);
    for (std::size_t base = 0; base < pending.size(); base += workers) {
        std::vector<std::future<ReplicaOutcome>> futures;
        for (std::size_t k = base; k < std::min(base + workers, pending.size()); ++k) {
            const int index = pending[k];
            futures.push_back(std::async(std::launch::async, [&, index] {
                return run_replica(cfg, ff, outdir, config_hash, index);
            }));
        }
        for (auto& f : futures) {
            auto outcome = f.get();
            manifest.replicas[outcome.record.index] = outcome.record;
        }
    }

    manifest.save(manifest_path);
    return manifest;
}

namespace {

std::string csv_header(const RunManifest& manifest, const AnalyzeOptions& options) {
    std::ostringstream os;
    os << "# egomd analysis: " << options.kind << "\n";
    os << "# config_hash: " << manifest.config_hash << "\n";
    os << "# toolkit: " << manifest.toolkit_version << "\n";
    return os.str();
}

struct ReplicaValue {
    int index;
    double value;
    double extra = 0.0;  // R^2 for diffusion, stderr for per-replica density
};

std::string summarize(const std::string& label, const std::vector<ReplicaValue>& values,
                      std::ostringstream& csv) {
    std::vector<double> plain;
    for (const auto& v : values) plain.push_back(v.value);
    double mean = 0.0;
    for (double v : plain) mean += v;
    mean /= static_cast<double>(plain.size());
    double se = 0.0;
    if (plain.size() > 1) {
        double var = 0.0;
        for (double v : plain) var += (v - mean) * (v - mean);
        var /= static_cast<double>(plain.size() - 1);
        se = std::sqrt(var / static_cast<double>(plain.size()));
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s mean = %.8g stderr = %.8g n = %zu", label.c_str(), mean, se,
                  plain.size());
    csv << "mean," << mean << "\nstderr," << se << "\n";
    return buf;
}

}  // namespace

std::string cmd_analyze(const std::string& manifest_path, const AnalyzeOptions& options) {
    const RunManifest manifest = RunManifest::load(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    const std::string outdir = options.outdir.empty() ? (base / "analysis").string() : options.outdir;
    fs::create_directories(outdir);

    std::vector<Trajectory> trajectories;
    for (const auto& r : manifest.replicas) {
        if (r.status != "ok")
            throw UserError("manifest replica " + std::to_string(r.index) +
                            " is not ok; analysis needs a complete manifest");
        trajectories.push_back(Trajectory::load((base / r.trajectory).string()));
    }
    if (trajectories.empty()) throw UserError("manifest lists no replicas");

    std::optional<ScalingParams> scaling;
    if (!options.scaling_file.empty()) {
        ScalingParams sp = ScalingParams::load(options.scaling_file);
        scaling = sp;
    }

    std::ostringstream summary;
    std::ostringstream csv;
    csv << csv_header(manifest, options);

    const double t_end = trajectories.front().frames.back().time;

    if (options.kind == "density") {
        const double t0 = options.window_begin >= 0 ? options.window_begin : 0.5 * t_end;
        const double t1 = options.window_end >= 0 ? options.window_end : t_end;
        csv << "replica,density_gcm3,stderr\n";
        std::vector<ReplicaValue> values;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto rho = density(trajectories[i], t0, t1);
            values.push_back({static_cast<int>(i), rho.mean, rho.std_error});
            csv << i << "," << rho.mean << "," << rho.std_error << "\n";
        }
        summary << summarize("density[g/cm3]", values, csv) << "\n";
    } else if (options.kind == "msd") {
        std::vector<std::string> species_list;
        if (!options.species.empty()) {
            species_list.push_back(options.species);
        } else {
            for (const auto& [name, count] : trajectories.front().topology->counts())
                species_list.push_back(name);
        }
        const double max_lag = options.max_lag > 0 ? options.max_lag : 0.4 * t_end;
        const double stride =
            options.origin_stride > 0 ? options.origin_stride : 10.0 * trajectories.front().sample_interval;
        // production protocol drops the first 1 ns of MSD data; desk runs use
        // a fractional window
        const double default_fit0 = manifest.mode == "paper" ? 1000.0 : 0.1 * max_lag;
        const double fit0 = options.fit_begin >= 0 ? options.fit_begin : default_fit0;
        const double fit1 = options.fit_end >= 0 ? options.fit_end : 0.9 * max_lag;
        for (const auto& species : species_list) {
            csv << "# species: " << species << "\n";
            csv << "replica,D_cg_m2s,r_squared" << (scaling ? ",D_aa_m2s" : "") << "\n";
            std::vector<ReplicaValue> values;
            for (std::size_t i = 0; i < trajectories.size(); ++i) {
                const auto curve = msd(trajectories[i], species, max_lag, stride);
                const auto fit = diffusion_from_msd(curve, fit0, fit1);
                values.push_back({static_cast<int>(i), fit.d, fit.r_squared});
                csv << i << "," << fit.d << "," << fit.r_squared;
                if (scaling) {
                    ScalingParams sp = *scaling;
                    sp.n = standard_molecule(species).molecules_per_bead;
                    csv << "," << scale_diffusion(fit.d, sp);
                }
                csv << "\n";
                if (i == 0) {
                    // plot-ready two-column file from the first replica
                    std::ostringstream curve_csv;
                    curve_csv << "# msd curve, species " << species << ", replica 0\n";
                    curve_csv << "lag_ps,msd_nm2\n";
                    for (std::size_t k = 0; k < curve.lag.size(); ++k)
                        curve_csv << curve.lag[k] << "," << curve.value[k] << "\n";
                    atomic_write((fs::path(outdir) / ("msd_" + species + ".csv")).string(),
                                 curve_csv.str());
                }
            }
            summary << summarize("D_cg[" + species + "][m2/s]", values, csv) << "\n";
            if (scaling) {
                std::vector<ReplicaValue> scaled;
                ScalingParams sp = *scaling;
                sp.n = standard_molecule(species).molecules_per_bead;
                for (const auto& v : values)
                    scaled.push_back({v.index, scale_diffusion(v.value, sp), 0.0});
                summary << summarize("D_aa[" + species + "][m2/s]", scaled, csv) << "\n";
            }
        }
    } else if (options.kind == "viscosity") {
        if (manifest.nemd_amplitude <= 0.0)
            throw UserError("viscosity analysis needs a forced (NEMD) run; this manifest is unforced");
        NemdForcing forcing;
        forcing.amplitude = manifest.nemd_amplitude;
        const double discard = options.discard >= 0 ? options.discard : 0.25 * t_end;
        csv << "replica,eta_cg_mPas,stderr" << (scaling ? ",eta_aa_mPas" : "") << "\n";
        std::vector<ReplicaValue> values;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto eta = viscosity_from_nemd(trajectories[i], forcing, discard);
            values.push_back({static_cast<int>(i), eta.mean, eta.std_error});
            csv << i << "," << eta.mean << "," << eta.std_error;
            if (scaling) csv << "," << scale_viscosity(eta.mean, scaling->s);
            csv << "\n";
        }
        summary << summarize("eta_cg[mPa.s]", values, csv) << "\n";
        if (scaling) {
            std::vector<ReplicaValue> scaled;
            for (const auto& v : values)
                scaled.push_back({v.index, scale_viscosity(v.value, scaling->s), 0.0});
            summary << summarize("eta_aa[mPa.s]", scaled, csv) << "\n";
        }
    } else if (options.kind == "relaxation") {
        if (options.species.empty()) throw UserError("relaxation analysis needs a species");
        csv << "replica,tau_ps\n";
        std::vector<ReplicaValue> values;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto rel = end_to_end_relaxation(trajectories[i], options.species);
            values.push_back({static_cast<int>(i), rel.tau, 0.0});
            csv << i << "," << rel.tau << "\n";
            if (i == 0) {
                std::ostringstream curve_csv;
                curve_csv << "# end-to-end correlation, species " << options.species << ", replica 0\n";
                curve_csv << "lag_ps,C\n";
                for (std::size_t k = 0; k < rel.lag.size(); ++k)
                    curve_csv << rel.lag[k] << "," << rel.correlation[k] << "\n";
                atomic_write((fs::path(outdir) / ("relaxation_" + options.species + ".csv")).string(),
                             curve_csv.str());
            }
        }
        summary << summarize("tau[" + options.species + "][ps]", values, csv) << "\n";
    } else {
        throw UserError("unknown analysis kind '" + options.kind +
                        "' (expected density|msd|viscosity|relaxation)");
    }

    atomic_write((fs::path(outdir) / (options.kind + ".csv")).string(), csv.str());

    std::ostringstream summary_doc;
    summary_doc << "# egomd analysis summary\n";
    summary_doc << "format egomd-summary 1\n";
    summary_doc << "kind = " << options.kind << "\n";
    summary_doc << "config_hash = " << manifest.config_hash << "\n";
    summary_doc << "replicas = " << trajectories.size() << "\n";
    summary_doc << "# " << "values below are replica means with standard errors\n";
    std::istringstream lines(summary.str());
    std::string line;
    int idx = 0;
    while (std::getline(lines, line)) summary_doc << "result_" << idx++ << " = " << line << "\n";
    atomic_write((fs::path(outdir) / (options.kind + "_summary.txt")).string(), summary_doc.str());
    return summary_doc.str();
}

std::string cmd_invert(const std::string& traj_path, const std::string& mapping_path, int m,
                       double temperature, const std::string& out_path) {
    const auto frames = load_xyz(traj_path);
    if (frames.empty()) throw UserError(traj_path + ": no frames");
    const CgMapping mapping = CgMapping::load(mapping_path);
    mapping.validate(static_cast<int>(frames.front().positions.size()));

    std::vector<double> masses;
    for (const auto& name : frames.front().names)
        masses.push_back(element_mass(name, mapping.mass_overrides));

    std::vector<std::vector<Vec3>> cg_frames;
    cg_frames.reserve(frames.size());
    for (const auto& f : frames) {
        if (f.positions.size() != masses.size())
            throw UserError(traj_path + ": atom count changes between frames");
        cg_frames.push_back(map_frame(f.positions, masses, mapping));
    }

    // chain connectivity in bead order
    const int n_beads = static_cast<int>(mapping.groups.size());
    std::vector<std::array<int, 2>> bonds;
    std::vector<std::array<int, 3>> angles;
    for (int i = 0; i + 1 < n_beads; ++i) bonds.push_back({i, i + 1});
    for (int i = 0; i + 2 < n_beads; ++i) angles.push_back({i, i + 1, i + 2});
    if (bonds.empty()) throw UserError("mapping defines a single bead; nothing to invert");

    std::ostringstream block;
    block << "# bonded block derived by Boltzmann inversion from " << fs::path(traj_path).filename().string()
          << "\n";
    block << "# frames: " << frames.size() << ", temperature: " << temperature << " K\n";

    auto write_histogram_csv = [&](const HistogramSet& h, const std::string& name) {
        if (out_path.empty()) return;
        std::ostringstream os;
        os << "# " << name << " histogram (raw counts and renormalized density)\n";
        os << "center,count,p\n";
        for (int i = 0; i < h.bins(); ++i)
            os << h.center(i) << "," << h.counts[i] << "," << (h.normalized ? h.p[i] : 0.0) << "\n";
        os << "# overflow_lo," << h.overflow_lo << "\n# overflow_hi," << h.overflow_hi << "\n";
        const fs::path out(out_path);
        const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
        atomic_write((dir / (out.stem().string() + "_" + name + "_histogram.csv")).string(), os.str());
    };

    const auto bond_samples = collect_bond_lengths(cg_frames, bonds);
    double lo = *std::min_element(bond_samples.begin(), bond_samples.end());
    double hi = *std::max_element(bond_samples.begin(), bond_samples.end());
    double pad = 2.0 * 0.005;
    auto bond_hist = histogram(bond_samples, BondedKind::Bond, lo - pad, hi + pad,
                               std::max(10, static_cast<int>((hi - lo + 2 * pad) / 0.005)));
    const auto bond_renorm = renormalize(bond_hist);
    write_histogram_csv(bond_renorm, "bond");
    auto bond_fit = fit_mixture(bond_renorm, m, temperature);
    if (!bond_fit.converged)
        throw NumericError("bond mixture fit did not converge (best rms " +
                           std::to_string(bond_fit.rms_residual) + ")");
    block << "\n[bond *]\n";
    block << "tref = " << temperature << " K\n";
    char buf[128];
    for (const auto& c : bond_fit.params.components) {
        std::snprintf(buf, sizeof buf, "gauss = %.6g %.6g %.6g\n", c.area, c.center, c.width);
        block << buf;
    }

    if (!angles.empty()) {
        const auto angle_samples = collect_angles(cg_frames, angles);
        auto angle_hist = histogram(angle_samples, BondedKind::Angle, 0.0, 180.0, 180);
        const auto angle_renorm = renormalize(angle_hist);
        write_histogram_csv(angle_renorm, "angle");
        auto angle_fit = fit_mixture(angle_renorm, m, temperature);
        if (!angle_fit.converged)
            throw NumericError("angle mixture fit did not converge (best rms " +
                               std::to_string(angle_fit.rms_residual) + ")");
        block << "\n[angle *]\n";
        block << "tref = " << temperature << " K\n";
        for (const auto& c : angle_fit.params.components) {
            std::snprintf(buf, sizeof buf, "gauss = %.6g %.6g %.6g\n", c.area, c.center, c.width);
            block << buf;
        }
    }

    if (!out_path.empty()) atomic_write(out_path, block.str());
    return block.str();
}

CalibrateOutcome cmd_calibrate(const std::string& manifest_path, const std::string& outdir) {
    const std::string manifest_text = read_file(manifest_path);
    const CalibrationManifest manifest = CalibrationManifest::from_text(manifest_text, manifest_path);
    const std::string manifest_hash = content_hash(manifest_text);
    fs::create_directories(outdir);

    std::unique_ptr<Simulator> base_sim;
    if (manifest.mode == "surrogate") {
        base_sim = std::make_unique<SurrogateSimulator>();
    } else {
        const RunLengths lengths =
            manifest.mode == "paper" ? paper_run_lengths() : desk_run_lengths();
        base_sim = std::make_unique<RealSimulator>(lengths, manifest.seed);
    }
    CachingSimulator sim(*base_sim, (fs::path(outdir) / "cache").string());

    ForceField ff = resolve_forcefield(manifest.base_forcefield);

    CalibrateOutcome outcome;
    auto write_report = [&](const CalibrationReport& report, const std::string& name) {
        const std::string path = (fs::path(outdir) / name).string();
        std::string csv = report.to_csv();
        csv.insert(csv.find('\n') + 1, "# manifest_hash: " + manifest_hash + "\n");
        atomic_write(path, csv);
        outcome.report_paths.push_back(path);
    };

    const double density_target_1 = manifest.step1.density_target > 0 ? manifest.step1.density_target : 0.998;
    const auto s1 = step1_water(ff, manifest.sigma_pw, manifest.d_exp_water, density_target_1,
                                manifest.eps_lo, manifest.eps_hi, sim);
    outcome.s_value = s1.s;
    write_report(s1.report, "step1_epsilon_pw.csv");

    if (manifest.step2.present) {
        const auto s2 = step2_pa(ff, manifest.step2.grid, s1.s, manifest.step2.density_target,
                                 manifest.step2.diffusion_targets, manifest.eps_lo, manifest.eps_hi, sim);
        write_report(s2.report, "step2_sigma_pa.csv");
    }
    if (manifest.step3.present) {
        const auto s34 = step34_pb_gamma(ff, manifest.step3.grid, manifest.step4.grid, s1.s,
                                         manifest.step3.density_target, manifest.step3.diffusion_targets,
                                         manifest.step4.diffusion_targets, manifest.eps_lo,
                                         manifest.eps_hi, sim, manifest.max_cycles);
        write_report(s34.report_sigma, "step3_sigma_pb.csv");
        write_report(s34.report_gamma, "step4_gamma.csv");
        outcome.converged = s34.converged;
    }

    ff.name = "calibrated_" + manifest.mode;
    std::string ff_text = ff.to_text();
    ff_text.insert(0, "# calibrated by egomd calibrate (mode " + manifest.mode + ", manifest " +
                          manifest_hash + ", toolkit " + kVersion + ")\n");
    atomic_write((fs::path(outdir) / "calibrated.ff").string(), ff_text);

    ScalingParams sp;
    sp.s = s1.s;
    sp.n = 3;
    sp.save((fs::path(outdir) / "scaling.txt").string());

    std::ostringstream summary;
    summary << "# egomd calibration summary\n";
    summary << "format egomd-summary 1\n";
    summary << "manifest_hash = " << manifest_hash << "\n";
    summary << "mode = " << manifest.mode << "\n";
    summary << "S = " << s1.s << "\n";
    summary << "sigma_PW = " << ff.bead_type("PW").sigma << " nm\n";
    summary << "epsilon_PW = " << ff.bead_type("PW").epsilon << " kJ/mol\n";
    if (manifest.step2.present) {
        summary << "sigma_PA = " << ff.bead_type("PA").sigma << " nm\n";
        summary << "epsilon_PA = " << ff.bead_type("PA").epsilon << " kJ/mol\n";
    }
    if (manifest.step3.present) {
        summary << "sigma_PB = " << ff.bead_type("PB").sigma << " nm\n";
        summary << "epsilon_PB = " << ff.bead_type("PB").epsilon << " kJ/mol\n";
        summary << "gamma_PB_PW = " << ff.mixing.gamma("PB", "PW") << "\n";
        summary << "converged = " << (outcome.converged ? "yes" : "NOT_CONVERGED") << "\n";
    }
    atomic_write((fs::path(outdir) / "summary.txt").string(), summary.str());

    outcome.forcefield = ff;
    return outcome;
}

void cmd_verify(const std::string& manifest_path) {
    const RunManifest manifest = RunManifest::load(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    for (const auto& r : manifest.replicas) {
        if (r.status != "ok") continue;
        const auto path = base / r.trajectory;
        if (!fs::exists(path))
            throw UserError("verify: missing artifact " + path.string());
        const std::string hash = file_hash(path.string());
        if (hash != r.trajectory_hash)
            throw UserError("verify: hash mismatch for " + path.string() + " (manifest " +
                            r.trajectory_hash + ", file " + hash + ")");
        const auto traj = Trajectory::load(path.string());
        const auto it = traj.metadata.find("config_hash");
        if (it == traj.metadata.end() || it->second != manifest.config_hash)
            throw UserError("verify: trajectory " + path.string() +
                            " does not embed the manifest's config hash");
    }
}

void cmd_export(const std::string& traj_path, const std::string& out_path) {
    const auto traj = Trajectory::load(traj_path);
    export_xyz(traj, out_path);
}

}  // namespace egomd
