// egomd command-line driver. Links only the public C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "egomd.h"

namespace {

int report(egomd_status status) {
    if (status != EGOMD_OK) std::fprintf(stderr, "egomd: error: %s\n", egomd_last_error());
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"egomd - coarse-grained MD toolkit for ethylene-glycol-oligomer/water mixtures"};
    app.set_version_flag("--version", std::string(egomd_version()));
    app.require_subcommand(1);

    // run
    std::string run_config, run_outdir = "runs";
    bool run_resume = false;
    int run_jobs = 1;
    auto* run = app.add_subcommand("run", "Execute the replica MD protocol from a run config");
    run->add_option("config", run_config, "egomd-run config file")->required();
    run->add_option("-o,--out", run_outdir, "output directory (manifest + trajectories)");
    run->add_flag("--resume", run_resume, "continue an interrupted run (hash-checked)");
    run->add_option("-j,--jobs", run_jobs, "concurrent replica workers");

    // analyze
    std::string an_manifest, an_kind, an_species, an_scaling, an_outdir;
    double an_wb = -1, an_we = -1, an_maxlag = -1, an_stride = -1, an_discard = -1, an_fb = -1,
           an_fe = -1;
    auto* analyze = app.add_subcommand("analyze", "Post-process a run manifest");
    analyze->add_option("manifest", an_manifest, "run manifest")->required();
    analyze->add_option("-k,--kind", an_kind, "density|msd|viscosity|relaxation")->required();
    analyze->add_option("-s,--species", an_species, "species (msd/relaxation)");
    analyze->add_option("--scaling", an_scaling, "scaling-parameter file (adds AA columns)");
    analyze->add_option("-o,--out", an_outdir, "output directory (default: <manifest dir>/analysis)");
    analyze->add_option("--window-begin", an_wb, "density window start, ps");
    analyze->add_option("--window-end", an_we, "density window end, ps");
    analyze->add_option("--max-lag", an_maxlag, "MSD maximum lag, ps");
    analyze->add_option("--origin-stride", an_stride, "MSD origin stride, ps");
    analyze->add_option("--discard", an_discard, "NEMD discard window, ps");
    analyze->add_option("--fit-begin", an_fb, "diffusion fit window start, ps");
    analyze->add_option("--fit-end", an_fe, "diffusion fit window end, ps");

    // invert
    std::string inv_traj, inv_mapping, inv_out = "bonded.ff";
    int inv_m = 3;
    double inv_temp = 293.0;
    auto* invert = app.add_subcommand("invert",
                                      "Derive bonded potentials from an atomistic XYZ trajectory");
    invert->add_option("trajectory", inv_traj, "XYZ-extended atomistic trajectory")->required();
    invert->add_option("mapping", inv_mapping, "CG mapping file")->required();
    invert->add_option("-m,--components", inv_m, "number of Gaussian components");
    invert->add_option("-T,--temperature", inv_temp, "sampling temperature, K");
    invert->add_option("-o,--out", inv_out, "output parameter block");

    // calibrate
    std::string cal_manifest, cal_outdir = "calibration";
    auto* calibrate = app.add_subcommand("calibrate", "Run the 4-step nonbonded parameterization");
    calibrate->add_option("manifest", cal_manifest, "egomd-calibration manifest")->required();
    calibrate->add_option("-o,--out", cal_outdir, "output directory");

    // verify
    std::string ver_manifest;
    auto* verify = app.add_subcommand("verify", "Re-hash a manifest's artifacts");
    verify->add_option("manifest", ver_manifest, "run manifest")->required();

    // export
    std::string exp_traj, exp_out;
    auto* exp = app.add_subcommand("export", "Convert a binary trajectory to XYZ-extended text");
    exp->add_option("trajectory", exp_traj, "binary trajectory")->required();
    exp->add_option("out", exp_out, "output XYZ file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        char manifest_path[4096] = {0};
        const auto st = egomd_cmd_run(run_config.c_str(), run_outdir.c_str(), run_resume ? 1 : 0,
                                      run_jobs, manifest_path, sizeof manifest_path);
        if (st == EGOMD_OK || st == EGOMD_PARTIAL_FAILURE)
            std::printf("manifest: %s\n", manifest_path);
        return report(st);
    }
    if (analyze->parsed()) {
        egomd_analyze_options opts{};
        opts.kind = an_kind.c_str();
        opts.species = an_species.empty() ? nullptr : an_species.c_str();
        opts.scaling_file = an_scaling.empty() ? nullptr : an_scaling.c_str();
        opts.outdir = an_outdir.empty() ? nullptr : an_outdir.c_str();
        opts.window_begin_ps = an_wb;
        opts.window_end_ps = an_we;
        opts.max_lag_ps = an_maxlag;
        opts.origin_stride_ps = an_stride;
        opts.discard_ps = an_discard;
        opts.fit_begin_ps = an_fb;
        opts.fit_end_ps = an_fe;
        return report(egomd_cmd_analyze(an_manifest.c_str(), &opts));
    }
    if (invert->parsed())
        return report(egomd_cmd_invert(inv_traj.c_str(), inv_mapping.c_str(), inv_m, inv_temp,
                                       inv_out.c_str()));
    if (calibrate->parsed())
        return report(egomd_cmd_calibrate(cal_manifest.c_str(), cal_outdir.c_str()));
    if (verify->parsed()) return report(egomd_cmd_verify(ver_manifest.c_str()));
    if (exp->parsed()) return report(egomd_cmd_export(exp_traj.c_str(), exp_out.c_str()));
    return 0;
}
