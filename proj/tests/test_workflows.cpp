#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "egomd/errors.hpp"
#include "egomd/inversion.hpp"
#include "egomd/textdoc.hpp"
#include "egomd/workflows.hpp"
#include "support/testutil.hpp"

using namespace egomd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// tiny but valid desk config: 2 replicas, short run, box large enough for the
// production cutoff
const char* kTinyConfig = R"(
format egomd-run 1
forcefield = ego_water_293K
seed = 777
replicas = 2

[system]
molecules = PW 420
density = 0.95 g/cm3

[integrator]
ensemble = nvt
dt = 0.010 ps
temperature = 293 K

[run]
settle = 2 ps
equilibration = 0 ps
duration = 4 ps
sample_interval = 0.5 ps
)";

std::string write_config(const TempDir& dir, const std::string& text, const char* name = "run.cfg") {
    const std::string path = dir.file(name);
    std::ofstream(path) << text;
    return path;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EGOMD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("cmd_run replica protocol" * doctest::timeout(600)) {
    TempDir dir("egomd_run_test");
    const std::string cfg = write_config(dir, kTinyConfig);
    const std::string outdir = dir.file("out");

    const auto manifest = cmd_run(cfg, outdir, false, 2);
    CHECK(manifest.all_ok());
    CHECK(manifest.replicas.size() == 2);
    CHECK(manifest.replicas[0].seed == 777);
    CHECK(manifest.replicas[1].seed == 778);
    CHECK(fs::exists(fs::path(outdir) / "manifest.txt"));
    CHECK(fs::exists(fs::path(outdir) / "replica_0.trj"));
    CHECK(fs::exists(fs::path(outdir) / "replica_1.trj"));
    CHECK(fs::exists(fs::path(outdir) / "replica_0.chk"));

    const auto t0 = Trajectory::load((fs::path(outdir) / "replica_0.trj").string());
    const auto t1 = Trajectory::load((fs::path(outdir) / "replica_1.trj").string());
    CHECK(t0.frame_count() == 9);  // 4 ps at 0.5 ps sampling + frame 0
    CHECK(t0.metadata.at("config_hash") == manifest.config_hash);
    // replicas differ (distinct seeds)
    CHECK(t0.frames.back().positions != t1.frames.back().positions);

    SUBCASE("duplicate invocation refuses to overwrite") {
        CHECK_THROWS_WITH_AS(cmd_run(cfg, outdir, false, 1), doctest::Contains("resume"), UserError);
    }
    SUBCASE("resume skips completed replicas and reproduces the manifest") {
        const auto again = cmd_run(cfg, outdir, true, 1);
        CHECK(again.all_ok());
        CHECK(again.replicas[0].trajectory_hash == manifest.replicas[0].trajectory_hash);
        CHECK(again.replicas[1].trajectory_hash == manifest.replicas[1].trajectory_hash);
    }
    SUBCASE("resume with a changed config is refused") {
        const std::string cfg2 = write_config(dir, std::string(kTinyConfig) + "# changed\n", "run2.cfg");
        CHECK_THROWS_WITH_AS(cmd_run(cfg2, outdir, true, 1), doctest::Contains("config hash"), UserError);
    }
    SUBCASE("verify passes on intact outputs and fails after corruption") {
        const std::string manifest_path = (fs::path(outdir) / "manifest.txt").string();
        CHECK_NOTHROW(cmd_verify(manifest_path));
        // corrupt one byte of a trajectory payload
        {
            std::fstream f((fs::path(outdir) / "replica_1.trj").string(),
                           std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(-9, std::ios::end);
            char c;
            f.seekg(-9, std::ios::end);
            f.get(c);
            f.seekp(-9, std::ios::end);
            c = static_cast<char>(c ^ 0x1);
            f.put(c);
        }
        CHECK_THROWS_WITH_AS(cmd_verify(manifest_path), doctest::Contains("hash mismatch"), UserError);
    }
    SUBCASE("analysis: density and msd produce per-replica rows and summaries") {
        const std::string manifest_path = (fs::path(outdir) / "manifest.txt").string();
        AnalyzeOptions opts;
        opts.kind = "density";
        opts.outdir = dir.file("analysis");
        const std::string summary = cmd_analyze(manifest_path, opts);
        CHECK(summary.find("density") != std::string::npos);
        CHECK(fs::exists(fs::path(dir.file("analysis")) / "density.csv"));
        const std::string csv = read_file(dir.file("analysis") + "/density.csv");
        CHECK(csv.find(manifest.config_hash) != std::string::npos);
        CHECK(csv.find("mean,") != std::string::npos);

        AnalyzeOptions msd_opts;
        msd_opts.kind = "msd";
        msd_opts.species = "PW";
        msd_opts.outdir = dir.file("analysis");
        cmd_analyze(manifest_path, msd_opts);
        CHECK(fs::exists(fs::path(dir.file("analysis")) / "msd.csv"));
        CHECK(fs::exists(fs::path(dir.file("analysis")) / "msd_PW.csv"));
    }
    SUBCASE("viscosity analysis on an unforced manifest is a user error") {
        const std::string manifest_path = (fs::path(outdir) / "manifest.txt").string();
        AnalyzeOptions opts;
        opts.kind = "viscosity";
        CHECK_THROWS_WITH_AS(cmd_analyze(manifest_path, opts), doctest::Contains("unforced"), UserError);
    }
    SUBCASE("relaxation analysis needs a decaying species") {
        // PW molecules are single beads: user error; a too-short EGO run
        // raises the trajectory-too-short numeric error instead
        const std::string manifest_path = (fs::path(outdir) / "manifest.txt").string();
        AnalyzeOptions opts;
        opts.kind = "relaxation";
        opts.species = "PW";
        CHECK_THROWS_AS(cmd_analyze(manifest_path, opts), UserError);
    }
    SUBCASE("export writes XYZ-extended text") {
        const std::string out = dir.file("traj.xyzx");
        cmd_export((fs::path(outdir) / "replica_0.trj").string(), out);
        const auto frames = load_xyz(out);
        CHECK(static_cast<int>(frames.size()) == t0.frame_count());
        CHECK(frames[0].names[0] == "PW");
    }
}

TEST_CASE("cmd_run records failures per replica") {
    TempDir dir("egomd_runfail_test");
    // 60 beads at this density gives a box below 2*(r_cut+skin): every replica
    // fails at neighbor-list construction and the manifest says so
    const std::string cfg = write_config(dir, R"(
format egomd-run 1
forcefield = ego_water_293K
replicas = 2
[system]
molecules = PW 60
density = 0.95 g/cm3
[integrator]
ensemble = nvt
[run]
settle = 1 ps
duration = 1 ps
sample_interval = 0.5 ps
)");
    const auto manifest = cmd_run(cfg, dir.file("out"), false, 1);
    CHECK_FALSE(manifest.all_ok());
    for (const auto& r : manifest.replicas) {
        CHECK(r.status.find("failed:") == 0);
        CHECK(r.status.find("box too small") != std::string::npos);
    }
    // the manifest file records the failure
    const auto loaded = RunManifest::load(dir.file("out") + "/manifest.txt");
    CHECK_FALSE(loaded.all_ok());

    SUBCASE("replica failure maps to the partial-failure exit code") {
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out_cli")) == 3);
    }
}

TEST_CASE("cmd_invert round trip on a generated fixture" * doctest::timeout(300)) {
    TempDir dir("egomd_invert_test");
    const auto ff = ForceField::bundled_ego_water_293k();
    const MixturePotential bond_truth(ff.bonded[0].params);
    const MixturePotential angle_truth(ff.bonded[1].params);
    const double kt = units::kBoltzmann * 293.0;

    // sample configurations with the physical phase-space factors; the
    // pipeline divides them back out (the oracle is the generator itself)
    test::TabulatedSampler bond_s(
        [&](double q) { return std::exp(-bond_truth.energy_deriv(q).energy / kt) * q * q; }, 0.22, 0.42);
    test::TabulatedSampler angle_s(
        [&](double q) {
            return std::exp(-angle_truth.energy_deriv(q).energy / kt) *
                   std::sin(q * 3.14159265358979323846 / 180.0);
        },
        40.0, 180.0);
    Rng rng(5);
    std::ofstream xyz(dir.file("fixture.xyzx"));
    for (int frame = 0; frame < 40000; ++frame) {
        const double l1 = bond_s.sample(rng);
        const double l2 = bond_s.sample(rng);
        const double th = angle_s.sample(rng) * 3.14159265358979323846 / 180.0;
        xyz << "3\nt= " << frame << "\n";
        xyz << "X 0 0 0\n";
        xyz << "X " << l1 << " 0 0\n";
        xyz << "X " << l1 - l2 * std::cos(th) << " " << l2 * std::sin(th) << " 0\n";
    }
    xyz.close();
    std::ofstream(dir.file("map.txt")) << R"(format egomd-mapping 1
[bead PB1]
atom = 0 1.0
[bead PB2]
atom = 1 1.0
[bead PB3]
atom = 2 1.0
[masses]
X = 44.0
)";

    const std::string block = cmd_invert(dir.file("fixture.xyzx"), dir.file("map.txt"), 3, 293.0,
                                         dir.file("bonded.ff"));
    CHECK(fs::exists(dir.file("bonded.ff")));
    CHECK(fs::exists(dir.file("bonded_bond_histogram.csv")));
    CHECK(fs::exists(dir.file("bonded_angle_histogram.csv")));
    CHECK(block.find("[bond *]") != std::string::npos);
    CHECK(block.find("[angle *]") != std::string::npos);

    // composed fitted curves must match the source potentials; wrap the block
    // into a complete force field and evaluate
    std::string ff_text = "format egomd-ff 1\nname = fitted\n";
    ff_text += "[bead PB]\nmass = 44 amu\nsigma = 0.46 nm\nepsilon = 3.5 kJ/mol\n";
    ff_text += block;
    const auto fitted_ff = ForceField::from_text(ff_text, "<fitted>");
    const auto& fitted_bond = fitted_ff.bond_potential("PB", "PB");
    double max_err = 0.0;
    for (double q = 0.28; q <= 0.36; q += 0.002) {
        const double u_fit = fitted_bond.energy_deriv(q).energy;
        const double u_src = bond_truth.energy_deriv(q).energy;
        max_err = std::max(max_err, std::abs(u_fit - u_src));
    }
    CHECK(max_err < 0.15 * kt);  // central region of the bond well

    SUBCASE("bundled demo fixture inverts cleanly") {
        const std::string data_dir = EGOMD_DATA_DIR;
        const std::string demo = cmd_invert(data_dir + "/tegde_synthetic.xyzx",
                                            data_dir + "/tegde_mapping.txt", 3, 293.0, "");
        CHECK(demo.find("[bond *]") != std::string::npos);
    }
    SUBCASE("m=1 produces a single-component block") {
        const std::string one = cmd_invert(dir.file("fixture.xyzx"), dir.file("map.txt"), 1, 293.0, "");
        int gauss_rows = 0;
        std::istringstream is(one);
        std::string line;
        bool in_bond = false;
        while (std::getline(is, line)) {
            if (line.find("[bond") != std::string::npos) in_bond = true;
            else if (line.find("[angle") != std::string::npos) in_bond = false;
            else if (in_bond && line.rfind("gauss", 0) == 0) ++gauss_rows;
        }
        CHECK(gauss_rows == 1);
    }
    SUBCASE("malformed mapping reports the offending line") {
        std::ofstream(dir.file("bad.txt")) << "format egomd-mapping 1\n[bead B]\nwrong = 0\n";
        CHECK_THROWS_WITH_AS(cmd_invert(dir.file("fixture.xyzx"), dir.file("bad.txt"), 3, 293.0, ""),
                             doctest::Contains(":3"), UserError);
    }
}

TEST_CASE("cmd_calibrate on the bundled surrogate manifest") {
    TempDir dir("egomd_cal_test");
    const std::string data_dir = EGOMD_DATA_DIR;
    const std::string outdir = dir.file("cal");

    const auto outcome = cmd_calibrate(data_dir + "/surrogate.cal", outdir);
    CHECK(outcome.converged);
    CHECK(outcome.s_value == doctest::Approx(6.19).epsilon(1e-6));
    CHECK(outcome.forcefield.bead_type("PW").epsilon == doctest::Approx(2.650).epsilon(0.02));
    CHECK(outcome.forcefield.bead_type("PA").sigma == doctest::Approx(0.45));
    CHECK(outcome.forcefield.bead_type("PB").sigma == doctest::Approx(0.46));
    CHECK(outcome.forcefield.mixing.gamma("PB", "PW") == doctest::Approx(1.13));
    CHECK(fs::exists(fs::path(outdir) / "calibrated.ff"));
    CHECK(fs::exists(fs::path(outdir) / "scaling.txt"));
    CHECK(fs::exists(fs::path(outdir) / "step2_sigma_pa.csv"));
    CHECK(fs::exists(fs::path(outdir) / "step4_gamma.csv"));

    // the written force field parses and carries provenance comments
    const auto written = ForceField::load((fs::path(outdir) / "calibrated.ff").string());
    CHECK(written.bead_type("PB").sigma == doctest::Approx(0.46));
    CHECK(read_file((fs::path(outdir) / "calibrated.ff").string()).find("manifest") !=
          std::string::npos);

    SUBCASE("rerun replays from the cache and reproduces the reports") {
        const std::string step2_before = read_file((fs::path(outdir) / "step2_sigma_pa.csv").string());
        const auto again = cmd_calibrate(data_dir + "/surrogate.cal", outdir);
        CHECK(again.forcefield.bead_type("PB").sigma == doctest::Approx(0.46));
        const std::string step2_after = read_file((fs::path(outdir) / "step2_sigma_pa.csv").string());
        CHECK(step2_before == step2_after);
    }
}

TEST_CASE("CLI process-level behavior" * doctest::timeout(600)) {
    TempDir dir("egomd_cli_test");

    SUBCASE("missing force-field file exits with the user-error code naming the path") {
        const std::string cfg = write_config(dir, R"(
format egomd-run 1
forcefield = /nonexistent/ff.ff
[system]
molecules = PW 400
[integrator]
ensemble = nvt
[run]
duration = 1 ps
sample_interval = 0.5 ps
)");
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out")) == 1);
    }
    SUBCASE("run, verify and export succeed end to end") {
        const std::string cfg = write_config(dir, R"(
format egomd-run 1
forcefield = ego_water_293K
replicas = 1
seed = 3
[system]
molecules = PW 420
density = 0.95 g/cm3
[integrator]
ensemble = nvt
[run]
settle = 1 ps
duration = 2 ps
sample_interval = 0.5 ps
)");
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out")) == 0);
        CHECK(run_cli("verify " + dir.file("out") + "/manifest.txt") == 0);
        CHECK(run_cli("export " + dir.file("out") + "/replica_0.trj " + dir.file("t.xyzx")) == 0);
        CHECK(run_cli("analyze " + dir.file("out") + "/manifest.txt -k density") == 0);
        // duplicate run without resume: user error
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out")) == 1);
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out") + " --resume") == 0);
    }
    SUBCASE("calibrate subcommand runs the surrogate manifest") {
        const std::string data_dir = EGOMD_DATA_DIR;
        CHECK(run_cli("calibrate " + data_dir + "/surrogate.cal -o " + dir.file("cal")) == 0);
    }
    SUBCASE("unknown analysis kind is a user error") {
        const std::string cfg = write_config(dir, kTinyConfig, "c2.cfg");
        CHECK(run_cli("run " + cfg + " -o " + dir.file("out2")) == 0);
        CHECK(run_cli("analyze " + dir.file("out2") + "/manifest.txt -k bogus") == 1);
    }
}
