#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "egomd.h"

namespace fs = std::filesystem;

TEST_CASE("version and error strings") {
    CHECK(std::strcmp(egomd_version(), "0.1.0") == 0);
    CHECK(egomd_last_error() != nullptr);
}

TEST_CASE("null arguments are user errors with messages") {
    CHECK(egomd_forcefield_load(nullptr, nullptr) == EGOMD_USER_ERROR);
    CHECK(std::strlen(egomd_last_error()) > 0);
    double out = 0;
    CHECK(egomd_time_mapping(1e-9, 2e-9, nullptr) == EGOMD_USER_ERROR);
    CHECK(egomd_time_mapping(-1e-9, 2e-9, &out) == EGOMD_USER_ERROR);
}

TEST_CASE("force field lifecycle") {
    egomd_forcefield* ff = nullptr;
    REQUIRE(egomd_forcefield_load("ego_water_293K", &ff) == EGOMD_OK);
    REQUIRE(ff != nullptr);

    const auto path = fs::temp_directory_path() / "egomd_capi_ff.ff";
    CHECK(egomd_forcefield_save(ff, path.string().c_str()) == EGOMD_OK);

    egomd_forcefield* reloaded = nullptr;
    CHECK(egomd_forcefield_load(path.string().c_str(), &reloaded) == EGOMD_OK);
    egomd_forcefield_free(reloaded);
    egomd_forcefield_free(ff);
    fs::remove(path);

    egomd_forcefield* missing = nullptr;
    CHECK(egomd_forcefield_load("/no/such/file.ff", &missing) == EGOMD_USER_ERROR);
    CHECK(std::string(egomd_last_error()).find("/no/such/file.ff") != std::string::npos);
}

TEST_CASE("system build, MD run and analysis through the C API") {
    egomd_forcefield* ff = nullptr;
    REQUIRE(egomd_forcefield_load("ego_water_293K", &ff) == EGOMD_OK);

    egomd_system* sys = nullptr;
    REQUIRE(egomd_system_build(ff, "PW", 420, 0.95, 293.0, 7, &sys) == EGOMD_OK);
    CHECK(egomd_system_size(sys) == 420);
    CHECK(egomd_system_density(sys) == doctest::Approx(0.95).epsilon(1e-9));

    egomd_run_options opts{};
    opts.ensemble = "nvt";
    opts.dt_ps = 0.010;
    opts.temperature_k = 293.0;
    opts.duration_ps = 4.0;
    opts.sample_interval_ps = 0.5;
    opts.settle_ps = 2.0;

    egomd_trajectory* traj = nullptr;
    REQUIRE(egomd_run_md(sys, ff, &opts, &traj) == EGOMD_OK);
    CHECK(egomd_trajectory_frame_count(traj) == 9);

    double rho = 0, rho_se = 0;
    CHECK(egomd_density(traj, 0.0, 4.0, &rho, &rho_se) == EGOMD_OK);
    CHECK(rho == doctest::Approx(0.95).epsilon(1e-6));  // NVT box is constant

    egomd_curve* curve = nullptr;
    REQUIRE(egomd_msd(traj, "PW", 2.0, 0.5, &curve) == EGOMD_OK);
    CHECK(egomd_curve_size(curve) == 5);
    double x = -1, y = -1;
    CHECK(egomd_curve_point(curve, 0, &x, &y) == EGOMD_OK);
    CHECK(x == 0.0);
    CHECK(y == 0.0);
    CHECK(egomd_curve_point(curve, 99, &x, &y) == EGOMD_USER_ERROR);

    double d = 0, r2 = 0;
    int poor = -1;
    CHECK(egomd_diffusion_from_msd(curve, 0.5, 2.0, &d, &r2, &poor) == EGOMD_OK);
    CHECK(d > 0.0);

    // unknown species comes back as a user error
    egomd_curve* bad = nullptr;
    CHECK(egomd_msd(traj, "EGO13", 2.0, 0.5, &bad) == EGOMD_USER_ERROR);

    // no forcing: the viscosity estimator refuses A = 0
    double eta = 0, eta_se = 0;
    CHECK(egomd_viscosity_nemd(traj, 0.0, 0.0, &eta, &eta_se) == EGOMD_USER_ERROR);

    egomd_curve_free(curve);
    egomd_trajectory_free(traj);
    egomd_system_free(sys);
    egomd_forcefield_free(ff);
}

TEST_CASE("trajectory file round trip through the C API") {
    egomd_forcefield* ff = nullptr;
    REQUIRE(egomd_forcefield_load("ego_water_293K", &ff) == EGOMD_OK);
    egomd_system* sys = nullptr;
    REQUIRE(egomd_system_build_mixture(ff, "EGO2", 0.5, 500, 1.0, 293.0, 3, &sys) == EGOMD_OK);
    CHECK(egomd_system_size(sys) > 400);

    const std::string traj_path = (fs::temp_directory_path() / "egomd_capi_t.trj").string();
    const std::string xyz_path = (fs::temp_directory_path() / "egomd_capi_t.xyzx").string();
    egomd_run_options opts{};
    opts.ensemble = "nvt";
    opts.duration_ps = 1.0;
    opts.sample_interval_ps = 0.5;
    opts.settle_ps = 2.0;
    opts.trajectory_path = traj_path.c_str();

    egomd_trajectory* traj = nullptr;
    REQUIRE(egomd_run_md(sys, ff, &opts, &traj) == EGOMD_OK);
    egomd_trajectory_free(traj);

    egomd_trajectory* loaded = nullptr;
    REQUIRE(egomd_trajectory_open(traj_path.c_str(), &loaded) == EGOMD_OK);
    CHECK(egomd_trajectory_frame_count(loaded) == 3);
    CHECK(egomd_trajectory_export_xyz(loaded, xyz_path.c_str()) == EGOMD_OK);
    CHECK(fs::exists(xyz_path));
    egomd_trajectory_free(loaded);
    egomd_system_free(sys);
    egomd_forcefield_free(ff);
    fs::remove(traj_path);
    fs::remove(xyz_path);
}

TEST_CASE("scalar helpers match the published relations") {
    double s = 0;
    CHECK(egomd_time_mapping(2.0e-9, 2.0e-9, &s) == EGOMD_OK);
    CHECK(s == doctest::Approx(std::cbrt(3.0)).epsilon(1e-14));

    double d_aa = 0;
    CHECK(egomd_scale_diffusion(8.5837e-9, 6.19, 3, &d_aa) == EGOMD_OK);
    CHECK(d_aa == doctest::Approx(2.0e-9).epsilon(1e-4));

    double eta_aa = 0;
    CHECK(egomd_scale_viscosity(0.162, 6.19, &eta_aa) == EGOMD_OK);
    CHECK(eta_aa == doctest::Approx(1.003).epsilon(1e-3));

    const double d_exp[2] = {1e-9, 1e-9};
    const double d_calc[2] = {1e-10, 1e-9};
    double rmse = 0;
    CHECK(egomd_rmse_log_diffusion(d_exp, d_calc, 2, &rmse) == EGOMD_OK);
    CHECK(rmse == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    double sh = 0;
    int pass = -1;
    CHECK(egomd_max_shear_rate(0.0005, 1000.0, 0.01, 8.0, 6000.0, &sh, &pass) == EGOMD_OK);
    CHECK(pass == 1);
    CHECK(egomd_max_shear_rate(0.0015, 1000.0, 0.01, 8.0, 6000.0, &sh, &pass) == EGOMD_OK);
    CHECK(pass == 0);

    double d_w = 0;
    int valid = -1;
    CHECK(egomd_water_diffusion_from_nmr(3e-9, 1e-9, 2.0 / 3.0, 1, &d_w, &valid) == EGOMD_OK);
    CHECK(d_w == doctest::Approx(3e-9).epsilon(1e-12));
    CHECK(valid == 1);
    CHECK(egomd_water_diffusion_from_nmr(3e-9, 1e-9, 1.5, 1, &d_w, &valid) == EGOMD_USER_ERROR);
}

TEST_CASE("numeric failures map to the numeric status code") {
    egomd_forcefield* ff = nullptr;
    REQUIRE(egomd_forcefield_load("ego_water_293K", &ff) == EGOMD_OK);
    egomd_system* sys = nullptr;
    REQUIRE(egomd_system_build(ff, "PW", 420, 0.95, 293.0, 7, &sys) == EGOMD_OK);
    // absurd time step without a settle: immediate blow-up detection
    egomd_run_options opts{};
    opts.ensemble = "nve";
    opts.dt_ps = 50.0;
    opts.duration_ps = 100.0;
    opts.sample_interval_ps = 50.0;
    egomd_trajectory* traj = nullptr;
    CHECK(egomd_run_md(sys, ff, &opts, &traj) == EGOMD_NUMERIC_ERROR);
    CHECK(std::string(egomd_last_error()).find("step") != std::string::npos);
    egomd_system_free(sys);
    egomd_forcefield_free(ff);
}
