#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "egomd/engine.hpp"
#include "egomd/errors.hpp"
#include "egomd/rng.hpp"
#include "support/testutil.hpp"

using namespace egomd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

SystemState random_fluid(const ForceField& ff, int n, double density, double temperature,
                         std::uint64_t seed) {
    auto topo = test::fluid_topology(ff, "PW", n);
    return build_system(topo, density, temperature, seed);
}

// short-range variant so that small boxes satisfy box >= 2*(r_cut+skin)
ForceField short_ff(double r_cut) { return test::lj_forcefield("PW", 54.0, 0.40, 2.650, r_cut); }
}  // namespace

TEST_CASE("neighbor list") {
    auto ff = test::lj_forcefield();

    SUBCASE("beads beyond range give an empty list") {
        auto topo = test::fluid_topology(ff, "PW", 2);
        auto s = test::state_at(topo, {{1, 1, 1}, {1 + 1.4 + 0.2 + 0.1, 1, 1}}, {8, 8, 8});
        const auto list = build_neighbor_list(s, 1.4, 0.2);
        CHECK(list.pairs.empty());
    }

    SUBCASE("matches the O(N^2) oracle for random configurations") {
        // short cutoff: the box fits >= 4 cells per axis (cell-grid path)
        const auto ffs = short_ff(0.5);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            auto s = random_fluid(ffs, 100, 0.35, 293.0, seed);
            auto list = build_neighbor_list(s, 0.5, 0.2);
            auto oracle = brute_force_pairs(s, 0.7, true);
            std::sort(oracle.begin(), oracle.end());
            CHECK(list.pairs == oracle);
        }
        // production cutoff in a desk-size box: double-loop fallback path
        auto s = random_fluid(ff, 350, 0.9, 293.0, 9);
        auto list = build_neighbor_list(s, 1.4, 0.2);
        auto oracle = brute_force_pairs(s, 1.6, true);
        std::sort(oracle.begin(), oracle.end());
        CHECK(list.pairs == oracle);
    }

    SUBCASE("bonded pairs within the cutoff are excluded") {
        const auto ego = ForceField::bundled_ego_water_293k();
        auto topo = test::fluid_topology(ego, "EGO3", 1);
        auto s = test::state_at(topo, {{2, 2, 2}, {2.33, 2, 2}, {2.66, 2, 2}}, {8, 8, 8});
        const auto list = build_neighbor_list(s, 1.4, 0.2);
        CHECK(list.pairs.empty());  // 1-2 and 1-3 all excluded
    }

    SUBCASE("box below twice the range errors naming the axis") {
        auto topo = test::fluid_topology(ff, "PW", 2);
        auto s = test::state_at(topo, {{1, 1, 1}, {2, 1, 1}}, {8, 2.0, 8});
        CHECK_THROWS_WITH_AS(build_neighbor_list(s, 1.4, 0.2), doctest::Contains("along y"), UserError);
    }
}

TEST_CASE("NVE integration") {
    auto ff = test::lj_forcefield();

    SUBCASE("free flight is exact") {
        // single bead, no interactions possible
        auto topo = test::fluid_topology(ff, "PW", 1);
        auto s = test::state_at(topo, {{2, 2, 2}}, {8, 8, 8});
        s.velocities[0] = {0.05, -0.02, 0.01};
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        cfg.dt = 0.01;
        Integrator integ(ff, topo, cfg);
        for (int i = 0; i < 100; ++i) integ.step(s);
        CHECK(s.positions[0].x == doctest::Approx(2.0 + 0.05 * 1.0).epsilon(1e-12));
        CHECK(s.positions[0].y == doctest::Approx(2.0 - 0.02 * 1.0).epsilon(1e-12));
        CHECK(s.time == doctest::Approx(1.0));
    }

    SUBCASE("LJ dimer conserves energy over 1e5 steps") {
        auto topo = test::fluid_topology(ff, "PW", 2);
        const double r_min = std::pow(2.0, 1.0 / 6.0) * 0.40;
        auto s = test::state_at(topo, {{2, 2, 2}, {2 + r_min, 2, 2}}, {8, 8, 8});
        s.velocities[0] = {0.02, 0.01, 0.0};
        s.velocities[1] = {-0.02, -0.01, 0.0};
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        cfg.dt = 0.002;
        Integrator integ(ff, topo, cfg);
        const double e0 = integ.conserved_energy(s);
        double max_drift = 0.0;
        for (int i = 0; i < 100000; ++i) {
            integ.step(s);
            if (i % 1000 == 0)
                max_drift = std::max(max_drift, std::abs(integ.conserved_energy(s) - e0));
        }
        max_drift = std::max(max_drift, std::abs(integ.conserved_energy(s) - e0));
        CHECK(max_drift / std::abs(e0) < 1e-5);
    }

    SUBCASE("time reversal recovers the initial state") {
        const auto ffs = short_ff(0.8);
        auto s = random_fluid(ffs, 50, 0.5, 293.0, 77);
        const auto initial = s.positions;
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        cfg.dt = 0.002;
        Integrator integ(ffs, s.topology, cfg);
        for (int i = 0; i < 100; ++i) integ.step(s);
        for (auto& v : s.velocities) v = -v;
        Integrator back(ffs, s.topology, cfg);
        for (int i = 0; i < 100; ++i) back.step(s);
        double max_err = 0.0;
        for (int i = 0; i < s.size(); ++i) max_err = std::max(max_err, norm(s.positions[i] - initial[i]));
        CHECK(max_err < 1e-8);
    }

    SUBCASE("blow-up is detected") {
        auto topo = test::fluid_topology(ff, "PW", 2);
        auto s = test::state_at(topo, {{2, 2, 2}, {2.5, 2, 2}}, {8, 8, 8});
        s.velocities[0] = {100.0, 0, 0};  // 1 nm per step at dt = 0.01
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        cfg.dt = 0.01;
        Integrator integ(ff, topo, cfg);
        CHECK_THROWS_AS(integ.step(s), NumericError);
    }
}

TEST_CASE("NVT thermostat" * doctest::timeout(600)) {
    auto ff = test::lj_forcefield();

    SUBCASE("thermostat tau -> infinity reproduces NVE") {
        const auto ffs = short_ff(0.8);
        auto s1 = random_fluid(ffs, 50, 0.5, 293.0, 5);
        auto s2 = s1;
        IntegratorConfig nve;
        nve.ensemble = Ensemble::NVE;
        nve.dt = 0.01;
        IntegratorConfig nvt = nve;
        nvt.ensemble = Ensemble::NVT;
        nvt.thermostat_tau = kInf;
        Integrator a(ffs, s1.topology, nve);
        Integrator b(ffs, s2.topology, nvt);
        for (int i = 0; i < 200; ++i) {
            a.step(s1);
            b.step(s2);
        }
        CHECK(s1.positions == s2.positions);
        CHECK(s1.velocities == s2.velocities);
    }

    SUBCASE("kinetic temperature averages to the target") {
        auto s = random_fluid(ff, 1000, 0.998, 293.0, 13);
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        cfg.dt = 0.01;
        cfg.temperature = 293.0;
        cfg.thermostat_tau = 1.0;
        cfg.cap_forces = true;  // lattice start may have residual overlap
        Integrator integ(ff, s.topology, cfg);
        // equilibrate 10 ps, then average 90 ps
        for (int i = 0; i < 1000; ++i) integ.step(s);
        double t_acc = 0.0;
        int t_count = 0;
        double kurt_num = 0.0, kurt_den = 0.0;
        long kurt_count = 0;
        for (int i = 0; i < 9000; ++i) {
            integ.step(s);
            if (i % 100 == 0) {
                t_acc += kinetic_temperature(s);
                ++t_count;
                for (const auto& v : s.velocities) {
                    for (int axis = 0; axis < 3; ++axis) {
                        const double m = s.topology->bead_mass(0);
                        const double x = v[axis] * std::sqrt(m);
                        kurt_num += x * x * x * x;
                        kurt_den += x * x;
                        ++kurt_count;
                    }
                }
            }
        }
        const double t_mean = t_acc / t_count;
        CHECK(t_mean == doctest::Approx(293.0).epsilon(3.0 / 293.0));

        // Maxwell-Boltzmann moment check: kurtosis of each component ~ 3
        const double kurt = kurt_num / kurt_count / std::pow(kurt_den / kurt_count, 2);
        CHECK(kurt == doctest::Approx(3.0).epsilon(0.2 / 3.0));

        // Nose-Hoover conserved quantity drift
        const double h0 = integ.conserved_energy(s);
        for (int i = 0; i < 1000; ++i) integ.step(s);
        const double h1 = integ.conserved_energy(s);
        CHECK(std::abs(h1 - h0) / std::abs(h0) < 1e-4);
    }

    SUBCASE("momentum conservation in NVT") {
        const auto ffs = short_ff(0.9);
        auto s = random_fluid(ffs, 200, 0.8, 293.0, 21);
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        cfg.dt = 0.01;
        Integrator integ(ffs, s.topology, cfg);
        for (int i = 0; i < 1000; ++i) integ.step(s);
        CHECK(norm(total_momentum(s)) / s.size() < 1e-8);
    }
}

TEST_CASE("NPT barostat" * doctest::timeout(900)) {
    auto ff = test::lj_forcefield();

    SUBCASE("barostat tau -> infinity reduces to NVT") {
        const auto ffs = short_ff(0.8);
        auto s1 = random_fluid(ffs, 50, 0.5, 293.0, 3);
        auto s2 = s1;
        IntegratorConfig nvt;
        nvt.ensemble = Ensemble::NVT;
        nvt.dt = 0.01;
        IntegratorConfig npt = nvt;
        npt.ensemble = Ensemble::NPT;
        npt.barostat_tau = kInf;
        Integrator a(ffs, s1.topology, nvt);
        Integrator b(ffs, s2.topology, npt);
        for (int i = 0; i < 200; ++i) {
            a.step(s1);
            b.step(s2);
        }
        CHECK(s1.positions == s2.positions);
        CHECK(s1.box == s2.box);
    }

    SUBCASE("density relaxes in trend toward the target and the box fluctuates") {
        // start 5% below the fluid's equilibrium density at this state point
        auto s = random_fluid(ff, 500, 0.95 * 0.998, 293.0, 19);
        // settle the fresh lattice in NVT before coupling the barostat
        IntegratorConfig settle;
        settle.ensemble = Ensemble::NVT;
        settle.dt = 0.005;
        settle.cap_forces = true;
        Integrator pre(ff, s.topology, settle);
        for (int i = 0; i < 1000; ++i) pre.step(s);
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NPT;
        cfg.dt = 0.01;
        cfg.temperature = 293.0;
        cfg.pressure_bar = units::kAtmInBar;
        cfg.thermostat_tau = 1.0;
        cfg.barostat_tau = 5.0;
        Integrator integ(ff, s.topology, cfg);
        std::vector<double> rho;
        for (int i = 0; i < 12000; ++i) {
            integ.step(s);
            if (i % 50 == 0) rho.push_back(s.density_gcm3());
        }
        const int third = static_cast<int>(rho.size()) / 3;
        auto mean = [&](int lo, int hi) {
            double acc = 0;
            for (int i = lo; i < hi; ++i) acc += rho[i];
            return acc / (hi - lo);
        };
        const double early = mean(0, third);
        const double late = mean(2 * third, static_cast<int>(rho.size()));
        CHECK(std::abs(late - 0.998) < std::abs(early - 0.998));
        // box volume fluctuates
        const auto [min_it, max_it] = std::minmax_element(rho.begin() + 2 * third, rho.end());
        CHECK(*max_it > *min_it);
    }
}

TEST_CASE("cosine acceleration forcing") {
    auto ff = test::lj_forcefield();
    auto topo = test::fluid_topology(ff, "PW", 3);
    const double lz = 8.0;
    auto s = test::state_at(topo, {{1, 1, 0}, {1, 2, lz / 4}, {2, 1, lz / 2}}, {8, 8, lz});
    NemdForcing forcing{0.0005};
    std::vector<Vec3> f(3, Vec3{});
    apply_cosine_acceleration(s, forcing, f);
    const double m = 54.0;
    CHECK(f[0].x == doctest::Approx(m * 0.0005).epsilon(1e-12));          // cos(0) = 1
    CHECK(f[1].x == doctest::Approx(0.0).scale(m * 0.0005).epsilon(1e-12));  // cos(pi/2) = 0
    CHECK(f[2].x == doctest::Approx(-m * 0.0005).epsilon(1e-12));         // cos(pi) = -1
    CHECK(f[0].y == 0.0);
    CHECK(f[0].z == 0.0);

    SUBCASE("net momentum injection vanishes statistically") {
        Rng rng(41);
        double acc = 0.0;
        const int n = 1000;
        auto big_topo = test::fluid_topology(ff, "PW", n);
        std::vector<Vec3> pos(n);
        for (auto& r : pos) r = {rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, lz)};
        auto state = test::state_at(big_topo, pos, {8, 8, lz});
        std::vector<Vec3> forces(n, Vec3{});
        apply_cosine_acceleration(state, forcing, forces);
        for (const auto& fv : forces) acc += fv.x;
        CHECK(std::abs(acc) / (n * 0.0005 * m) < 0.05);
    }
}

TEST_CASE("profile-aware thermostat under forcing" * doctest::timeout(300)) {
    // exaggerated forcing: the streaming kinetic energy would inflate a naive
    // kinetic temperature by tens of kelvin; the thermostat must hold the
    // peculiar-velocity temperature at the target instead
    auto ff = test::lj_forcefield();
    auto s = random_fluid(ff, 500, 0.998, 293.0, 71);
    IntegratorConfig settle_cfg;
    settle_cfg.ensemble = Ensemble::NVT;
    settle_cfg.dt = 0.005;
    settle_cfg.cap_forces = true;
    Integrator pre(ff, s.topology, settle_cfg);
    for (int i = 0; i < 2000; ++i) pre.step(s);

    IntegratorConfig cfg;
    cfg.ensemble = Ensemble::NVT;
    cfg.dt = 0.01;
    cfg.temperature = 293.0;
    Integrator integ(ff, s.topology, cfg);
    NemdForcing strong{0.05};
    for (int i = 0; i < 3000; ++i) integ.step(s, &strong);  // reach steady state

    double naive_t = 0.0, thermal_t = 0.0, v_amp_acc = 0.0;
    const int samples = 2000;
    const double nf = 3.0 * s.size() - 3.0;
    for (int i = 0; i < samples; ++i) {
        integ.step(s, &strong);
        const double k = strong.wavenumber(s.box);
        const double v_amp = cosine_velocity_amplitude(s, k);
        v_amp_acc += v_amp;
        double ke = 0.0, ke_thermal = 0.0;
        for (int b = 0; b < s.size(); ++b) {
            const double m = s.topology->bead_mass(b);
            ke += 0.5 * m * norm2(s.velocities[b]);
            Vec3 v = s.velocities[b];
            v.x -= v_amp * std::cos(k * wrap_coordinate(s.positions[b].z, s.box.z));
            ke_thermal += 0.5 * m * norm2(v);
        }
        naive_t += 2.0 * ke / (nf * units::kBoltzmann);
        thermal_t += 2.0 * ke_thermal / (nf * units::kBoltzmann);
    }
    naive_t /= samples;
    thermal_t /= samples;
    v_amp_acc /= samples;
    CHECK(v_amp_acc > 0.05);                                   // a real streaming response
    CHECK(thermal_t == doctest::Approx(293.0).epsilon(0.02));  // controlled variable
    CHECK(naive_t > thermal_t + 5.0);                          // streaming energy not thermostatted
}

TEST_CASE("run orchestration") {
    auto ff = test::lj_forcefield();

    SUBCASE("zero duration gives only the initial frame") {
        const auto ffs = short_ff(0.7);
        auto s = random_fluid(ffs, 30, 0.4, 293.0, 2);
        RunOptions opts;
        opts.duration = 0.0;
        opts.sample_interval = 1.0;
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        const auto traj = run(s, ffs, cfg, opts);
        CHECK(traj.frame_count() == 1);
        CHECK(traj.frames[0].time == 0.0);
    }

    SUBCASE("same seed and config give bitwise-identical trajectories") {
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVT;
        cfg.dt = 0.01;
        RunOptions opts;
        opts.duration = 5.0;
        opts.sample_interval = 0.5;
        const auto ffs = short_ff(0.8);
        auto s1 = random_fluid(ffs, 60, 0.6, 293.0, 101);
        auto s2 = random_fluid(ffs, 60, 0.6, 293.0, 101);
        const auto t1 = run(s1, ffs, cfg, opts);
        const auto t2 = run(s2, ffs, cfg, opts);
        REQUIRE(t1.frame_count() == t2.frame_count());
        for (int i = 0; i < t1.frame_count(); ++i) {
            CHECK(t1.frames[i].positions == t2.frames[i].positions);
            CHECK(t1.frames[i].velocities == t2.frames[i].velocities);
        }
    }

    SUBCASE("momentum conserved over an NVE run") {
        const auto ffs = short_ff(0.9);
        auto s = random_fluid(ffs, 100, 0.7, 293.0, 55);
        IntegratorConfig cfg;
        cfg.ensemble = Ensemble::NVE;
        cfg.dt = 0.005;
        RunOptions opts;
        opts.duration = 10.0;
        opts.sample_interval = 10.0;
        run(s, ffs, cfg, opts);
        CHECK(norm(total_momentum(s)) / s.size() < 1e-8);
    }
}
