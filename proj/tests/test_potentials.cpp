#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egomd/engine.hpp"
#include "egomd/errors.hpp"
#include "egomd/forcefield.hpp"
#include "egomd/potentials.hpp"
#include "egomd/rng.hpp"
#include "egomd/units.hpp"
#include "support/testutil.hpp"

using namespace egomd;

TEST_CASE("lj energy and force") {
    const auto p = make_lj_pair(0.40, 2.650, 1.4);

    SUBCASE("zero of the unshifted potential at sigma") {
        const auto [e, f] = lj_energy_force(0.40, p);
        CHECK(e - p.shift == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("minimum at 2^(1/6) sigma") {
        const double r_min = std::pow(2.0, 1.0 / 6.0) * 0.40;
        const auto [e, f] = lj_energy_force(r_min, p);
        CHECK(e - p.shift == doctest::Approx(-2.650).epsilon(1e-12));
        CHECK(f == doctest::Approx(0.0).epsilon(1e-10));
    }
    SUBCASE("hand-computed point at r = 0.5 nm") {
        // 4*2.650*(0.8^12 - 0.8^6) = -2.0503 kJ/mol unshifted
        const auto [e, f] = lj_energy_force(0.50, p);
        CHECK(e - p.shift == doctest::Approx(-2.0503).epsilon(1e-4));
        CHECK(e - p.shift == doctest::Approx(10.6 * (std::pow(0.8, 12) - std::pow(0.8, 6))).epsilon(1e-14));
    }
    SUBCASE("continuity at the cutoff") {
        const auto [e, f] = lj_energy_force(1.4 - 1e-13, p);
        CHECK(std::abs(e) < 1e-12);
        const auto beyond = lj_energy_force(1.4, p);
        CHECK(beyond.energy == 0.0);
        CHECK(beyond.force == 0.0);
    }
    SUBCASE("analytic force matches finite differences") {
        Rng rng(3);
        for (int t = 0; t < 100; ++t) {
            const double r = rng.uniform(0.3, 1.3);
            const auto [e, f] = lj_energy_force(r, p);
            const double fd = -test::central_diff(
                [&](double x) { return lj_energy_force(x, p).energy; }, r, 1e-6);
            CHECK(f == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("mixing rules") {
    const BeadType pa{"PA", 53.0, 0.45, 4.356};
    const BeadType pb{"PB", 44.0, 0.46, 3.523};
    const BeadType pw{"PW", 54.0, 0.40, 2.650};
    MixingRule rule;
    rule.set_gamma("PB", "PW", 1.13);

    SUBCASE("Lorentz-Berthelot cross terms") {
        const auto p = combine_params(pa, pw, rule);
        CHECK(p.sigma == doctest::Approx(0.425).epsilon(1e-12));
        CHECK(p.epsilon == doctest::Approx(std::sqrt(4.356 * 2.650)).epsilon(1e-12));
        CHECK(p.epsilon == doctest::Approx(3.398).epsilon(2e-4));
    }
    SUBCASE("gamma override on the geometric mean") {
        const auto p = combine_params(pb, pw, rule);
        CHECK(p.epsilon == doctest::Approx(1.13 * std::sqrt(3.523 * 2.650)).epsilon(1e-12));
        CHECK(p.epsilon == doctest::Approx(3.452).epsilon(1e-3));
        // override is symmetric
        const auto q = combine_params(pw, pb, rule);
        CHECK(q.epsilon == doctest::Approx(p.epsilon).epsilon(1e-15));
    }
    SUBCASE("identical types are a fixed point") {
        const auto p = combine_params(pw, pw, rule);
        CHECK(p.sigma == 0.40);
        CHECK(p.epsilon == doctest::Approx(2.650).epsilon(1e-15));
    }
    SUBCASE("symmetry over random type pairs") {
        Rng rng(11);
        for (int t = 0; t < 50; ++t) {
            BeadType a{"A", 1.0, rng.uniform(0.3, 0.6), rng.uniform(0.5, 6.0)};
            BeadType b{"B", 1.0, rng.uniform(0.3, 0.6), rng.uniform(0.5, 6.0)};
            const auto ab = combine_params(a, b, rule);
            const auto ba = combine_params(b, a, rule);
            CHECK(ab.sigma == ba.sigma);
            CHECK(ab.epsilon == ba.epsilon);
        }
    }
}

TEST_CASE("mixture potential") {
    SUBCASE("single gaussian is exactly harmonic") {
        MixturePotentialParams params;
        params.kind = BondedKind::Bond;
        params.temperature_ref = 293.0;
        params.components = {{1.0, 0.33, 0.02}};
        const MixturePotential pot(params);
        const double kt = units::kBoltzmann * 293.0;
        for (double q = 0.28; q <= 0.38; q += 0.005) {
            const auto [u, du] = pot.energy_deriv(q);
            const double expected = kt * (q - 0.33) * (q - 0.33) / (2.0 * 0.02 * 0.02);
            CHECK(u == doctest::Approx(expected).epsilon(1e-10));
            CHECK(du == doctest::Approx(kt * (q - 0.33) / (0.02 * 0.02)).epsilon(1e-8));
        }
        CHECK(pot.energy_deriv(0.33).force == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(pot.argmin() == doctest::Approx(0.33).epsilon(1e-3));
    }

    SUBCASE("bundled bond table has a single interior minimum") {
        const auto ff = ForceField::bundled_ego_water_293k();
        const auto& pot = ff.bond_potential("PA", "PB");
        // dense scan: count interior local minima of the composed curve
        int minima = 0;
        double argmin = 0.0;
        const int n = 2000;
        const double lo = 0.18, hi = 0.45;
        double prev_u = pot.energy_deriv(lo).energy;
        double prev_prev = prev_u;
        for (int i = 1; i <= n; ++i) {
            const double q = lo + (hi - lo) * i / n;
            const double u = pot.energy_deriv(q).energy;
            if (i >= 2 && prev_u < prev_prev && prev_u < u) {
                ++minima;
                argmin = lo + (hi - lo) * (i - 1) / n;
            }
            prev_prev = prev_u;
            prev_u = u;
        }
        CHECK(minima == 1);
        // frozen from the scan: composed Table-1 curve bottoms near 0.316 nm
        CHECK(argmin == doctest::Approx(0.3161).epsilon(2e-3));
        CHECK(pot.argmin() == doctest::Approx(argmin).epsilon(2e-3));
    }

    SUBCASE("quadratic tail extrapolation keeps the potential confining") {
        MixturePotentialParams params;
        params.kind = BondedKind::Bond;
        params.components = {{1.0, 0.33, 0.02}};
        const MixturePotential pot(params);
        const double far = pot.domain_hi() + 0.3;
        const auto [u, du] = pot.energy_deriv(far);
        CHECK(u > pot.energy_deriv(pot.domain_hi()).energy);
        CHECK(du > 0.0);
        const auto low = pot.energy_deriv(std::max(pot.domain_lo() - 0.05, 1e-5));
        CHECK(low.force < 0.0);  // pushes back toward the well
    }
}

TEST_CASE("bond force") {
    const auto ff = ForceField::bundled_ego_water_293k();
    auto topo = test::fluid_topology(ff, "EGO2", 1);
    const auto& pot = ff.bond_potential("PA", "PA");

    SUBCASE("zero at the equilibrium separation") {
        const double r0 = pot.argmin();
        auto s = test::state_at(topo, {{1, 1, 1}, {1 + r0, 1, 1}}, {10, 10, 10});
        const auto bf = bond_force(s, 0, 1, pot);
        CHECK(norm(bf.f_i) < 1e-6);
    }
    SUBCASE("harmonic limit of a single-gaussian bond") {
        MixturePotentialParams params;
        params.kind = BondedKind::Bond;
        params.temperature_ref = 293.0;
        params.components = {{1.0, 0.33, 0.02}};
        const MixturePotential single(params);
        const double kt = units::kBoltzmann * 293.0;
        auto s = test::state_at(topo, {{1, 1, 1}, {1.36, 1, 1}}, {10, 10, 10});  // L = 0.36
        const auto bf = bond_force(s, 0, 1, single);
        // restoring force kT (L - mu)/xi^2; i sits left of j, so it is pulled +x
        const double expected = kt * (0.36 - 0.33) / (0.02 * 0.02);
        CHECK(bf.f_i.x == doctest::Approx(expected).epsilon(1e-9));
        CHECK(bf.f_j.x == doctest::Approx(-expected).epsilon(1e-9));
    }
    SUBCASE("Newton's third law over random configurations") {
        Rng rng(5);
        for (int t = 0; t < 100; ++t) {
            const Vec3 a{rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 4)};
            const Vec3 b = a + Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
            auto s = test::state_at(topo, {a, b}, {4, 4, 4});
            const auto bf = bond_force(s, 0, 1, pot);
            CHECK(bf.f_i.x == doctest::Approx(-bf.f_j.x).epsilon(1e-14));
            CHECK(bf.f_i.y == doctest::Approx(-bf.f_j.y).epsilon(1e-14));
            CHECK(bf.f_i.z == doctest::Approx(-bf.f_j.z).epsilon(1e-14));
        }
    }
    SUBCASE("coincident beads raise") {
        auto s = test::state_at(topo, {{1, 1, 1}, {1, 1, 1}}, {10, 10, 10});
        CHECK_THROWS_AS(bond_force(s, 0, 1, pot), NumericError);
    }
    SUBCASE("analytic derivative matches finite differences of the energy") {
        Rng rng(17);
        for (int t = 0; t < 100; ++t) {
            const double r = rng.uniform(0.22, 0.42);
            const auto [u, du] = pot.energy_deriv(r);
            const double fd = test::central_diff(
                [&](double x) { return pot.energy_deriv(x).energy; }, r, 1e-6);
            CHECK(du == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("angle force") {
    const auto ff = ForceField::bundled_ego_water_293k();
    auto topo = test::fluid_topology(ff, "EGO3", 1);
    const auto& pot = ff.angle_potential("PA", "PB", "PA");

    SUBCASE("zero force at a single-gaussian minimum") {
        MixturePotentialParams params;
        params.kind = BondedKind::Angle;
        params.temperature_ref = 293.0;
        params.components = {{1.0, 120.0, 15.0}};
        const MixturePotential single(params);
        // place an exact 120-degree triple
        const double rad = 120.0 * 3.14159265358979323846 / 180.0;
        auto s = test::state_at(
            topo, {{1 + 0.33, 1, 1}, {1, 1, 1}, {1 + 0.33 * std::cos(rad), 1 + 0.33 * std::sin(rad), 1}},
            {10, 10, 10});
        const auto af = angle_force(s, 0, 1, 2, single);
        CHECK(norm(af.f_i) < 1e-8);
        CHECK(norm(af.f_j) < 1e-8);
        CHECK(norm(af.f_k) < 1e-8);
    }

    SUBCASE("force-free and torque-free over random triples") {
        Rng rng(23);
        for (int t = 0; t < 100; ++t) {
            std::vector<Vec3> pos(3);
            pos[1] = {rng.uniform(1, 3), rng.uniform(1, 3), rng.uniform(1, 3)};
            for (int b : {0, 2}) {
                Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
                dir /= norm(dir);
                pos[b] = pos[1] + rng.uniform(0.25, 0.4) * dir;
            }
            auto s = test::state_at(topo, pos, {50, 50, 50});
            const auto af = angle_force(s, 0, 1, 2, pot);
            const Vec3 fsum = af.f_i + af.f_j + af.f_k;
            CHECK(norm(fsum) < 1e-10);
            const Vec3 torque = cross(pos[0], af.f_i) + cross(pos[1], af.f_j) + cross(pos[2], af.f_k);
            CHECK(norm(torque) < 1e-9);
        }
    }

    SUBCASE("analytic forces match finite differences of the total energy") {
        Rng rng(29);
        for (int t = 0; t < 10; ++t) {
            std::vector<Vec3> pos(3);
            pos[1] = {2, 2, 2};
            for (int b : {0, 2}) {
                Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
                dir /= norm(dir);
                pos[b] = pos[1] + rng.uniform(0.28, 0.38) * dir;
            }
            auto s = test::state_at(topo, pos, {50, 50, 50});
            const auto af = angle_force(s, 0, 1, 2, pot);
            const Vec3 f[3] = {af.f_i, af.f_j, af.f_k};
            for (int bead = 0; bead < 3; ++bead) {
                for (int axis = 0; axis < 3; ++axis) {
                    auto energy_at = [&](double x) {
                        auto moved = s;
                        moved.positions[bead][axis] = x;
                        return angle_force(moved, 0, 1, 2, pot).energy;
                    };
                    const double fd = -test::central_diff(energy_at, s.positions[bead][axis], 1e-6);
                    CHECK(f[bead][axis] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
                }
            }
        }
    }
}

TEST_CASE("total energy breakdown") {
    auto ff = test::lj_forcefield();
    auto topo = test::fluid_topology(ff, "PW", 2);
    const double r_min = std::pow(2.0, 1.0 / 6.0) * 0.40;

    SUBCASE("two beads at the LJ minimum") {
        auto s = test::state_at(topo, {{1, 1, 1}, {1 + r_min, 1, 1}}, {10, 10, 10});
        const auto e = total_energy(s, ff);
        const double shift = make_lj_pair(0.40, 2.650, 1.4).shift;
        CHECK(e.nonbonded == doctest::Approx(-2.650 + shift).epsilon(1e-12));
        CHECK(e.bond == 0.0);
        CHECK(e.angle == 0.0);
        CHECK(e.kinetic == 0.0);
    }
    SUBCASE("kinetic term from exact-rescaled velocities") {
        auto small_ff = test::lj_forcefield("PW", 54.0, 0.40, 2.650, 0.9);
        auto state = build_system(test::fluid_topology(small_ff, "PW", 125), 0.9, 293.0, 9);
        const auto e = total_energy(state, small_ff);
        const double expected = 0.5 * (3.0 * 125 - 3) * units::kBoltzmann * 293.0;
        CHECK(e.kinetic == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("box doubling changes only the nonbonded term") {
        const auto ego_ff = ForceField::bundled_ego_water_293k();
        auto ego_topo = test::fluid_topology(ego_ff, "EGO4", 2);
        // second molecule sits across the periodic boundary of the small box
        std::vector<Vec3> pos = {{1, 1, 1},    {1.32, 1, 1},    {1.64, 1, 1},    {1.96, 1, 1},
                                 {3.05, 1, 1}, {3.05, 1.32, 1}, {3.05, 1.64, 1}, {3.05, 1.96, 1}};
        auto s1 = test::state_at(ego_topo, pos, {3.3, 3.3, 3.3});
        auto s2 = test::state_at(ego_topo, pos, {6.6, 6.6, 6.6});
        const auto e1 = total_energy(s1, ego_ff);
        const auto e2 = total_energy(s2, ego_ff);
        CHECK(e1.bond == doctest::Approx(e2.bond).epsilon(1e-12));
        CHECK(e1.angle == doctest::Approx(e2.angle).epsilon(1e-12));
        CHECK(e1.nonbonded != doctest::Approx(e2.nonbonded).epsilon(1e-6));
    }
}
