#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "oracles.hpp"
#include "windrl/aero.hpp"
#include "windrl/error.hpp"
#include "windrl/rng.hpp"

using namespace windrl;
using namespace windrl::aero;

namespace {

const RotorConfig& rotor() {
    static const RotorConfig r = reference_rotor();
    return r;
}

AirfoilPolar small_polar() {
    AirfoilPolar p;
    p.alpha_deg = {-10, -5, 0, 5, 10, 15};
    p.cl = {-0.8, -0.3, 0.2, 0.7, 1.1, 1.3};
    p.cd = {0.02, 0.012, 0.01, 0.011, 0.016, 0.03};
    return p;
}

OperatingPoint random_point(Rng& rng) {
    return {rng.uniform(4, 13), rng.uniform(-30, 30), rng.uniform(-20, 20), rng.uniform(6, 25)};
}

std::string temp_path(const char* name) { return std::string("/tmp/windrl_test_") + name; }

}  // namespace

TEST_CASE("polar lookup is exact at nodes and linear between them") {
    const auto p = small_polar();
    for (std::size_t i = 0; i < p.alpha_deg.size(); ++i) {
        const auto s = polar_lookup(p, p.alpha_deg[i]);
        CHECK(s.cl == p.cl[i]);
        CHECK(s.cd == p.cd[i]);
    }
    for (std::size_t i = 0; i + 1 < p.alpha_deg.size(); ++i) {
        const double mid = 0.5 * (p.alpha_deg[i] + p.alpha_deg[i + 1]);
        const auto s = polar_lookup(p, mid);
        CHECK(s.cl == doctest::Approx(0.5 * (p.cl[i] + p.cl[i + 1])).epsilon(1e-15));
        CHECK(s.cd == doctest::Approx(0.5 * (p.cd[i] + p.cd[i + 1])).epsilon(1e-15));
        const double x = p.alpha_deg[i] + 0.3 * (p.alpha_deg[i + 1] - p.alpha_deg[i]);
        const double want = oracle::lerp(p.alpha_deg[i], p.cl[i], p.alpha_deg[i + 1], p.cl[i + 1], x);
        CHECK(polar_lookup(p, x).cl == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("polar lookup outside the table throws OutOfPolarRange") {
    const auto p = small_polar();
    try {
        polar_lookup(p, 20.0);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfPolarRange);
    }
    CHECK_THROWS_AS(polar_lookup(p, -10.5), Error);
    CHECK_THROWS_AS(polar_lookup(p, std::nan("")), Error);
}

TEST_CASE("polar validation rejects malformed tables") {
    auto p = small_polar();
    p.alpha_deg[2] = p.alpha_deg[1];
    CHECK_THROWS_AS(p.validate(), Error);
    p = small_polar();
    p.cd[0] = -0.1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = small_polar();
    p.alpha_deg.back() = 14.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = small_polar();
    p.cl.pop_back();
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK_NOTHROW(parametric_polar().validate());
}

TEST_CASE("parametric polar follows thin-airfoil lift and the quadratic drag law below stall") {
    const auto p = parametric_polar();
    for (double a : {-10.0, -4.5, 0.0, 3.0, 11.5}) {
        const auto s = polar_lookup(p, a);
        CHECK(s.cl == doctest::Approx(2 * M_PI * a * M_PI / 180).epsilon(1e-12));
        CHECK(s.cd == doctest::Approx(0.01 + 0.02 * (a / 15) * (a / 15)).epsilon(1e-12));
    }
}

TEST_CASE("polar CSV round trip") {
    const auto p = small_polar();
    const auto path = temp_path("polar.csv");
    write_polar_csv(p, path);
    const auto q = load_polar_csv(path);
    CHECK(q.alpha_deg == p.alpha_deg);
    CHECK(q.cl == p.cl);
    CHECK(q.cd == p.cd);
    std::remove(path.c_str());
}

TEST_CASE("tip loss") {
    const double R = 46.5;
    CHECK(prandtl_tip_loss(R, R, 3, 0.2) == 0.0);
    CHECK(prandtl_tip_loss(0.01, R, 3, 0.2) == doctest::Approx(1.0).epsilon(1e-12));
    const double F = prandtl_tip_loss(0.8 * R, R, 3, 0.1);
    CHECK(F == doctest::Approx(oracle::tip_loss(0.8 * R, R, 3, 0.1)).epsilon(1e-14));
    CHECK(F > 0.0);
    CHECK(F < 1.0);
    try {
        prandtl_tip_loss(10.0, R, 3, 0.0);
        FAIL("expected DegenerateInflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateInflow);
    }
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double r = rng.uniform(0.05, 1.0) * R;
        const double phi = rng.uniform(-1.5, 1.5);
        if (std::fabs(std::sin(phi)) < 1e-6) continue;
        const double f = prandtl_tip_loss(r, R, 3, phi);
        REQUIRE(f >= 0.0);
        REQUIRE(f <= 1.0);
        REQUIRE(f == doctest::Approx(oracle::tip_loss(r, R, 3, phi)).epsilon(1e-12));
    }
}

TEST_CASE("tip speed ratio") {
    CHECK(tip_speed_ratio(25, 46.5, 4) == doctest::Approx(oracle::tsr(25, 46.5, 4)).epsilon(1e-15));
    CHECK(tip_speed_ratio(25, 46.5, 4) == doctest::Approx(30.43).epsilon(1e-3));
    CHECK(rpm_for_tsr(tip_speed_ratio(11.3, 46.5, 7.7), 46.5, 7.7) == doctest::Approx(11.3).epsilon(1e-14));
}

TEST_CASE("zero-lift polar gives no induction and no power") {
    RotorConfig cfg = rotor();
    AirfoilPolar p;
    p.alpha_deg = {-180, 180};
    p.cl = {0, 0};
    p.cd = {0, 0};
    cfg.polars = {p};
    const OperatingPoint op{8.0, 0.0, 0.0, 12.0};
    for (const auto& s : cfg.sections) {
        const auto a = solve_annulus(s, op, cfg);
        CHECK(a.a == 0.0);
        CHECK(a.a_prime == 0.0);
        CHECK(a.dcp_dr == 0.0);
    }
    CHECK(solve_rotor(op, cfg).cp == 0.0);
}

TEST_CASE("mid-span induction lies where the residual crosses zero") {
    const auto& cfg = rotor();
    const auto& s = cfg.sections[cfg.sections.size() / 2];
    const OperatingPoint op{8.0, 0.0, 0.0, rpm_for_tsr(8.0, cfg.radius, 8.0)};
    const auto sol = solve_annulus(s, op, cfg);
    REQUIRE(sol.converged);
    CHECK(sol.a > 0.0);
    CHECK(sol.a < 0.5);

    // Brute-force scan of the axial residual with a' held at the solution.
    double best_a = -1, best_res = 1e9;
    for (int i = 0; i <= 50000; ++i) {
        const double a = 0.5 * i / 50000.0;
        const double res = std::fabs(induction_update(s, op, cfg, a, sol.a_prime).a - a);
        if (res < best_res) best_res = res, best_a = a;
    }
    CHECK(best_a == doctest::Approx(sol.a).epsilon(1e-4));

    const auto upd = induction_update(s, op, cfg, sol.a, sol.a_prime);
    CHECK(std::fabs(upd.a - sol.a) < 1e-8);
    CHECK(std::fabs(upd.a_prime - sol.a_prime) < 1e-8);
    CHECK(sol.residual < 1e-8);
}

TEST_CASE("Newton-accelerated and pure damped solvers agree") {
    const auto& cfg = rotor();
    SolverSettings damped;
    damped.newton_steps = 0;
    damped.max_iterations = 5000;
    Rng rng(11);
    int compared = 0;
    for (int i = 0; i < 60; ++i) {
        const auto op = random_point(rng);
        const auto fast = solve_rotor(op, cfg);
        const auto slow = solve_rotor(op, cfg, damped);
        if (!fast.converged || !slow.converged) continue;
        ++compared;
        CHECK(fast.cp == doctest::Approx(slow.cp).epsilon(1e-6));
        CHECK(fast.ct == doctest::Approx(slow.ct).epsilon(1e-6));
    }
    CHECK(compared > 50);
}

TEST_CASE("rotor solutions respect the physical bounds on random points") {
    const auto& cfg = rotor();
    Rng rng(5);
    for (int i = 0; i < 400; ++i) {
        const auto op = random_point(rng);
        const auto sol = solve_rotor(op, cfg);
        REQUIRE(sol.converged);
        CHECK(sol.cp >= 0.0);
        CHECK(sol.cp <= kBetzLimit + 1e-6);
        if (sol.cp_raw >= 0.0) CHECK(sol.ct >= 0.0);
        CHECK(std::fabs(sol.tsr - oracle::tsr(op.rpm, cfg.radius, op.wind_speed)) < 1e-12);
        const auto mirror = solve_rotor({op.wind_speed, -op.yaw_deg, op.pitch_deg, op.rpm}, cfg);
        CHECK(std::fabs(sol.cp - mirror.cp) < 1e-9);
        const double p_avail = 0.5 * cfg.air_density * M_PI * cfg.radius * cfg.radius * std::pow(op.wind_speed, 3);
        CHECK(sol.power == doctest::Approx(sol.cp * p_avail).epsilon(1e-12));
        CHECK(sol.aoa_span.size() == cfg.sections.size());
    }
}

TEST_CASE("reference rotor operating band") {
    const auto& cfg = rotor();
    const auto sol = solve_rotor({8.0, 0.0, 0.0, rpm_for_tsr(8.0, cfg.radius, 8.0)}, cfg);
    CHECK(sol.cp > 0.3);
    CHECK(sol.cp < kBetzLimit);
    const auto n = cp_nominal_point(cfg);
    const double rpm = rpm_for_tsr(n.tsr, cfg.radius, 8.0);
    const auto aligned = solve_rotor({8.0, 0.0, n.pitch_deg, rpm}, cfg);
    const auto yawed = solve_rotor({8.0, 30.0, n.pitch_deg, rpm}, cfg);
    CHECK(yawed.cp < aligned.cp);
}

TEST_CASE("Cp nominal bounds every coarser grid and matches the frozen value") {
    const auto& cfg = rotor();
    const double cp_nom = cp_nominal(cfg);
    CHECK(cp_nom <= kBetzLimit);

    // The grid-search oracle at 0.1 TSR x 0.5 deg.
    double grid_max = 0;
    for (int i = 0; i <= 90; ++i) {
        const double tsr = 3.0 + 0.1 * i;
        for (int j = 0; j <= 80; ++j) {
            const double pitch = -20.0 + 0.5 * j;
            const auto s = solve_rotor({8.0, 0.0, pitch, rpm_for_tsr(tsr, cfg.radius, 8.0)}, cfg);
            if (s.converged) grid_max = std::max(grid_max, s.cp);
        }
    }
    CHECK(cp_nom >= grid_max);
    CHECK(cp_nom - grid_max < 1e-3);

    std::ifstream golden(WINDRL_TEST_DATA "/golden/cp_nominal.txt");
    REQUIRE(golden);
    double frozen = 0;
    golden >> frozen;
    CHECK(cp_nom == doctest::Approx(frozen).epsilon(1e-9));
}

TEST_CASE("Cp surface grids") {
    const auto& cfg = rotor();
    SurfaceSpec one;
    one.row_axis = SurfaceAxis::Yaw;
    one.col_axis = SurfaceAxis::Pitch;
    one.row_values = {5.0};
    one.col_values = {-2.0};
    const auto s = cp_surface(cfg, one);
    REQUIRE(s.cp.size() == 1);
    const auto direct = solve_rotor({8.0, 5.0, -2.0, rpm_for_tsr(8.0, cfg.radius, 8.0)}, cfg);
    CHECK(s.at(0, 0) == direct.cp);

    SurfaceSpec sweep;
    sweep.row_values = linspace(-30, 30, 13);
    sweep.col_values = linspace(-20, 20, 21);
    const auto grid = cp_surface(cfg, sweep);
    // Unimodal along pitch at zero yaw.
    const std::size_t mid = 6;
    int turns = 0;
    for (std::size_t j = 1; j + 1 < sweep.col_values.size(); ++j) {
        const bool peak = grid.at(mid, j) > grid.at(mid, j - 1) && grid.at(mid, j) > grid.at(mid, j + 1);
        const bool valley = grid.at(mid, j) < grid.at(mid, j - 1) && grid.at(mid, j) < grid.at(mid, j + 1);
        turns += peak ? 1 : 0;
        CHECK_FALSE(valley);
    }
    CHECK(turns == 1);
    for (std::size_t j = 0; j < sweep.col_values.size(); ++j) {
        for (std::size_t i = 0; i < sweep.row_values.size(); ++i) CHECK(grid.at(i, j) <= grid.at(mid, j));
    }

    const auto path = temp_path("surface.csv");
    write_surface_csv(grid, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("yaw\\pitch,", 0) == 0);
    std::remove(path.c_str());

    SurfaceSpec same = sweep;
    same.col_axis = SurfaceAxis::Yaw;
    CHECK_THROWS_AS(cp_surface(cfg, same), Error);
}

TEST_CASE("rotor config JSON round trip keeps the hash") {
    const auto& cfg = rotor();
    const auto path = temp_path("rotor.json");
    save_rotor_config(cfg, path);
    const auto back = load_rotor_config(path);
    CHECK(back.hash() == cfg.hash());
    CHECK(back.sections.size() == cfg.sections.size());
    RotorConfig other = cfg;
    other.radius += 1e-9;
    CHECK(other.hash() != cfg.hash());
    std::remove(path.c_str());
}
