#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "windrl/error.hpp"
#include "windrl/pid.hpp"

using namespace windrl;
using namespace windrl::pid;

namespace {

const aero::RotorConfig& rotor() {
    static const aero::RotorConfig r = aero::reference_rotor();
    return r;
}

const SetpointCurves& curves() {
    static const SetpointCurves c = derive_setpoints(rotor());
    return c;
}

env::EnvConfig env_config() {
    env::EnvConfig c;
    c.reward.cp_nom = aero::cp_nominal(rotor());
    c.max_steps = 1 << 30;
    c.terminate_on_win = false;
    return c;
}

}  // namespace

TEST_CASE("single loop update") {
    LoopState s;
    CHECK(pid_update(s, {2.0, 0.0, 0.0}, 1.35, 1.0, 10.0) == doctest::Approx(2.7));
    // First sample has no derivative term; the second sees (e1 - e0) / dt.
    LoopState d;
    CHECK(pid_update(d, {0.0, 0.0, 1.0}, 4.0, 2.0, 10.0) == 0.0);
    CHECK(pid_update(d, {0.0, 0.0, 1.0}, 1.0, 2.0, 10.0) == doctest::Approx(-1.5));
    CHECK_THROWS_AS(pid_update(d, {}, 1.0, 0.0, 10.0), Error);
}

TEST_CASE("integral saturates at the limit") {
    const double e = 0.7, dt = 0.5, lim = 3.0;
    LoopState s;
    for (int k = 1; k <= 30; ++k) {
        const double u = pid_update(s, {0.0, 1.0, 0.0}, e, dt, lim);
        CHECK(u == doctest::Approx(std::min(k * e * dt, lim)).epsilon(1e-12));
    }
    // Unwinding starts immediately once the sign flips.
    CHECK(pid_update(s, {0.0, 1.0, 0.0}, -e, dt, lim) == doctest::Approx(lim - e * dt));
}

TEST_CASE("quantisation thresholds") {
    CHECK(quantize(0.5) == 1);
    CHECK(quantize(0.4999) == 0);
    CHECK(quantize(-0.5) == -1);
    CHECK(quantize(-0.4999) == 0);
    CHECK(quantize(0.0) == 0);
    CHECK(quantize(42.0) == 1);
    for (double u = -3; u <= 3; u += 0.01) {
        REQUIRE(quantize(-u) == -quantize(u));
        REQUIRE(std::abs(quantize(u)) <= 1);
    }
}

TEST_CASE("increments oppose the error") {
    SetpointCurves flat{{4.0, 13.0}, {12.0, 12.0}, {0.0, 0.0}};
    PidState st;
    const PidGains unit;
    // Yaw 4 deg clockwise of the wind: turn back.
    env::TurbineState s{4.0, 0.0, 12.0, 8.0, 0.0};
    CHECK(pid_act(st, unit, flat, s) == Increments{-1, 0, 0});
    st = {};
    s = {0.0, -3.0, 14.0, 8.0, 0.0};
    CHECK(pid_act(st, unit, flat, s) == Increments{0, 1, -1});
    // Wrapped misalignment: yaw 178, wind -178 is -4 deg.
    st = {};
    s = {178.0, 0.0, 12.0, 8.0, -178.0};
    CHECK(pid_act(st, unit, flat, s).yaw == 1);
}

TEST_CASE("zero gains never move") {
    PidGains zero;
    for (LoopGains* l : {&zero.yaw, &zero.pitch, &zero.rpm}) *l = {0.0, 0.0, 0.0};
    env::TurbineEnv env(rotor(), env_config());
    const wind::WindSample w{9.0, 12.0};
    env.set_state({0.0, 0.0, 14.0, 9.0, 12.0});
    PidController pid(zero, curves());
    for (int t = 0; t < 50; ++t) {
        const auto inc = pid.act(env.state());
        CHECK(inc == Increments{});
        env.step_increments(inc.yaw, inc.pitch, inc.rpm, w);
    }
    CHECK(env.state().same_dofs({0.0, 0.0, 14.0, 9.0, 12.0}));
}

TEST_CASE("setpoint curves") {
    const auto& c = curves();
    const env::ConstraintSet box;
    REQUIRE(c.wind.size() == 19);
    CHECK(c.wind.front() == 4.0);
    CHECK(c.wind.back() == 13.0);
    for (std::size_t i = 0; i < c.wind.size(); ++i) {
        const double u = c.wind[i];
        CHECK(box.tsr.contains(aero::tip_speed_ratio(c.rpm[i], rotor().radius, u)));
        if (i > 0) CHECK(c.rpm[i] >= c.rpm[i - 1]);
        const env::TurbineState at{0.0, c.pitch[i], c.rpm[i], u, 0.0};
        const double cp = aero::solve_rotor(at.operating_point(), rotor()).cp;
        // No admissible lattice neighbour beats the setpoint.
        for (const auto& [dp, dr] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const env::TurbineState n{0.0, c.pitch[i] + dp, c.rpm[i] + dr, u, 0.0};
            const auto sol = aero::solve_rotor(n.operating_point(), rotor());
            if (env::check_constraints(n, sol, box) & env::kRevokingMask) continue;
            CHECK(sol.cp <= cp);
        }
    }
    // Interpolation and flat extrapolation.
    CHECK(c.rpm_at(2.0) == c.rpm.front());
    CHECK(c.rpm_at(20.0) == c.rpm.back());
    CHECK(c.pitch_at(4.25) == doctest::Approx(0.5 * (c.pitch[0] + c.pitch[1])));
}

TEST_CASE("setpoint files round trip") {
    const std::string path = "/tmp/windrl_test_setpoints.csv";
    write_setpoints_csv(curves(), path);
    const auto back = read_setpoints_csv(path);
    CHECK(back.wind == curves().wind);
    CHECK(back.rpm == curves().rpm);
    CHECK(back.pitch == curves().pitch);
    std::remove(path.c_str());
    SetpointCurves bad{{5.0, 4.0}, {10, 11}, {0, 0}};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("tuning keeps the default as a floor") {
    env::TurbineEnv env(rotor(), env_config());
    TuneOptions opt;
    opt.steps = 200;
    opt.budget = 1;
    Rng a(3);
    const auto one = tune(env, curves(), a, opt);
    CHECK(one.gains.yaw.kp == 1.0);
    CHECK(one.gains.rpm.kd == 1.0);
    REQUIRE(one.candidate_ccf.size() == 1);

    opt.budget = 6;
    Rng b(3), c(3);
    const auto r1 = tune(env, curves(), b, opt);
    const auto r2 = tune(env, curves(), c, opt);
    CHECK(r1.candidate_ccf[0] == one.ccf);
    CHECK(r1.ccf >= one.ccf);
    CHECK(r1.candidate_ccf == r2.candidate_ccf);
    CHECK(r1.gains.pitch.ki == r2.gains.pitch.ki);
    opt.budget = 0;
    CHECK_THROWS_AS(tune(env, curves(), b, opt), Error);
}

TEST_CASE("gain files round trip") {
    PidGains g;
    g.yaw = {0.3, 1e-3, 7.25};
    g.pitch = {2.0, 0.1, 0.0};
    g.integral_limit = 4.5;
    const std::string path = "/tmp/windrl_test_gains.json";
    save_gains(g, path);
    const auto back = load_gains(path);
    CHECK(back.yaw.kp == g.yaw.kp);
    CHECK(back.yaw.ki == g.yaw.ki);
    CHECK(back.yaw.kd == g.yaw.kd);
    CHECK(back.pitch.kd == 0.0);
    CHECK(back.rpm.kp == 1.0);
    CHECK(back.integral_limit == 4.5);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_gains("/nonexistent/gains.json"), Error);
}
