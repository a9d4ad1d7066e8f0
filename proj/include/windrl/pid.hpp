#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "windrl/aero.hpp"
#include "windrl/env.hpp"
#include "windrl/rng.hpp"
#include "windrl/wind.hpp"

namespace windrl::pid {

struct LoopGains {
    double kp = 1.0;
    double ki = 1.0;
    double kd = 1.0;
};

struct PidGains {
    LoopGains yaw, pitch, rpm;
    double integral_limit = 10.0;  // |integral term input| bound, control units

    void validate() const;
};

struct LoopState {
    double integral = 0.0;
    double prev_error = 0.0;
    bool primed = false;  // no derivative kick on the first sample
};

struct PidState {
    LoopState yaw, pitch, rpm;
};

// u = kp e + ki I + kd de/dt, with I = clamp(I + e dt, +/-limit).
double pid_update(LoopState& s, const LoopGains& g, double error, double dt, double integral_limit);

// +1 for u >= 0.5, -1 for u <= -0.5, else 0.
int quantize(double u);

// Piecewise-linear in wind speed, held flat outside the table.
struct SetpointCurves {
    std::vector<double> wind;   // strictly increasing, m/s
    std::vector<double> rpm;
    std::vector<double> pitch;  // deg

    double rpm_at(double u) const;
    double pitch_at(double u) const;
    void validate() const;
};

// Integer (rpm, pitch) lattice search at zero misalignment for each wind in
// lo:step:hi, keeping only admissible nodes.
SetpointCurves derive_setpoints(const aero::RotorConfig& rotor, const env::ConstraintSet& c = {}, double lo = 4.0,
                                double hi = 13.0, double step = 0.5);

void write_setpoints_csv(const SetpointCurves& s, const std::string& path);
SetpointCurves read_setpoints_csv(const std::string& path);

struct Increments {
    int yaw = 0, pitch = 0, rpm = 0;
    bool operator==(const Increments&) const = default;
};

// Errors are measurement minus setpoint, so the increment is -quantize(u).
Increments pid_act(PidState& state, const PidGains& g, const SetpointCurves& curves, const env::TurbineState& s,
                   double dt = 1.0);

class PidController {
public:
    PidController(PidGains g, SetpointCurves curves) : gains_(g), curves_(std::move(curves)) {}
    Increments act(const env::TurbineState& s) { return pid_act(state_, gains_, curves_, s); }
    void reset() { state_ = {}; }
    const PidGains& gains() const { return gains_; }
    const SetpointCurves& curves() const { return curves_; }

private:
    PidGains gains_;
    SetpointCurves curves_;
    PidState state_;
};

// Mean Cp ratio (x100) of a PID run over `series`, starting aligned at the
// setpoint of the first wind sample.
double run_ccf(const PidGains& g, const SetpointCurves& curves, env::TurbineEnv& env, const wind::WindSeries& series);

struct TuneOptions {
    int budget = 200;
    double gain_lo = 1e-3;  // log-uniform bounds for every gain
    double gain_hi = 10.0;
    std::size_t steps = 1200;  // narrow scenario length per candidate
};

struct TuneResult {
    PidGains gains;
    double ccf;
    std::vector<double> candidate_ccf;  // candidate 0 is the unit-gain default
};

TuneResult tune(env::TurbineEnv& env, const SetpointCurves& curves, Rng& rng, const TuneOptions& opt = {});

PidGains load_gains(const std::string& path);
void save_gains(const PidGains& g, const std::string& path);

}  // namespace windrl::pid
