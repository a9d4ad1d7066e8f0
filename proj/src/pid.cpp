#include "windrl/pid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "csv.hpp"
#include "windrl/error.hpp"

namespace windrl::pid {

void PidGains::validate() const {
    for (const LoopGains* g : {&yaw, &pitch, &rpm}) {
        require(std::isfinite(g->kp) && std::isfinite(g->ki) && std::isfinite(g->kd), ErrorCode::InvalidArgument,
                "PID gains must be finite");
    }
    require(integral_limit > 0.0 && std::isfinite(integral_limit), ErrorCode::InvalidArgument,
            "integral limit must be positive");
}

double pid_update(LoopState& s, const LoopGains& g, double error, double dt, double integral_limit) {
    require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
    s.integral = std::clamp(s.integral + error * dt, -integral_limit, integral_limit);
    const double derivative = s.primed ? (error - s.prev_error) / dt : 0.0;
    s.prev_error = error;
    s.primed = true;
    return g.kp * error + g.ki * s.integral + g.kd * derivative;
}

int quantize(double u) {
    if (u >= 0.5) return 1;
    if (u <= -0.5) return -1;
    return 0;
}

namespace {

double interp(const std::vector<double>& x, const std::vector<double>& y, double u) {
    if (u <= x.front()) return y.front();
    if (u >= x.back()) return y.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), u) - x.begin());
    const double t = (u - x[hi - 1]) / (x[hi] - x[hi - 1]);
    return y[hi - 1] + t * (y[hi] - y[hi - 1]);
}

}  // namespace

double SetpointCurves::rpm_at(double u) const { return interp(wind, rpm, u); }
double SetpointCurves::pitch_at(double u) const { return interp(wind, pitch, u); }

void SetpointCurves::validate() const {
    require(!wind.empty() && wind.size() == rpm.size() && wind.size() == pitch.size(), ErrorCode::ShapeMismatch,
            "setpoint columns must be non-empty and equally long");
    for (std::size_t i = 1; i < wind.size(); ++i) {
        require(wind[i] > wind[i - 1], ErrorCode::InvalidArgument, "setpoint wind speeds must increase");
    }
}

SetpointCurves derive_setpoints(const aero::RotorConfig& rotor, const env::ConstraintSet& c, double lo, double hi,
                                double step) {
    require(step > 0.0 && hi >= lo && lo > 0.0, ErrorCode::InvalidArgument, "bad setpoint wind range");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    SetpointCurves out;
    for (int i = 0; i < n; ++i) {
        const double u = lo + step * i;
        double best = -1.0, best_rpm = 0.0, best_pitch = 0.0;
        for (double w = std::ceil(c.rpm.lo); w <= c.rpm.hi; w += 1.0) {
            if (!c.tsr.contains(aero::tip_speed_ratio(w, rotor.radius, u))) continue;
            for (double p = std::ceil(c.pitch.lo); p <= c.pitch.hi; p += 1.0) {
                const env::TurbineState s{0.0, p, w, u, 0.0};
                const auto sol = aero::solve_rotor(s.operating_point(), rotor);
                if (env::check_constraints(s, sol, c) & env::kRevokingMask) continue;
                if (sol.cp > best) {
                    best = sol.cp;
                    best_rpm = w;
                    best_pitch = p;
                }
            }
        }
        if (best < 0.0) fail(ErrorCode::InvalidArgument, "no admissible setpoint at some wind speed");
        out.wind.push_back(u);
        out.rpm.push_back(best_rpm);
        out.pitch.push_back(best_pitch);
    }
    return out;
}

void write_setpoints_csv(const SetpointCurves& s, const std::string& path) {
    s.validate();
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open setpoint output");
    out.precision(17);
    out << "wind_mps,rpm_setpoint,pitch_setpoint_deg\n";
    for (std::size_t i = 0; i < s.wind.size(); ++i) out << s.wind[i] << ',' << s.rpm[i] << ',' << s.pitch[i] << '\n';
}

SetpointCurves read_setpoints_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    csv::expect_header(t, {"wind_mps", "rpm_setpoint", "pitch_setpoint_deg"});
    SetpointCurves s;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        if (row.size() != 3) throw ParseError(t.lines[i], "expected 3 fields");
        s.wind.push_back(csv::parse_double(row[0], t.lines[i]));
        s.rpm.push_back(csv::parse_double(row[1], t.lines[i]));
        s.pitch.push_back(csv::parse_double(row[2], t.lines[i]));
    }
    if (s.wind.empty()) fail(ErrorCode::EmptySeries, path + " has no setpoints");
    s.validate();
    return s;
}

Increments pid_act(PidState& state, const PidGains& g, const SetpointCurves& curves, const env::TurbineState& s,
                   double dt) {
    const double lim = g.integral_limit;
    Increments inc;
    inc.yaw = -quantize(pid_update(state.yaw, g.yaw, s.misalignment(), dt, lim));
    inc.pitch = -quantize(pid_update(state.pitch, g.pitch, s.pitch - curves.pitch_at(s.wind_speed), dt, lim));
    inc.rpm = -quantize(pid_update(state.rpm, g.rpm, s.rpm - curves.rpm_at(s.wind_speed), dt, lim));
    return inc;
}

double run_ccf(const PidGains& g, const SetpointCurves& curves, env::TurbineEnv& env, const wind::WindSeries& series) {
    require(series.size() >= 1, ErrorCode::EmptySeries, "empty wind series");
    const auto& w0 = series[0];
    env.set_state({w0.direction, std::round(curves.pitch_at(w0.speed)), std::round(curves.rpm_at(w0.speed)), w0.speed,
                   w0.direction});
    PidController pid(g, curves);
    double sum = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto inc = pid.act(env.state());
        sum += env.step_increments(inc.yaw, inc.pitch, inc.rpm, series.at_or_last(t + 1)).cp;
    }
    return sum / static_cast<double>(series.size()) / env.cp_nom() * 100.0;
}

TuneResult tune(env::TurbineEnv& env, const SetpointCurves& curves, Rng& rng, const TuneOptions& opt) {
    require(opt.budget >= 1, ErrorCode::InvalidArgument, "tuning budget must be >= 1");
    require(opt.gain_lo > 0.0 && opt.gain_hi >= opt.gain_lo, ErrorCode::InvalidArgument, "bad gain bounds");
    const auto series = wind::narrow(rng, opt.steps);
    const double llo = std::log(opt.gain_lo), lhi = std::log(opt.gain_hi);
    auto draw = [&] { return std::exp(rng.uniform(llo, lhi)); };
    TuneResult best{PidGains{}, -1.0, {}};
    for (int k = 0; k < opt.budget; ++k) {
        PidGains g;
        if (k > 0) {
            for (LoopGains* l : {&g.yaw, &g.pitch, &g.rpm}) {
                l->kp = draw();
                l->ki = draw();
                l->kd = draw();
            }
        }
        const double ccf = run_ccf(g, curves, env, series);
        best.candidate_ccf.push_back(ccf);
        if (ccf > best.ccf) {
            best.ccf = ccf;
            best.gains = g;
        }
    }
    return best;
}

namespace {

nlohmann::json loop_json(const LoopGains& l) { return {{"kp", l.kp}, {"ki", l.ki}, {"kd", l.kd}}; }

LoopGains loop_from(const nlohmann::json& j) { return {j.at("kp").get<double>(), j.at("ki").get<double>(), j.at("kd").get<double>()}; }

}  // namespace

PidGains load_gains(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open gains file");
    PidGains g;
    try {
        const auto j = nlohmann::json::parse(in);
        g.yaw = loop_from(j.at("yaw"));
        g.pitch = loop_from(j.at("pitch"));
        g.rpm = loop_from(j.at("rpm"));
        g.integral_limit = j.value("integral_limit", g.integral_limit);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("gains: ") + e.what());
    }
    g.validate();
    return g;
}

void save_gains(const PidGains& g, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open gains output");
    const nlohmann::json j{{"yaw", loop_json(g.yaw)},
                           {"pitch", loop_json(g.pitch)},
                           {"rpm", loop_json(g.rpm)},
                           {"integral_limit", g.integral_limit}};
    out << j.dump(2) << '\n';
}

}  // namespace windrl::pid
