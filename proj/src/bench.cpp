#include "windrl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "csv.hpp"
#include "windrl/error.hpp"

namespace windrl::bench {

double ccf(const std::vector<double>& cp, double cp_nom) {
    require(!cp.empty(), ErrorCode::EmptyLog, "CCF of an empty log");
    require(cp_nom > 0.0, ErrorCode::InvalidArgument, "cp_nom must be positive");
    double sum = 0.0;
    for (double c : cp) sum += c;
    return sum / static_cast<double>(cp.size()) / cp_nom * 100.0;
}

double power_w(double cp, double wind_speed, const aero::RotorConfig& rotor) {
    const double p = cp * 0.5 * rotor.air_density * rotor.swept_area() * wind_speed * wind_speed * wind_speed;
    return std::min(rotor.rated_power, p);
}

EnergyResult cf_and_energy(const std::vector<double>& power, double rated_power_w, double dt_s) {
    require(!power.empty(), ErrorCode::EmptyLog, "energy of an empty log");
    require(rated_power_w > 0.0 && dt_s > 0.0, ErrorCode::InvalidArgument, "rated power and dt must be positive");
    double joules = 0.0;
    for (double p : power) joules += p * dt_s;
    const double span = dt_s * static_cast<double>(power.size());
    return {joules / (rated_power_w * span) * 100.0, joules / 3600.0};
}

double yearly_production(double energy_wh, double span_s) {
    require(span_s > 0.0, ErrorCode::InvalidArgument, "span must be positive");
    return energy_wh * (kHoursPerYear * 3600.0) / span_s;
}

namespace {

class DdqnController final : public Controller {
public:
    DdqnController(ddqn::Agent a, std::string label) : agent_(std::move(a)), label_(std::move(label)) {}
    std::string label() const override { return label_; }
    env::StepOutcome step(env::TurbineEnv& env, const wind::WindSample& next, std::string& action) override {
        const auto a = env::action_from_index(agent_.act_greedy(ddqn::snapshot(env.state())));
        action = env::action_name(a);
        return env.step(a, next);
    }

private:
    ddqn::Agent agent_;
    std::string label_;
};

class ViController final : public Controller {
public:
    ViController(vi::ViAgent a, std::string label) : agent_(std::move(a)), label_(std::move(label)) {}
    std::string label() const override { return label_; }
    env::StepOutcome step(env::TurbineEnv& env, const wind::WindSample& next, std::string& action) override {
        const auto a = env::action_from_index(agent_.act(env.state()));
        action = env::action_name(a);
        return env.step(a, next);
    }

private:
    vi::ViAgent agent_;
    std::string label_;
};

class PidAdapter final : public Controller {
public:
    PidAdapter(pid::PidGains g, pid::SetpointCurves c, std::string label)
        : pid_(g, std::move(c)), label_(std::move(label)) {}
    std::string label() const override { return label_; }
    void reset() override { pid_.reset(); }
    env::RevocationRule validation_rule() const override { return env::RevocationRule::Literal; }
    env::StepOutcome step(env::TurbineEnv& env, const wind::WindSample& next, std::string& action) override {
        const auto inc = pid_.act(env.state());
        char buf[32];
        std::snprintf(buf, sizeof buf, "y%+dp%+dr%+d", inc.yaw, inc.pitch, inc.rpm);
        action = buf;
        return env.step_increments(inc.yaw, inc.pitch, inc.rpm, next);
    }

private:
    pid::PidController pid_;
    std::string label_;
};

class Uncontrolled final : public Controller {
public:
    explicit Uncontrolled(std::string label) : label_(std::move(label)) {}
    std::string label() const override { return label_; }
    env::StepOutcome step(env::TurbineEnv& env, const wind::WindSample& next, std::string& action) override {
        action = env::action_name(env::Action::Hold);
        return env.step(env::Action::Hold, next);
    }

private:
    std::string label_;
};

}  // namespace

std::unique_ptr<Controller> ddqn_controller(ddqn::Agent agent, std::string label) {
    return std::make_unique<DdqnController>(std::move(agent), std::move(label));
}
std::unique_ptr<Controller> vi_controller(vi::ViAgent agent, std::string label) {
    return std::make_unique<ViController>(std::move(agent), std::move(label));
}
std::unique_ptr<Controller> pid_controller(pid::PidGains gains, pid::SetpointCurves curves, std::string label) {
    return std::make_unique<PidAdapter>(gains, std::move(curves), std::move(label));
}
std::unique_ptr<Controller> uncontrolled_controller(std::string label) {
    return std::make_unique<Uncontrolled>(std::move(label));
}

FixedPoint reference_fixed_point(const aero::RotorConfig& rotor, const env::ConstraintSet& c, double reference_wind) {
    const auto sp = pid::derive_setpoints(rotor, c, reference_wind, reference_wind, 1.0);
    return {sp.pitch.front(), sp.rpm.front()};
}

RunMetrics metrics_from_log(const std::vector<env::StepRecord>& log, const aero::RotorConfig& rotor,
                            const env::EnvConfig& cfg) {
    require(!log.empty(), ErrorCode::EmptyLog, "metrics of an empty log");
    std::vector<double> cp, power;
    cp.reserve(log.size());
    power.reserve(log.size());
    double mis = 0.0;
    std::size_t tsr_bad = 0, sub = 0, revoked = 0;
    for (const auto& r : log) {
        cp.push_back(r.cp);
        power.push_back(power_w(r.cp, r.state.wind_speed, rotor));
        mis += std::abs(r.state.misalignment());
        tsr_bad += !cfg.constraints.tsr.contains(r.tsr);
        sub += r.state.wind_speed < cfg.constraints.wind_speed.lo;
        revoked += r.revoked;
    }
    const double n = static_cast<double>(log.size());
    RunMetrics m;
    m.ccf = ccf(cp, cfg.reward.cp_nom);
    const auto e = cf_and_energy(power, rotor.rated_power, cfg.dt);
    m.cf = e.cf;
    m.energy_wh = e.energy_wh;
    m.yearly_wh = yearly_production(e.energy_wh, cfg.dt * n);
    m.mean_abs_misalignment = mis / n;
    m.tsr_violation_rate = 100.0 * static_cast<double>(tsr_bad) / n;
    m.sub_cutin_rate = 100.0 * static_cast<double>(sub) / n;
    m.revoked_rate = 100.0 * static_cast<double>(revoked) / n;
    return m;
}

RunResult run_validation(Controller& c, const aero::RotorConfig& rotor, const wind::WindSeries& series,
                         const RunConfig& cfg) {
    require(series.size() >= 1, ErrorCode::EmptySeries, "validation needs a non-empty wind series");
    env::EnvConfig ec = cfg.env;
    ec.terminate_on_win = false;
    ec.rule = cfg.rule ? *cfg.rule : c.validation_rule();
    ec.max_steps = static_cast<int>(std::max<std::size_t>(series.size(), 1));
    env::TurbineEnv env(rotor, ec);
    const FixedPoint fp = cfg.start ? *cfg.start : reference_fixed_point(rotor, ec.constraints);
    const auto& w0 = series[0];
    env.set_state({std::round(w0.direction), fp.pitch, fp.rpm, w0.speed, w0.direction});
    c.reset();

    RunResult result;
    result.log.reserve(series.size());
    std::string action;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto out = c.step(env, series.at_or_last(t + 1), action);
        env::TurbineState committed = out.next_state;
        committed.wind_speed = series[t].speed;
        committed.wind_dir = series[t].direction;
        result.log.push_back({t, committed, out.tsr, out.cp, action, out.reward, out.revoked, out.won});
    }
    result.metrics = metrics_from_log(result.log, rotor, env.config());
    return result;
}

void write_episode_csv(const std::vector<env::StepRecord>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot open episode output " + path);
    out.precision(17);
    env::write_log_header(out);
    for (const auto& r : log) env::write_log_row(out, r);
    require(static_cast<bool>(out), ErrorCode::Io, "episode write failed");
}

std::vector<env::StepRecord> read_episode_csv(const std::string& path) {
    const auto t = csv::read_file(path);
    csv::expect_header(t, {"step", "wind_speed", "wind_dir", "yaw", "pitch", "rpm", "tsr", "cp", "action", "reward",
                           "revoked", "won"});
    std::vector<env::StepRecord> log;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.lines[i];
        if (f.size() != 12) throw ParseError(line, "expected 12 fields");
        auto num = [&](int k) { return csv::parse_double(f[k], line); };
        env::StepRecord r;
        r.step = static_cast<std::size_t>(num(0));
        r.state = {num(3), num(4), num(5), num(1), num(2)};
        r.tsr = num(6);
        r.cp = num(7);
        r.action = f[8];
        r.reward = num(9);
        r.revoked = num(10) != 0.0;
        r.won = num(11) != 0.0;
        log.push_back(std::move(r));
    }
    if (log.empty()) fail(ErrorCode::EmptyLog, path + " has no rows");
    return log;
}

CompareConfig load_compare_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open compare config " + path);
    CompareConfig cfg;
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (base / p).string();
    };
    try {
        const auto j = nlohmann::json::parse(in);
        cfg.turbine = resolve(j.value("turbine", std::string()));
        cfg.seed = j.value("seed", cfg.seed);
        cfg.dt = j.value("dt", cfg.dt);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        for (const auto& a : j.at("agents")) {
            cfg.agents.push_back({a.at("id").get<std::string>(), a.at("type").get<std::string>(),
                                  resolve(a.value("path", std::string())), resolve(a.value("setpoints", std::string()))});
        }
        for (const auto& s : j.at("scenarios")) {
            cfg.scenarios.push_back({s.at("id").get<std::string>(), s.value("n_steps", std::size_t{0}),
                                     resolve(s.value("csv", std::string()))});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("compare config: ") + e.what());
    }
    require(!cfg.agents.empty() && !cfg.scenarios.empty(), ErrorCode::InvalidArgument,
            "compare config needs agents and scenarios");
    require(cfg.dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
    return cfg;
}

const Cell* Comparison::find(const std::string& agent, const std::string& scenario) const {
    for (const auto& c : cells) {
        if (c.agent == agent && c.scenario == scenario) return &c;
    }
    return nullptr;
}

std::unique_ptr<Controller> make_controller(const AgentSpec& spec, const aero::RotorConfig& rotor) {
    if (spec.type == "ddqn") return ddqn_controller(ddqn::Agent(nn::load_params(spec.path)), spec.id);
    if (spec.type == "vi") return vi_controller(vi::ViAgent::load(spec.path, rotor), spec.id);
    if (spec.type == "pid") {
        auto curves = spec.setpoints.empty() ? pid::derive_setpoints(rotor) : pid::read_setpoints_csv(spec.setpoints);
        return pid_controller(pid::load_gains(spec.path), std::move(curves), spec.id);
    }
    if (spec.type == "uncontrolled") return uncontrolled_controller(spec.id);
    fail(ErrorCode::InvalidArgument, "unknown agent type '" + spec.type + "'");
}

Comparison compare_agents(const CompareConfig& cfg) {
    const auto rotor = cfg.turbine.empty() ? aero::reference_rotor() : aero::load_rotor_config(cfg.turbine);
    std::filesystem::create_directories(cfg.out_dir);
    RunConfig rc;
    rc.env.dt = cfg.dt;
    rc.env.reward.cp_nom = aero::cp_nominal(rotor);
    rc.start = reference_fixed_point(rotor, rc.env.constraints);

    std::vector<wind::WindSeries> series;
    for (const auto& s : cfg.scenarios) {
        series.push_back(s.csv.empty() ? wind::make_scenario(s.id, cfg.seed, s.n_steps) : wind::read_series_csv(s.csv));
    }
    Comparison out;
    for (const auto& a : cfg.agents) {
        std::unique_ptr<Controller> ctl;
        std::string load_error;
        try {
            ctl = make_controller(a, rotor);
        } catch (const std::exception& e) {
            load_error = e.what();
        }
        for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
            Cell cell{a.id, cfg.scenarios[k].id, {}, load_error};
            if (ctl) {
                try {
                    const auto run = run_validation(*ctl, rotor, series[k], rc);
                    cell.metrics = run.metrics;
                    write_episode_csv(run.log, (std::filesystem::path(cfg.out_dir) /
                                                (a.id + "_" + cfg.scenarios[k].id + ".csv")).string());
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
            out.cells.push_back(std::move(cell));
        }
    }
    write_compare_csv(out, (std::filesystem::path(cfg.out_dir) / "compare.csv").string());
    write_compare_svg(out, (std::filesystem::path(cfg.out_dir) / "compare.svg").string());
    return out;
}

void write_compare_csv(const Comparison& c, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open comparison output");
    out.precision(17);
    out << "agent,scenario,ccf,cf,energy_wh,yearly_wh,mean_abs_misalignment,tsr_violation_rate,sub_cutin_rate,"
           "revoked_rate,error\n";
    for (const auto& cell : c.cells) {
        const auto& m = cell.metrics;
        std::string err = cell.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << cell.agent << ',' << cell.scenario << ',' << m.ccf << ',' << m.cf << ',' << m.energy_wh << ','
            << m.yearly_wh << ',' << m.mean_abs_misalignment << ',' << m.tsr_violation_rate << ',' << m.sub_cutin_rate
            << ',' << m.revoked_rate << ',' << err << '\n';
    }
}

void write_compare_svg(const Comparison& c, const std::string& path) {
    std::vector<std::string> agents, scenarios;
    for (const auto& cell : c.cells) {
        if (std::find(agents.begin(), agents.end(), cell.agent) == agents.end()) agents.push_back(cell.agent);
        if (std::find(scenarios.begin(), scenarios.end(), cell.scenario) == scenarios.end()) {
            scenarios.push_back(cell.scenario);
        }
    }
    const double bar = 18.0, gap = 30.0, left = 50.0, top = 20.0, height = 240.0;
    const double group = bar * static_cast<double>(agents.size()) + gap;
    const double width = left + group * static_cast<double>(scenarios.size()) + 140.0;
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open chart output");
    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"};
    char buf[256];
    auto y_of = [&](double ccf_pct) { return top + height * (1.0 - std::clamp(ccf_pct, 0.0, 110.0) / 110.0); };
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"11\">\n",
                  width, top + height + 40.0);
    out << buf;
    for (int pct = 0; pct <= 100; pct += 20) {
        const double y = y_of(pct);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/><text x=\"%.1f\" "
                      "y=\"%.1f\" text-anchor=\"end\">%d%%</text>\n",
                      left, y, width - 140.0, y, left - 4.0, y + 4.0, pct);
        out << buf;
    }
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        const double x0 = left + gap / 2 + group * static_cast<double>(s);
        for (std::size_t a = 0; a < agents.size(); ++a) {
            const Cell* cell = c.find(agents[a], scenarios[s]);
            if (!cell || !cell->error.empty()) continue;
            const double y = y_of(cell->metrics.ccf);
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n",
                          x0 + bar * static_cast<double>(a), y, bar - 2.0, top + height - y, palette[a % 7]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">",
                      x0 + bar * static_cast<double>(agents.size()) / 2, top + height + 16.0);
        out << buf << scenarios[s] << "</text>\n";
    }
    for (std::size_t a = 0; a < agents.size(); ++a) {
        const double y = top + 14.0 * static_cast<double>(a);
        std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/>",
                      width - 130.0, y, palette[a % 7]);
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">", width - 115.0, y + 9.0);
        out << buf << agents[a] << "</text>\n";
    }
    out << "<text x=\"4\" y=\"12\">CCF</text>\n</svg>\n";
}

}  // namespace windrl::bench
