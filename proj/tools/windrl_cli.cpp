// Command-line front end. Talks to the library only through windrl.h.

#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "windrl/windrl.h"

namespace {

struct Failure {
    wrl_status status;
};

void check(wrl_status s) {
    if (s != WRL_OK) {
        std::fprintf(stderr, "error (%s): %s\n", wrl_status_name(s), wrl_last_error());
        throw Failure{s};
    }
}

struct RotorDeleter {
    void operator()(wrl_rotor* r) const { wrl_rotor_free(r); }
};
struct WindDeleter {
    void operator()(wrl_wind* w) const { wrl_wind_free(w); }
};
struct AgentDeleter {
    void operator()(wrl_agent* a) const { wrl_agent_free(a); }
};
using Rotor = std::unique_ptr<wrl_rotor, RotorDeleter>;
using Wind = std::unique_ptr<wrl_wind, WindDeleter>;
using Agent = std::unique_ptr<wrl_agent, AgentDeleter>;

Rotor load_rotor(const std::string& path) {
    wrl_rotor* r = nullptr;
    check(path.empty() ? wrl_rotor_reference(&r) : wrl_rotor_load(path.c_str(), &r));
    return Rotor(r);
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// One line per property in --check mode; returns whether it held.
bool report(bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
    return ok;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wind turbine control laboratory"};
    app.require_subcommand(1);
    std::string turbine;
    app.add_option("--turbine", turbine, "Rotor JSON (default: built-in reference rotor)");

    // train
    auto* train = app.add_subcommand("train", "Train a DDQN agent, solve a VI policy or tune PID gains");
    std::string t_agent = "ddqn", t_hp = "optimized", t_out, t_log, t_setpoints;
    std::uint64_t t_seed = 1;
    int t_episodes = -1, t_budget = 200;
    std::size_t t_steps = 0;
    std::vector<double> t_grid{1.0, 1.0, 1.0};
    bool t_check = false;
    train->add_option("--agent", t_agent, "ddqn | vi | pid")->check(CLI::IsMember({"ddqn", "vi", "pid"}));
    train->add_option("--hp", t_hp, "optimized | arbitrary | hyperparameter JSON");
    train->add_option("--seed", t_seed);
    train->add_option("--episodes", t_episodes, "Override the episode count");
    train->add_option("--out", t_out, "Checkpoint, policy or gains output")->required();
    train->add_option("--log", t_log, "Training log CSV (ddqn)");
    train->add_option("--grid", t_grid, "VI grid steps: yaw pitch rpm")->expected(3);
    train->add_option("--budget", t_budget, "PID tuning budget");
    train->add_option("--steps", t_steps, "PID tuning scenario length");
    train->add_option("--setpoints", t_setpoints, "PID setpoint CSV (default: derived)");
    train->add_flag("--check", t_check, "Fail unless the training acceptance properties hold");

    // validate
    auto* validate = app.add_subcommand("validate", "Greedy rollout of an agent over a wind scenario");
    std::string v_agent, v_path, v_setpoints, v_scenario = "narrow", v_wind_csv, v_measured, v_out;
    std::uint64_t v_seed = 7;
    std::size_t v_steps = 0;
    double v_dt = 60.0, v_min_ccf = 0.0;
    bool v_check = false;
    validate->add_option("--agent", v_agent, "ddqn | vi | pid | uncontrolled")
        ->required()
        ->check(CLI::IsMember({"ddqn", "vi", "pid", "uncontrolled"}));
    validate->add_option("--path", v_path, "Checkpoint, policy or gains file");
    validate->add_option("--setpoints", v_setpoints, "PID setpoint CSV");
    validate->add_option("--scenario", v_scenario, "steady | narrow | wide | gusty | gusty-long");
    validate->add_option("--wind-csv", v_wind_csv, "Series CSV (step,speed_mps,direction_deg)");
    validate->add_option("--measured", v_measured, "Measured CSV (timestamp,speed_mps,direction_deg)");
    validate->add_option("--seed", v_seed);
    validate->add_option("--steps", v_steps, "Scenario length (0: default)");
    validate->add_option("--dt", v_dt, "Seconds per step");
    validate->add_option("--out", v_out, "Episode log CSV");
    validate->add_option("--min-ccf", v_min_ccf, "CCF floor for --check, percent");
    validate->add_flag("--check", v_check, "Fail when CCF is below --min-ccf");

    // compare
    auto* compare = app.add_subcommand("compare", "Run every agent on every scenario of a config file");
    std::string c_config, c_order, c_on = "gusty-long";
    bool c_check = false;
    compare->add_option("--config", c_config)->required();
    compare->add_option("--expect-order", c_order, "Comma-separated agent ids, best first, for --check");
    compare->add_option("--on", c_on, "Scenario for --expect-order");
    compare->add_flag("--check", c_check, "Fail on failed cells or a broken ordering");

    // surface
    auto* surface = app.add_subcommand("surface", "Cp over a two-axis sweep");
    std::string s_row = "yaw", s_col = "pitch", s_out;
    std::vector<double> s_row_range{-30.0, 30.0}, s_col_range{-20.0, 20.0};
    std::size_t s_row_n = 61, s_col_n = 41;
    double s_tsr = 8.0, s_pitch = 0.0, s_yaw = 0.0, s_wind = 8.0, s_rpm = 0.0;
    bool s_check = false;
    surface->add_option("--row", s_row, "tsr | pitch | yaw");
    surface->add_option("--col", s_col, "tsr | pitch | yaw");
    surface->add_option("--row-range", s_row_range)->expected(2);
    surface->add_option("--col-range", s_col_range)->expected(2);
    surface->add_option("--row-n", s_row_n);
    surface->add_option("--col-n", s_col_n);
    surface->add_option("--tsr", s_tsr);
    surface->add_option("--pitch", s_pitch);
    surface->add_option("--yaw", s_yaw);
    surface->add_option("--wind", s_wind);
    surface->add_option("--fixed-rpm", s_rpm, "Hold rotor speed; TSR then moves through wind speed");
    surface->add_option("--out", s_out)->required();
    surface->add_flag("--check", s_check, "Fail unless every column peaks at zero yaw (yaw rows)");

    // setpoints
    auto* setpoints = app.add_subcommand("setpoints", "Derive PID setpoint curves");
    std::string p_out;
    double p_lo = 4.0, p_hi = 13.0, p_step = 0.5;
    bool p_check = false;
    setpoints->add_option("--out", p_out)->required();
    setpoints->add_option("--lo", p_lo);
    setpoints->add_option("--hi", p_hi);
    setpoints->add_option("--step", p_step);
    setpoints->add_flag("--check", p_check, "Fail unless TSR stays in [3, 12] and rpm is non-decreasing");

    // wind
    auto* windcmd = app.add_subcommand("wind", "Write a wind scenario as CSV");
    std::string w_scenario = "narrow", w_out;
    std::uint64_t w_seed = 7;
    std::size_t w_steps = 0;
    windcmd->add_option("--scenario", w_scenario);
    windcmd->add_option("--seed", w_seed);
    windcmd->add_option("--steps", w_steps);
    windcmd->add_option("--out", w_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const Rotor rotor = load_rotor(turbine);
        bool ok = true;

        if (*train) {
            wrl_agent* a = nullptr;
            if (t_agent == "ddqn") {
                wrl_train_summary s{};
                check(wrl_ddqn_train(rotor.get(), t_hp.c_str(), t_seed, t_episodes, or_null(t_log), &a, &s));
                Agent agent(a);
                check(wrl_agent_save(agent.get(), t_out.c_str()));
                std::printf("episodes=%d wins=%d wins_last20=%d steps=%zu cumulative=%.6f final_third_gain=%.6f "
                            "seconds=%.1f\n",
                            s.episodes, s.wins, s.wins_last20, s.steps, s.cumulative_reward, s.final_third_gain,
                            s.seconds);
                if (t_check) {
                    const int window = s.episodes < 20 ? s.episodes : 20;
                    ok &= report(s.seconds < 1800.0, "training time below 30 min");
                    ok &= report(s.final_third_gain > 0.0, "cumulative reward increases over the final third");
                    ok &= report(s.wins_last20 * 5 >= window * 4, "at least 80% of the last 20 episodes won");
                }
            } else if (t_agent == "vi") {
                check(wrl_vi_solve(rotor.get(), t_grid[0], t_grid[1], t_grid[2], &a));
                Agent agent(a);
                check(wrl_agent_save(agent.get(), t_out.c_str()));
            } else {
                double ccf = 0.0;
                check(wrl_pid_tune(rotor.get(), or_null(t_setpoints), t_budget, t_seed, t_steps, &a, &ccf));
                Agent agent(a);
                check(wrl_agent_save(agent.get(), t_out.c_str()));
                std::printf("tuned ccf=%.6f\n", ccf);
            }
        } else if (*validate) {
            wrl_agent* a = nullptr;
            if (v_agent == "ddqn") check(wrl_ddqn_load(v_path.c_str(), &a));
            else if (v_agent == "vi") check(wrl_vi_load(v_path.c_str(), rotor.get(), &a));
            else if (v_agent == "pid") check(wrl_pid_load(v_path.c_str(), or_null(v_setpoints), rotor.get(), &a));
            else check(wrl_uncontrolled(&a));
            Agent agent(a);
            wrl_wind* w = nullptr;
            if (!v_wind_csv.empty()) check(wrl_wind_read(v_wind_csv.c_str(), &w));
            else if (!v_measured.empty()) check(wrl_wind_load_measured(v_measured.c_str(), &w));
            else check(wrl_wind_scenario(v_scenario.c_str(), v_seed, v_steps, &w));
            Wind series(w);
            wrl_metrics m{};
            check(wrl_validate(agent.get(), rotor.get(), series.get(), v_dt, or_null(v_out), &m));
            std::printf("ccf=%.6f cf=%.6f energy_wh=%.6g yearly_wh=%.6g mean_abs_misalignment=%.4f "
                        "tsr_violation_rate=%.4f sub_cutin_rate=%.4f revoked_rate=%.4f\n",
                        m.ccf, m.cf, m.energy_wh, m.yearly_wh, m.mean_abs_misalignment_deg, m.tsr_violation_rate,
                        m.sub_cutin_rate, m.revoked_rate);
            if (v_check) ok &= report(m.ccf >= v_min_ccf, "CCF " + fmt("%.3f", m.ccf) + " >= " + fmt("%.3f", v_min_ccf));
        } else if (*compare) {
            std::size_t cells = 0, failed = 0;
            check(wrl_compare(c_config.c_str(), &cells, &failed));
            std::vector<std::pair<std::string, double>> on;
            for (std::size_t i = 0; i < cells; ++i) {
                const char *agent = nullptr, *scenario = nullptr, *err = nullptr;
                wrl_metrics m{};
                check(wrl_compare_cell(i, &agent, &scenario, &m, &err));
                if (*err) std::printf("%-14s %-12s FAILED: %s\n", agent, scenario, err);
                else std::printf("%-14s %-12s ccf=%8.3f cf=%7.3f yearly_wh=%.6g\n", agent, scenario, m.ccf, m.cf, m.yearly_wh);
                if (c_on == scenario && !*err) on.emplace_back(agent, m.ccf);
            }
            if (c_check) {
                ok &= report(failed == 0, "every cell ran");
                const auto order = split_list(c_order);
                for (std::size_t k = 1; k < order.size(); ++k) {
                    double hi = NAN, lo = NAN;
                    for (const auto& [id, v] : on) {
                        if (id == order[k - 1]) hi = v;
                        if (id == order[k]) lo = v;
                    }
                    ok &= report(hi > lo, "CCF(" + order[k - 1] + ") > CCF(" + order[k] + ") on " + c_on);
                }
            }
        } else if (*surface) {
            wrl_surface_spec spec{s_row.c_str(), s_row_range[0], s_row_range[1], s_row_n,
                                  s_col.c_str(), s_col_range[0], s_col_range[1], s_col_n,
                                  s_tsr,         s_pitch,        s_yaw,          s_wind, s_rpm};
            std::vector<double> cp(s_row_n * s_col_n);
            check(wrl_surface(rotor.get(), &spec, s_out.c_str(), cp.data(), cp.size()));
            if (s_check) {
                if (s_row != "yaw") {
                    ok &= report(false, "--check needs yaw rows");
                } else {
                    bool peak = true;
                    for (std::size_t j = 0; j < s_col_n; ++j) {
                        std::size_t best = 0;
                        for (std::size_t i = 1; i < s_row_n; ++i) {
                            if (cp[i * s_col_n + j] > cp[best * s_col_n + j]) best = i;
                        }
                        const double step = s_row_n > 1 ? (s_row_range[1] - s_row_range[0]) / (s_row_n - 1) : 0.0;
                        peak &= std::abs(s_row_range[0] + step * best) <= step / 2 + 1e-12;
                    }
                    ok &= report(peak, "every column peaks at zero yaw");
                }
            }
        } else if (*setpoints) {
            check(wrl_setpoints_write(rotor.get(), p_lo, p_hi, p_step, p_out.c_str()));
            if (p_check) {
                // Re-solve every tabulated point through the public API.
                std::FILE* f = std::fopen(p_out.c_str(), "r");
                if (!f) throw Failure{WRL_IO};
                char line[256];
                bool tsr_ok = true, mono = true;
                double prev_rpm = -1.0;
                if (!std::fgets(line, sizeof line, f)) line[0] = '\0';  // header
                while (std::fgets(line, sizeof line, f)) {
                    double u, rpm, pitch;
                    if (std::sscanf(line, "%lf,%lf,%lf", &u, &rpm, &pitch) != 3) continue;
                    wrl_aero a{};
                    check(wrl_solve(rotor.get(), u, 0.0, pitch, rpm, &a));
                    tsr_ok &= a.tsr >= 3.0 && a.tsr <= 12.0;
                    mono &= rpm >= prev_rpm;
                    prev_rpm = rpm;
                }
                std::fclose(f);
                ok &= report(tsr_ok, "every setpoint keeps TSR in [3, 12]");
                ok &= report(mono, "rpm setpoint is non-decreasing in wind speed");
            }
        } else if (*windcmd) {
            wrl_wind* w = nullptr;
            check(wrl_wind_scenario(w_scenario.c_str(), w_seed, w_steps, &w));
            Wind series(w);
            check(wrl_wind_write(series.get(), w_out.c_str()));
        }
        return ok ? 0 : 1;
    } catch (const Failure&) {
        return 2;
    }
}
