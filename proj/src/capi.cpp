#include "windrl/windrl.h"

#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <variant>

#include "windrl/bench.hpp"
#include "windrl/error.hpp"

using namespace windrl;

struct wrl_rotor {
    aero::RotorConfig cfg;
};

struct wrl_wind {
    wind::WindSeries series;
};

struct wrl_env {
    env::TurbineEnv env;
};

struct PidAgent {
    pid::PidGains gains;
    pid::SetpointCurves curves;
};
struct UncontrolledAgent {};

struct wrl_agent {
    std::variant<ddqn::Agent, vi::ViAgent, PidAgent, UncontrolledAgent> impl;
};

namespace {

thread_local std::string g_last_error;
thread_local bench::Comparison g_last_compare;

wrl_status set_error(wrl_status s, const char* what) {
    g_last_error = what;
    return s;
}

// Exceptions never cross the C boundary.
template <typename F>
wrl_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return WRL_OK;
    } catch (const Error& e) {
        return set_error(static_cast<wrl_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(WRL_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(WRL_INTERNAL, e.what());
    }
}

void need(const void* p, const char* what) {
    if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

wrl_state to_c(const env::TurbineState& s) { return {s.yaw, s.pitch, s.rpm, s.wind_speed, s.wind_dir}; }
env::TurbineState from_c(const wrl_state& s) { return {s.yaw_deg, s.pitch_deg, s.rpm, s.wind_mps, s.wind_dir_deg}; }

wrl_step to_c(const env::StepOutcome& o) {
    return {to_c(o.next_state), o.reward,     o.cp,       o.tsr,       o.revoked,
            o.forbidden,        o.won,        o.terminal, o.truncated, o.violations};
}

wrl_metrics to_c(const bench::RunMetrics& m) {
    return {m.ccf,
            m.cf,
            m.energy_wh,
            m.yearly_wh,
            m.mean_abs_misalignment,
            m.tsr_violation_rate,
            m.sub_cutin_rate,
            m.revoked_rate};
}

ddqn::Hyperparams hyperparams_for(const char* hp) {
    const std::string name = hp ? hp : "optimized";
    if (name == "optimized") return ddqn::optimized_hyperparams();
    if (name == "arbitrary") return ddqn::arbitrary_hyperparams();
    return ddqn::load_hyperparams(name);
}

std::unique_ptr<bench::Controller> controller_for(const wrl_agent& a) {
    struct Visitor {
        std::unique_ptr<bench::Controller> operator()(const ddqn::Agent& x) const { return bench::ddqn_controller(x); }
        std::unique_ptr<bench::Controller> operator()(const vi::ViAgent& x) const { return bench::vi_controller(x); }
        std::unique_ptr<bench::Controller> operator()(const PidAgent& x) const {
            return bench::pid_controller(x.gains, x.curves);
        }
        std::unique_ptr<bench::Controller> operator()(const UncontrolledAgent&) const {
            return bench::uncontrolled_controller();
        }
    };
    return std::visit(Visitor{}, a.impl);
}

}  // namespace

extern "C" {

const char* wrl_last_error(void) { return g_last_error.c_str(); }

const char* wrl_status_name(wrl_status s) { return to_string(static_cast<ErrorCode>(s)); }

const char* wrl_version(void) { return "1.0.0"; }

wrl_status wrl_rotor_reference(wrl_rotor** out) {
    return guarded([&] {
        need(out, "out");
        *out = new wrl_rotor{aero::reference_rotor()};
    });
}

wrl_status wrl_rotor_load(const char* path, wrl_rotor** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new wrl_rotor{aero::load_rotor_config(path)};
    });
}

wrl_status wrl_rotor_save(const wrl_rotor* r, const char* path) {
    return guarded([&] {
        need(r, "rotor");
        need(path, "path");
        aero::save_rotor_config(r->cfg, path);
    });
}

void wrl_rotor_free(wrl_rotor* r) { delete r; }

wrl_status wrl_rotor_nominal(const wrl_rotor* r, double* cp, double* tsr, double* pitch_deg) {
    return guarded([&] {
        need(r, "rotor");
        const auto n = aero::cp_nominal_point(r->cfg);
        if (cp) *cp = n.cp;
        if (tsr) *tsr = n.tsr;
        if (pitch_deg) *pitch_deg = n.pitch_deg;
    });
}

wrl_status wrl_solve(const wrl_rotor* r, double wind_mps, double misalignment_deg, double pitch_deg, double rpm,
                     wrl_aero* out) {
    return guarded([&] {
        need(r, "rotor");
        need(out, "out");
        const auto s = aero::solve_rotor({wind_mps, misalignment_deg, pitch_deg, rpm}, r->cfg);
        *out = {s.cp, s.cp_raw, s.ct, s.power, s.tsr, s.aoa_min(), s.aoa_max(), s.converged ? 1 : 0};
    });
}

wrl_status wrl_surface(const wrl_rotor* r, const wrl_surface_spec* spec, const char* csv_path, double* values,
                       size_t capacity) {
    return guarded([&] {
        need(r, "rotor");
        need(spec, "spec");
        need(spec->row_axis, "row_axis");
        need(spec->col_axis, "col_axis");
        if (values && capacity < spec->row_n * spec->col_n) fail(ErrorCode::BufferTooSmall, "values buffer too small");
        aero::SurfaceSpec s;
        s.row_axis = aero::parse_axis(spec->row_axis);
        s.col_axis = aero::parse_axis(spec->col_axis);
        s.row_values = aero::linspace(spec->row_lo, spec->row_hi, spec->row_n);
        s.col_values = aero::linspace(spec->col_lo, spec->col_hi, spec->col_n);
        s.tsr = spec->tsr;
        s.pitch_deg = spec->pitch_deg;
        s.yaw_deg = spec->yaw_deg;
        s.wind_speed = spec->wind_mps;
        if (spec->fixed_rpm > 0.0) s.fixed_rpm = spec->fixed_rpm;
        const auto surface = aero::cp_surface(r->cfg, s);
        if (csv_path) aero::write_surface_csv(surface, csv_path);
        if (values) std::copy(surface.cp.begin(), surface.cp.end(), values);
    });
}

wrl_status wrl_wind_scenario(const char* id, uint64_t seed, size_t n_steps, wrl_wind** out) {
    return guarded([&] {
        need(id, "id");
        need(out, "out");
        *out = new wrl_wind{wind::make_scenario(id, seed, n_steps)};
    });
}

wrl_status wrl_wind_load_measured(const char* path, wrl_wind** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new wrl_wind{wind::load_measured(path)};
    });
}

wrl_status wrl_wind_read(const char* path, wrl_wind** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new wrl_wind{wind::read_series_csv(path)};
    });
}

wrl_status wrl_wind_write(const wrl_wind* w, const char* path) {
    return guarded([&] {
        need(w, "wind");
        need(path, "path");
        wind::write_series_csv(w->series, path);
    });
}

size_t wrl_wind_size(const wrl_wind* w) { return w ? w->series.size() : 0; }

wrl_status wrl_wind_at(const wrl_wind* w, size_t i, double* speed, double* dir) {
    return guarded([&] {
        need(w, "wind");
        if (i >= w->series.size()) fail(ErrorCode::IndexOutOfRange, "wind sample index out of range");
        if (speed) *speed = w->series[i].speed;
        if (dir) *dir = w->series[i].direction;
    });
}

void wrl_wind_free(wrl_wind* w) { delete w; }

wrl_status wrl_env_create(const wrl_rotor* r, wrl_rule rule, wrl_env** out) {
    return guarded([&] {
        need(r, "rotor");
        need(out, "out");
        env::EnvConfig cfg;
        switch (rule) {
            case WRL_RULE_LITERAL: cfg.rule = env::RevocationRule::Literal; break;
            case WRL_RULE_NO_WORSENING: cfg.rule = env::RevocationRule::NoWorsening; break;
            case WRL_RULE_OFF: cfg.rule = env::RevocationRule::Off; break;
            default: fail(ErrorCode::InvalidArgument, "unknown revocation rule");
        }
        *out = new wrl_env{env::TurbineEnv(r->cfg, cfg)};
    });
}

void wrl_env_free(wrl_env* e) { delete e; }

wrl_status wrl_env_reset(wrl_env* e, double wind_mps, double wind_dir_deg, uint64_t seed, wrl_state* out) {
    return guarded([&] {
        need(e, "env");
        Rng rng(seed);
        const auto s = e->env.reset({wind_mps, wind_dir_deg}, rng);
        if (out) *out = to_c(s);
    });
}

wrl_status wrl_env_set_state(wrl_env* e, const wrl_state* s) {
    return guarded([&] {
        need(e, "env");
        need(s, "state");
        e->env.set_state(from_c(*s));
    });
}

wrl_status wrl_env_state(const wrl_env* e, wrl_state* out) {
    return guarded([&] {
        need(e, "env");
        need(out, "out");
        *out = to_c(e->env.state());
    });
}

wrl_status wrl_env_step(wrl_env* e, int action, double next_wind_mps, double next_dir_deg, wrl_step* out) {
    return guarded([&] {
        need(e, "env");
        const auto o = e->env.step(env::action_from_index(action), {next_wind_mps, next_dir_deg});
        if (out) *out = to_c(o);
    });
}

wrl_status wrl_env_step_increments(wrl_env* e, int dyaw, int dpitch, int drpm, double next_wind_mps,
                                   double next_dir_deg, wrl_step* out) {
    return guarded([&] {
        need(e, "env");
        const auto o = e->env.step_increments(dyaw, dpitch, drpm, {next_wind_mps, next_dir_deg});
        if (out) *out = to_c(o);
    });
}

wrl_status wrl_ddqn_train(const wrl_rotor* r, const char* hp, uint64_t seed, int episodes, const char* log_csv,
                          wrl_agent** out, wrl_train_summary* summary) {
    return guarded([&] {
        need(r, "rotor");
        auto params = hyperparams_for(hp);
        if (episodes >= 0) params.episodes = episodes;
        params.validate();
        const auto t0 = std::chrono::steady_clock::now();
        env::TurbineEnv e(r->cfg);
        ddqn::Agent agent(params, seed);
        const auto result = ddqn::train(agent, e, seed);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log_csv) ddqn::write_training_log(result.log, log_csv);
        if (summary) {
            wrl_train_summary s{};
            s.episodes = static_cast<int>(result.episode_won.size());
            for (std::size_t i = 0; i < result.episode_won.size(); ++i) {
                s.wins += result.episode_won[i];
                if (i + 20 >= result.episode_won.size()) s.wins_last20 += result.episode_won[i];
            }
            s.steps = result.log.size();
            s.cumulative_reward = result.log.empty() ? 0.0 : result.log.back().cumulative_reward;
            if (!result.log.empty()) {
                const auto k = result.log.size() * 2 / 3;
                const double before = k ? result.log[k - 1].cumulative_reward : 0.0;
                s.final_third_gain = s.cumulative_reward - before;
            }
            s.seconds = secs;
            *summary = s;
        }
        if (out) *out = new wrl_agent{std::move(agent)};
    });
}

wrl_status wrl_ddqn_load(const char* checkpoint, wrl_agent** out) {
    return guarded([&] {
        need(checkpoint, "checkpoint");
        need(out, "out");
        *out = new wrl_agent{ddqn::Agent(nn::load_params(std::string(checkpoint)))};
    });
}

wrl_status wrl_vi_solve(const wrl_rotor* r, double yaw_step, double pitch_step, double rpm_step, wrl_agent** out) {
    return guarded([&] {
        need(r, "rotor");
        need(out, "out");
        const auto grid = vi::DiscreteGrid::coarse(yaw_step, pitch_step, rpm_step);
        *out = new wrl_agent{vi::ViAgent::solve(grid, r->cfg)};
    });
}

wrl_status wrl_vi_load(const char* policy, const wrl_rotor* r, wrl_agent** out) {
    return guarded([&] {
        need(policy, "policy");
        need(r, "rotor");
        need(out, "out");
        *out = new wrl_agent{vi::ViAgent::load(policy, r->cfg)};
    });
}

wrl_status wrl_pid_tune(const wrl_rotor* r, const char* setpoints_csv, int budget, uint64_t seed, size_t steps,
                        wrl_agent** out, double* best_ccf) {
    return guarded([&] {
        need(r, "rotor");
        auto curves = setpoints_csv ? pid::read_setpoints_csv(setpoints_csv) : pid::derive_setpoints(r->cfg);
        env::TurbineEnv e(r->cfg);
        Rng rng(seed);
        pid::TuneOptions opt;
        opt.budget = budget;
        if (steps) opt.steps = steps;
        const auto res = pid::tune(e, curves, rng, opt);
        if (best_ccf) *best_ccf = res.ccf;
        if (out) *out = new wrl_agent{PidAgent{res.gains, std::move(curves)}};
    });
}

wrl_status wrl_pid_load(const char* gains_json, const char* setpoints_csv, const wrl_rotor* r, wrl_agent** out) {
    return guarded([&] {
        need(gains_json, "gains");
        need(out, "out");
        if (!setpoints_csv) need(r, "rotor");
        auto curves = setpoints_csv ? pid::read_setpoints_csv(setpoints_csv) : pid::derive_setpoints(r->cfg);
        *out = new wrl_agent{PidAgent{pid::load_gains(gains_json), std::move(curves)}};
    });
}

wrl_status wrl_uncontrolled(wrl_agent** out) {
    return guarded([&] {
        need(out, "out");
        *out = new wrl_agent{UncontrolledAgent{}};
    });
}

wrl_status wrl_agent_save(const wrl_agent* a, const char* path) {
    return guarded([&] {
        need(a, "agent");
        need(path, "path");
        if (auto* d = std::get_if<ddqn::Agent>(&a->impl)) nn::save_params(d->online(), std::string(path));
        else if (auto* v = std::get_if<vi::ViAgent>(&a->impl)) v->save(path);
        else if (auto* p = std::get_if<PidAgent>(&a->impl)) pid::save_gains(p->gains, path);
        else fail(ErrorCode::InvalidArgument, "the uncontrolled agent has nothing to save");
    });
}

wrl_status wrl_agent_act(wrl_agent* a, const wrl_state* s, int* action) {
    return guarded([&] {
        need(a, "agent");
        need(s, "state");
        need(action, "action");
        const auto st = from_c(*s);
        if (auto* d = std::get_if<ddqn::Agent>(&a->impl)) *action = d->act_greedy(ddqn::snapshot(st));
        else if (auto* v = std::get_if<vi::ViAgent>(&a->impl)) *action = v->act(st);
        else if (std::holds_alternative<UncontrolledAgent>(a->impl)) *action = static_cast<int>(env::Action::Hold);
        else fail(ErrorCode::InvalidArgument, "PID agents emit increments, not actions");
    });
}

const char* wrl_agent_kind(const wrl_agent* a) {
    if (!a) return "";
    static const char* names[] = {"ddqn", "vi", "pid", "uncontrolled"};
    return names[a->impl.index()];
}

void wrl_agent_free(wrl_agent* a) { delete a; }

wrl_status wrl_setpoints_write(const wrl_rotor* r, double lo, double hi, double step, const char* csv_path) {
    return guarded([&] {
        need(r, "rotor");
        need(csv_path, "path");
        pid::write_setpoints_csv(pid::derive_setpoints(r->cfg, {}, lo, hi, step), csv_path);
    });
}

wrl_status wrl_validate(wrl_agent* a, const wrl_rotor* r, const wrl_wind* w, double dt_s, const char* log_csv,
                        wrl_metrics* out) {
    return guarded([&] {
        need(a, "agent");
        need(r, "rotor");
        need(w, "wind");
        bench::RunConfig rc;
        rc.env.dt = dt_s;
        const auto ctl = controller_for(*a);
        const auto run = bench::run_validation(*ctl, r->cfg, w->series, rc);
        if (log_csv) bench::write_episode_csv(run.log, log_csv);
        if (out) *out = to_c(run.metrics);
    });
}

wrl_status wrl_compare(const char* config_json, size_t* cells, size_t* failed_cells) {
    return guarded([&] {
        need(config_json, "config");
        g_last_compare = bench::compare_agents(bench::load_compare_config(config_json));
        std::size_t failed = 0;
        for (const auto& c : g_last_compare.cells) failed += !c.error.empty();
        if (cells) *cells = g_last_compare.cells.size();
        if (failed_cells) *failed_cells = failed;
    });
}

wrl_status wrl_compare_cell(size_t i, const char** agent, const char** scenario, wrl_metrics* m, const char** error) {
    return guarded([&] {
        if (i >= g_last_compare.cells.size()) fail(ErrorCode::IndexOutOfRange, "comparison cell out of range");
        const auto& c = g_last_compare.cells[i];
        if (agent) *agent = c.agent.c_str();
        if (scenario) *scenario = c.scenario.c_str();
        if (m) *m = to_c(c.metrics);
        if (error) *error = c.error.c_str();
    });
}

}  // extern "C"
