#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windrl/aero.hpp"
#include "windrl/ddqn.hpp"
#include "windrl/env.hpp"
#include "windrl/pid.hpp"
#include "windrl/vi.hpp"
#include "windrl/wind.hpp"

namespace windrl::bench {

constexpr double kHoursPerYear = 8760.0;

// ---- metrics ---------------------------------------------------------------

// Mean Cp over cp_nom, in percent. Throws EmptyLog.
double ccf(const std::vector<double>& cp, double cp_nom);
// P = min(P_rated, Cp * 0.5 rho A U^3), W.
double power_w(double cp, double wind_speed, const aero::RotorConfig& rotor);

struct EnergyResult {
    double cf;         // %
    double energy_wh;
};
// E = sum P dt; CF = E / (P_rated * n * dt). Throws EmptyLog.
EnergyResult cf_and_energy(const std::vector<double>& power_w, double rated_power_w, double dt_s);
// Energy over `span_s` scaled to one 8760 h year.
double yearly_production(double energy_wh, double span_s);

struct RunMetrics {
    double ccf = 0.0;
    double cf = 0.0;
    double energy_wh = 0.0;
    double yearly_wh = 0.0;
    double mean_abs_misalignment = 0.0;  // deg
    double tsr_violation_rate = 0.0;     // % of steps outside the TSR box
    double sub_cutin_rate = 0.0;         // % of steps below the wind-speed box
    double revoked_rate = 0.0;           // % of steps with a revoked move
};

// ---- controllers -----------------------------------------------------------

// Either one action (DDQN, VI, uncontrolled) or three increments (PID) per step.
class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string label() const = 0;
    virtual void reset() {}
    // Learned agents act freely during validation; PID still has every
    // forbidden increment revoked.
    virtual env::RevocationRule validation_rule() const { return env::RevocationRule::Off; }
    // Returns the committed outcome; `action` receives the log label.
    virtual env::StepOutcome step(env::TurbineEnv& env, const wind::WindSample& next, std::string& action) = 0;
};

std::unique_ptr<Controller> ddqn_controller(ddqn::Agent agent, std::string label = "ddqn");
std::unique_ptr<Controller> vi_controller(vi::ViAgent agent, std::string label = "vi");
std::unique_ptr<Controller> pid_controller(pid::PidGains gains, pid::SetpointCurves curves, std::string label = "pid");
// Always holds.
std::unique_ptr<Controller> uncontrolled_controller(std::string label = "uncontrolled");

// Integer lattice optimum at the reference wind, aligned.
struct FixedPoint {
    double pitch;
    double rpm;
};
FixedPoint reference_fixed_point(const aero::RotorConfig& rotor, const env::ConstraintSet& c = {},
                                 double reference_wind = 8.0);

// ---- runs ------------------------------------------------------------------

struct RunConfig {
    env::EnvConfig env;  // terminate_on_win is ignored: validation never stops early
    std::optional<env::RevocationRule> rule;  // overrides Controller::validation_rule
    std::optional<FixedPoint> start;  // default: reference_fixed_point of the rotor
};

struct RunResult {
    std::vector<env::StepRecord> log;
    RunMetrics metrics;
};

// Every controller starts from yaw = round(first wind direction) at the
// reference fixed point, and runs greedily for the whole series.
RunResult run_validation(Controller& c, const aero::RotorConfig& rotor, const wind::WindSeries& series,
                         const RunConfig& cfg = {});

// Metrics from a log alone (used for CSV round trips).
RunMetrics metrics_from_log(const std::vector<env::StepRecord>& log, const aero::RotorConfig& rotor,
                            const env::EnvConfig& cfg);

void write_episode_csv(const std::vector<env::StepRecord>& log, const std::string& path);
std::vector<env::StepRecord> read_episode_csv(const std::string& path);

// ---- comparison ------------------------------------------------------------

struct AgentSpec {
    std::string id;    // row label
    std::string type;  // ddqn | vi | pid | uncontrolled
    std::string path;  // checkpoint, policy or gains file
    std::string setpoints;  // pid only; empty derives them from the rotor
};

struct ScenarioSpec {
    std::string id;  // wind::make_scenario id, or a series CSV path when `csv` is set
    std::size_t n_steps = 0;
    std::string csv;
};

// JSON: {"turbine": path?, "seed", "dt", "out_dir",
//        "agents": [{id, type, path, setpoints?}], "scenarios": [{id, n_steps?, csv?}]}
struct CompareConfig {
    std::string turbine;  // empty for the reference rotor
    std::uint64_t seed = 7;
    double dt = 60.0;
    std::string out_dir = "compare_out";
    std::vector<AgentSpec> agents;
    std::vector<ScenarioSpec> scenarios;
};

CompareConfig load_compare_config(const std::string& path);

struct Cell {
    std::string agent;
    std::string scenario;
    RunMetrics metrics;
    std::string error;  // empty on success
};

struct Comparison {
    std::vector<Cell> cells;  // agent-major
    const Cell* find(const std::string& agent, const std::string& scenario) const;
};

std::unique_ptr<Controller> make_controller(const AgentSpec& spec, const aero::RotorConfig& rotor);

// Writes compare.csv, compare.svg and one episode CSV per cell into out_dir.
// A failing cell is recorded and the rest still run.
Comparison compare_agents(const CompareConfig& cfg);

void write_compare_csv(const Comparison& c, const std::string& path);
void write_compare_svg(const Comparison& c, const std::string& path);

}  // namespace windrl::bench
