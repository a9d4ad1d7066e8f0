#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "windrl/aero.hpp"
#include "windrl/rng.hpp"
#include "windrl/wind.hpp"

namespace windrl::env {

enum class Action : int { YawUp = 0, YawDown, PitchUp, PitchDown, RpmUp, RpmDown, Hold };
constexpr int kActionCount = 7;

const char* action_name(Action a);
Action action_from_index(int index);  // throws InvalidArgument outside 0..6

// Maps into (-180, 180].
double wrap_deg(double deg);

struct TurbineState {
    double yaw = 0.0;         // absolute, fixed frame
    double pitch = 0.0;       // deg
    double rpm = 6.0;
    double wind_speed = 8.0;  // m/s
    double wind_dir = 0.0;    // deg, fixed frame

    double misalignment() const { return wrap_deg(yaw - wind_dir); }
    aero::OperatingPoint operating_point() const { return {wind_speed, misalignment(), pitch, rpm}; }
    bool same_dofs(const TurbineState& o) const { return yaw == o.yaw && pitch == o.pitch && rpm == o.rpm; }
};

struct Range {
    double lo, hi;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct ConstraintSet {
    Range misalignment{-30.0, 30.0};
    Range pitch{-20.0, 20.0};
    Range rpm{6.0, 25.0};
    Range wind_speed{4.0, 13.0};
    Range tsr{3.0, 12.0};
    Range aoa{-10.0, 15.0};

    void validate() const;
};

// Bit set of violated bounds. Wind speed is reported but never used to
// revoke: the agent does not control it.
enum Violation : unsigned {
    kNone = 0,
    kMisalignment = 1u << 0,
    kPitch = 1u << 1,
    kRpm = 1u << 2,
    kTsr = 1u << 3,
    kAoa = 1u << 4,
    kSolver = 1u << 5,
    kWindSpeed = 1u << 6,
};
constexpr unsigned kRevokingMask = kMisalignment | kPitch | kRpm | kTsr | kAoa | kSolver;

unsigned check_constraints(const TurbineState& s, const aero::AeroSolution& sol, const ConstraintSet& c);
std::vector<std::string> violation_names(unsigned mask);

struct RewardConfig {
    double cp_nom = 0.0;  // <= 0 means "take aero::cp_nominal of the rotor"
    double penalty = -2.0;
    double win_bonus = 5.0;
    double win_threshold = 0.975;
    int win_streak = 20;

    void validate() const;
};

struct RewardResult {
    double reward;
    double base;  // clipped Cp ratio, or the penalty
    bool won;
    int streak;   // consecutive qualifying steps including this one
};

// `streak` counts the qualifying steps immediately before this one.
RewardResult reward(double cp, bool revoked, int streak, const RewardConfig& cfg);

TurbineState apply_action(const TurbineState& s, Action a);

enum class RevocationRule {
    // Any violated bound in the candidate revokes (Hold excepted).
    Literal,
    // Only bounds newly violated by the candidate, or already violated and
    // made worse, revoke. Wind-induced violations never punish.
    NoWorsening,
    // Nothing is revoked; a move the literal rule would revoke is committed
    // and still pays the penalty. Used when validating learned agents.
    Off,
};

struct EnvConfig {
    ConstraintSet constraints;
    RewardConfig reward;
    RevocationRule rule = RevocationRule::Literal;
    double dt = 60.0;  // s
    int max_steps = 150;
    bool terminate_on_win = true;
};

struct StepOutcome {
    TurbineState next_state;
    double reward = 0.0;
    double base_reward = 0.0;
    double cp = 0.0;
    double tsr = 0.0;
    bool revoked = false;
    bool forbidden = false;  // literal rule objects; equals revoked unless the rule is Off
    bool won = false;
    bool terminal = false;   // won and the episode ends on a win
    bool truncated = false;  // max_steps reached
    unsigned violations = kNone;  // of the rejected or committed candidate
};

class TurbineEnv {
public:
    TurbineEnv(aero::RotorConfig rotor, EnvConfig cfg = {});

    const aero::RotorConfig& rotor() const { return rotor_; }
    const EnvConfig& config() const { return cfg_; }
    double cp_nom() const { return cfg_.reward.cp_nom; }

    const TurbineState& state() const { return state_; }
    void set_state(const TurbineState& s);
    int streak() const { return streak_; }
    int steps() const { return steps_; }

    // Integer DOFs drawn uniformly (misalignment relative to the wind) until
    // every constraint holds at the given wind.
    TurbineState reset(const wind::WindSample& w, Rng& rng);

    StepOutcome step(Action a, const wind::WindSample& next_wind);

    // Applies yaw, pitch and rpm increments in that order, each judged and
    // revoked on its own. `revoked` reports whether any was revoked.
    StepOutcome step_increments(int dyaw, int dpitch, int drpm, const wind::WindSample& next_wind,
                                std::array<bool, 3>* revoked_each = nullptr);

    // Memoised solve at the state's DOFs and wind.
    const aero::AeroSolution& evaluate(const TurbineState& s) const;
    unsigned violations(const TurbineState& s) const;

private:
    void trim_cache();
    bool revokes(const TurbineState& from, const TurbineState& cand, Action a) const;
    bool literal_violation(const TurbineState& cand, Action a) const;
    StepOutcome finish(const TurbineState& committed, bool revoked, bool forbidden, unsigned viol,
                       const wind::WindSample& next_wind);

    aero::RotorConfig rotor_;
    EnvConfig cfg_;
    TurbineState state_;
    int streak_ = 0;
    int steps_ = 0;

    struct Key {
        double u, yaw, pitch, rpm;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    mutable std::unordered_map<Key, aero::AeroSolution, KeyHash> cache_;
};

// One CSV row per step: step, wind_speed, wind_dir, yaw, pitch, rpm, tsr, cp,
// action, reward, revoked, won.
struct StepRecord {
    std::size_t step;
    TurbineState state;  // committed state, wind at the moment of the action
    double tsr;
    double cp;
    std::string action;
    double reward;
    bool revoked;
    bool won;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const StepRecord& r);

}  // namespace windrl::env
