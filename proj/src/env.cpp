#include "windrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "windrl/error.hpp"

namespace windrl::env {

const char* action_name(Action a) {
    switch (a) {
        case Action::YawUp: return "yaw+";
        case Action::YawDown: return "yaw-";
        case Action::PitchUp: return "pitch+";
        case Action::PitchDown: return "pitch-";
        case Action::RpmUp: return "rpm+";
        case Action::RpmDown: return "rpm-";
        case Action::Hold: return "hold";
    }
    return "?";
}

Action action_from_index(int index) {
    require(index >= 0 && index < kActionCount, ErrorCode::InvalidArgument, "action index outside 0..6");
    return static_cast<Action>(index);
}

double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

void ConstraintSet::validate() const {
    for (const Range* r : {&misalignment, &pitch, &rpm, &wind_speed, &tsr, &aoa}) {
        require(r->lo < r->hi, ErrorCode::InvalidArgument, "constraint bounds need lo < hi");
    }
}

unsigned check_constraints(const TurbineState& s, const aero::AeroSolution& sol, const ConstraintSet& c) {
    unsigned v = kNone;
    if (!c.misalignment.contains(s.misalignment())) v |= kMisalignment;
    if (!c.pitch.contains(s.pitch)) v |= kPitch;
    if (!c.rpm.contains(s.rpm)) v |= kRpm;
    if (!c.wind_speed.contains(s.wind_speed)) v |= kWindSpeed;
    if (!sol.converged) {
        v |= kSolver;
        return v;
    }
    if (!c.tsr.contains(sol.tsr)) v |= kTsr;
    if (!(sol.aoa_min() >= c.aoa.lo && sol.aoa_max() <= c.aoa.hi)) v |= kAoa;
    return v;
}

std::vector<std::string> violation_names(unsigned mask) {
    static const std::pair<unsigned, const char*> names[] = {
        {kMisalignment, "misalignment"}, {kPitch, "pitch"}, {kRpm, "rpm"},          {kTsr, "tsr"},
        {kAoa, "aoa"},                   {kSolver, "solver"}, {kWindSpeed, "wind_speed"}};
    std::vector<std::string> out;
    for (const auto& [bit, name] : names) {
        if (mask & bit) out.emplace_back(name);
    }
    return out;
}

void RewardConfig::validate() const {
    require(win_threshold > 0.0 && win_threshold < 1.0, ErrorCode::InvalidArgument, "win threshold must be in (0, 1)");
    require(win_streak >= 1, ErrorCode::InvalidArgument, "win streak must be >= 1");
}

RewardResult reward(double cp, bool revoked, int streak, const RewardConfig& cfg) {
    if (revoked) return {cfg.penalty, cfg.penalty, false, 0};
    const double base = std::min(cp / cfg.cp_nom, 1.0);
    const int run = base >= cfg.win_threshold ? streak + 1 : 0;
    const bool won = run >= cfg.win_streak;
    return {won ? base + cfg.win_bonus : base, base, won, run};
}

TurbineState apply_action(const TurbineState& s, Action a) {
    TurbineState c = s;
    switch (a) {
        case Action::YawUp: c.yaw += 1.0; break;
        case Action::YawDown: c.yaw -= 1.0; break;
        case Action::PitchUp: c.pitch += 1.0; break;
        case Action::PitchDown: c.pitch -= 1.0; break;
        case Action::RpmUp: c.rpm += 1.0; break;
        case Action::RpmDown: c.rpm -= 1.0; break;
        case Action::Hold: break;
    }
    return c;
}

std::size_t TurbineEnv::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : {k.u, k.yaw, k.pitch, k.rpm}) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = (h ^ bits) * 1099511628211ULL;
        h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
}

TurbineEnv::TurbineEnv(aero::RotorConfig rotor, EnvConfig cfg) : rotor_(std::move(rotor)), cfg_(cfg) {
    rotor_.validate();
    cfg_.constraints.validate();
    if (cfg_.reward.cp_nom <= 0.0) cfg_.reward.cp_nom = aero::cp_nominal(rotor_);
    cfg_.reward.validate();
    require(cfg_.dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
    require(cfg_.max_steps >= 1, ErrorCode::InvalidArgument, "max_steps must be >= 1");
}

void TurbineEnv::set_state(const TurbineState& s) {
    state_ = s;
    streak_ = 0;
    steps_ = 0;
}

const aero::AeroSolution& TurbineEnv::evaluate(const TurbineState& s) const {
    const Key key{s.wind_speed, s.misalignment(), s.pitch, s.rpm};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    aero::AeroSolution sol;
    if (s.wind_speed > 0.0) {
        sol = aero::solve_rotor(s.operating_point(), rotor_);
    } else {
        sol.converged = false;
        sol.aoa_span.assign(rotor_.sections.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return cache_.emplace(key, std::move(sol)).first->second;
}

unsigned TurbineEnv::violations(const TurbineState& s) const {
    return check_constraints(s, evaluate(s), cfg_.constraints);
}

TurbineState TurbineEnv::reset(const wind::WindSample& w, Rng& rng) {
    trim_cache();
    const auto& c = cfg_.constraints;
    TurbineState s;
    s.wind_speed = w.speed;
    s.wind_dir = w.direction;
    const auto lo_g = static_cast<long long>(std::ceil(c.misalignment.lo));
    const auto hi_g = static_cast<long long>(std::floor(c.misalignment.hi));
    const auto lo_p = static_cast<long long>(std::ceil(c.pitch.lo));
    const auto hi_p = static_cast<long long>(std::floor(c.pitch.hi));
    const auto lo_w = static_cast<long long>(std::ceil(c.rpm.lo));
    const auto hi_w = static_cast<long long>(std::floor(c.rpm.hi));
    for (int attempt = 0; attempt < 100000; ++attempt) {
        s.yaw = w.direction + static_cast<double>(rng.integer(lo_g, hi_g));
        s.pitch = static_cast<double>(rng.integer(lo_p, hi_p));
        s.rpm = static_cast<double>(rng.integer(lo_w, hi_w));
        if ((violations(s) & kRevokingMask) == 0) {
            set_state(s);
            return s;
        }
    }
    fail(ErrorCode::InvalidArgument, "no admissible state at this wind speed");
}

namespace {

double excess(double x, const Range& r) { return std::max({r.lo - x, x - r.hi, 0.0}); }

double excess_of(unsigned bit, const TurbineState& s, const aero::AeroSolution& sol, const ConstraintSet& c) {
    switch (bit) {
        case kMisalignment: return excess(s.misalignment(), c.misalignment);
        case kPitch: return excess(s.pitch, c.pitch);
        case kRpm: return excess(s.rpm, c.rpm);
        case kTsr: return sol.converged ? excess(sol.tsr, c.tsr) : std::numeric_limits<double>::infinity();
        case kAoa:
            return sol.converged ? std::max(excess(sol.aoa_min(), c.aoa), excess(sol.aoa_max(), c.aoa))
                                 : std::numeric_limits<double>::infinity();
        default: return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

bool TurbineEnv::literal_violation(const TurbineState& cand, Action a) const {
    return a != Action::Hold && (violations(cand) & kRevokingMask) != 0;
}

bool TurbineEnv::revokes(const TurbineState& from, const TurbineState& cand, Action a) const {
    if (cfg_.rule == RevocationRule::Off || !literal_violation(cand, a)) return false;
    if (cfg_.rule == RevocationRule::Literal) return true;
    const auto& sol = evaluate(cand);
    const unsigned v = check_constraints(cand, sol, cfg_.constraints) & kRevokingMask;
    const auto& sol_from = evaluate(from);
    const unsigned v_from = check_constraints(from, sol_from, cfg_.constraints);
    for (unsigned bit = 1; bit <= kSolver; bit <<= 1) {
        if (!(v & bit)) continue;
        if (!(v_from & bit)) return true;
        if (bit == kSolver) return true;
        if (excess_of(bit, cand, sol, cfg_.constraints) > excess_of(bit, from, sol_from, cfg_.constraints) + 1e-12) {
            return true;
        }
    }
    return false;
}

StepOutcome TurbineEnv::finish(const TurbineState& committed, bool revoked, bool forbidden, unsigned viol,
                               const wind::WindSample& next_wind) {
    const auto& sol = evaluate(committed);
    const bool penalized = revoked || (cfg_.rule == RevocationRule::Off && forbidden);
    const auto rr = reward(sol.cp, penalized, streak_, cfg_.reward);
    streak_ = rr.streak;
    ++steps_;
    StepOutcome out;
    out.cp = sol.cp;
    out.tsr = sol.tsr;
    out.reward = rr.reward;
    out.base_reward = rr.base;
    out.revoked = revoked;
    out.forbidden = forbidden || revoked;
    out.won = rr.won;
    out.terminal = rr.won && cfg_.terminate_on_win;
    out.truncated = steps_ >= cfg_.max_steps;
    out.violations = viol;
    state_ = committed;
    state_.wind_speed = next_wind.speed;
    state_.wind_dir = next_wind.direction;
    out.next_state = state_;
    return out;
}

void TurbineEnv::trim_cache() {
    // Only between steps: evaluate() hands out references into the map.
    if (cache_.size() > 200000) cache_.clear();
}

StepOutcome TurbineEnv::step(Action a, const wind::WindSample& next_wind) {
    trim_cache();
    const TurbineState cand = apply_action(state_, a);
    const unsigned viol = violations(cand);
    const bool revoked = revokes(state_, cand, a);
    return finish(revoked ? state_ : cand, revoked, literal_violation(cand, a), viol, next_wind);
}

StepOutcome TurbineEnv::step_increments(int dyaw, int dpitch, int drpm, const wind::WindSample& next_wind,
                                        std::array<bool, 3>* revoked_each) {
    require(std::abs(dyaw) <= 1 && std::abs(dpitch) <= 1 && std::abs(drpm) <= 1, ErrorCode::InvalidArgument,
            "increments must be in {-1, 0, 1}");
    trim_cache();
    const std::array<Action, 3> up{Action::YawUp, Action::PitchUp, Action::RpmUp};
    const std::array<Action, 3> down{Action::YawDown, Action::PitchDown, Action::RpmDown};
    const std::array<int, 3> inc{dyaw, dpitch, drpm};
    TurbineState cur = state_;
    bool any = false, forbidden = false;
    unsigned viol = kNone;
    for (int k = 0; k < 3; ++k) {
        if (revoked_each) (*revoked_each)[k] = false;
        if (inc[k] == 0) continue;
        const Action a = inc[k] > 0 ? up[k] : down[k];
        const TurbineState cand = apply_action(cur, a);
        forbidden = forbidden || literal_violation(cand, a);
        if (revokes(cur, cand, a)) {
            any = true;
            viol |= violations(cand);
            if (revoked_each) (*revoked_each)[k] = true;
        } else {
            cur = cand;
        }
    }
    return finish(cur, any, forbidden, viol | violations(cur), next_wind);
}

void write_log_header(std::ostream& out) {
    out << "step,wind_speed,wind_dir,yaw,pitch,rpm,tsr,cp,action,reward,revoked,won\n";
}

void write_log_row(std::ostream& out, const StepRecord& r) {
    out << r.step << ',' << r.state.wind_speed << ',' << r.state.wind_dir << ',' << r.state.yaw << ','
        << r.state.pitch << ',' << r.state.rpm << ',' << r.tsr << ',' << r.cp << ',' << r.action << ',' << r.reward
        << ',' << (r.revoked ? 1 : 0) << ',' << (r.won ? 1 : 0) << '\n';
}

}  // namespace windrl::env
