#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windrl/aero.hpp"
#include "windrl/env.hpp"

namespace windrl::vi {

struct Axis {
    double lo;
    double step;
    int n;

    double value(int i) const { return lo + step * i; }
    double hi() const { return value(n - 1); }
    // Nearest node, clamped; exact midpoints go towards the axis centre.
    int nearest(double x) const;
    bool operator==(const Axis&) const = default;
};

// Misalignment x pitch x rpm per wind-speed slice; flat id = (iy * np + ip) * nr + ir.
struct DiscreteGrid {
    Axis yaw{-30.0, 1.0, 61};
    Axis pitch{-20.0, 1.0, 41};
    Axis rpm{6.0, 1.0, 20};
    Axis wind{4.0, 1.0, 10};

    std::size_t slice_size() const { return static_cast<std::size_t>(yaw.n) * pitch.n * rpm.n; }
    std::size_t id(int iy, int ip, int ir) const { return (static_cast<std::size_t>(iy) * pitch.n + ip) * rpm.n + ir; }
    void decode(std::size_t id, int& iy, int& ip, int& ir) const;
    void validate() const;
    bool operator==(const DiscreteGrid&) const = default;

    // Same box with coarser steps.
    static DiscreteGrid coarse(double yaw_step, double pitch_step, double rpm_step);
};

// Deterministic finite MDP: one successor per (state, action).
struct Mdp {
    std::size_t n_states = 0;
    int n_actions = env::kActionCount;
    std::vector<std::uint32_t> next;  // n_states * n_actions
    std::vector<double> reward;       // n_states * n_actions
    std::vector<bool> terminal;       // V = 0, no backups

    void validate() const;
};

struct SweepStats {
    int sweeps = 0;
    std::vector<double> deltas;  // max |dV| per sweep
};

// In-place Gauss-Seidel sweeps until the max change drops below epsilon.
std::vector<double> value_iteration(const Mdp& m, double gamma, double epsilon, SweepStats* stats = nullptr);
// Greedy policy; ties go to the lowest action index.
std::vector<std::uint8_t> extract_policy(const Mdp& m, const std::vector<double>& v, double gamma);
// Discounted return of a stationary deterministic policy, solved exactly
// by following the (eventually periodic) trajectory from `start`.
double policy_return(const Mdp& m, const std::vector<std::uint8_t>& policy, std::size_t start, double gamma);

// Cp and admissibility of every grid node, one block per wind slice.
struct CpTables {
    std::vector<double> cp;
    std::vector<std::uint8_t> forbidden;  // TSR, AoA or solver failure
};

// Uses WINDRL_CACHE_DIR (when set) to persist the tables, keyed by the rotor
// hash and the grid.
CpTables cp_tables(const DiscreteGrid& g, const aero::RotorConfig& rotor, const env::ConstraintSet& c = {});

struct ModelOptions {
    double cp_nom;
    double penalty = -2.0;
    bool win_bonus = false;  // adds bonus / streak to every qualifying reward
    double win_bonus_value = 5.0;
    double win_threshold = 0.975;
    int win_streak = 20;
};

// Slice model: a revoked move (off-grid, or from an admissible node into a
// forbidden one) is a self-loop with the penalty. From a forbidden node
// moves are allowed, and pay the penalty while they stay forbidden. Hold
// always pays the current Cp ratio.
Mdp build_slice_model(const DiscreteGrid& g, const CpTables& t, int wind_index, const ModelOptions& opt);

struct SolveOptions {
    double gamma = 0.95;
    double epsilon = 1e-6;
    bool win_bonus = false;
};

class ViAgent {
public:
    ViAgent() = default;

    // Solves every wind slice independently.
    static ViAgent solve(const DiscreteGrid& g, const aero::RotorConfig& rotor, const SolveOptions& opt = {},
                         const env::ConstraintSet& c = {});

    const DiscreteGrid& grid() const { return grid_; }
    std::uint8_t action_at(int wind_index, std::size_t id) const { return policy_[wind_index][id]; }
    double value_at(int wind_index, std::size_t id) const { return values_[wind_index][id]; }
    double cp_nom() const { return cp_nom_; }

    // Snaps to the nearest node (wind clamped to the axis) and looks up.
    int act(const env::TurbineState& s) const;

    // Binary file with grid metadata and the rotor hash; load throws
    // StaleCache when the hash or grid disagrees with the expectation.
    void save(const std::string& path) const;
    static ViAgent load(const std::string& path, const aero::RotorConfig& rotor);

private:
    DiscreteGrid grid_;
    std::uint64_t rotor_hash_ = 0;
    double cp_nom_ = 0.0;
    std::vector<std::vector<std::uint8_t>> policy_;
    std::vector<std::vector<double>> values_;
};

}  // namespace windrl::vi
