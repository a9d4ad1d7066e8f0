#include "windrl/vi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "windrl/error.hpp"

namespace windrl::vi {

int Axis::nearest(double x) const {
    const double t = (x - lo) / step;
    double r = std::floor(t + 0.5);
    if (t - std::floor(t) == 0.5) {
        const double centre = 0.5 * (n - 1);
        r = t < centre ? std::ceil(t) : std::floor(t);
    }
    return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
}

void DiscreteGrid::decode(std::size_t id, int& iy, int& ip, int& ir) const {
    ir = static_cast<int>(id % rpm.n);
    id /= rpm.n;
    ip = static_cast<int>(id % pitch.n);
    iy = static_cast<int>(id / pitch.n);
}

void DiscreteGrid::validate() const {
    for (const Axis* a : {&yaw, &pitch, &rpm, &wind}) {
        require(a->n >= 1 && a->step > 0.0, ErrorCode::InvalidArgument, "grid axes need n >= 1 and step > 0");
    }
}

DiscreteGrid DiscreteGrid::coarse(double yaw_step, double pitch_step, double rpm_step) {
    DiscreteGrid g;
    auto axis = [](double lo, double hi, double step) {
        return Axis{lo, step, static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1};
    };
    g.yaw = axis(-30.0, 30.0, yaw_step);
    g.pitch = axis(-20.0, 20.0, pitch_step);
    g.rpm = axis(6.0, 25.0, rpm_step);
    return g;
}

void Mdp::validate() const {
    const std::size_t n = n_states * static_cast<std::size_t>(n_actions);
    require(next.size() == n && reward.size() == n && terminal.size() == n_states, ErrorCode::ShapeMismatch,
            "MDP tables have inconsistent sizes");
    for (auto s : next) require(s < n_states, ErrorCode::IndexOutOfRange, "MDP successor out of range");
}

std::vector<double> value_iteration(const Mdp& m, double gamma, double epsilon, SweepStats* stats) {
    m.validate();
    require(gamma >= 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma must be in [0, 1)");
    require(epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
    std::vector<double> v(m.n_states, 0.0);
    if (stats) *stats = {};
    while (true) {
        double delta = 0.0;
        for (std::size_t s = 0; s < m.n_states; ++s) {
            if (m.terminal[s]) continue;
            const std::size_t base = s * m.n_actions;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.n_actions; ++a) {
                best = std::max(best, m.reward[base + a] + gamma * v[m.next[base + a]]);
            }
            delta = std::max(delta, std::abs(best - v[s]));
            v[s] = best;
        }
        if (stats) {
            ++stats->sweeps;
            stats->deltas.push_back(delta);
        }
        if (delta < epsilon) break;
    }
    return v;
}

std::vector<std::uint8_t> extract_policy(const Mdp& m, const std::vector<double>& v, double gamma) {
    m.validate();
    require(v.size() == m.n_states, ErrorCode::ShapeMismatch, "value table size mismatch");
    std::vector<std::uint8_t> pi(m.n_states, 0);
    for (std::size_t s = 0; s < m.n_states; ++s) {
        const std::size_t base = s * m.n_actions;
        int best = 0;
        double best_q = m.reward[base] + gamma * v[m.next[base]];
        for (int a = 1; a < m.n_actions; ++a) {
            const double q = m.reward[base + a] + gamma * v[m.next[base + a]];
            if (q > best_q) {
                best_q = q;
                best = a;
            }
        }
        pi[s] = static_cast<std::uint8_t>(best);
    }
    return pi;
}

double policy_return(const Mdp& m, const std::vector<std::uint8_t>& policy, std::size_t start, double gamma) {
    std::vector<long> first_seen(m.n_states, -1);
    std::vector<double> rewards;
    std::size_t s = start;
    while (!m.terminal[s] && first_seen[s] < 0) {
        first_seen[s] = static_cast<long>(rewards.size());
        const std::size_t k = s * m.n_actions + policy[s];
        rewards.push_back(m.reward[k]);
        s = m.next[k];
    }
    // Prefix, then (if not terminal) a cycle repeated forever.
    const std::size_t loop_start = m.terminal[s] ? rewards.size() : static_cast<std::size_t>(first_seen[s]);
    double prefix = 0.0, disc = 1.0;
    for (std::size_t t = 0; t < loop_start; ++t) {
        prefix += disc * rewards[t];
        disc *= gamma;
    }
    if (loop_start == rewards.size()) return prefix;
    double cycle = 0.0, cd = 1.0;
    for (std::size_t t = loop_start; t < rewards.size(); ++t) {
        cycle += cd * rewards[t];
        cd *= gamma;
    }
    return prefix + disc * cycle / (1.0 - cd);
}

namespace {

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ULL;
    return h;
}

std::uint64_t grid_hash(const DiscreteGrid& g, const env::ConstraintSet& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const Axis* a : {&g.yaw, &g.pitch, &g.rpm, &g.wind}) {
        h = fnv(h, &a->lo, sizeof a->lo);
        h = fnv(h, &a->step, sizeof a->step);
        h = fnv(h, &a->n, sizeof a->n);
    }
    for (const env::Range* r : {&c.misalignment, &c.pitch, &c.rpm, &c.tsr, &c.aoa}) {
        h = fnv(h, &r->lo, sizeof r->lo);
        h = fnv(h, &r->hi, sizeof r->hi);
    }
    return h;
}

constexpr char kCpMagic[4] = {'W', 'R', 'C', 'P'};
constexpr char kViMagic[4] = {'W', 'R', 'V', 'I'};
constexpr std::uint32_t kFormat = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(ErrorCode::ParseError, "truncated table file");
    return v;
}

std::string cache_path(std::uint64_t rotor_hash, std::uint64_t ghash) {
    const char* dir = std::getenv("WINDRL_CACHE_DIR");
    if (!dir || !*dir) return {};
    std::ostringstream name;
    name << std::hex << "cp_tables_" << rotor_hash << '_' << ghash << ".bin";
    return (std::filesystem::path(dir) / name.str()).string();
}

bool read_cache(const std::string& path, std::uint64_t rotor_hash, std::uint64_t ghash, std::size_t n, CpTables& t) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    try {
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, kCpMagic, 4) != 0) return false;
        if (get<std::uint32_t>(in) != kFormat) return false;
        if (get<std::uint64_t>(in) != rotor_hash || get<std::uint64_t>(in) != ghash) return false;
        if (get<std::uint64_t>(in) != n) return false;
        t.cp.resize(n);
        t.forbidden.resize(n);
        in.read(reinterpret_cast<char*>(t.cp.data()), static_cast<std::streamsize>(n * sizeof(double)));
        in.read(reinterpret_cast<char*>(t.forbidden.data()), static_cast<std::streamsize>(n));
        return static_cast<bool>(in);
    } catch (const Error&) {
        return false;
    }
}

void write_cache(const std::string& path, std::uint64_t rotor_hash, std::uint64_t ghash, const CpTables& t) {
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
    // Write then rename so a concurrent reader never sees a partial file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;
        out.write(kCpMagic, 4);
        put<std::uint32_t>(out, kFormat);
        put<std::uint64_t>(out, rotor_hash);
        put<std::uint64_t>(out, ghash);
        put<std::uint64_t>(out, t.cp.size());
        out.write(reinterpret_cast<const char*>(t.cp.data()), static_cast<std::streamsize>(t.cp.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(t.forbidden.data()), static_cast<std::streamsize>(t.forbidden.size()));
        if (!out) return;
    }
    std::filesystem::rename(tmp, path, ec);
}

}  // namespace

CpTables cp_tables(const DiscreteGrid& g, const aero::RotorConfig& rotor, const env::ConstraintSet& c) {
    g.validate();
    const std::size_t slice = g.slice_size();
    const std::size_t n = slice * g.wind.n;
    const auto rhash = rotor.hash();
    const auto ghash = grid_hash(g, c);
    const std::string path = cache_path(rhash, ghash);
    CpTables t;
    if (!path.empty() && read_cache(path, rhash, ghash, n, t)) return t;

    t.cp.assign(n, 0.0);
    t.forbidden.assign(n, 1);
    for (int iw = 0; iw < g.wind.n; ++iw) {
        const double u = g.wind.value(iw);
        for (int iy = 0; iy < g.yaw.n; ++iy) {
            // Cp and AoA are even in misalignment: reuse the mirrored node.
            const int mirror = g.yaw.n - 1 - iy;
            const bool reuse = g.yaw.value(mirror) == -g.yaw.value(iy) && mirror < iy;
            for (int ip = 0; ip < g.pitch.n; ++ip) {
                for (int ir = 0; ir < g.rpm.n; ++ir) {
                    const std::size_t k = iw * slice + g.id(iy, ip, ir);
                    if (reuse) {
                        const std::size_t km = iw * slice + g.id(mirror, ip, ir);
                        t.cp[k] = t.cp[km];
                        t.forbidden[k] = t.forbidden[km];
                        continue;
                    }
                    env::TurbineState s{g.yaw.value(iy), g.pitch.value(ip), g.rpm.value(ir), u, 0.0};
                    const auto sol = aero::solve_rotor(s.operating_point(), rotor);
                    t.cp[k] = sol.converged ? sol.cp : 0.0;
                    t.forbidden[k] = (env::check_constraints(s, sol, c) & env::kRevokingMask) != 0;
                }
            }
        }
    }
    if (!path.empty()) write_cache(path, rhash, ghash, t);
    return t;
}

Mdp build_slice_model(const DiscreteGrid& g, const CpTables& t, int wind_index, const ModelOptions& opt) {
    require(opt.cp_nom > 0.0, ErrorCode::InvalidArgument, "cp_nom must be positive");
    const std::size_t slice = g.slice_size();
    const std::size_t offset = static_cast<std::size_t>(wind_index) * slice;
    Mdp m;
    m.n_states = slice;
    m.next.resize(slice * m.n_actions);
    m.reward.resize(slice * m.n_actions);
    m.terminal.assign(slice, false);
    auto ratio = [&](std::size_t id) {
        const double r = std::min(t.cp[offset + id] / opt.cp_nom, 1.0);
        const double bonus = opt.win_bonus && r >= opt.win_threshold ? opt.win_bonus_value / opt.win_streak : 0.0;
        return r + bonus;
    };
    auto forbidden = [&](std::size_t id) { return t.forbidden[offset + id] != 0; };
    for (int iy = 0; iy < g.yaw.n; ++iy) {
        for (int ip = 0; ip < g.pitch.n; ++ip) {
            for (int ir = 0; ir < g.rpm.n; ++ir) {
                const std::size_t s = g.id(iy, ip, ir);
                const int moves[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
                for (int a = 0; a < 6; ++a) {
                    const int jy = iy + moves[a][0], jp = ip + moves[a][1], jr = ir + moves[a][2];
                    const std::size_t k = s * m.n_actions + a;
                    const bool on_grid = jy >= 0 && jy < g.yaw.n && jp >= 0 && jp < g.pitch.n && jr >= 0 && jr < g.rpm.n;
                    if (!on_grid) {
                        m.next[k] = static_cast<std::uint32_t>(s);
                        m.reward[k] = opt.penalty;
                        continue;
                    }
                    const std::size_t j = g.id(jy, jp, jr);
                    if (!forbidden(j)) {
                        m.next[k] = static_cast<std::uint32_t>(j);
                        m.reward[k] = ratio(j);
                    } else if (forbidden(s)) {
                        m.next[k] = static_cast<std::uint32_t>(j);
                        m.reward[k] = opt.penalty;
                    } else {
                        m.next[k] = static_cast<std::uint32_t>(s);
                        m.reward[k] = opt.penalty;
                    }
                }
                const std::size_t hold = s * m.n_actions + static_cast<int>(env::Action::Hold);
                m.next[hold] = static_cast<std::uint32_t>(s);
                m.reward[hold] = ratio(s);
            }
        }
    }
    return m;
}

ViAgent ViAgent::solve(const DiscreteGrid& g, const aero::RotorConfig& rotor, const SolveOptions& opt,
                       const env::ConstraintSet& c) {
    ViAgent agent;
    agent.grid_ = g;
    agent.rotor_hash_ = rotor.hash();
    agent.cp_nom_ = aero::cp_nominal(rotor);
    const CpTables tables = cp_tables(g, rotor, c);
    ModelOptions mo{agent.cp_nom_};
    mo.win_bonus = opt.win_bonus;
    for (int iw = 0; iw < g.wind.n; ++iw) {
        const Mdp m = build_slice_model(g, tables, iw, mo);
        auto v = value_iteration(m, opt.gamma, opt.epsilon);
        agent.policy_.push_back(extract_policy(m, v, opt.gamma));
        agent.values_.push_back(std::move(v));
    }
    return agent;
}

int ViAgent::act(const env::TurbineState& s) const {
    require(!policy_.empty(), ErrorCode::InvalidArgument, "value-iteration agent has no policy");
    const int iw = grid_.wind.nearest(s.wind_speed);
    const int iy = grid_.yaw.nearest(s.misalignment());
    const int ip = grid_.pitch.nearest(s.pitch);
    const int ir = grid_.rpm.nearest(s.rpm);
    return policy_[iw][grid_.id(iy, ip, ir)];
}

void ViAgent::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open policy output");
    out.write(kViMagic, 4);
    put<std::uint32_t>(out, kFormat);
    put<std::uint64_t>(out, rotor_hash_);
    put<double>(out, cp_nom_);
    for (const Axis* a : {&grid_.yaw, &grid_.pitch, &grid_.rpm, &grid_.wind}) {
        put<double>(out, a->lo);
        put<double>(out, a->step);
        put<std::int32_t>(out, a->n);
    }
    for (std::size_t w = 0; w < policy_.size(); ++w) {
        out.write(reinterpret_cast<const char*>(policy_[w].data()), static_cast<std::streamsize>(policy_[w].size()));
        out.write(reinterpret_cast<const char*>(values_[w].data()),
                  static_cast<std::streamsize>(values_[w].size() * sizeof(double)));
    }
    require(static_cast<bool>(out), ErrorCode::Io, "policy write failed");
}

ViAgent ViAgent::load(const std::string& path, const aero::RotorConfig& rotor) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open policy file");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kViMagic, 4) != 0) fail(ErrorCode::ParseError, "not a value-iteration policy file");
    if (get<std::uint32_t>(in) != kFormat) fail(ErrorCode::ParseError, "unsupported policy file version");
    ViAgent a;
    a.rotor_hash_ = get<std::uint64_t>(in);
    if (a.rotor_hash_ != rotor.hash()) fail(ErrorCode::StaleCache, "policy was solved for a different rotor");
    a.cp_nom_ = get<double>(in);
    for (Axis* ax : {&a.grid_.yaw, &a.grid_.pitch, &a.grid_.rpm, &a.grid_.wind}) {
        ax->lo = get<double>(in);
        ax->step = get<double>(in);
        ax->n = get<std::int32_t>(in);
    }
    a.grid_.validate();
    const std::size_t slice = a.grid_.slice_size();
    for (int w = 0; w < a.grid_.wind.n; ++w) {
        std::vector<std::uint8_t> pi(slice);
        std::vector<double> v(slice);
        in.read(reinterpret_cast<char*>(pi.data()), static_cast<std::streamsize>(slice));
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(slice * sizeof(double)));
        if (!in) fail(ErrorCode::ParseError, "truncated policy file");
        a.policy_.push_back(std::move(pi));
        a.values_.push_back(std::move(v));
    }
    return a;
}

}  // namespace windrl::vi
