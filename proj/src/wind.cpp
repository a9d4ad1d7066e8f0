#include "windrl/wind.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "windrl/error.hpp"

namespace windrl::wind {

const char* source_name(Source s) {
    switch (s) {
        case Source::Steady: return "steady";
        case Source::Narrow: return "narrow";
        case Source::Wide: return "wide";
        case Source::Sinusoid: return "sinusoid";
        case Source::Measured: return "measured";
        case Source::SyntheticGusty: return "synthetic-gusty";
    }
    return "?";
}

WindSample steady_sample(Rng& rng, const SteadyBounds& b) {
    const double speed = rng.uniform(b.speed_min, b.speed_max);
    const double dir = rng.uniform(b.dir_min, b.dir_max);
    return {speed, dir};
}

WindSeries steady_random(Rng& rng, const SteadyBounds& bounds, std::size_t n) {
    const auto s = steady_sample(rng, bounds);
    return {std::vector<WindSample>(n, s), Source::Steady};
}

void SinusoidSpec::validate() const {
    require(speed_min < speed_max && dir_min < dir_max, ErrorCode::InvalidArgument, "sinusoid needs min < max");
    require(speed_min >= 0.0, ErrorCode::InvalidArgument, "sinusoid speed must be non-negative");
    require(speed_period >= 2.0 && dir_period >= 2.0, ErrorCode::InvalidArgument, "sinusoid periods must be >= 2");
}

WindSeries sinusoid(const SinusoidSpec& spec, std::size_t n, Source tag) {
    spec.validate();
    require(n >= 1, ErrorCode::InvalidArgument, "sinusoid needs n >= 1");
    const double s_mid = 0.5 * (spec.speed_min + spec.speed_max), s_amp = 0.5 * (spec.speed_max - spec.speed_min);
    const double d_mid = 0.5 * (spec.dir_min + spec.dir_max), d_amp = 0.5 * (spec.dir_max - spec.dir_min);
    WindSeries out{{}, tag};
    out.samples.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double x = static_cast<double>(t);
        out.samples.push_back({s_mid + s_amp * std::sin(2.0 * M_PI * x / spec.speed_period + spec.speed_phase),
                               d_mid + d_amp * std::sin(2.0 * M_PI * x / spec.dir_period + spec.dir_phase)});
    }
    return out;
}

SinusoidSpec narrow_spec(double speed_phase, double dir_phase) {
    return {7.0, 13.0, -10.0, 10.0, 600.0, 400.0, speed_phase, dir_phase};
}

SinusoidSpec wide_spec(double speed_phase, double dir_phase) {
    return {1.0, 13.0, -30.0, 30.0, 600.0, 400.0, speed_phase, dir_phase};
}

WindSeries narrow(Rng& rng, std::size_t n) {
    const double ps = rng.uniform(0.0, 2.0 * M_PI);
    const double pd = rng.uniform(0.0, 2.0 * M_PI);
    return sinusoid(narrow_spec(ps, pd), n, Source::Narrow);
}

WindSeries wide(Rng& rng, std::size_t n) {
    const double ps = rng.uniform(0.0, 2.0 * M_PI);
    const double pd = rng.uniform(0.0, 2.0 * M_PI);
    return sinusoid(wide_spec(ps, pd), n, Source::Wide);
}

namespace {

std::size_t steps_for(double delta, double quantum) {
    const double n = std::ceil(std::abs(delta) / quantum - 1e-9);
    return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

}  // namespace

WindSeries regularize(const WindSeries& raw, const Quantum& q) {
    require(!raw.samples.empty(), ErrorCode::EmptySeries, "cannot regularize an empty series");
    require(q.speed > 0.0 && q.direction > 0.0, ErrorCode::InvalidArgument, "quantum must be positive");
    WindSeries out{{raw.samples.front()}, raw.source};
    out.samples.reserve(raw.samples.size());
    for (std::size_t i = 1; i < raw.samples.size(); ++i) {
        const WindSample from = out.samples.back();
        const WindSample to = raw.samples[i];
        const std::size_t ns = steps_for(to.speed - from.speed, q.speed);
        const std::size_t nd = steps_for(to.direction - from.direction, q.direction);
        if (ns == 0 && nd == 0) {
            // Calm step, or drift below tolerance: repeat the previous sample.
            out.samples.push_back(from);
            continue;
        }
        WindSample cur = from;
        std::size_t ks = 0, kd = 0;
        while (ks < ns || kd < nd) {
            // Alternate while both variables still move, speed first.
            const bool speed_turn = ks < ns && (kd >= nd || ks <= kd);
            if (speed_turn) {
                ++ks;
                cur.speed = ks == ns ? to.speed
                                     : from.speed + (to.speed - from.speed) * static_cast<double>(ks) / ns;
            } else {
                ++kd;
                cur.direction = kd == nd ? to.direction
                                         : from.direction + (to.direction - from.direction) * static_cast<double>(kd) / nd;
            }
            out.samples.push_back(cur);
        }
    }
    return out;
}

bool is_regular(const WindSeries& s, const Quantum& q, double tol) {
    for (std::size_t i = 1; i < s.samples.size(); ++i) {
        const double ds = std::abs(s.samples[i].speed - s.samples[i - 1].speed);
        const double dd = std::abs(s.samples[i].direction - s.samples[i - 1].direction);
        const bool speed_only = ds <= q.speed * (1.0 + tol) + tol && dd == 0.0;
        const bool dir_only = dd <= q.direction * (1.0 + tol) + tol && ds == 0.0;
        if (!speed_only && !dir_only) return false;
    }
    return true;
}

namespace {

bool missing(const std::string& field) {
    if (field.empty()) return true;
    std::string lower = field;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan" || lower == "na";
}

// Linear interpolation over gaps by row index; edges take the nearest value.
void fill_gaps(std::vector<double>& v, const std::vector<bool>& have) {
    const std::size_t n = v.size();
    std::size_t prev = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!have[i]) continue;
        if (prev == n) {
            for (std::size_t j = 0; j < i; ++j) v[j] = v[i];
        } else {
            for (std::size_t j = prev + 1; j < i; ++j) {
                v[j] = v[prev] + (v[i] - v[prev]) * static_cast<double>(j - prev) / static_cast<double>(i - prev);
            }
        }
        prev = i;
    }
    for (std::size_t j = prev + 1; j < n; ++j) v[j] = v[prev];
}

}  // namespace

WindSeries parse_measured(std::istream& in, const Quantum& q) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<double> speed, dir;
    std::vector<bool> have_speed, have_dir;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (!have_header) {
            if (fields.size() < 3 || fields[0] != "timestamp" || fields[1] != "speed_mps" || fields[2] != "direction_deg") {
                throw ParseError(line_no, "expected header timestamp,speed_mps,direction_deg");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
        auto field = [&](const std::string& f, std::vector<double>& vals, std::vector<bool>& have) {
            if (missing(f)) {
                vals.push_back(0.0);
                have.push_back(false);
            } else {
                vals.push_back(csv::parse_double(f, line_no));
                have.push_back(true);
            }
        };
        field(fields[1], speed, have_speed);
        field(fields[2], dir, have_dir);
        if (have_speed.back() && speed.back() < 0.0) throw ParseError(line_no, "negative wind speed");
    }
    if (!have_header) fail(ErrorCode::EmptySeries, "wind file is empty");
    if (speed.empty()) fail(ErrorCode::EmptySeries, "wind file has no samples");
    if (std::none_of(have_speed.begin(), have_speed.end(), [](bool b) { return b; }) ||
        std::none_of(have_dir.begin(), have_dir.end(), [](bool b) { return b; })) {
        fail(ErrorCode::EmptySeries, "wind file has a column with no values");
    }
    // Unwrap before interpolating so a gap across north interpolates the short way.
    double offset = 0.0, last = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < dir.size(); ++i) {
        if (!have_dir[i]) continue;
        if (!std::isnan(last)) {
            const double d = dir[i] + offset - last;
            offset -= 360.0 * std::round(d / 360.0);
        }
        dir[i] += offset;
        last = dir[i];
    }
    fill_gaps(speed, have_speed);
    fill_gaps(dir, have_dir);

    WindSeries raw{{}, Source::Measured};
    raw.samples.reserve(speed.size());
    for (std::size_t i = 0; i < speed.size(); ++i) raw.samples.push_back({speed[i], dir[i]});
    return regularize(raw, q);
}

WindSeries load_measured(const std::string& path, const Quantum& q) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open wind file");
    return parse_measured(in, q);
}

void write_series_csv(const WindSeries& s, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open wind output");
    out.precision(17);
    out << "step,speed_mps,direction_deg\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        out << i << ',' << s.samples[i].speed << ',' << s.samples[i].direction << '\n';
    }
}

WindSeries read_series_csv(const std::string& path) {
    auto table = csv::read_file(path);
    csv::expect_header(table, {"step", "speed_mps", "direction_deg"});
    WindSeries s{{}, Source::Measured};
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != 3) throw ParseError(table.lines[i], "expected 3 fields");
        s.samples.push_back({csv::parse_double(row[1], table.lines[i]), csv::parse_double(row[2], table.lines[i])});
    }
    if (s.samples.empty()) fail(ErrorCode::EmptySeries, "wind series has no samples");
    return s;
}

WindSeries synthetic_gusty(Rng& rng, const GustySpec& spec) {
    require(spec.n_steps >= 1, ErrorCode::InvalidArgument, "gusty series needs n_steps >= 1");
    require(spec.speed_min < spec.speed_max && spec.dir_min < spec.dir_max, ErrorCode::InvalidArgument,
            "gusty bounds need min < max");
    require(spec.speed_tau > 0.0 && spec.dir_tau > 0.0, ErrorCode::InvalidArgument, "gusty tau must be positive");
    const double rs = std::exp(-1.0 / spec.speed_tau), rd = std::exp(-1.0 / spec.dir_tau);
    const double ns = spec.speed_sigma * std::sqrt(1.0 - rs * rs), nd = spec.dir_sigma * std::sqrt(1.0 - rd * rd);
    double s = std::clamp(spec.speed_mean + spec.speed_sigma * rng.normal(), spec.speed_min, spec.speed_max);
    double d = std::clamp(spec.dir_mean + spec.dir_sigma * rng.normal(), spec.dir_min, spec.dir_max);

    WindSeries out{{{s, d}}, Source::SyntheticGusty};
    // Regularize incrementally: each raw step expands into one or more
    // regular steps, so generate until the target length is covered.
    while (out.samples.size() < spec.n_steps) {
        s = std::clamp(spec.speed_mean + (s - spec.speed_mean) * rs + ns * rng.normal(), spec.speed_min, spec.speed_max);
        d = std::clamp(spec.dir_mean + (d - spec.dir_mean) * rd + nd * rng.normal(), spec.dir_min, spec.dir_max);
        const WindSeries pair{{out.samples.back(), {s, d}}, Source::SyntheticGusty};
        const auto reg = regularize(pair);
        out.samples.insert(out.samples.end(), reg.samples.begin() + 1, reg.samples.end());
    }
    out.samples.resize(spec.n_steps);
    return out;
}

WindSeries make_scenario(const std::string& id, std::uint64_t seed, std::size_t n_steps) {
    Rng rng(seed);
    if (id == "steady") return steady_random(rng, {}, n_steps ? n_steps : 150);
    if (id == "narrow") return narrow(rng, n_steps ? n_steps : 1200);
    if (id == "wide") return wide(rng, n_steps ? n_steps : 1200);
    if (id == "gusty" || id == "gusty-long") {
        GustySpec spec;
        spec.n_steps = n_steps ? n_steps : (id == "gusty" ? 7200 : 175200);
        return synthetic_gusty(rng, spec);
    }
    fail(ErrorCode::InvalidArgument, "unknown scenario '" + id + "'");
}

}  // namespace windrl::wind
