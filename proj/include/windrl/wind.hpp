#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "windrl/rng.hpp"

namespace windrl::wind {

struct WindSample {
    double speed;      // m/s, >= 0
    double direction;  // deg, fixed frame, unwrapped
};

enum class Source { Steady, Narrow, Wide, Sinusoid, Measured, SyntheticGusty };

const char* source_name(Source s);

struct WindSeries {
    std::vector<WindSample> samples;
    Source source = Source::Steady;

    std::size_t size() const { return samples.size(); }
    const WindSample& operator[](std::size_t i) const { return samples[i]; }
    // Holds the last sample once the series runs out.
    const WindSample& at_or_last(std::size_t i) const { return samples[i < samples.size() ? i : samples.size() - 1]; }
};

struct SteadyBounds {
    double speed_min = 4.0;
    double speed_max = 13.0;
    double dir_min = -180.0;
    double dir_max = 180.0;
};

// One (speed, direction) draw repeated n times.
WindSeries steady_random(Rng& rng, const SteadyBounds& bounds, std::size_t n);
WindSample steady_sample(Rng& rng, const SteadyBounds& bounds);

struct SinusoidSpec {
    double speed_min, speed_max;
    double dir_min, dir_max;
    double speed_period = 600.0;  // steps
    double dir_period = 400.0;
    double speed_phase = 0.0;     // rad
    double dir_phase = 0.0;

    void validate() const;
};

// speed(t) = mid + amp sin(2 pi t / period + phase), likewise direction.
WindSeries sinusoid(const SinusoidSpec& spec, std::size_t n, Source tag = Source::Sinusoid);

SinusoidSpec narrow_spec(double speed_phase = 0.0, double dir_phase = 0.0);  // 7-13 m/s, +/-10 deg
SinusoidSpec wide_spec(double speed_phase = 0.0, double dir_phase = 0.0);    // 1-13 m/s, +/-30 deg
// Presets with phases drawn uniformly from [0, 2 pi).
WindSeries narrow(Rng& rng, std::size_t n);
WindSeries wide(Rng& rng, std::size_t n);

struct Quantum {
    double speed = 1.0;      // m/s
    double direction = 1.0;  // deg
};

// Expands every raw step into single-variable steps no larger than one
// quantum, alternating speed and direction while both still move.
// Idempotent.
WindSeries regularize(const WindSeries& raw, const Quantum& q = {});
bool is_regular(const WindSeries& s, const Quantum& q = {}, double tol = 1e-9);

// CSV `timestamp,speed_mps,direction_deg`. Empty or NaN fields are filled by
// linear interpolation over the row index; directions are unwrapped. The
// result is regularized. Throws ParseError (with the source line) or
// EmptySeries.
WindSeries load_measured(const std::string& path, const Quantum& q = {});
WindSeries parse_measured(std::istream& in, const Quantum& q = {});

// CSV `step,speed_mps,direction_deg`.
void write_series_csv(const WindSeries& s, const std::string& path);
WindSeries read_series_csv(const std::string& path);

// Ornstein-Uhlenbeck walks on speed and direction (one raw sample per step),
// clipped to the bounds, regularized, then cut to n_steps.
struct GustySpec {
    std::size_t n_steps = 7200;
    double speed_mean = 8.0;
    double speed_sigma = 2.5;      // stationary std, m/s
    double speed_tau = 120.0;      // mean-reversion time, steps
    double speed_min = 2.0;
    double speed_max = 15.0;
    double dir_mean = 0.0;
    double dir_sigma = 60.0;       // stationary std, deg
    double dir_tau = 720.0;
    double dir_min = -180.0;
    double dir_max = 180.0;
};

WindSeries synthetic_gusty(Rng& rng, const GustySpec& spec);

// Scenario ids used by the bench and the CLI:
// steady, narrow, wide, gusty (7200 steps), gusty-long (175200 steps).
WindSeries make_scenario(const std::string& id, std::uint64_t seed, std::size_t n_steps = 0);

}  // namespace windrl::wind
