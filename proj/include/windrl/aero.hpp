#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace windrl::aero {

constexpr double kBetzLimit = 16.0 / 27.0;

// Sectional lift/drag table. Angles in degrees, strictly increasing.
struct AirfoilPolar {
    std::vector<double> alpha_deg;
    std::vector<double> cl;
    std::vector<double> cd;

    void validate() const;
    double alpha_min() const { return alpha_deg.front(); }
    double alpha_max() const { return alpha_deg.back(); }
};

struct PolarSample {
    double cl;
    double cd;
};

// Piecewise-linear interpolation. Throws OutOfPolarRange outside the table.
PolarSample polar_lookup(const AirfoilPolar& polar, double alpha_deg);

// Parametric section: cl = 2*pi*alpha up to +/-12 deg followed by a smooth
// stall towards flat-plate lift, cd = 0.01 + 0.02*(alpha/15)^2. Tabulated over
// the full circle so that deep-stall operating points still solve.
AirfoilPolar parametric_polar(double step_deg = 0.5);

// CSV with header `alpha_deg,cl,cd`.
AirfoilPolar load_polar_csv(const std::string& path);
void write_polar_csv(const AirfoilPolar& polar, const std::string& path);

struct BladeSection {
    double r;          // m
    double chord;      // m
    double twist_deg;  // geometric twist
    std::size_t polar_id = 0;
};

struct RotorConfig {
    double radius = 46.5;       // m
    double hub_radius = 1.5;    // m
    int blade_count = 3;
    double air_density = 1.225; // kg/m^3
    double rated_power = 2.3e6; // W
    std::vector<BladeSection> sections;
    std::vector<AirfoilPolar> polars;

    void validate() const;
    double swept_area() const;
    // FNV-1a over the bit patterns of every field; keys on-disk caches.
    std::uint64_t hash() const;
};

// 93 m rotor with a Schmitz-optimal planform designed for TSR 8 on the
// parametric polar; 20 stations clustered towards the tip.
RotorConfig reference_rotor();

// JSON: radius, hub_radius, blade_count, air_density, rated_power,
// sections [{r, chord, twist, polar_id}], polars [{csv} | "parametric"].
RotorConfig load_rotor_config(const std::string& path);
void save_rotor_config(const RotorConfig& cfg, const std::string& path);

struct OperatingPoint {
    double wind_speed;    // m/s
    double yaw_deg;       // misalignment
    double pitch_deg;
    double rpm;
};

double rpm_to_rad_s(double rpm);
double tip_speed_ratio(double rpm, double radius, double wind_speed);
double rpm_for_tsr(double tsr, double radius, double wind_speed);

// F = (2/pi) acos(exp(-B (R - r) / (2 r |sin phi|))).
// Throws DegenerateInflow when |sin phi| < 1e-12.
double prandtl_tip_loss(double r, double radius, int blade_count, double phi_rad);

struct SolverSettings {
    double relaxation = 0.5;
    double tolerance = 1e-10;
    int max_iterations = 500;
    // Newton steps on the fixed-point residual tried before the damped
    // iteration; 0 runs the damped iteration alone.
    int newton_steps = 20;
};

struct AnnulusSolution {
    double a = 0.0;           // axial induction
    double a_prime = 0.0;     // tangential induction
    double alpha_deg = 0.0;   // local angle of attack
    double phi_rad = 0.0;     // inflow angle
    double tip_loss = 1.0;
    double dcp_dr = 0.0;      // 1/m, integrates to Cp
    double dct_dr = 0.0;      // 1/m, integrates to Ct
    double residual = 0.0;    // max |fixed-point update| at (a, a_prime)
    int iterations = 0;
    bool converged = false;
};

struct InductionUpdate {
    double a;
    double a_prime;
    double phi_rad;
    double alpha_deg;
    double tip_loss;
};

// One evaluation of the momentum/blade-element closure at the given
// induction factors. Exposed so the fixed point can be checked from outside.
InductionUpdate induction_update(const BladeSection& section, const OperatingPoint& op,
                                 const RotorConfig& cfg, double a, double a_prime);

// Throws OutOfPolarRange when the section AoA leaves the polar table.
AnnulusSolution solve_annulus(const BladeSection& section, const OperatingPoint& op,
                              const RotorConfig& cfg, const SolverSettings& settings = {});

struct AeroSolution {
    double cp = 0.0;      // clamped at 0: the generator does not motor the rotor
    double cp_raw = 0.0;  // signed integral
    double ct = 0.0;
    double power = 0.0;   // W, cp * 0.5 rho A U^3
    double tsr = 0.0;
    std::vector<double> aoa_span;
    bool converged = true;

    double aoa_min() const;
    double aoa_max() const;
};

// Never throws on solver trouble; failures are reported through `converged`.
AeroSolution solve_rotor(const OperatingPoint& op, const RotorConfig& cfg,
                         const SolverSettings& settings = {});

enum class SurfaceAxis { Tsr, Pitch, Yaw };

struct SurfaceSpec {
    SurfaceAxis row_axis = SurfaceAxis::Yaw;
    SurfaceAxis col_axis = SurfaceAxis::Pitch;
    std::vector<double> row_values;
    std::vector<double> col_values;
    // Values of the non-swept quantities.
    double tsr = 8.0;
    double pitch_deg = 0.0;
    double yaw_deg = 0.0;
    double wind_speed = 8.0;
    // When set, the rotor speed is held and TSR changes are realised through
    // the wind speed instead.
    std::optional<double> fixed_rpm;
};

struct CpSurface {
    SurfaceAxis row_axis;
    SurfaceAxis col_axis;
    std::vector<double> row_values;
    std::vector<double> col_values;
    std::vector<double> cp;     // row-major; NaN where the solve failed
    std::vector<bool> valid;

    double at(std::size_t row, std::size_t col) const { return cp[row * col_values.size() + col]; }
    bool is_valid(std::size_t row, std::size_t col) const { return valid[row * col_values.size() + col]; }
};

CpSurface cp_surface(const RotorConfig& cfg, const SurfaceSpec& spec);
void write_surface_csv(const CpSurface& surface, const std::string& path);
const char* axis_name(SurfaceAxis axis);
SurfaceAxis parse_axis(const std::string& name);

std::vector<double> linspace(double lo, double hi, std::size_t n);

struct NominalPoint {
    double cp;
    double tsr;
    double pitch_deg;
};

// Max Cp over TSR in [3, 12] x pitch in [-20, 20] at zero yaw: 0.1 / 0.5 deg
// grid followed by golden-section refinement per axis. Memoised per config
// hash; safe to call from several threads.
NominalPoint cp_nominal_point(const RotorConfig& cfg);
double cp_nominal(const RotorConfig& cfg);

}  // namespace windrl::aero
