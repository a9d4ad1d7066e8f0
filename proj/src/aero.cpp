#include "windrl/aero.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "windrl/error.hpp"
#include "csv.hpp"

namespace windrl::aero {

namespace {

constexpr double kDeg = M_PI / 180.0;
constexpr double kGlauertOnset = 1.0 / 3.0;

double sq(double x) { return x * x; }

// Glauert empirical thrust, CT = 4 a F (1 - (5 - 3a) a / 4), matched against
// the blade-element thrust K (1 - a)^2 * 4F. Monotone on [1/3, 1], so
// bisection is exact to machine precision.
double glauert_induction(double k) {
    auto g = [k](double a) { return a * (1.0 - 0.25 * (5.0 - 3.0 * a) * a) - k * sq(1.0 - a); };
    double lo = kGlauertOnset, hi = 1.0;
    for (int i = 0; i < 80 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void AirfoilPolar::validate() const {
    require(alpha_deg.size() >= 2, ErrorCode::InvalidArgument, "polar needs at least two samples");
    require(cl.size() == alpha_deg.size() && cd.size() == alpha_deg.size(), ErrorCode::InvalidArgument,
            "polar columns differ in length");
    for (std::size_t i = 1; i < alpha_deg.size(); ++i) {
        require(alpha_deg[i] > alpha_deg[i - 1], ErrorCode::InvalidArgument,
                "polar alpha must be strictly increasing");
    }
    for (double v : cd) require(v >= 0.0, ErrorCode::InvalidArgument, "polar cd must be non-negative");
    require(alpha_deg.front() <= -10.0 && alpha_deg.back() >= 15.0, ErrorCode::InvalidArgument,
            "polar must cover at least [-10, 15] deg");
}

PolarSample polar_lookup(const AirfoilPolar& polar, double alpha_deg) {
    const auto& xs = polar.alpha_deg;
    if (!(alpha_deg >= xs.front() && alpha_deg <= xs.back())) {
        std::ostringstream msg;
        msg << "alpha " << alpha_deg << " deg outside polar [" << xs.front() << ", " << xs.back() << "]";
        throw Error(ErrorCode::OutOfPolarRange, msg.str());
    }
    const double step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    const auto guess = static_cast<std::size_t>((alpha_deg - xs.front()) / step);
    if (guess + 1 < xs.size() && xs[guess] <= alpha_deg && alpha_deg < xs[guess + 1]) {
        const double t = (alpha_deg - xs[guess]) / (xs[guess + 1] - xs[guess]);
        return {polar.cl[guess] + t * (polar.cl[guess + 1] - polar.cl[guess]),
                polar.cd[guess] + t * (polar.cd[guess + 1] - polar.cd[guess])};
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), alpha_deg);
    if (it == xs.end()) return {polar.cl.back(), polar.cd.back()};
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (alpha_deg - xs[lo]) / (xs[hi] - xs[lo]);
    return {polar.cl[lo] + t * (polar.cl[hi] - polar.cl[lo]), polar.cd[lo] + t * (polar.cd[hi] - polar.cd[lo])};
}

AirfoilPolar parametric_polar(double step_deg) {
    require(step_deg > 0.0, ErrorCode::InvalidArgument, "polar step must be positive");
    const double stall = 12.0;
    const double cl_stall = 2.0 * M_PI * stall * kDeg;
    AirfoilPolar p;
    const long n = std::lround(180.0 / step_deg);
    for (long i = -n; i <= n; ++i) {
        const double alpha = static_cast<double>(i) * step_deg;
        const double x = std::abs(alpha);
        const double sign = alpha < 0.0 ? -1.0 : 1.0;
        double cl;
        if (x <= stall) {
            cl = 2.0 * M_PI * alpha * kDeg;
        } else {
            const double w = std::exp(-sq((x - stall) / 8.0));
            const double flat_plate = std::sin(2.0 * x * kDeg);
            cl = sign * (w * cl_stall + (1.0 - w) * flat_plate);
        }
        // Drag is mirrored about 90 deg so reversed flow sees the trailing edge.
        const double xd = x <= 90.0 ? x : 180.0 - x;
        const double cd = 0.01 + 0.02 * sq(xd / 15.0);
        p.alpha_deg.push_back(alpha);
        p.cl.push_back(cl);
        p.cd.push_back(cd);
    }
    return p;
}

AirfoilPolar load_polar_csv(const std::string& path) {
    auto table = csv::read_file(path);
    csv::expect_header(table, {"alpha_deg", "cl", "cd"});
    AirfoilPolar p;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.lines[i];
        if (row.size() != 3) throw ParseError(line, "expected 3 fields");
        p.alpha_deg.push_back(csv::parse_double(row[0], line));
        p.cl.push_back(csv::parse_double(row[1], line));
        p.cd.push_back(csv::parse_double(row[2], line));
    }
    p.validate();
    return p;
}

void write_polar_csv(const AirfoilPolar& polar, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open polar output");
    out.precision(17);
    out << "alpha_deg,cl,cd\n";
    for (std::size_t i = 0; i < polar.alpha_deg.size(); ++i) {
        out << polar.alpha_deg[i] << ',' << polar.cl[i] << ',' << polar.cd[i] << '\n';
    }
}

void RotorConfig::validate() const {
    require(radius > 0.0, ErrorCode::InvalidArgument, "rotor radius must be positive");
    require(blade_count >= 1, ErrorCode::InvalidArgument, "blade count must be >= 1");
    require(air_density > 0.0, ErrorCode::InvalidArgument, "air density must be positive");
    require(rated_power > 0.0, ErrorCode::InvalidArgument, "rated power must be positive");
    require(!sections.empty(), ErrorCode::InvalidArgument, "rotor needs blade sections");
    require(!polars.empty(), ErrorCode::InvalidArgument, "rotor needs at least one polar");
    require(hub_radius >= 0.0 && hub_radius < sections.front().r, ErrorCode::InvalidArgument,
            "hub radius must lie inboard of the first section");
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& s = sections[i];
        require(s.r > 0.0 && s.r <= radius, ErrorCode::InvalidArgument, "section radius outside (0, R]");
        require(s.chord > 0.0, ErrorCode::InvalidArgument, "section chord must be positive");
        require(s.polar_id < polars.size(), ErrorCode::InvalidArgument, "section references unknown polar");
        if (i > 0) require(s.r > sections[i - 1].r, ErrorCode::InvalidArgument, "sections must be ordered by r");
    }
    for (const auto& p : polars) p.validate();
}

double RotorConfig::swept_area() const { return M_PI * radius * radius; }

std::uint64_t RotorConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    auto mix = [&](double v) { mix_bytes(&v, sizeof v); };
    mix(radius);
    mix(hub_radius);
    mix(static_cast<double>(blade_count));
    mix(air_density);
    mix(rated_power);
    for (const auto& s : sections) {
        mix(s.r);
        mix(s.chord);
        mix(s.twist_deg);
        mix(static_cast<double>(s.polar_id));
    }
    for (const auto& p : polars) {
        for (std::size_t i = 0; i < p.alpha_deg.size(); ++i) {
            mix(p.alpha_deg[i]);
            mix(p.cl[i]);
            mix(p.cd[i]);
        }
    }
    return h;
}

double rpm_to_rad_s(double rpm) { return rpm * M_PI / 30.0; }

double tip_speed_ratio(double rpm, double radius, double wind_speed) {
    return rpm_to_rad_s(rpm) * radius / wind_speed;
}

double rpm_for_tsr(double tsr, double radius, double wind_speed) {
    return tsr * wind_speed / radius * 30.0 / M_PI;
}

double prandtl_tip_loss(double r, double radius, int blade_count, double phi_rad) {
    require(r > 0.0 && r <= radius, ErrorCode::InvalidArgument, "tip loss needs 0 < r <= R");
    const double s = std::abs(std::sin(phi_rad));
    if (s < 1e-12) fail(ErrorCode::DegenerateInflow, "inflow angle too small for tip loss");
    const double f = blade_count * (radius - r) / (2.0 * r * s);
    const double F = 2.0 / M_PI * std::acos(std::exp(-f));
    return std::clamp(F, 0.0, 1.0);
}

namespace {

double local_speed_ratio(const BladeSection& section, const OperatingPoint& op) {
    return rpm_to_rad_s(op.rpm) * section.r / (op.wind_speed * std::cos(op.yaw_deg * kDeg));
}

// Momentum/blade-element closure for a given inflow angle.
InductionUpdate closure_at(const BladeSection& section, const OperatingPoint& op, const RotorConfig& cfg,
                           double phi) {
    const auto& polar = cfg.polars[section.polar_id];
    double alpha = phi / kDeg - (section.twist_deg + op.pitch_deg);
    // Full-circle tables are periodic in alpha.
    if (polar.alpha_min() <= -180.0 && polar.alpha_max() >= 180.0) alpha = std::remainder(alpha, 360.0);
    const auto coeff = polar_lookup(polar, alpha);

    const double sphi = std::sin(phi);
    const double cphi = std::cos(phi);
    const double cn = coeff.cl * cphi + coeff.cd * sphi;
    const double ct = coeff.cl * sphi - coeff.cd * cphi;
    const double solidity = cfg.blade_count * section.chord / (2.0 * M_PI * section.r);

    double F = 1.0;
    if (std::abs(sphi) >= 1e-12) F = prandtl_tip_loss(section.r, cfg.radius, cfg.blade_count, phi);

    InductionUpdate out{0.0, 0.0, phi, alpha, F};
    if (cn == 0.0 && ct == 0.0) return out;

    // Negative loading (reversed thrust) is bounded at a = -1 to keep the
    // momentum relation away from its pole at k = -1.
    const double k = std::max(-0.5, solidity * cn / (4.0 * F * sphi * sphi));
    const double a_momentum = k / (1.0 + k);
    out.a = a_momentum > kGlauertOnset ? glauert_induction(k) : a_momentum;

    const double kp = solidity * ct / (4.0 * F * sphi * cphi);
    out.a_prime = kp / (1.0 - kp);
    return out;
}

}  // namespace

InductionUpdate induction_update(const BladeSection& section, const OperatingPoint& op,
                                 const RotorConfig& cfg, double a, double a_prime) {
    const double phi = std::atan2(1.0 - a, local_speed_ratio(section, op) * (1.0 + a_prime));
    return closure_at(section, op, cfg, phi);
}

AnnulusSolution solve_annulus(const BladeSection& section, const OperatingPoint& op,
                              const RotorConfig& cfg, const SolverSettings& settings) {
    AnnulusSolution sol;
    const double u_inf = op.wind_speed;
    const double u_axial = u_inf * std::cos(op.yaw_deg * kDeg);
    const double omega = rpm_to_rad_s(op.rpm);

    if (section.r >= cfg.radius) {
        // Tip station: F = 0, the annulus carries no load.
        const double phi = std::atan2(1.0, omega * section.r / u_axial);
        sol.phi_rad = phi;
        sol.alpha_deg = closure_at(section, op, cfg, phi).alpha_deg;
        sol.tip_loss = 0.0;
        sol.converged = true;
        return sol;
    }

    double best_a = 0.0, best_ap = 0.0, best_res = std::numeric_limits<double>::infinity();
    int total_iterations = 0;
    bool converged = false;
    auto residual = [&](double a, double ap, double& ra, double& rap) {
        ++total_iterations;
        const auto upd = induction_update(section, op, cfg, a, ap);
        ra = upd.a - a;
        rap = upd.a_prime - ap;
        const double res = std::max(std::abs(ra), std::abs(rap));
        if (std::isfinite(res) && res < best_res) {
            best_res = res;
            best_a = a;
            best_ap = ap;
        }
        return res;
    };

    // Newton on r(x) = g(x) - x with a forward-difference Jacobian. The
    // converged point is the same fixed point the damped iteration targets.
    if (settings.newton_steps > 0) {
        double a = 0.0, ap = 0.0, ra, rap;
        double res = residual(a, ap, ra, rap);
        for (int k = 0; k < settings.newton_steps && std::isfinite(res); ++k) {
            if (res < settings.tolerance) {
                converged = true;
                break;
            }
            const double h = 1e-7;
            double ra1, rap1, ra2, rap2;
            residual(a + h, ap, ra1, rap1);
            residual(a, ap + h, ra2, rap2);
            const double j00 = (ra1 - ra) / h, j01 = (ra2 - ra) / h;
            const double j10 = (rap1 - rap) / h, j11 = (rap2 - rap) / h;
            const double det = j00 * j11 - j01 * j10;
            if (!(std::abs(det) > 1e-14)) break;
            const double da = (-ra * j11 + rap * j01) / det;
            const double dap = (-rap * j00 + ra * j10) / det;
            double t = 1.0, next = res;
            double na = a, nap = ap, nra = ra, nrap = rap;
            for (int ls = 0; ls < 6; ++ls, t *= 0.5) {
                na = a + t * da;
                nap = ap + t * dap;
                next = residual(na, nap, nra, nrap);
                if (std::isfinite(next) && next < res) break;
            }
            if (!(std::isfinite(next) && next < res)) break;
            a = na;
            ap = nap;
            ra = nra;
            rap = nrap;
            res = next;
        }
        if (converged) {
            best_a = a;
            best_ap = ap;
        }
    }

    struct Attempt {
        double relaxation;
        int iterations;
    };
    const std::array<Attempt, 3> schedule{{{settings.relaxation, settings.max_iterations},
                                           {settings.relaxation * 0.5, settings.max_iterations * 2},
                                           {settings.relaxation * 0.2, settings.max_iterations * 5}}};
    for (const auto& attempt : schedule) {
        if (converged) break;
        double a = 0.0, ap = 0.0, ra, rap;
        for (int it = 0; it < attempt.iterations; ++it) {
            const double res = residual(a, ap, ra, rap);
            if (!std::isfinite(res)) break;
            if (res < settings.tolerance) {
                converged = true;
                best_a = a;
                best_ap = ap;
                break;
            }
            a += attempt.relaxation * ra;
            ap += attempt.relaxation * rap;
        }
    }

    // Last resort: bracket a root of the inflow-angle residual
    // sin(phi)/(1-a) - cos(phi)/(lambda_r (1+a')). Any root is a fixed point
    // of the induction map, so it is accepted only after re-checking that.
    if (!converged) {
        const double lr = local_speed_ratio(section, op);
        auto phi_residual = [&](double phi) {
            ++total_iterations;
            const auto c = closure_at(section, op, cfg, phi);
            return std::sin(phi) / (1.0 - c.a) - std::cos(phi) / (lr * (1.0 + c.a_prime));
        };
        const int n = 400;
        const double lo_phi = -0.25 * M_PI, hi_phi = 0.75 * M_PI;
        auto at = [&](int i) { return lo_phi + (hi_phi - lo_phi) * static_cast<double>(i) / n; };
        double prev_phi = at(0), prev = phi_residual(prev_phi);
        for (int i = 1; i <= n && !converged; ++i) {
            const double phi = at(i);
            const double cur = phi_residual(phi);
            if (std::isfinite(prev) && std::isfinite(cur) && (prev <= 0.0) != (cur <= 0.0) &&
                std::abs(std::sin(prev_phi)) > 1e-9 && std::abs(std::sin(phi)) > 1e-9) {
                double lo = prev_phi, hi = phi, flo = prev;
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = phi_residual(mid);
                    if ((fm <= 0.0) == (flo <= 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                const auto c = closure_at(section, op, cfg, 0.5 * (lo + hi));
                double ra, rap;
                if (residual(c.a, c.a_prime, ra, rap) < settings.tolerance) {
                    converged = true;
                    best_a = c.a;
                    best_ap = c.a_prime;
                }
            }
            prev_phi = phi;
            prev = cur;
        }
    }

    const auto fin = induction_update(section, op, cfg, best_a, best_ap);
    sol.a = best_a;
    sol.a_prime = best_ap;
    sol.phi_rad = fin.phi_rad;
    sol.alpha_deg = fin.alpha_deg;
    sol.tip_loss = fin.tip_loss;
    sol.residual = std::max(std::abs(fin.a - best_a), std::abs(fin.a_prime - best_ap));
    sol.iterations = total_iterations;
    sol.converged = converged;

    const auto coeff = polar_lookup(cfg.polars[section.polar_id], fin.alpha_deg);
    const double sphi = std::sin(fin.phi_rad);
    const double cphi = std::cos(fin.phi_rad);
    const double cn = coeff.cl * cphi + coeff.cd * sphi;
    const double ct = coeff.cl * sphi - coeff.cd * cphi;
    const double w2 = sq(u_axial * (1.0 - best_a)) + sq(omega * section.r * (1.0 + best_ap));
    const double area = cfg.swept_area();
    sol.dcp_dr = cfg.blade_count * w2 * section.chord * ct * omega * section.r / (area * u_inf * u_inf * u_inf);
    sol.dct_dr = cfg.blade_count * w2 * section.chord * cn / (area * u_inf * u_inf);
    return sol;
}

double AeroSolution::aoa_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : aoa_span) m = std::min(m, v);
    return m;
}

double AeroSolution::aoa_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : aoa_span) m = std::max(m, v);
    return m;
}

AeroSolution solve_rotor(const OperatingPoint& op, const RotorConfig& cfg, const SolverSettings& settings) {
    AeroSolution out;
    out.aoa_span.assign(cfg.sections.size(), std::numeric_limits<double>::quiet_NaN());
    if (!(op.wind_speed > 0.0)) {
        out.converged = false;
        return out;
    }
    out.tsr = tip_speed_ratio(op.rpm, cfg.radius, op.wind_speed);

    if (std::cos(op.yaw_deg * kDeg) < 1e-3) {
        // Rotor edge-on (or facing away): no axial through-flow to extract from.
        for (std::size_t i = 0; i < cfg.sections.size(); ++i) {
            out.aoa_span[i] = -(cfg.sections[i].twist_deg + op.pitch_deg);
        }
        return out;
    }

    std::vector<double> r, dcp, dct;
    r.reserve(cfg.sections.size() + 1);
    dcp.reserve(r.capacity());
    dct.reserve(r.capacity());
    for (std::size_t i = 0; i < cfg.sections.size(); ++i) {
        const auto& section = cfg.sections[i];
        double cp_i = 0.0, ct_i = 0.0;
        try {
            const auto ann = solve_annulus(section, op, cfg, settings);
            out.aoa_span[i] = ann.alpha_deg;
            out.converged = out.converged && ann.converged;
            cp_i = ann.dcp_dr;
            ct_i = ann.dct_dr;
        } catch (const Error&) {
            out.converged = false;
        }
        r.push_back(section.r);
        dcp.push_back(cp_i);
        dct.push_back(ct_i);
    }
    if (r.back() < cfg.radius) {
        r.push_back(cfg.radius);
        dcp.push_back(0.0);
        dct.push_back(0.0);
    }
    double cp = 0.0, ct = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double h = r[i] - r[i - 1];
        cp += 0.5 * h * (dcp[i] + dcp[i - 1]);
        ct += 0.5 * h * (dct[i] + dct[i - 1]);
    }
    out.cp_raw = cp;
    out.cp = std::max(0.0, cp);
    out.ct = ct;
    out.power = out.cp * 0.5 * cfg.air_density * cfg.swept_area() * std::pow(op.wind_speed, 3);
    return out;
}

RotorConfig reference_rotor() {
    RotorConfig cfg;
    cfg.radius = 46.5;
    cfg.hub_radius = 1.5;
    cfg.blade_count = 3;
    cfg.air_density = 1.225;
    cfg.rated_power = 2.3e6;
    cfg.polars.push_back(parametric_polar(0.5));

    const double design_tsr = 8.0;
    const double design_alpha = 10.0;
    const double design_cl = 2.0 * M_PI * design_alpha * kDeg;
    const double max_chord = 3.5;
    const double r0 = 0.1 * cfg.radius;
    const double r_end = 0.985 * cfg.radius;
    const std::size_t n = 20;
    const double u = 8.0;
    const OperatingPoint design{u, 0.0, 0.0, rpm_for_tsr(design_tsr, cfg.radius, u)};

    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sin(0.5 * M_PI * static_cast<double>(i) / static_cast<double>(n - 1));
        const double r = r0 + (r_end - r0) * s;
        const double local_tsr = design_tsr * r / cfg.radius;
        const double phi = 2.0 / 3.0 * std::atan(1.0 / local_tsr);
        const double ideal_chord = 8.0 * M_PI * r * (1.0 - std::cos(phi)) / (cfg.blade_count * design_cl);
        cfg.sections.push_back({r, std::min(max_chord, ideal_chord), phi / kDeg - design_alpha, 0});
        if (ideal_chord <= max_chord) continue;
        // A clipped root chord is under-loaded, so its inflow angle exceeds
        // the ideal one; re-twist until it sits at the design AoA.
        auto& section = cfg.sections.back();
        for (int pass = 0; pass < 100; ++pass) {
            const double twist = solve_annulus(section, design, cfg).phi_rad / kDeg - design_alpha;
            const double change = std::abs(twist - section.twist_deg);
            section.twist_deg = twist;
            if (change < 1e-12) break;
        }
    }
    cfg.validate();
    return cfg;
}

RotorConfig load_rotor_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open rotor config");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("rotor config: ") + e.what());
    }
    RotorConfig cfg;
    try {
        cfg.radius = j.at("radius").get<double>();
        cfg.hub_radius = j.at("hub_radius").get<double>();
        cfg.blade_count = j.at("blade_count").get<int>();
        cfg.air_density = j.value("air_density", 1.225);
        cfg.rated_power = j.value("rated_power", 2.3e6);
        for (const auto& s : j.at("sections")) {
            cfg.sections.push_back({s.at("r").get<double>(), s.at("chord").get<double>(), s.at("twist").get<double>(),
                                    s.value("polar_id", std::size_t{0})});
        }
        std::string base = path;
        const auto slash = base.find_last_of('/');
        base = slash == std::string::npos ? std::string{} : base.substr(0, slash + 1);
        for (const auto& p : j.at("polars")) {
            if (p.is_string() && p.get<std::string>() == "parametric") {
                cfg.polars.push_back(parametric_polar(0.5));
            } else {
                std::string file = p.at("csv").get<std::string>();
                if (!file.empty() && file.front() != '/') file = base + file;
                cfg.polars.push_back(load_polar_csv(file));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("rotor config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_rotor_config(const RotorConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["radius"] = cfg.radius;
    j["hub_radius"] = cfg.hub_radius;
    j["blade_count"] = cfg.blade_count;
    j["air_density"] = cfg.air_density;
    j["rated_power"] = cfg.rated_power;
    j["sections"] = nlohmann::json::array();
    for (const auto& s : cfg.sections) {
        j["sections"].push_back({{"r", s.r}, {"chord", s.chord}, {"twist", s.twist_deg}, {"polar_id", s.polar_id}});
    }
    // Polars are written alongside as CSV so the config stays hand-editable.
    std::string stem = path;
    if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".json") stem.resize(stem.size() - 5);
    j["polars"] = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.polars.size(); ++i) {
        const std::string file = stem + "_polar" + std::to_string(i) + ".csv";
        write_polar_csv(cfg.polars[i], file);
        const auto slash = file.find_last_of('/');
        j["polars"].push_back({{"csv", slash == std::string::npos ? file : file.substr(slash + 1)}});
    }
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open rotor config output");
    out << std::setw(2) << j << '\n';
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

const char* axis_name(SurfaceAxis axis) {
    switch (axis) {
        case SurfaceAxis::Tsr: return "tsr";
        case SurfaceAxis::Pitch: return "pitch";
        case SurfaceAxis::Yaw: return "yaw";
    }
    return "?";
}

SurfaceAxis parse_axis(const std::string& name) {
    if (name == "tsr") return SurfaceAxis::Tsr;
    if (name == "pitch") return SurfaceAxis::Pitch;
    if (name == "yaw") return SurfaceAxis::Yaw;
    fail(ErrorCode::InvalidArgument, "unknown surface axis '" + name + "'");
}

CpSurface cp_surface(const RotorConfig& cfg, const SurfaceSpec& spec) {
    require(spec.row_axis != spec.col_axis, ErrorCode::InvalidArgument, "surface axes must differ");
    require(!spec.row_values.empty() && !spec.col_values.empty(), ErrorCode::InvalidArgument, "empty surface axis");
    CpSurface s{spec.row_axis, spec.col_axis, spec.row_values, spec.col_values, {}, {}};
    const std::size_t n = spec.row_values.size() * spec.col_values.size();
    s.cp.assign(n, std::numeric_limits<double>::quiet_NaN());
    s.valid.assign(n, false);

    for (std::size_t i = 0; i < spec.row_values.size(); ++i) {
        for (std::size_t j = 0; j < spec.col_values.size(); ++j) {
            double tsr = spec.fixed_rpm ? tip_speed_ratio(*spec.fixed_rpm, cfg.radius, spec.wind_speed) : spec.tsr;
            double pitch = spec.pitch_deg;
            double yaw = spec.yaw_deg;
            auto assign = [&](SurfaceAxis axis, double v) {
                switch (axis) {
                    case SurfaceAxis::Tsr: tsr = v; break;
                    case SurfaceAxis::Pitch: pitch = v; break;
                    case SurfaceAxis::Yaw: yaw = v; break;
                }
            };
            assign(spec.row_axis, spec.row_values[i]);
            assign(spec.col_axis, spec.col_values[j]);

            OperatingPoint op{spec.wind_speed, yaw, pitch, 0.0};
            if (spec.fixed_rpm) {
                op.rpm = *spec.fixed_rpm;
                op.wind_speed = rpm_to_rad_s(op.rpm) * cfg.radius / tsr;
            } else {
                op.rpm = rpm_for_tsr(tsr, cfg.radius, op.wind_speed);
            }
            const auto sol = solve_rotor(op, cfg);
            if (sol.converged) {
                s.cp[i * spec.col_values.size() + j] = sol.cp;
                s.valid[i * spec.col_values.size() + j] = true;
            }
        }
    }
    return s;
}

void write_surface_csv(const CpSurface& surface, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open surface output");
    out.precision(10);
    out << axis_name(surface.row_axis) << '\\' << axis_name(surface.col_axis);
    for (double c : surface.col_values) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < surface.row_values.size(); ++i) {
        out << surface.row_values[i];
        for (std::size_t j = 0; j < surface.col_values.size(); ++j) {
            out << ',';
            if (surface.is_valid(i, j)) out << surface.at(i, j);
            else out << "nan";
        }
        out << '\n';
    }
}

namespace {

double cp_at(const RotorConfig& cfg, double tsr, double pitch) {
    const double u = 8.0;
    const auto sol = solve_rotor({u, 0.0, pitch, rpm_for_tsr(tsr, cfg.radius, u)}, cfg);
    return sol.converged ? sol.cp : -1.0;
}

template <typename F>
double golden_max(F&& f, double lo, double hi, double& best_x) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 40; ++i) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    best_x = f1 > f2 ? x1 : x2;
    return std::max(f1, f2);
}

NominalPoint compute_nominal(const RotorConfig& cfg) {
    NominalPoint best{-1.0, 8.0, 0.0};
    for (int i = 0; i <= 90; ++i) {
        const double tsr = 3.0 + 0.1 * i;
        for (int j = 0; j <= 80; ++j) {
            const double pitch = -20.0 + 0.5 * j;
            const double cp = cp_at(cfg, tsr, pitch);
            if (cp > best.cp) best = {cp, tsr, pitch};
        }
    }
    for (int round = 0; round < 4; ++round) {
        double x = best.tsr;
        const double cp_t = golden_max([&](double t) { return cp_at(cfg, t, best.pitch_deg); },
                                       std::max(3.0, best.tsr - 0.1), std::min(12.0, best.tsr + 0.1), x);
        if (cp_t > best.cp) best = {cp_t, x, best.pitch_deg};
        double y = best.pitch_deg;
        const double cp_p = golden_max([&](double p) { return cp_at(cfg, best.tsr, p); },
                                       std::max(-20.0, best.pitch_deg - 0.5), std::min(20.0, best.pitch_deg + 0.5), y);
        if (cp_p > best.cp) best = {cp_p, best.tsr, y};
    }
    return best;
}

}  // namespace

NominalPoint cp_nominal_point(const RotorConfig& cfg) {
    static std::mutex mutex;
    static std::unordered_map<std::uint64_t, NominalPoint> cache;
    const auto key = cfg.hash();
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const auto p = compute_nominal(cfg);
    cache.emplace(key, p);
    return p;
}

double cp_nominal(const RotorConfig& cfg) { return cp_nominal_point(cfg).cp; }

}  // namespace windrl::aero
