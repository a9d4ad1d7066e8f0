#pragma once

// Reference computations written independently of the library. They share no
// code with src/ and favour the most literal formulation over speed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

inline double tip_loss(double r, double R, int B, double phi) {
    const double f = 0.5 * B * (R - r) / (r * std::fabs(std::sin(phi)));
    return 2.0 / M_PI * std::acos(std::exp(-f));
}

inline double tsr(double rpm, double R, double U) { return rpm * 2.0 * M_PI / 60.0 * R / U; }

inline double lerp(double x0, double y0, double x1, double y1, double x) {
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

// Scalar Adam on f(w) = w^2, with bias correction, literal textbook form.
struct ScalarAdam {
    double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0.0, v = 0.0;
    int t = 0;

    double step(double w, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return w - lr * mh / (std::sqrt(vh) + eps);
    }
};

// Deterministic MDP given flat next/reward tables (n_states x n_actions).
struct ToyMdp {
    std::size_t n = 0;
    int a = 7;
    std::vector<std::uint32_t> next;
    std::vector<double> reward;
    std::vector<bool> terminal;
};

// Solves (I - gamma P_pi) V = r_pi by Gaussian elimination with partial
// pivoting. Terminal states have V = 0.
inline std::vector<double> policy_values(const ToyMdp& m, const std::vector<int>& pi, double gamma) {
    const std::size_t n = m.n;
    std::vector<double> A(n * (n + 1), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        A[s * (n + 1) + s] = 1.0;
        if (m.terminal[s]) continue;
        const std::size_t k = s * m.a + pi[s];
        const std::size_t s2 = m.next[k];
        if (!m.terminal[s2]) A[s * (n + 1) + s2] -= gamma;
        A[s * (n + 1) + n] = m.reward[k];
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(A[r * (n + 1) + c]) > std::fabs(A[piv * (n + 1) + c])) piv = r;
        for (std::size_t j = 0; j <= n; ++j) std::swap(A[c * (n + 1) + j], A[piv * (n + 1) + j]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = A[r * (n + 1) + c] / A[c * (n + 1) + c];
            for (std::size_t j = c; j <= n; ++j) A[r * (n + 1) + j] -= f * A[c * (n + 1) + j];
        }
    }
    std::vector<double> v(n);
    for (std::size_t s = 0; s < n; ++s) v[s] = A[s * (n + 1) + n] / A[s * (n + 1) + s];
    return v;
}

// Best discounted return from every state over all a^n stationary policies.
inline std::vector<double> exhaustive_optimum(const ToyMdp& m, double gamma) {
    std::vector<double> best(m.n, -std::numeric_limits<double>::infinity());
    std::vector<int> pi(m.n, 0);
    for (;;) {
        const auto v = policy_values(m, pi, gamma);
        for (std::size_t s = 0; s < m.n; ++s) best[s] = std::max(best[s], v[s]);
        std::size_t i = 0;
        while (i < m.n && ++pi[i] == m.a) pi[i++] = 0;
        if (i == m.n) break;
    }
    return best;
}

// Win flags recomputed from a reward log: step t wins when it and the
// preceding streak-1 steps were all unpenalized with base >= threshold.
inline std::vector<bool> window_wins(const std::vector<double>& base, const std::vector<bool>& penalized,
                                     double threshold, int streak) {
    std::vector<bool> won(base.size(), false);
    for (std::size_t t = 0; t < base.size(); ++t) {
        if (t + 1 < static_cast<std::size_t>(streak)) continue;
        bool ok = true;
        for (std::size_t k = t + 1 - streak; k <= t; ++k) ok = ok && !penalized[k] && base[k] >= threshold;
        won[t] = ok;
    }
    return won;
}

// Largest z-score of observed counts against multinomial expectations.
inline double max_z(const std::vector<double>& counts, const std::vector<double>& probs) {
    double n = 0;
    for (double c : counts) n += c;
    double z = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double sd = std::sqrt(n * probs[i] * (1 - probs[i]));
        z = std::max(z, std::fabs(counts[i] - n * probs[i]) / sd);
    }
    return z;
}

}  // namespace oracle
