#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace stlcbf {

/// Exponential funnel gamma(t) = (gamma0 - gamma_inf) exp(-decay t) + gamma_inf.
struct GammaParams {
    double gamma0 = 0.0;
    double gamma_inf = 1.0;
    double decay = 0.0;  // 1/s
    double t_star = 0.0;  // s

    bool operator==(const GammaParams&) const = default;
};

inline double gamma_eval(const GammaParams& g, double t) {
    return (g.gamma0 - g.gamma_inf) * std::exp(-g.decay * t) + g.gamma_inf;
}

/// d gamma / dt; non-negative whenever gamma0 < gamma_inf.
inline double gamma_rate(const GammaParams& g, double t) {
    return -g.decay * (g.gamma0 - g.gamma_inf) * std::exp(-g.decay * t);
}

/// Funnel reaching level `r` exactly at `t_star` (or staying at gamma0 >= r).
///
/// Requires gamma0 < gamma_inf and r < gamma_inf. When gamma0 < r the decay
/// is -ln((r - gamma_inf) / (gamma0 - gamma_inf)) / t_star, which needs
/// t_star > 0; otherwise the curve is constant.
inline GammaParams make_gamma(double gamma0, double gamma_inf, double r, double t_star) {
    if (!(gamma0 < gamma_inf)) throw std::invalid_argument("gamma: need gamma0 < gamma_inf");
    if (!(r < gamma_inf)) throw std::invalid_argument("gamma: need r < gamma_inf");
    if (t_star < 0.0) throw std::invalid_argument("gamma: t_star must be non-negative");
    GammaParams g{gamma0, gamma_inf, 0.0, t_star};
    if (gamma0 < r) {
        if (t_star <= 0.0) throw std::invalid_argument("gamma: gamma0 < r needs t_star > 0");
        g.decay = -std::log((r - gamma_inf) / (gamma0 - gamma_inf)) / t_star;
    }
    return g;
}

}  // namespace stlcbf
