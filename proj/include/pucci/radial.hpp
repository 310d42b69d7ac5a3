#pragma once

// Radial reduction of the Pucci problem on the annulus rho < |x| < R.

#include <cmath>
#include <vector>

#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"

namespace pucci {

/// Ellipticity selector: Lambda for s >= 0, lambda for s < 0.
inline double theta(double s, const Ellipticity& ell) { return s >= 0 ? ell.Lambda : ell.lambda; }

/// M+ of a radial Hessian, whose eigenvalues are wpp (once) and wp/r
/// (N-1 times).
inline double radial_pucci(double wpp, double wp, double r, const Ellipticity& ell) {
    detail::require(r > 0, "radial_pucci: r must be positive");
    return theta(wpp, ell) * wpp + theta(wp, ell) * (ell.dim - 1) * wp / r;
}

inline double radial_pucci(double wpp, double wp, double r, const Ellipticity& ell, PucciSign sign) {
    // M-(X) = -M+(-X)
    return sign == PucciSign::plus ? radial_pucci(wpp, wp, r, ell) : -radial_pucci(-wpp, -wp, r, ell);
}

/// F2+ / F2- of a radial profile: M± plus or minus b|w'|.
inline double radial_f2(double wpp, double wp, double r, const Ellipticity& ell, double b, PucciSign sign) {
    const double m = radial_pucci(wpp, wp, r, ell, sign);
    return sign == PucciSign::plus ? m + b * std::abs(wp) : m - b * std::abs(wp);
}

/// Pointwise residual of the radial equation
///   theta(w'')w'' + theta(w')(N-1)w'/r + B|w'|^2 + b|w'| - c0 w + M (r-rho)^mu (w+delta)^-alpha
/// for given derivatives.
inline double sabu_pointwise(double w, double wp, double wpp, double r, const ProblemSpec& spec, double delta) {
    const auto& g = spec.growth;
    const auto& f = spec.forcing;
    double res = radial_pucci(wpp, wp, r, spec.ellipticity) + g.B * wp * wp + g.b * std::abs(wp) - g.c0 * w;
    if (f.M != 0.0) {
        const double dist = r - spec.geometry.rho;
        res += f.M * std::pow(dist, f.mu) * std::pow(w + delta, -f.alpha);
    }
    return res;
}

/// Sum of the magnitudes of the individual terms, used to scale residuals.
inline double sabu_term_scale(double w, double wp, double wpp, double r, const ProblemSpec& spec, double delta) {
    const auto& ell = spec.ellipticity;
    const auto& g = spec.growth;
    const auto& f = spec.forcing;
    double s = std::abs(theta(wpp, ell) * wpp) + std::abs(theta(wp, ell) * (ell.dim - 1) * wp / r) +
               g.B * wp * wp + g.b * std::abs(wp) + g.c0 * std::abs(w);
    if (f.M != 0.0)
        s += f.M * std::pow(r - spec.geometry.rho, f.mu) * std::pow(w + delta, -f.alpha);
    return s;
}

/// Residual at interior nodes by centered differences; boundary entries are 0.
inline GridFunction sabu_residual(const GridFunction& w, const ProblemSpec& spec, double delta) {
    detail::require(delta >= 0, "sabu_residual: delta must be nonnegative");
    const std::size_t n = w.size();
    const auto d1 = w.derivative1();
    const auto d2 = w.derivative2();
    std::vector<double> res(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (spec.forcing.M != 0.0 && delta == 0.0 && !(w[i] > 0))
            throw ValidationError("sabu_residual: singularity breach, w <= 0 at node " + std::to_string(i));
        res[i] = sabu_pointwise(w[i], d1[i], d2[i], w.r(i), spec, delta);
    }
    return GridFunction(w.grid(), std::move(res));
}

/// Residual divided nodewise by 1 + (sum of term magnitudes) + (size of the
/// individual stencil products), so that rounding in the difference
/// quotients on fine cells does not count as residual.
inline GridFunction sabu_residual_scaled(const GridFunction& w, const ProblemSpec& spec, double delta) {
    const auto raw = sabu_residual(w, spec, delta);
    const auto d1 = w.derivative1();
    const auto d2 = w.derivative2();
    const auto& ell = spec.ellipticity;
    std::vector<double> out(w.size(), 0.0);
    for (std::size_t i = 1; i + 1 < w.size(); ++i) {
        const auto st = centered_stencil(w.grid(), i);
        double s1 = 0.0, s2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            s1 += std::abs(st.d1[k] * w[i - 1 + k]);
            s2 += std::abs(st.d2[k] * w[i - 1 + k]);
        }
        const double stencil = theta(d2[i], ell) * s2 + theta(d1[i], ell) * (ell.dim - 1) / w.r(i) * s1;
        out[i] = raw[i] / (1.0 + sabu_term_scale(w[i], d1[i], d2[i], w.r(i), spec, delta) + stencil);
    }
    return GridFunction(w.grid(), std::move(out));
}

struct IntegratingFactors {
    GridFunction chi;
    GridFunction xi;
    GridFunction xi_tilde;
};

/// chi = theta(w')(N-1)/(theta(w'') r), xi = exp(int_1^r chi), xi~ = xi/theta(w'').
/// chi*r is piecewise constant in policy, so the integral is taken with the
/// trapezoid rule in the variable log r, which is exact when the policy is
/// frozen and keeps xi between the two power envelopes.
inline IntegratingFactors integrating_factors(const GridFunction& w, const Ellipticity& ell) {
    validate(ell);
    const auto& g = w.grid();
    const std::size_t n = w.size();
    const auto d1 = w.derivative1();
    const auto d2 = w.derivative2();
    std::vector<double> k(n), chi(n), xi(n), xt(n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = theta(d1[i], ell) * (ell.dim - 1) / theta(d2[i], ell);
        chi[i] = k[i] / g[i];
    }
    // cumulative integral from rho, shifted so that it vanishes at r = 1
    std::vector<double> I(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) I[i] = I[i - 1] + 0.5 * (k[i - 1] + k[i]) * std::log(g[i] / g[i - 1]);
    double I1 = 0.0;
    if (g.rho() >= 1.0) {
        I1 = -k[0] * std::log(g.rho());  // int_1^rho with the policy of the first node
        for (auto& v : I) v += I1;
    } else if (g.R() <= 1.0) {
        const double tail = k[n - 1] * std::log(1.0 / g.R());
        const double shift = I[n - 1] + tail;
        for (auto& v : I) v -= shift;
    } else {
        const std::size_t c = g.locate(1.0);
        const double frac = std::log(1.0 / g[c]) / std::log(g[c + 1] / g[c]);
        const double kc = k[c] + frac * (k[c + 1] - k[c]);
        const double at1 = I[c] + 0.5 * (k[c] + kc) * std::log(1.0 / g[c]);
        for (auto& v : I) v -= at1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        xi[i] = std::exp(I[i]);
        xt[i] = xi[i] / theta(d2[i], ell);
    }
    return {GridFunction(g, chi), GridFunction(g, xi), GridFunction(g, xt)};
}

struct HopfPoint {
    double radius = 0.0;
    bool hopf_ok = false;  ///< false when the first slope is already nonpositive
};

/// Largest node radius up to which every forward slope is positive.
inline HopfPoint hopf_point(const GridFunction& w) {
    const std::size_t n = w.size();
    std::size_t k = 0;
    while (k + 1 < n && w[k + 1] - w[k] > 0) ++k;
    return {w.r(k), k > 0};
}

} // namespace pucci
