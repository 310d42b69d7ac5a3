#pragma once

// Boundary-rate fits, weak-Harnack ratios and oscillation decay of u/d for
// radial solutions, with d = r - rho the distance to the inner sphere.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"
#include "pucci/transforms.hpp"

namespace pucci {

enum class Regime { linear, log_corrected, power };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::linear: return "linear";
    case Regime::log_corrected: return "log_corrected";
    case Regime::power: return "power";
    }
    return "?";
}

struct RegimePrediction {
    Regime regime = Regime::linear;
    double expected_exponent = 1.0;
    double log_power = 0.0;  ///< exponent of (D - log d), log-corrected regime only
};

/// alpha < 1+mu: linear; alpha = 1+mu: d (D - log d)^{1/(1+alpha)};
/// alpha > 1+mu: d^{(mu+2)/(1+alpha)}.
inline RegimePrediction regime_predict(double mu, double alpha) {
    detail::require(mu >= 0, "regime_predict: mu must be nonnegative");
    detail::require(alpha > 0, "regime_predict: alpha must be positive");
    const double gap = alpha - (1.0 + mu);
    if (std::abs(gap) <= 1e-12 * (1.0 + mu)) return {Regime::log_corrected, 1.0, 1.0 / (1.0 + alpha)};
    if (gap < 0) return {Regime::linear, 1.0, 0.0};
    return {Regime::power, (mu + 2.0) / (1.0 + alpha), 0.0};
}

struct FitWindow {
    double d_min = 1e-4;
    double d_max = 1e-2;
};

struct RateReport {
    Regime regime = Regime::power;
    double fitted_exponent = 0.0;
    std::optional<double> fitted_D;
    double prefactor = 0.0;
    double fit_residual = 0.0;  ///< RMS in log coordinates
    FitWindow window;
    double expected_exponent = 0.0;
    std::size_t nodes = 0;
    bool degenerate = false;    ///< log-corrected fit ran into the edge of the D bracket
};

namespace detail {

struct WindowData {
    std::vector<double> logd, logu, d;
};

inline WindowData window_data(const GridFunction& u, const FitWindow& w) {
    const auto& g = u.grid();
    require(w.d_min > 0 && w.d_max > w.d_min, "fit window must satisfy 0 < d_min < d_max");
    require(w.d_max < 0.5 * (g.R() - g.rho()), "fit window must lie inside (0, (R - rho)/2)");
    WindowData out;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u.r(i) - g.rho();
        if (d < w.d_min || d > w.d_max) continue;
        if (!(u[i] > 0)) throw ValidationError("fit: u must be positive on the window");
        out.d.push_back(d);
        out.logd.push_back(std::log(d));
        out.logu.push_back(std::log(u[i]));
    }
    if (out.d.size() < 20)
        throw ValidationError("fit window too narrow: " + std::to_string(out.d.size()) + " nodes, need 20");
    return out;
}

inline double rms(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return std::sqrt(s / static_cast<double>(r.size()));
}

/// Golden-section minimization on [a, b]; returns the abscissa.
template <class F>
double golden_min(F&& f, double a, double b, double tol) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

} // namespace detail

/// Least-squares line through (log d, log u) on the window.
inline RateReport fit_power(const GridFunction& u, const FitWindow& window = {}) {
    const auto wd = detail::window_data(u, window);
    const std::size_t n = wd.d.size();
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = wd.logd[i];
        y(i) = wd.logu[i];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = y(i) - c(0) - c(1) * wd.logd[i];
    RateReport rep;
    rep.regime = Regime::power;
    rep.fitted_exponent = c(1);
    rep.prefactor = std::exp(c(0));
    rep.fit_residual = detail::rms(res);
    rep.window = window;
    rep.expected_exponent = c(1);
    rep.nodes = n;
    return rep;
}

/// Fit of a d (D - log d)^{1/(1+alpha)}: golden section on D over [0, 1e3]
/// (kept above log d_max), closed-form a for each D.
inline RateReport fit_log_corrected(const GridFunction& u, double alpha, const FitWindow& window = {}) {
    detail::require(alpha > 0, "fit_log_corrected: alpha must be positive");
    const auto wd = detail::window_data(u, window);
    const std::size_t n = wd.d.size();
    const double q = 1.0 / (1.0 + alpha);
    std::vector<double> res(n);
    auto residual_at = [&](double D, double* loga) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            res[i] = wd.logu[i] - wd.logd[i] - q * std::log(D - wd.logd[i]);
            mean += res[i];
        }
        mean /= static_cast<double>(n);
        for (auto& x : res) x -= mean;
        if (loga) *loga = mean;
        return detail::rms(res);
    };
    const double lo = std::max(0.0, std::log(window.d_max) + 1e-9), hi = 1e3;
    const double D = detail::golden_min([&](double x) { return residual_at(x, nullptr); }, lo, hi, 1e-15);
    double loga = 0.0;
    RateReport rep;
    rep.regime = Regime::log_corrected;
    rep.fit_residual = residual_at(D, &loga);
    rep.prefactor = std::exp(loga);
    rep.fitted_D = D;
    rep.fitted_exponent = 1.0;
    rep.expected_exponent = 1.0;
    rep.window = window;
    rep.nodes = n;
    rep.degenerate = (D - lo) < 1e-6 * (hi - lo) || (hi - D) < 1e-6 * (hi - lo);
    return rep;
}

/// Fit of a d^p (D - log d)^{1/(1+alpha)} with the exponent p free: for each D
/// a least-squares line in log coordinates, golden section on D.
inline RateReport fit_log_corrected_free(const GridFunction& u, double alpha, const FitWindow& window = {}) {
    detail::require(alpha > 0, "fit_log_corrected: alpha must be positive");
    const auto wd = detail::window_data(u, window);
    const std::size_t n = wd.d.size();
    const double q = 1.0 / (1.0 + alpha);
    double mx = 0.0;
    for (double x : wd.logd) mx += x;
    mx /= static_cast<double>(n);
    double sxx = 0.0;
    for (double x : wd.logd) sxx += (x - mx) * (x - mx);
    std::vector<double> res(n);
    auto fit_at = [&](double D, double* slope, double* icept) {
        double my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            res[i] = wd.logu[i] - q * std::log(D - wd.logd[i]);
            my += res[i];
        }
        my /= static_cast<double>(n);
        double sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) sxy += (wd.logd[i] - mx) * (res[i] - my);
        const double p = sxy / sxx, c = my - p * mx;
        for (std::size_t i = 0; i < n; ++i) res[i] -= c + p * wd.logd[i];
        if (slope) *slope = p;
        if (icept) *icept = c;
        return detail::rms(res);
    };
    const double lo = std::max(0.0, std::log(window.d_max) + 1e-9), hi = 1e3;
    const double D = detail::golden_min([&](double x) { return fit_at(x, nullptr, nullptr); }, lo, hi, 1e-15);
    double p = 0.0, c = 0.0;
    RateReport rep;
    rep.regime = Regime::log_corrected;
    rep.fit_residual = fit_at(D, &p, &c);
    rep.fitted_exponent = p;
    rep.prefactor = std::exp(c);
    rep.fitted_D = D;
    rep.expected_exponent = 1.0;
    rep.window = window;
    rep.nodes = n;
    rep.degenerate = (D - lo) < 1e-6 * (hi - lo) || (hi - D) < 1e-6 * (hi - lo);
    return rep;
}

/// Regime verdict from the fits: a power-law slope clearly below one is the
/// power regime; otherwise the log-corrected model wins if it is a genuine
/// (non-degenerate) fit with at most half the straight-line residual, else
/// linear. For the log-corrected verdict the exponent comes from the fit with
/// a free power of d.
inline RateReport classify_rate(const GridFunction& u, double alpha, const FitWindow& window = {}) {
    auto fp = fit_power(u, window);
    if (fp.fitted_exponent < 0.85) return fp;
    const auto fl = fit_log_corrected(u, alpha, window);
    if (!fl.degenerate && fl.fit_residual < 0.5 * fp.fit_residual) {
        auto free = fit_log_corrected_free(u, alpha, window);
        auto out = fl;
        out.fitted_exponent = free.fitted_exponent;
        return out;
    }
    fp.regime = Regime::linear;
    fp.expected_exponent = 1.0;
    return fp;
}

// ---------------------------------------------------------------------------

struct HarnackReport {
    double p_exponent = 1.0;
    std::vector<double> scales;
    std::vector<double> ratios;
    bool transformed = false;
};

struct HarnackOptions {
    double p = 1.0;
    double delta = 0.1;  ///< slab thickness fraction
};

namespace detail {

/// Trapezoid integral of f over [a, b], using grid nodes inside plus
/// interpolated end points.
inline double strip_integral(const RadialGrid& g, const std::vector<double>& f, double a, double b) {
    auto value = [&](double r) {
        const std::size_t i = g.locate(r);
        if (i + 1 >= g.size()) return f.back();
        const double t = (r - g[i]) / (g[i + 1] - g[i]);
        return f[i] + t * (f[i + 1] - f[i]);
    };
    std::vector<double> xs{a}, ys{value(a)};
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] > a && g[i] < b) {
            xs.push_back(g[i]);
            ys.push_back(f[i]);
        }
    xs.push_back(b);
    ys.push_back(value(b));
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    return s;
}

} // namespace detail

/// For each scale R: v = u/(r - rho) (after the down-map when `transform`),
/// B = (rho, rho + dR), B* = (rho + dR/2, rho + 3dR/2), ratio
///   [mean over B* of v^p]^{1/p} / (inf over B of v + R ||g||),
/// with g = M d^mu u^-alpha (times e^{-l1 u} after the down-map) and ||g||
/// the one-dimensional L^N norm over B*.
inline HarnackReport harnack_ratio(const GridFunction& u, const ProblemSpec& spec, const std::vector<double>& scales,
                                   bool transform, const HarnackOptions& opt = {}) {
    validate(spec);
    detail::require(opt.p > 0, "harnack: p must be positive");
    detail::require(!scales.empty(), "harnack: need at least one scale");
    const auto& g = u.grid();
    const std::size_t n = u.size();
    const double rho = g.rho();
    const double l1 = derived_constants(spec.growth, spec.ellipticity).l1;
    const auto& f = spec.forcing;
    std::vector<double> v(n, 0.0), vp(n, 0.0), gN(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (u[i] < 0) throw ValidationError("harnack: u must be nonnegative");
    for (std::size_t i = 1; i < n; ++i) {
        const double d = g[i] - rho;
        const double U = transform ? transform_down(u[i], l1) : u[i];
        v[i] = U / d;
        vp[i] = std::pow(v[i], opt.p);
        double src = 0.0;
        if (f.M != 0.0 && u[i] > 0) {
            src = f.M * std::pow(d, f.mu) * std::pow(u[i], -f.alpha);
            if (transform) src *= std::exp(-l1 * u[i]);
        }
        gN[i] = std::pow(src, spec.ellipticity.dim);
    }
    // v at the boundary node is the one-sided slope limit
    v[0] = v[1];
    vp[0] = vp[1];
    gN[0] = gN[1];

    HarnackReport rep;
    rep.p_exponent = opt.p;
    rep.transformed = transform;
    for (double R : scales) {
        detail::require(R > 0, "harnack: scales must be positive");
        const double t = opt.delta * R;
        const double a = rho + t / 2.0, b = rho + 1.5 * t;
        detail::require(b <= g.R(), "harnack: scale exceeds the annulus");
        double inf_v = std::numeric_limits<double>::infinity();
        std::size_t count = 0;
        for (std::size_t i = 1; i < n && g[i] < rho + t; ++i) {
            inf_v = std::min(inf_v, v[i]);
            ++count;
        }
        if (count == 0) throw ValidationError("harnack: empty region at scale " + format_double(R));
        const double mean = detail::strip_integral(g, vp, a, b) / (b - a);
        const double norm = std::pow(detail::strip_integral(g, gN, a, b), 1.0 / spec.ellipticity.dim);
        const double den = inf_v + R * norm;
        if (!(den > 0)) {
            if (mean > 0) throw NumericalError("harnack: inf v = 0 with positive mean, ratio infinite");
            throw NumericalError("harnack: degenerate ratio 0/0");
        }
        rep.scales.push_back(R);
        rep.ratios.push_back(std::pow(mean, 1.0 / opt.p) / den);
    }
    return rep;
}

struct OscillationReport {
    std::vector<double> scales;
    std::vector<double> osc_values;
    std::optional<double> fitted_tau;  ///< empty when u/d is constant ("already C1 at the boundary")
    double fit_residual = 0.0;
    double recursion_gamma = 0.0;
    double nu = 0.5;
    std::string note;
};

/// O(R_k) = max - min of u/(r - rho) over rho < r < rho + R_k.
inline OscillationReport oscillation_decay(const GridFunction& u, double nu, const std::vector<double>& scales) {
    detail::require(nu > 0 && nu < 1, "oscillation: nu must lie in (0,1)");
    if (scales.size() < 3) throw ValidationError("oscillation: need at least 3 scales");
    const auto& g = u.grid();
    const double rho = g.rho();
    auto sorted = scales;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    OscillationReport rep;
    rep.nu = nu;
    for (double R : sorted) {
        double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < u.size() && g[i] - rho < R; ++i) {
            const double v = u[i] / (g[i] - rho);
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        if (!(mx >= mn)) throw ValidationError("oscillation: no nodes below scale " + format_double(R));
        rep.scales.push_back(R);
        rep.osc_values.push_back(mx - mn);
    }
    // log-log fit over the scales with a positive oscillation
    std::vector<double> x, y;
    for (std::size_t k = 0; k < rep.scales.size(); ++k)
        if (rep.osc_values[k] > 0) {
            x.push_back(std::log(rep.scales[k]));
            y.push_back(std::log(rep.osc_values[k]));
        }
    const double top = rep.osc_values.front();
    if (x.size() < 3 || top <= 1e-14 * (1.0 + u.max_abs())) {
        rep.note = "already C1 at boundary";
        return rep;
    }
    Eigen::MatrixXd A(x.size(), 2);
    Eigen::VectorXd b(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        A(k, 0) = 1.0;
        A(k, 1) = x[k];
        b(k) = y[k];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    std::vector<double> res(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) res[k] = y[k] - c(0) - c(1) * x[k];
    rep.fitted_tau = c(1);
    rep.fit_residual = detail::rms(res);
    // gamma in O(2R) <= gamma (O(R/2) + C R^{1-nu}); C calibrated so that the
    // forcing term matches the oscillation at the largest scale
    const double C = top / std::pow(rep.scales.front(), 1.0 - nu);
    auto osc_at = [&](double R) {
        double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < u.size() && g[i] - rho < R; ++i) {
            const double v = u[i] / (g[i] - rho);
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        return mx >= mn ? mx - mn : 0.0;
    };
    for (double R : rep.scales) {
        if (2.0 * R > rep.scales.front() * (1.0 + 1e-12)) continue;
        const double den = osc_at(R / 2.0) + C * std::pow(R, 1.0 - nu);
        if (den > 0) rep.recursion_gamma = std::max(rep.recursion_gamma, osc_at(2.0 * R) / den);
    }
    return rep;
}

/// Dyadic scales top, top/2, ..., top/2^{count-1}.
inline std::vector<double> dyadic_scales(double top, int count) {
    std::vector<double> s;
    for (int k = 0; k < count; ++k) s.push_back(std::ldexp(top, -k));
    return s;
}

} // namespace pucci
