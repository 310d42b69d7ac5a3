#pragma once

// Monotone solver for the regularized radial problem
//   F1+(w) - c0 w + M (r-rho)^mu (w+delta)^-alpha = 0,  w(rho) = 0, w(R) = L,
// delta-continuation towards the singular problem, and a comparison audit.
//
// The discrete operator G is convex in w (theta(s)s, B s^2, b|s| and the
// singular term are all convex) and -G' is an M-matrix. Newton's method on a
// convex monotone system is Howard's policy iteration: from a subsolution
// every iterate is again a subsolution, the sequence is nondecreasing, and it
// never passes any supersolution.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"
#include "pucci/radial.hpp"
#include "pucci/tridiag.hpp"

namespace pucci {

struct SolveConfig {
    double delta0 = 1e-2;
    int delta_steps = 8;
    double inner_tol = 1e-10;
    int max_inner = 500;
    double policy_tol = 1e-12;        ///< relative update below which the policy counts as settled
    double continuation_tol = 1e-2;   ///< allowed change between the last two delta steps
    std::size_t nodes = 2049;
    double first_cell = 1e-6;         ///< first cell width as a fraction of R - rho
    /// Called with every accepted iterate (ascending or descending sweep).
    std::function<void(const std::vector<double>&)> on_iterate;
};

inline const SolveConfig& validate(const SolveConfig& cfg) {
    detail::require(cfg.delta0 > 0, "delta0 must be positive");
    detail::require(cfg.delta_steps >= 1, "delta_steps must be at least 1");
    detail::require(cfg.inner_tol > 0, "inner_tol must be positive");
    detail::require(cfg.max_inner > 0, "max_inner must be positive");
    detail::require(cfg.policy_tol > 0, "policy_tol must be positive");
    detail::require(cfg.continuation_tol > 0, "continuation_tol must be positive");
    detail::require(cfg.nodes >= 5, "nodes must be at least 5");
    detail::require(cfg.first_cell > 0 && cfg.first_cell < 1, "first_cell must lie in (0,1)");
    return cfg;
}

inline RadialGrid solver_grid(const AnnulusGeometry& geo, const SolveConfig& cfg) {
    return RadialGrid::with_first_cell(geo.rho, geo.R, cfg.nodes, cfg.first_cell);
}

struct SolveReport {
    GridFunction solution;
    double residual_max = 0.0;               ///< scaled residual, see sabu_residual_scaled
    std::vector<int> iterations_per_delta;
    int bracket_violations = 0;
    double hopf_radius = 0.0;
    bool hopf_ok = false;
    std::vector<double> deltas;              ///< continuation schedule actually used
    double limit_change = 0.0;               ///< max |u_K - u_{K-1}| over the last two steps
    int monotonicity_violations = 0;         ///< continuation steps that decreased a node by more than 1e-12
};

namespace detail {

struct Linearization {
    std::vector<double> G;  ///< residual, boundary rows included
    Tridiagonal T;          ///< -dG/dw
};

/// Residual and negated Jacobian. `shift` adds K_i w_i to the residual of an
/// auxiliary problem whose singular term is frozen into `frozen_rhs`.
inline Linearization linearize(const RadialGrid& g, const std::vector<double>& w, const ProblemSpec& spec,
                               double delta, const std::vector<double>* shift = nullptr,
                               const std::vector<double>* frozen_rhs = nullptr) {
    const std::size_t n = g.size();
    const auto& ell = spec.ellipticity;
    const auto& gr = spec.growth;
    const auto& f = spec.forcing;
    Linearization lin{std::vector<double>(n, 0.0), Tridiagonal(n)};
    lin.T.set_identity_row(0);
    lin.T.set_identity_row(n - 1);
    lin.G[0] = 0.0 - w[0];
    lin.G[n - 1] = spec.geometry.L - w[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto st = centered_stencil(g, i);
        const double D1 = st.d1[0] * w[i - 1] + st.d1[1] * w[i] + st.d1[2] * w[i + 1];
        const double D2 = st.d2[0] * w[i - 1] + st.d2[1] * w[i] + st.d2[2] * w[i + 1];
        const double r = g[i];
        const double a = theta(D2, ell);
        const double th1 = theta(D1, ell) * (ell.dim - 1) / r;
        const double sg = D1 >= 0 ? 1.0 : -1.0;
        double G = a * D2 + th1 * D1 + gr.B * D1 * D1 + gr.b * std::abs(D1) - gr.c0 * w[i];
        const double c = th1 + 2.0 * gr.B * D1 + gr.b * sg;
        double diag_extra = gr.c0;
        if (frozen_rhs) {
            G += (*frozen_rhs)[i] - (*shift)[i] * w[i];
            diag_extra += (*shift)[i];
        } else if (f.M != 0.0) {
            const double base = w[i] + delta;
            if (!(base > 0))
                throw NumericalError("singular term overflow: w + delta <= 0 at node " + std::to_string(i));
            const double dm = f.M * std::pow(r - spec.geometry.rho, f.mu);
            const double s = dm * std::pow(base, -f.alpha);
            if (!std::isfinite(s)) throw NumericalError("singular term overflow at node " + std::to_string(i));
            G += s;
            diag_extra += f.alpha * s / base;
        }
        lin.G[i] = G;
        lin.T.lower[i] = -(a * st.d2[0] + c * st.d1[0]);
        lin.T.diag[i] = -(a * st.d2[1] + c * st.d1[1]) + diag_extra;
        lin.T.upper[i] = -(a * st.d2[2] + c * st.d1[2]);
    }
    return lin;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Newton/policy iteration from `start` for G(w) = 0 (or its shifted
/// auxiliary form). Ascending iterates are projected onto max(new, old),
/// which only absorbs rounding since exact iterates already ascend.
struct NewtonResult {
    std::vector<double> w;
    int iterations = 0;
    int bracket_violations = 0;
};

inline NewtonResult newton_ascend(const RadialGrid& g, std::vector<double> w, const ProblemSpec& spec, double delta,
                                  const std::vector<double>* upper, const SolveConfig& cfg, bool project,
                                  const std::vector<double>* shift = nullptr,
                                  const std::vector<double>* frozen_rhs = nullptr) {
    const std::size_t n = g.size();
    NewtonResult out;
    int polish = 0;
    for (int it = 1; it <= cfg.max_inner; ++it) {
        auto lin = linearize(g, w, spec, delta, shift, frozen_rhs);
        if (!lin.T.is_m_matrix())
            throw NumericalError("solver: linearized operator is not an M-matrix; refine the grid");
        const auto step = solve_tridiagonal(lin.T, lin.G);
        double t = 1.0;
        std::vector<double> next(n);
        for (int halving = 0;; ++halving) {
            bool over = false;
            for (std::size_t i = 0; i < n; ++i) {
                next[i] = w[i] + t * step[i];
                if (upper && next[i] > (*upper)[i] + 1e-9 * (1.0 + std::abs((*upper)[i]))) over = true;
            }
            if (!over || halving >= 30) {
                if (over) {
                    for (std::size_t i = 0; i < n; ++i)
                        if (next[i] > (*upper)[i] + 1e-9 * (1.0 + std::abs((*upper)[i]))) ++out.bracket_violations;
                }
                break;
            }
            t *= 0.5;  // damping: the step overshoots the supersolution
        }
        double change = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (project && i > 0 && i + 1 < n) next[i] = std::max(next[i], w[i]);
            change = std::max(change, std::abs(next[i] - w[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        w.swap(next);
        if (cfg.on_iterate) cfg.on_iterate(w);
        out.iterations = it;
        if (out.bracket_violations > 0)
            throw NumericalError("solver: bracket violation, iterate escaped the supersolution");
        if (change <= cfg.inner_tol * scale && t == 1.0) {
            // a few extra full steps polish the residual down to rounding level
            bool settled = frozen_rhs != nullptr || polish >= 3;
            if (!settled) {
                const GridFunction wf(g, w);
                settled = sabu_residual_scaled(wf, spec, delta).max_abs() <= cfg.inner_tol;
            }
            if (settled) {
                out.w = std::move(w);
                return out;
            }
            ++polish;
        }
    }
    throw NumericalError("solver: no convergence after " + std::to_string(cfg.max_inner) + " iterations");
}

} // namespace detail

/// Ascending monotone iteration from `lower`, bracketed by `upper`.
inline SolveReport solve_regularized(const ProblemSpec& spec, double delta, const GridFunction& lower,
                                     const GridFunction& upper, const SolveConfig& cfg) {
    validate(spec);
    validate(cfg);
    detail::require(delta >= 0, "delta must be nonnegative");
    detail::require(lower.size() == upper.size() && lower.grid().nodes() == upper.grid().nodes(),
                    "lower and upper must share a grid");
    const auto& g = lower.grid();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i)
        if (lower[i] > upper[i] + 1e-12 * (1.0 + std::abs(upper[i])))
            throw ValidationError("precondition: lower <= upper violated at node " + std::to_string(i));
    if (spec.forcing.M != 0.0 && delta == 0.0)
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (!(lower[i] > 0))
                throw ValidationError("precondition: lower must be positive in the interior when delta = 0 "
                                      "(singular term undefined at node " + std::to_string(i) + ")");

    std::vector<double> start = lower.values();
    start.front() = std::min(start.front(), 0.0);
    start.back() = std::min(start.back(), spec.geometry.L);
    auto res = detail::newton_ascend(g, start, spec, delta, &upper.values(), cfg, true);

    SolveReport rep;
    rep.solution = GridFunction(g, std::move(res.w));
    rep.iterations_per_delta = {res.iterations};
    rep.bracket_violations = res.bracket_violations;
    rep.deltas = {delta};
    for (std::size_t i = 0; i < n; ++i)
        if (rep.solution[i] < lower[i] - 1e-12 * (1.0 + std::abs(lower[i]))) ++rep.bracket_violations;
    rep.residual_max = sabu_residual_scaled(rep.solution, spec, delta).max_abs();
    const auto hp = hopf_point(rep.solution);
    rep.hopf_radius = hp.radius;
    rep.hopf_ok = hp.hopf_ok;
    return rep;
}

/// Descending monotone iteration from a supersolution. With K_i >= |dF/dw|
/// on [w_ref, upper] the map w -> F(w) + K w is nondecreasing, so each step
///   N(z) - K z = -(F(w_k) + K w_k)
/// produces a smaller supersolution. `w_ref` is any nodewise lower bound of
/// the iterates (e.g. the ascending limit).
inline SolveReport descend_regularized(const ProblemSpec& spec, double delta, const GridFunction& upper,
                                       const GridFunction& w_ref, const SolveConfig& cfg) {
    validate(spec);
    validate(cfg);
    const auto& g = upper.grid();
    const std::size_t n = g.size();
    const auto& f = spec.forcing;
    std::vector<double> K(n, 0.0), forcing(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double dm = f.M * std::pow(g[i] - spec.geometry.rho, f.mu);
        K[i] = f.M == 0.0 ? 0.0 : f.alpha * dm * std::pow(w_ref[i] + delta, -f.alpha - 1.0);
    }
    std::vector<double> w = upper.values();
    w.front() = 0.0;
    w.back() = spec.geometry.L;
    SolveConfig inner = cfg;
    inner.on_iterate = nullptr;
    int outer = 0;
    for (; outer < cfg.max_inner; ++outer) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double dm = f.M * std::pow(g[i] - spec.geometry.rho, f.mu);
            const double s = f.M == 0.0 ? 0.0 : dm * std::pow(w[i] + delta, -f.alpha);
            forcing[i] = s + K[i] * w[i];
        }
        auto res = detail::newton_ascend(g, w, spec, delta, nullptr, inner, false, &K, &forcing);
        double change = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            change = std::max(change, std::abs(res.w[i] - w[i]));
            scale = std::max(scale, std::abs(res.w[i]));
        }
        w = std::move(res.w);
        if (cfg.on_iterate) cfg.on_iterate(w);
        if (change <= cfg.inner_tol * scale) break;
    }
    if (outer == cfg.max_inner) throw NumericalError("descending iteration: no convergence");
    SolveReport rep;
    rep.solution = GridFunction(g, std::move(w));
    rep.iterations_per_delta = {outer + 1};
    rep.deltas = {delta};
    rep.residual_max = sabu_residual_scaled(rep.solution, spec, delta).max_abs();
    const auto hp = hopf_point(rep.solution);
    rep.hopf_radius = hp.radius;
    rep.hopf_ok = hp.hopf_ok;
    return rep;
}

/// Delta-continuation delta_k = delta0 2^-k, k = 0..delta_steps, each solve
/// started from the previous solution (a subsolution for the smaller delta).
inline SolveReport continue_in_delta(const ProblemSpec& spec, const GridFunction& lower, const GridFunction& upper,
                                     const SolveConfig& cfg) {
    validate(cfg);
    SolveReport total;
    GridFunction current = lower;
    GridFunction previous;
    for (int k = 0; k <= cfg.delta_steps; ++k) {
        const double delta = cfg.delta0 * std::ldexp(1.0, -k);
        auto rep = solve_regularized(spec, delta, current, upper, cfg);
        if (k > 0) {
            for (std::size_t i = 0; i < current.size(); ++i)
                if (rep.solution[i] < current[i] - 1e-12) ++total.monotonicity_violations;
        }
        total.iterations_per_delta.push_back(rep.iterations_per_delta.front());
        total.bracket_violations += rep.bracket_violations;
        total.deltas.push_back(delta);
        previous = current;
        current = rep.solution;
        total.residual_max = rep.residual_max;
        total.hopf_radius = rep.hopf_radius;
        total.hopf_ok = rep.hopf_ok;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) change = std::max(change, std::abs(current[i] - previous[i]));
    total.limit_change = change;
    total.solution = current;
    if (change > cfg.continuation_tol)
        throw NumericalError("continuation stagnation: last two delta steps differ by " + format_double(change));
    return total;
}

struct AuditReport {
    bool passed = true;
    double worst_margin = std::numeric_limits<double>::infinity();  ///< min over nodes of v - u
    std::size_t worst_node = 0;
    bool sub_ok = true;    ///< scaled residual of u >= -tol
    bool super_ok = true;  ///< scaled residual of v <= tol
};

/// Numerical comparison audit: u sub, v super, u <= v on the boundary must
/// give u <= v everywhere. A failure points at a discretization fault.
inline AuditReport compare_audit(const GridFunction& u, const GridFunction& v, const ProblemSpec& spec, double delta,
                                 double tol = 1e-9) {
    detail::require(u.grid().nodes() == v.grid().nodes(), "compare_audit: u and v must share a grid");
    const std::size_t n = u.size();
    if (u[0] > v[0] + tol || u[n - 1] > v[n - 1] + tol)
        throw ValidationError("compare_audit precondition: u > v at a boundary node");
    AuditReport rep;
    const auto ru = sabu_residual_scaled(u, spec, delta);
    const auto rv = sabu_residual_scaled(v, spec, delta);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (ru[i] < -tol) rep.sub_ok = false;
        if (rv[i] > tol) rep.super_ok = false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double m = v[i] - u[i];
        if (m < rep.worst_margin) {
            rep.worst_margin = m;
            rep.worst_node = i;
        }
    }
    rep.passed = rep.worst_margin >= -tol;
    return rep;
}

} // namespace pucci
