#pragma once

// The singular problem itself: barriers from the eigenfunction bracket the
// first regularized solve, then delta is halved down to the configured floor.

#include <algorithm>
#include <cmath>

#include "pucci/barriers.hpp"
#include "pucci/eigenpair.hpp"
#include "pucci/solver.hpp"

namespace pucci {

struct SingularBrackets {
    GridFunction lower, upper;
    std::optional<BarrierSpec> sub, super;  ///< empty when M = 0
};

/// Lower barrier m1 psi^kappa and upper barrier (1/l2) log(1 + l2 u2) on the
/// solver grid, with m1 reduced until the two are ordered.
inline SingularBrackets singular_brackets(const ProblemSpec& spec, const SolveConfig& cfg) {
    validate(spec);
    validate(cfg);
    const auto g = solver_grid(spec.geometry, cfg);
    const std::size_t n = g.size();
    const double L = spec.geometry.L;
    SingularBrackets out;
    if (spec.forcing.M == 0.0) {
        out.lower = GridFunction(g, std::vector<double>(n, 0.0));
        std::vector<double> up(n, std::max(L, 0.0));
        up.front() = 0.0;
        out.upper = GridFunction(g, std::move(up));
        return out;
    }
    EigenOptions eo;
    eo.grid = g;
    SearchBounds sb;
    sb.eigen = principal_eig(spec.ellipticity, spec.growth.b, spec.geometry, std::nullopt, eo);
    sb.delta = cfg.delta0;
    auto sub = search_constants(BarrierFamily::U1, InequalityId::I1_sub_regularized, spec, sb).barrier;
    auto super = search_constants(BarrierFamily::U2, InequalityId::I2_super_transformed, spec, sb).barrier;
    const double l2 = derived_constants(spec.growth, spec.ellipticity).l2;

    std::vector<double> up(n), low(n);
    up.front() = 0.0;
    up.back() = L;
    for (std::size_t i = 1; i + 1 < n; ++i) up[i] = transform_up_inverse(eval_barrier(super, g[i]).value, l2);
    for (int halving = 0;; ++halving) {
        bool ordered = true;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            low[i] = eval_barrier(sub, g[i]).value;
            ordered = ordered && low[i] <= up[i];
        }
        if (ordered) break;
        if (halving >= 60) throw NumericalError("barriers: sub- and supersolution cannot be ordered");
        sub.set("m1", sub.get("m1") * 0.5);
    }
    out.lower = GridFunction(g, std::move(low));
    out.upper = GridFunction(g, std::move(up));
    out.sub = std::move(sub);
    out.super = std::move(super);
    return out;
}

/// delta-continuation for w'' ... + M (r-rho)^mu w^-alpha = 0 between certified barriers.
inline SolveReport solve_singular(const ProblemSpec& spec, const SolveConfig& cfg = {}) {
    const auto br = singular_brackets(spec, cfg);
    return continue_in_delta(spec, br.lower, br.upper, cfg);
}

} // namespace pucci
