#pragma once

// Exponential substitutions v = (e^{lu}-1)/l and w = (1-e^{-lu})/l, their
// inverses, and a finite-difference check of the sandwich inequalities they
// satisfy under the Pucci operators.

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"
#include "pucci/radial.hpp"

namespace pucci {

enum class TransformDirection { up, down };

struct TransformKind {
    TransformDirection kind = TransformDirection::up;
    double l = 0.0;
};

inline double transform_up(double u, double l) { return l == 0.0 ? u : std::expm1(l * u) / l; }
inline double transform_down(double u, double l) { return l == 0.0 ? u : -std::expm1(-l * u) / l; }
inline double transform_up_inverse(double v, double l) { return l == 0.0 ? v : std::log1p(l * v) / l; }
inline double transform_down_inverse(double w, double l) {
    if (l == 0.0) return w;
    detail::require(l * w < 1.0, "down-transform inverse: w must be below 1/l");
    return -std::log1p(-l * w) / l;
}

inline double apply_transform(double u, const TransformKind& t) {
    detail::require(t.l >= 0, "transform parameter l must be nonnegative");
    if (t.kind == TransformDirection::down) {
        detail::require(u >= 0, "down-transform requires u >= 0");
        return transform_down(u, t.l);
    }
    return transform_up(u, t.l);
}

inline std::vector<double> apply_transform(std::span<const double> values, const TransformKind& t) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = apply_transform(values[i], t);
    return out;
}

inline GridFunction apply_transform(const GridFunction& u, const TransformKind& t) {
    return GridFunction(u.grid(), apply_transform(std::span<const double>(u.values()), t));
}

inline GridFunction invert_transform(const GridFunction& v, const TransformKind& t) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = t.kind == TransformDirection::up ? transform_up_inverse(v[i], t.l)
                                                  : transform_down_inverse(v[i], t.l);
    return GridFunction(v.grid(), std::move(out));
}

struct SandwichSlack {
    double min_slack = std::numeric_limits<double>::infinity();
    std::size_t worst_node = 0;
    double tolerance = 0.0;  ///< allowed negative slack at the worst node
};

/// The four inequalities, each checked for both Pucci signs:
///   [0] l*lambda|u'|^2 + M(u) <= M(v)/(1+lv)
///   [1] M(v)/(1+lv)           <= l*Lambda|u'|^2 + M(u)
///   [2] -l*Lambda|u'|^2 + M(u) <= M(w)/(1-lw)
///   [3] M(w)/(1-lw)           <= -l*lambda|u'|^2 + M(u)
struct SandwichReport {
    std::array<SandwichSlack, 4> chains;
    bool passed = true;
    std::size_t evaluated_nodes = 0;
    std::string message;
};

/// Checks the sandwich at interior nodes. The tolerance at node i is
/// tol_factor * h_i^2 with h_i the local mesh width; pass h > 0 to override
/// it with a fixed mesh scale.
inline SandwichReport check_sandwich(const GridFunction& u, double l, const Ellipticity& ell, double h = 0.0,
                                     double tol_factor = 10.0) {
    validate(ell);
    detail::require(l >= 0, "check_sandwich: l must be nonnegative");
    const std::size_t n = u.size();
    detail::require(n >= 3, "check_sandwich: need an interior node");
    const auto v = apply_transform(u, {TransformDirection::up, l});
    GridFunction w;
    {
        std::vector<double> wv(n);
        for (std::size_t i = 0; i < n; ++i) wv[i] = transform_down(u[i], l);
        w = GridFunction(u.grid(), std::move(wv));
    }
    const auto u1 = u.derivative1(), u2 = u.derivative2();
    const auto v1 = v.derivative1(), v2 = v.derivative2();
    const auto w1 = w.derivative1(), w2 = w.derivative2();

    SandwichReport rep;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double r = u.r(i);
        const double hl = h > 0 ? h : std::max(r - u.r(i - 1), u.r(i + 1) - r);
        const double tol = tol_factor * hl * hl;
        const double g2 = u1[i] * u1[i];
        for (auto sign : {PucciSign::plus, PucciSign::minus}) {
            const double Mu = radial_pucci(u2[i], u1[i], r, ell, sign);
            const double Mv = radial_pucci(v2[i], v1[i], r, ell, sign) / (1.0 + l * v[i]);
            const double Mw = radial_pucci(w2[i], w1[i], r, ell, sign) / (1.0 - l * w[i]);
            const std::array<double, 4> slack = {
                Mv - l * ell.lambda * g2 - Mu,
                l * ell.Lambda * g2 + Mu - Mv,
                Mw + l * ell.Lambda * g2 - Mu,
                -l * ell.lambda * g2 + Mu - Mw,
            };
            for (std::size_t c = 0; c < 4; ++c) {
                auto& ch = rep.chains[c];
                if (slack[c] < ch.min_slack) {
                    ch.min_slack = slack[c];
                    ch.worst_node = i;
                    ch.tolerance = tol;
                }
                if (slack[c] < -tol && rep.passed) {
                    rep.passed = false;
                    rep.message = "sandwich chain " + std::to_string(c) + " violated at node " + std::to_string(i) +
                                  " (slack " + format_double(slack[c]) + ")";
                }
            }
        }
        ++rep.evaluated_nodes;
    }
    return rep;
}

struct CalcBounds {
    double lhs_i = 0.0;   ///< -(1/l2) log(1 - l2 r) >= r
    double lhs_ii = 0.0;  ///< (1/l1) log(1 + l1 r) <= r
};

inline CalcBounds calc_bounds(double r, double l1, double l2) {
    detail::require(r >= 0, "calc_bounds: r must be nonnegative");
    detail::require(l1 >= 0 && l2 >= 0, "calc_bounds: l must be nonnegative");
    if (l2 * r >= 1.0) throw ValidationError("calc_bounds: domain error, r >= 1/l2");
    return {l2 == 0.0 ? r : -std::log1p(-l2 * r) / l2, l1 == 0.0 ? r : std::log1p(l1 * r) / l1};
}

} // namespace pucci
