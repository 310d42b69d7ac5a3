#pragma once

// Principal eigenpair of F2+ on an annulus:
//   theta(psi'')psi'' + theta(psi')(N-1)psi'/r + b|psi'| = -lambda1 * omega * psi,
// psi = 0 on both spheres, omega = 1 or (r - rho)^mu.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"
#include "pucci/radial.hpp"
#include "pucci/tridiag.hpp"

namespace pucci {

struct EigenPair {
    double eigenvalue = 0.0;
    GridFunction eigenfunction;  ///< max-normalized, zero on the boundary
    bool weighted = false;
    double weight_mu = 0.0;
    int policy_sweeps = 0;
};

struct EigenOptions {
    std::size_t nodes = 2049;          ///< uniform grid size when no grid is given
    std::optional<RadialGrid> grid;    ///< explicit grid (e.g. the solver's graded mesh)
    std::optional<std::vector<double>> initial;  ///< positive starting vector, full length
    int max_sweeps = 200;
    double tol = 1e-12;
};

namespace detail {

/// Policy at each interior node: second-order coefficient a and first-order
/// coefficient c of the linear operator a psi'' + c psi' that attains F2+.
struct Policy {
    std::vector<double> a, c;
    bool operator==(const Policy&) const = default;
};

inline Policy f2plus_policy(const GridFunction& psi, const Ellipticity& ell, double b) {
    const auto d1 = psi.derivative1();
    const auto d2 = psi.derivative2();
    const std::size_t n = psi.size();
    Policy p{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        p.a[i] = theta(d2[i], ell);
        p.c[i] = theta(d1[i], ell) * (ell.dim - 1) / psi.r(i) + (d1[i] >= 0 ? b : -b);
    }
    return p;
}

/// -(a psi'' + c psi') on interior nodes, identity rows at the boundary.
inline Tridiagonal frozen_operator(const RadialGrid& g, const Policy& p) {
    const std::size_t n = g.size();
    Tridiagonal A(n);
    A.set_identity_row(0);
    A.set_identity_row(n - 1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto st = centered_stencil(g, i);
        A.lower[i] = -(p.a[i] * st.d2[0] + p.c[i] * st.d1[0]);
        A.diag[i] = -(p.a[i] * st.d2[1] + p.c[i] * st.d1[1]);
        A.upper[i] = -(p.a[i] * st.d2[2] + p.c[i] * st.d1[2]);
    }
    return A;
}

inline std::vector<double> eigen_weight(const RadialGrid& g, std::optional<double> mu) {
    std::vector<double> w(g.size(), 1.0);
    if (mu && *mu != 0.0)
        for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::pow(g[i] - g.rho(), *mu);
    return w;
}

struct LinearEigen {
    double value;
    std::vector<double> vector;
};

/// Principal eigenpair of A psi = lambda W psi for a Z-matrix A, by inverse
/// iteration with a shift kept below the Collatz-Wielandt lower bound, so
/// every shifted system stays a nonsingular M-matrix.
inline LinearEigen linear_principal(const Tridiagonal& A, const std::vector<double>& w, std::vector<double> psi,
                                    double tol) {
    const std::size_t n = A.size();
    double sigma = 0.0;
    double est = 0.0, prev = -1.0;
    for (int it = 0; it < 500; ++it) {
        Tridiagonal S = A;
        std::vector<double> rhs(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            S.diag[i] -= sigma * w[i];
            rhs[i] = w[i] * psi[i];
        }
        auto y = solve_tridiagonal(S, rhs);
        double ymax = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) ymax = std::max(ymax, y[i]);
        if (!(ymax > 0)) throw NumericalError("eigen: inverse iteration lost positivity");
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            num += psi[i] * w[i] * psi[i];
            den += psi[i] * w[i] * y[i];
        }
        est = sigma + num / den;
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            moved = std::max(moved, std::abs(y[i] / ymax - psi[i]));
            psi[i] = y[i] / ymax;
        }
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (!(psi[i] > 0)) throw NumericalError("eigen: loss of positivity at node " + std::to_string(i));
        // Collatz-Wielandt lower bound for the next shift
        const auto Apsi = A.apply(psi);
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i + 1 < n; ++i) lo = std::min(lo, Apsi[i] / (w[i] * psi[i]));
        if (lo > 0) sigma = std::max(sigma, lo * (1.0 - 1e-6));
        // the value settles about twice as fast as the vector, so wait for both
        if (std::abs(est - prev) <= tol * std::abs(est) && moved <= tol && it > 1) break;
        prev = est;
    }
    return {est, std::move(psi)};
}

} // namespace detail

/// Principal eigenpair by inverse power iteration with policy refresh.
/// Each refresh can only lower the eigenvalue, since the new policy attains
/// the maximum in F2+ at the current eigenfunction.
inline EigenPair principal_eig(const Ellipticity& ell, double b, const AnnulusGeometry& geometry,
                               std::optional<double> weight_mu = std::nullopt, const EigenOptions& opt = {}) {
    validate(ell);
    validate(geometry);
    detail::require(b >= 0, "eigen: b must be nonnegative");
    if (weight_mu) detail::require(*weight_mu >= 0, "eigen: weight_mu must be nonnegative");
    const RadialGrid g = opt.grid ? *opt.grid : RadialGrid::uniform(geometry.rho, geometry.R, opt.nodes);
    const std::size_t n = g.size();
    const auto w = detail::eigen_weight(g, weight_mu);

    std::vector<double> psi(n, 0.0);
    if (opt.initial) {
        detail::require(opt.initial->size() == n, "eigen: initial vector length mismatch");
        psi = *opt.initial;
        psi.front() = psi.back() = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) detail::require(psi[i] > 0, "eigen: initial vector must be positive");
    } else {
        for (std::size_t i = 1; i + 1 < n; ++i)
            psi[i] = std::sin(std::numbers::pi * (g[i] - g.rho()) / (g.R() - g.rho()));
    }

    detail::Policy policy = detail::f2plus_policy(GridFunction(g, psi), ell, b);
    double value = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        const auto A = detail::frozen_operator(g, policy);
        if (!A.is_m_matrix()) throw NumericalError("eigen: frozen operator is not an M-matrix; refine the grid");
        auto lin = detail::linear_principal(A, w, psi, opt.tol);
        psi = std::move(lin.vector);
        const double change = std::abs(lin.value - value);
        value = lin.value;
        auto next = detail::f2plus_policy(GridFunction(g, psi), ell, b);
        if (next == policy || change <= opt.tol * std::abs(value)) {
            psi.front() = psi.back() = 0.0;
            return {value, GridFunction(g, psi), weight_mu.has_value(), weight_mu.value_or(0.0), sweep};
        }
        policy = std::move(next);
    }
    throw NumericalError("eigen: policy oscillation, no stable policy after " + std::to_string(opt.max_sweeps) +
                         " sweeps");
}

/// max |F2+(psi) + lambda * omega * psi| over interior nodes.
inline double eig_residual(const EigenPair& pair, const Ellipticity& ell, double b, const AnnulusGeometry&) {
    const auto& psi = pair.eigenfunction;
    detail::require(psi.max_abs() > 0, "eig_residual: eigenfunction must be nonzero");
    const auto d1 = psi.derivative1();
    const auto d2 = psi.derivative2();
    const auto w = detail::eigen_weight(psi.grid(), pair.weighted ? std::optional<double>(pair.weight_mu)
                                                                  : std::nullopt);
    double res = 0.0;
    for (std::size_t i = 1; i + 1 < psi.size(); ++i)
        res = std::max(res, std::abs(radial_f2(d2[i], d1[i], psi.r(i), ell, b, PucciSign::plus) +
                                     pair.eigenvalue * w[i] * psi[i]));
    return res;
}

} // namespace pucci
