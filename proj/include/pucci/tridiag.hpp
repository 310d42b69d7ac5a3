#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "pucci/errors.hpp"

namespace pucci {

/// Rows of a tridiagonal system: lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    explicit Tridiagonal(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    std::size_t size() const { return diag.size(); }

    void set_identity_row(std::size_t i) {
        lower[i] = 0.0;
        diag[i] = 1.0;
        upper[i] = 0.0;
    }

    std::vector<double> apply(std::span<const double> x) const {
        const std::size_t n = size();
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    /// True when every row has a positive diagonal, nonpositive off-diagonals
    /// and weak diagonal dominance (the monotone-scheme sign pattern).
    bool is_m_matrix() const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = i > 0 ? lower[i] : 0.0;
            const double up = i + 1 < n ? upper[i] : 0.0;
            if (!(diag[i] > 0) || lo > 0 || up > 0) return false;
            if (diag[i] + lo + up < -1e-12 * diag[i]) return false;
        }
        return true;
    }
};

/// Thomas algorithm. Stable for the diagonally dominant systems produced by
/// the monotone radial schemes.
inline std::vector<double> solve_tridiagonal(const Tridiagonal& A, std::span<const double> rhs) {
    const std::size_t n = A.size();
    if (rhs.size() != n) throw ValidationError("tridiagonal: size mismatch");
    if (n == 0) return {};
    std::vector<double> c(n, 0.0), d(n, 0.0), x(n, 0.0);
    double denom = A.diag[0];
    if (denom == 0.0) throw NumericalError("tridiagonal: zero pivot at row 0");
    c[0] = n > 1 ? A.upper[0] / denom : 0.0;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = A.diag[i] - A.lower[i] * c[i - 1];
        if (denom == 0.0 || !std::isfinite(denom))
            throw NumericalError("tridiagonal: zero pivot at row " + std::to_string(i));
        c[i] = i + 1 < n ? A.upper[i] / denom : 0.0;
        d[i] = (rhs[i] - A.lower[i] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

} // namespace pucci
