#pragma once

// Graded radial meshes on [rho, R] and sampled fields on them.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pucci/errors.hpp"
#include "pucci/params.hpp"
#include "pucci/tridiag.hpp"

namespace pucci {

/// Finite-difference weights for the derivatives of order 0..max_order at
/// `x0` from the stencil `xs` (Fornberg's recursion).
/// Result is indexed [order][point].
inline std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs,
                                                   int max_order) {
    const int n = static_cast<int>(xs.size());
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Strictly increasing radii from rho to R. Graded meshes are the image of a
/// uniform parameter grid under t -> (g^t - 1)/(g - 1), so the spacing near
/// rho is about g times smaller than near R; g = 1 is uniform.
class RadialGrid {
public:
    RadialGrid() = default;

    static RadialGrid graded(double rho, double R, std::size_t n, double grading) {
        detail::require(rho < R, "grid: rho < R violated");
        detail::require(n >= 3, "grid: need at least 3 nodes");
        detail::require(grading >= 1.0 && std::isfinite(grading), "grid: grading must be >= 1");
        RadialGrid g;
        g.grading_ = grading;
        g.nodes_.resize(n);
        const double width = R - rho;
        const double a = std::log(grading);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n - 1);
            const double phi = a < 1e-12 ? t : std::expm1(a * t) / std::expm1(a);
            g.nodes_[i] = rho + width * phi;
        }
        g.nodes_.front() = rho;
        g.nodes_.back() = R;
        return g;
    }

    static RadialGrid uniform(double rho, double R, std::size_t n) { return graded(rho, R, n, 1.0); }

    /// Grading chosen so the first cell is `first_cell_fraction * (R - rho)`.
    static RadialGrid with_first_cell(double rho, double R, std::size_t n, double first_cell_fraction) {
        return graded(rho, R, n, grading_for_first_cell(n, first_cell_fraction));
    }

    static double grading_for_first_cell(std::size_t n, double fraction) {
        detail::require(n >= 3, "grid: need at least 3 nodes");
        detail::require(fraction > 0 && fraction < 1, "grid: first cell fraction must lie in (0,1)");
        const double uniform_fraction = 1.0 / static_cast<double>(n - 1);
        if (fraction >= uniform_fraction) return 1.0;
        const double t1 = uniform_fraction;
        auto first = [&](double a) { return std::expm1(a * t1) / std::expm1(a); };
        double lo = 1e-9, hi = 1.0;
        while (first(hi) > fraction) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (first(mid) > fraction ? lo : hi) = mid;
        }
        return std::exp(hi);
    }

    static RadialGrid from_nodes(std::vector<double> nodes) {
        detail::require(nodes.size() >= 3, "grid: need at least 3 nodes");
        for (std::size_t i = 1; i < nodes.size(); ++i)
            detail::require(nodes[i] > nodes[i - 1], "grid: nodes must be strictly increasing");
        RadialGrid g;
        g.nodes_ = std::move(nodes);
        g.grading_ = 0.0;
        return g;
    }

    /// Nested refinement: every cell split into `factor` cells of the same map.
    RadialGrid refined(std::size_t factor) const {
        detail::require(factor >= 1, "grid: refinement factor must be >= 1");
        if (grading_ >= 1.0) return graded(rho(), R(), (size() - 1) * factor + 1, grading_);
        std::vector<double> out;
        for (std::size_t i = 0; i + 1 < size(); ++i)
            for (std::size_t k = 0; k < factor; ++k)
                out.push_back(nodes_[i] + (nodes_[i + 1] - nodes_[i]) * static_cast<double>(k) /
                                              static_cast<double>(factor));
        out.push_back(R());
        return from_nodes(std::move(out));
    }

    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }
    double rho() const { return nodes_.front(); }
    double R() const { return nodes_.back(); }
    double grading() const { return grading_; }
    double spacing(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }

    /// Index of the cell [r_i, r_{i+1}] that contains r (clamped).
    std::size_t locate(double r) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
        std::size_t idx = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
        return std::min(idx, size() - 2);
    }

private:
    std::vector<double> nodes_;
    double grading_ = 1.0;
};

/// Three-point centered stencils at interior node i.
struct CenteredStencil {
    double d1[3];
    double d2[3];
};

inline CenteredStencil centered_stencil(const RadialGrid& g, std::size_t i) {
    const double hm = g[i] - g[i - 1];
    const double hp = g[i + 1] - g[i];
    const double s = hm + hp;
    return CenteredStencil{{-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)},
                           {2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s)}};
}

class GridFunction {
public:
    GridFunction() = default;
    GridFunction(RadialGrid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        detail::require(values_.size() == grid_.size(), "grid function: length mismatch");
        for (double v : values_)
            detail::require(std::isfinite(v), "grid function: non-finite value");
    }

    static GridFunction sample(const RadialGrid& grid, const std::function<double(double)>& f) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
        return GridFunction(grid, std::move(v));
    }

    const RadialGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double r(std::size_t i) const { return grid_[i]; }

    /// First derivative: centered in the interior, second-order one-sided at
    /// the two boundary nodes.
    std::vector<double> derivative1() const { return derivative(1); }
    std::vector<double> derivative2() const { return derivative(2); }

    /// Four-point Lagrange interpolation.
    double interpolate(double r) const {
        const std::size_t n = size();
        std::size_t c = grid_.locate(r);
        std::size_t start = c == 0 ? 0 : c - 1;
        if (start + 4 > n) start = n - 4;
        std::vector<double> xs(grid_.nodes().begin() + start, grid_.nodes().begin() + start + 4);
        const auto w = fd_weights(r, xs, 0);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += w[0][k] * values_[start + k];
        return s;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::vector<double> derivative(int order) const {
        const std::size_t n = size();
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const auto st = centered_stencil(grid_, i);
            const double* w = order == 1 ? st.d1 : st.d2;
            out[i] = w[0] * values_[i - 1] + w[1] * values_[i] + w[2] * values_[i + 1];
        }
        // one-sided: 3 points for first, 4 points for second derivative
        const std::size_t m = std::min<std::size_t>(n, order == 1 ? 3 : 4);
        auto edge = [&](std::size_t node, bool left) {
            std::vector<double> xs(m);
            std::vector<std::size_t> idx(m);
            for (std::size_t k = 0; k < m; ++k) {
                idx[k] = left ? k : n - 1 - k;
                xs[k] = grid_[idx[k]];
            }
            const auto w = fd_weights(grid_[node], xs, order);
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += w[order][k] * values_[idx[k]];
            return s;
        };
        out[0] = edge(0, true);
        out[n - 1] = edge(n - 1, false);
        return out;
    }

    RadialGrid grid_;
    std::vector<double> values_;
};

/// Two-column CSV (r,value) with 17 significant digits.
inline void write_csv(const GridFunction& f, std::ostream& os, const std::string& header = "r,value") {
    os << header << "\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        os << format_double(f.r(i)) << "," << format_double(f[i]) << "\n";
}

inline void write_csv(const GridFunction& f, const std::string& path, const std::string& header = "r,value") {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path);
    write_csv(f, os, header);
}

inline GridFunction read_csv(std::istream& is) {
    std::string line;
    std::vector<double> r, v;
    bool first = true;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        detail::require(comma != std::string::npos, "csv: expected two columns");
        const auto a = trim(line.substr(0, comma));
        const auto b = trim(line.substr(comma + 1));
        if (first) {
            first = false;
            if (!a.empty() && (std::isalpha(static_cast<unsigned char>(a[0])) != 0)) continue;
        }
        r.push_back(parse_double("r", a));
        v.push_back(parse_double("value", b));
    }
    return GridFunction(RadialGrid::from_nodes(std::move(r)), std::move(v));
}

inline GridFunction read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read " + path);
    return read_csv(is);
}

/// C2 cubic spline through grid values with prescribed end second derivatives.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(const GridFunction& f, double m_left, double m_right) : f_(f) {
        const auto& g = f.grid();
        const std::size_t n = g.size();
        Tridiagonal A(n);
        std::vector<double> rhs(n, 0.0);
        A.set_identity_row(0);
        rhs[0] = m_left;
        A.set_identity_row(n - 1);
        rhs[n - 1] = m_right;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hm = g[i] - g[i - 1];
            const double hp = g[i + 1] - g[i];
            A.lower[i] = hm / 6.0;
            A.diag[i] = (hm + hp) / 3.0;
            A.upper[i] = hp / 6.0;
            rhs[i] = (f[i + 1] - f[i]) / hp - (f[i] - f[i - 1]) / hm;
        }
        moments_ = solve_tridiagonal(A, rhs);
    }

    struct Jet {
        double value, d1, d2;
    };

    Jet operator()(double r) const {
        const auto& g = f_.grid();
        const std::size_t i = g.locate(r);
        const double h = g[i + 1] - g[i];
        const double a = (g[i + 1] - r) / h;
        const double b = (r - g[i]) / h;
        const double m0 = moments_[i], m1 = moments_[i + 1];
        const double y0 = f_[i], y1 = f_[i + 1];
        Jet j{};
        j.value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        j.d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        j.d2 = a * m0 + b * m1;
        return j;
    }

    const GridFunction& data() const { return f_; }

private:
    GridFunction f_;
    std::vector<double> moments_;
};

} // namespace pucci
