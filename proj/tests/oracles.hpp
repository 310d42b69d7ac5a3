#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's numerics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

/// Cyclic Jacobi rotations for a symmetric matrix; returns eigenvalues and
/// column eigenvectors.
struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline Spectrum jacobi(Eigen::MatrixXd a) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double th = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (th >= 0 ? 1.0 : -1.0) / (std::abs(th) + std::sqrt(th * th + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    return {a.diagonal(), v};
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = nd(rng);
    return m;
}

/// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd q(n, n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = nd(rng);
        for (int k = 0; k < j; ++k) x -= q.col(k).dot(x) * q.col(k);
        q.col(j) = x / x.norm();
    }
    return q;
}

/// Coefficient matrix with spectrum in [lo, hi].
inline Eigen::MatrixXd random_coefficients(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> ud(lo, hi);
    const auto q = random_orthogonal(rng, n);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = ud(rng);
    return q * d.asDiagonal() * q.transpose();
}

/// sup (plus) or inf (minus) of trace(A X) over the sampled coefficient set,
/// together with the extremal coefficient built from the eigenvectors of X.
struct SupInf {
    double sampled = 0.0;
    double attained = 0.0;
};

inline SupInf pucci_sup_inf(std::mt19937_64& rng, const Eigen::MatrixXd& x, double lo, double hi, bool plus,
                            int samples) {
    const int n = static_cast<int>(x.rows());
    SupInf out;
    out.sampled = plus ? -1e300 : 1e300;
    for (int k = 0; k < samples; ++k) {
        const double t = (random_coefficients(rng, n, lo, hi) * x).trace();
        out.sampled = plus ? std::max(out.sampled, t) : std::min(out.sampled, t);
    }
    const auto sp = jacobi(x);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        const bool pos = sp.values(i) > 0;
        d(i) = plus ? (pos ? hi : lo) : (pos ? lo : hi);
    }
    const Eigen::MatrixXd a = sp.vectors * d.asDiagonal() * sp.vectors.transpose();
    out.attained = (a * x).trace();
    return out;
}

// Dense reference: three-point differences on a uniform mesh, policy
// iteration on the sign pattern of the discrete derivatives, and the full
// nonsymmetric spectrum at every step.
struct DenseResult {
    double value = 0.0;
    Eigen::VectorXd vector;
};

inline DenseResult dense_principal(double lambda, double Lambda, int dim, double b, double rho, double R, int n) {
    const int m = n - 2;
    const double h = (R - rho) / (n - 1);
    Eigen::VectorXd psi(m);
    for (int i = 0; i < m; ++i) psi(i) = std::sin(std::numbers::pi * (i + 1) / (n - 1));
    DenseResult out;
    for (int sweep = 0; sweep < 50; ++sweep) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        auto at = [&](int j) { return j < 0 || j >= m ? 0.0 : psi(j); };
        for (int i = 0; i < m; ++i) {
            const double r = rho + (i + 1) * h;
            const double d2 = (at(i + 1) - 2 * at(i) + at(i - 1)) / (h * h);
            const double d1 = (at(i + 1) - at(i - 1)) / (2 * h);
            const double a = d2 >= 0 ? Lambda : lambda;
            const double c = (d1 >= 0 ? Lambda : lambda) * (dim - 1) / r + (d1 >= 0 ? b : -b);
            // row of -(a psi'' + c psi')
            A(i, i) = 2 * a / (h * h);
            if (i > 0) A(i, i - 1) = -a / (h * h) + c / (2 * h);
            if (i + 1 < m) A(i, i + 1) = -a / (h * h) - c / (2 * h);
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(A);
        int k = 0;
        for (int j = 1; j < m; ++j)
            if (es.eigenvalues()(j).real() < es.eigenvalues()(k).real()) k = j;
        Eigen::VectorXd v = es.eigenvectors().col(k).real();
        if (v.sum() < 0) v = -v;
        v /= v.maxCoeff();
        const bool same = sweep > 0 && std::abs(es.eigenvalues()(k).real() - out.value) <= 1e-14 * out.value;
        out.value = es.eigenvalues()(k).real();
        out.vector = v;
        if (same) break;
        psi = v;
    }
    return out;
}

} // namespace oracle
