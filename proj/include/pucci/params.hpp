#pragma once

// Scalar data of the singular Pucci problem, the extremal operators and the
// structure-condition envelope.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "pucci/errors.hpp"

namespace pucci {

struct Ellipticity {
    double lambda = 1.0;  ///< lower ellipticity
    double Lambda = 1.0;  ///< upper ellipticity
    int dim = 2;
};

struct GrowthParams {
    double B = 0.0;   ///< quadratic gradient coefficient
    double b = 0.0;   ///< linear gradient coefficient
    double d = 0.0;   ///< zeroth-order Lipschitz constant
    double c0 = 1.0;  ///< coercivity, the equation carries -c0*u
};

struct SingularForcing {
    double mu = 0.0;     ///< power of the boundary distance
    double alpha = 1.0;  ///< singularity exponent
    double M = 1.0;      ///< forcing amplitude
    double C1 = 1.0;     ///< lower growth-window constant
    double C2 = 1.0;     ///< upper growth-window constant
};

struct AnnulusGeometry {
    double rho = 1.0;  ///< inner radius
    double R = 2.0;    ///< outer radius
    double L = 1.0;    ///< Dirichlet value on the outer sphere
};

struct ProblemSpec {
    Ellipticity ellipticity;
    GrowthParams growth;
    SingularForcing forcing;
    AnnulusGeometry geometry;
};

struct DerivedConstants {
    double l1 = 0.0;  ///< B / Lambda
    double l2 = 0.0;  ///< B / lambda
    double Nplus = 1.0;
    double Nminus = 1.0;
};

enum class PucciSign { plus, minus };
enum class ModelOperator { F1plus, F1minus, F2plus, F2minus };

inline const Ellipticity& validate(const Ellipticity& ell) {
    detail::require(std::isfinite(ell.lambda) && ell.lambda > 0, "lambda must be positive");
    detail::require(std::isfinite(ell.Lambda) && ell.Lambda > 0, "Lambda must be positive");
    detail::require(ell.lambda <= ell.Lambda, "lambda ≤ Lambda violated");
    detail::require(ell.dim >= 1, "dim must be at least 1");
    return ell;
}

inline const GrowthParams& validate(const GrowthParams& g) {
    detail::require(std::isfinite(g.B) && g.B >= 0, "B must be nonnegative");
    detail::require(std::isfinite(g.b) && g.b >= 0, "b must be nonnegative");
    detail::require(std::isfinite(g.d) && g.d >= 0, "d must be nonnegative");
    // c0 = 0 is admitted for the pure linear sanity problem.
    detail::require(std::isfinite(g.c0) && g.c0 >= 0, "c0 must be nonnegative");
    return g;
}

inline const SingularForcing& validate(const SingularForcing& f) {
    detail::require(std::isfinite(f.mu) && f.mu >= 0, "mu must be nonnegative");
    detail::require(std::isfinite(f.alpha) && f.alpha > 0, "alpha must be positive");
    // M = 0 switches the singular term off.
    detail::require(std::isfinite(f.M) && f.M >= 0, "M must be nonnegative");
    detail::require(std::isfinite(f.C1) && f.C1 > 0, "C1 must be positive");
    detail::require(std::isfinite(f.C2) && f.C2 > 0, "C2 must be positive");
    detail::require(f.C1 <= f.C2, "C1 ≤ C2 violated");
    return f;
}

inline const AnnulusGeometry& validate(const AnnulusGeometry& g) {
    detail::require(std::isfinite(g.rho) && g.rho > 0, "rho must be positive");
    detail::require(std::isfinite(g.R) && g.R > 0, "R must be positive");
    detail::require(g.rho < g.R, "rho < R violated");
    detail::require(std::isfinite(g.L) && g.L >= 0, "L must be nonnegative");
    return g;
}

/// Returns the spec unchanged, or throws ValidationError naming the first
/// violated invariant.
inline const ProblemSpec& validate(const ProblemSpec& spec) {
    validate(spec.ellipticity);
    validate(spec.growth);
    validate(spec.forcing);
    validate(spec.geometry);
    return spec;
}

inline DerivedConstants derived_constants(const GrowthParams& growth, const Ellipticity& ell) {
    validate(growth);
    validate(ell);
    DerivedConstants out;
    out.l1 = growth.B / ell.Lambda;
    out.l2 = growth.B / ell.lambda;
    const double n1 = static_cast<double>(ell.dim - 1);
    out.Nplus = (ell.lambda / ell.Lambda) * n1 + 1.0;
    out.Nminus = (ell.Lambda / ell.lambda) * n1 + 1.0;
    return out;
}

/// Pucci extremal operator from the spectrum: Lambda on positive eigenvalues
/// and lambda on negative ones for plus, swapped for minus.
inline double pucci_from_eigenvalues(const Eigen::Ref<const Eigen::VectorXd>& eig,
                                     const Ellipticity& ell, PucciSign sign) {
    double pos = 0.0;
    double neg = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        if (eig[i] > 0) pos += eig[i];
        else neg += eig[i];
    }
    return sign == PucciSign::plus ? ell.Lambda * pos + ell.lambda * neg
                                   : ell.lambda * pos + ell.Lambda * neg;
}

inline void require_symmetric(const Eigen::MatrixXd& m) {
    detail::require(m.rows() == m.cols(), "matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    detail::require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "matrix must be symmetric");
}

inline double pucci(const Eigen::MatrixXd& matrix, const Ellipticity& ell, PucciSign sign) {
    require_symmetric(matrix);
    if (matrix.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    return pucci_from_eigenvalues(es.eigenvalues(), ell, sign);
}

inline double eval_model(ModelOperator model, double grad_norm, const Eigen::MatrixXd& hessian,
                         const Ellipticity& ell, const GrowthParams& growth) {
    detail::require(grad_norm >= 0, "grad_norm must be nonnegative");
    switch (model) {
    case ModelOperator::F1plus:
        return pucci(hessian, ell, PucciSign::plus) + growth.B * grad_norm * grad_norm +
               growth.b * grad_norm;
    case ModelOperator::F1minus:
        return pucci(hessian, ell, PucciSign::minus) - growth.B * grad_norm * grad_norm -
               growth.b * grad_norm;
    case ModelOperator::F2plus:
        return pucci(hessian, ell, PucciSign::plus) + growth.b * grad_norm;
    case ModelOperator::F2minus:
        return pucci(hessian, ell, PucciSign::minus) - growth.b * grad_norm;
    }
    return 0.0;
}

struct Envelope {
    double lower = 0.0;
    double upper = 0.0;
};

/// Bounds that the structure condition places on F(M1,p1,r1) - F(M2,p2,r2)
/// for dM = M1 - M2.
inline Envelope sc_envelope(const Eigen::MatrixXd& dM, const Eigen::VectorXd& p1,
                            const Eigen::VectorXd& p2, double r1, double r2,
                            const Ellipticity& ell, const GrowthParams& growth) {
    detail::require(p1.size() == p2.size(), "gradient vectors must have equal length");
    const double dp = (p1 - p2).norm();
    const double quad = growth.B * (p1.norm() + p2.norm()) * dp;
    Envelope e;
    e.lower = pucci(dM, ell, PucciSign::minus) - quad - growth.b * dp -
              growth.d * std::max(r1 - r2, 0.0);
    e.upper = pucci(dM, ell, PucciSign::plus) + quad + growth.b * dp +
              growth.d * std::max(r2 - r1, 0.0);
    return e;
}

// ---------------------------------------------------------------------------
// flat key=value configuration

using KeyValues = std::map<std::string, std::string>;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Parses `key = value` lines; `#` starts a comment. Later keys override.
inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        detail::require(eq != std::string::npos,
                        "config line " + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        detail::require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues parse_key_values(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ValidationError("key '" + key + "': not a number: '" + value + "'");
    }
    detail::require(used == value.size(), "key '" + key + "': trailing characters in '" + value + "'");
    return out;
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    detail::require(v == std::floor(v) && std::abs(v) < 1e9, "key '" + key + "': not an integer");
    return static_cast<int>(v);
}

inline void read_into(const KeyValues& kv, const std::string& key, double& target) {
    if (auto it = kv.find(key); it != kv.end()) target = parse_double(key, it->second);
}

inline void read_into(const KeyValues& kv, const std::string& key, int& target) {
    if (auto it = kv.find(key); it != kv.end()) target = parse_int(key, it->second);
}

/// Keys missing from `kv` keep the values of `base`.
inline ProblemSpec problem_from_key_values(const KeyValues& kv, ProblemSpec base = {}) {
    read_into(kv, "lambda", base.ellipticity.lambda);
    read_into(kv, "Lambda", base.ellipticity.Lambda);
    read_into(kv, "dim", base.ellipticity.dim);
    read_into(kv, "B", base.growth.B);
    read_into(kv, "b", base.growth.b);
    read_into(kv, "d", base.growth.d);
    read_into(kv, "c0", base.growth.c0);
    read_into(kv, "mu", base.forcing.mu);
    read_into(kv, "alpha", base.forcing.alpha);
    read_into(kv, "M", base.forcing.M);
    read_into(kv, "C1", base.forcing.C1);
    read_into(kv, "C2", base.forcing.C2);
    read_into(kv, "rho", base.geometry.rho);
    read_into(kv, "R", base.geometry.R);
    read_into(kv, "L", base.geometry.L);
    return base;
}

inline KeyValues problem_to_key_values(const ProblemSpec& spec) {
    return {
        {"lambda", format_double(spec.ellipticity.lambda)},
        {"Lambda", format_double(spec.ellipticity.Lambda)},
        {"dim", std::to_string(spec.ellipticity.dim)},
        {"B", format_double(spec.growth.B)},
        {"b", format_double(spec.growth.b)},
        {"d", format_double(spec.growth.d)},
        {"c0", format_double(spec.growth.c0)},
        {"mu", format_double(spec.forcing.mu)},
        {"alpha", format_double(spec.forcing.alpha)},
        {"M", format_double(spec.forcing.M)},
        {"C1", format_double(spec.forcing.C1)},
        {"C2", format_double(spec.forcing.C2)},
        {"rho", format_double(spec.geometry.rho)},
        {"R", format_double(spec.geometry.R)},
        {"L", format_double(spec.geometry.L)},
    };
}

inline std::string to_config_text(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

} // namespace pucci
