#pragma once

// Barrier catalog for the singular problem: closed-form value/derivatives,
// a sampled certifier for each differential inequality, and a monotone
// search for admissible constants.
//
// Radial families are functions of one radius. U1, U2, U4, U6 live on the
// solution annulus (distance s = r - rho); U5, U7 live on an interior ball of
// radius rho_b (distance s = rho_b - r). W/Z live on the slab
// {|x'| < R, 0 < x_N < delta R}, sampled at x' = (s, 0, ..., 0).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pucci/eigenpair.hpp"
#include "pucci/errors.hpp"
#include "pucci/grid.hpp"
#include "pucci/params.hpp"
#include "pucci/radial.hpp"
#include "pucci/transforms.hpp"

namespace pucci {

enum class BarrierFamily { U1, U2, U4, U5, U6, U7, W_slab, Z_slab };
enum class InequalityId {
    I1_sub_regularized,
    I2_super_transformed,
    I3_arbi1,
    I4_B666,
    I5_ca4,
    I6_lower_regime3,
    I7_krylov_slab
};

inline std::string to_string(BarrierFamily f) {
    switch (f) {
    case BarrierFamily::U1: return "U1";
    case BarrierFamily::U2: return "U2";
    case BarrierFamily::U4: return "U4";
    case BarrierFamily::U5: return "U5";
    case BarrierFamily::U6: return "U6";
    case BarrierFamily::U7: return "U7";
    case BarrierFamily::W_slab: return "W_slab";
    case BarrierFamily::Z_slab: return "Z_slab";
    }
    return "?";
}

inline std::string to_string(InequalityId id) {
    switch (id) {
    case InequalityId::I1_sub_regularized: return "I1_sub_regularized";
    case InequalityId::I2_super_transformed: return "I2_super_transformed";
    case InequalityId::I3_arbi1: return "I3_arbi1";
    case InequalityId::I4_B666: return "I4_B666";
    case InequalityId::I5_ca4: return "I5_ca4";
    case InequalityId::I6_lower_regime3: return "I6_lower_regime3";
    case InequalityId::I7_krylov_slab: return "I7_krylov_slab";
    }
    return "?";
}

inline InequalityId inequality_from_string(const std::string& s) {
    for (auto id : {InequalityId::I1_sub_regularized, InequalityId::I2_super_transformed, InequalityId::I3_arbi1,
                    InequalityId::I4_B666, InequalityId::I5_ca4, InequalityId::I6_lower_regime3,
                    InequalityId::I7_krylov_slab}) {
        const auto name = to_string(id);
        if (s == name || s == name.substr(0, 2)) return id;
    }
    throw ValidationError("unknown inequality id: " + s);
}

/// The family that each inequality is stated for.
inline BarrierFamily family_for(InequalityId id) {
    switch (id) {
    case InequalityId::I1_sub_regularized: return BarrierFamily::U1;
    case InequalityId::I2_super_transformed: return BarrierFamily::U2;
    case InequalityId::I3_arbi1: return BarrierFamily::U4;
    case InequalityId::I4_B666: return BarrierFamily::U5;
    case InequalityId::I5_ca4: return BarrierFamily::U6;
    case InequalityId::I6_lower_regime3: return BarrierFamily::U7;
    case InequalityId::I7_krylov_slab: return BarrierFamily::Z_slab;
    }
    return BarrierFamily::U1;
}

struct BarrierSpec {
    BarrierFamily family = BarrierFamily::U4;
    std::map<std::string, double> constants;
    std::optional<EigenPair> eigenfunction;       ///< U1, U2
    std::shared_ptr<const CubicSpline> psi;       ///< spline of the eigenfunction, built on demand

    double get(const std::string& key) const {
        auto it = constants.find(key);
        if (it == constants.end()) throw ValidationError(to_string(family) + ": missing constant " + key);
        return it->second;
    }
    double get_or(const std::string& key, double fallback) const {
        auto it = constants.find(key);
        return it == constants.end() ? fallback : it->second;
    }
    void set(const std::string& key, double value) { constants[key] = value; }
};

/// Attach an eigenpair and its interpolating spline to a U1/U2 spec.
inline void attach_eigenfunction(BarrierSpec& b, const EigenPair& pair) {
    const auto& psi = pair.eigenfunction;
    const auto d2 = psi.derivative2();
    b.eigenfunction = pair;
    b.psi = std::make_shared<const CubicSpline>(psi, d2.front(), d2.back());
}

struct RadialJet {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

struct SlabJet {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

namespace detail {

inline RadialJet power_of_psi(const CubicSpline::Jet& p, double e) {
    // (psi^e)' = e psi^{e-1} psi',  (psi^e)'' = e(e-1) psi^{e-2} psi'^2 + e psi^{e-1} psi''
    const double pe1 = std::pow(p.value, e - 1.0);
    return {pe1 * p.value, e * pe1 * p.d1, e * (e - 1.0) * pe1 / p.value * p.d1 * p.d1 + e * pe1 * p.d2};
}

inline CubicSpline::Jet psi_jet(const BarrierSpec& b, double r) {
    if (!b.psi) throw ValidationError(to_string(b.family) + ": eigenfunction required");
    const auto& g = b.psi->data().grid();
    if (!(r > g.rho() && r < g.R())) throw ValidationError(to_string(b.family) + ": point outside the annulus");
    auto j = (*b.psi)(r);
    if (!(j.value > 0)) throw ValidationError(to_string(b.family) + ": eigenfunction not positive at r");
    return j;
}

/// s (D - log s)^q with derivatives in s.
inline RadialJet log_corrected_profile(double s, double D, double q) {
    const double ell = D - std::log(s);
    const double h = std::pow(ell, q - 1.0);
    return {s * h * ell, h * (ell - q), -(q / s) * h * (1.0 + (1.0 - q) / ell)};
}

} // namespace detail

/// Closed-form value and radial derivatives. For U5/U7, r is the radius in
/// the ball of radius rho_b, and derivatives are with respect to that r.
inline RadialJet eval_barrier(const BarrierSpec& b, double r) {
    switch (b.family) {
    case BarrierFamily::U1: {
        const auto p = detail::psi_jet(b, r);
        const double m1 = b.get("m1");
        auto j = detail::power_of_psi(p, b.get("kappa"));
        return {m1 * j.value, m1 * j.d1, m1 * j.d2};
    }
    case BarrierFamily::U2: {
        const auto p = detail::psi_jet(b, r);
        const double m2 = b.get("m2");
        const auto& g = b.psi->data().grid();
        const double slope = b.get("L") / (g.R() - g.rho());
        const auto j = detail::power_of_psi(p, b.get("eta"));
        return {(1 + m2) * j.value + m2 * p.value + slope * (r - g.rho()), (1 + m2) * j.d1 + m2 * p.d1 + slope,
                (1 + m2) * j.d2 + m2 * p.d2};
    }
    case BarrierFamily::U4: {
        const double s = r - b.get("rho");
        if (!(s > 0)) throw ValidationError("U4: domain violation, r <= rho");
        const double C = b.get("Cbar");
        const auto j = detail::log_corrected_profile(s, b.get("D"), 1.0 / (1.0 + b.get("alpha")));
        if (!(b.get("D") - std::log(s) > 0)) throw ValidationError("U4: D - log(r - rho) must be positive");
        return {C * j.value, C * j.d1, C * j.d2};
    }
    case BarrierFamily::U5: {
        const double s = b.get("rho_b") - r;
        if (!(s > 0) || !(r > 0)) throw ValidationError("U5: domain violation, r outside (0, rho_b)");
        if (!(b.get("D") - std::log(s) > 0)) throw ValidationError("U5: D - log(rho_b - r) must be positive");
        const double c = b.get("cbar");
        const auto j = detail::log_corrected_profile(s, b.get("D"), 1.0 / (1.0 + b.get("alpha")));
        return {c * j.value, -c * j.d1, c * j.d2};
    }
    case BarrierFamily::U6: {
        const double s = r - b.get("rho");
        if (!(s > 0)) throw ValidationError("U6: domain violation, r <= rho");
        const double beta = (2.0 + b.get("mu")) / (1.0 + b.get("alpha"));
        const double C = b.get("Cbar");
        const double p = std::pow(s, beta - 2.0);
        return {C * p * s * s, C * beta * p * s, C * beta * (beta - 1.0) * p};
    }
    case BarrierFamily::U7: {
        const double s = b.get("rho_b") - r;
        if (!(s > 0) || !(r > 0)) throw ValidationError("U7: domain violation, r outside (0, rho_b)");
        const double beta = (2.0 + b.get("mu")) / (1.0 + b.get("alpha"));
        const double c = b.get("cbar");
        const double p = std::pow(s, beta - 2.0);
        return {c * p * s * s, -c * beta * p * s, c * beta * (beta - 1.0) * p};
    }
    case BarrierFamily::W_slab:
    case BarrierFamily::Z_slab: break;
    }
    throw ValidationError("eval_barrier: slab families take a (s, x_N) point");
}

/// W(x', x_N) = L (1 - |x'|^2/R^2 + (x_N^{1-nu} - (R delta)^{1-nu}) / (R delta)^{(1-nu)/2}) x_N
/// and Z = (1 - e^{-l1 W}) / l1, at x' = (s, 0, ..., 0) in dimension `dim`.
inline SlabJet eval_barrier(const BarrierSpec& b, double s, double xN, int dim) {
    if (b.family != BarrierFamily::W_slab && b.family != BarrierFamily::Z_slab)
        throw ValidationError("eval_barrier: (s, x_N) points apply to slab families only");
    detail::require(dim >= 2, "slab barrier needs dim >= 2");
    if (!(xN > 0)) throw ValidationError("slab barrier: domain violation, x_N <= 0");
    const double L = b.get("L"), R = b.get("R"), dl = b.get("delta_slab"), nu = b.get("nu");
    const double c = std::pow(R * dl, 1.0 - nu);
    const double K = std::sqrt(c);
    const double Gamma = (2.0 - nu) * (1.0 - nu) / K;
    const int N = dim;
    SlabJet W;
    W.grad = Eigen::VectorXd::Zero(N);
    W.hess = Eigen::MatrixXd::Zero(N, N);
    const double x1 = s;
    const double bracket = 1.0 - x1 * x1 / (R * R) + (std::pow(xN, 1.0 - nu) - c) / K;
    W.value = L * bracket * xN;
    W.grad(0) = -2.0 * L * x1 * xN / (R * R);
    W.grad(N - 1) = L * (1.0 - x1 * x1 / (R * R) + ((2.0 - nu) * std::pow(xN, 1.0 - nu) - c) / K);
    for (int i = 0; i + 1 < N; ++i) W.hess(i, i) = -2.0 * L * xN / (R * R);
    W.hess(0, N - 1) = W.hess(N - 1, 0) = -2.0 * L * x1 / (R * R);
    W.hess(N - 1, N - 1) = L * Gamma * std::pow(xN, -nu);
    if (b.family == BarrierFamily::W_slab) return W;

    const double l = b.get("l1");
    if (l == 0.0) return W;
    const double e = std::exp(-l * W.value);
    SlabJet Z;
    Z.value = -std::expm1(-l * W.value) / l;
    Z.grad = e * W.grad;
    Z.hess = e * (W.hess - l * W.grad * W.grad.transpose());
    return Z;
}

struct CertifyReport {
    double min_margin = std::numeric_limits<double>::infinity();
    double worst_point = 0.0;    ///< radius (or s) of the worst sample
    double worst_point_n = 0.0;  ///< x_N of the worst slab sample
    std::size_t worst_index = 0;
    std::size_t evaluated_nodes = 0;
};

struct SlabLattice {
    std::vector<double> lateral;  ///< s = |x'|
    std::vector<double> normal;   ///< x_N
};

namespace detail {

inline void check_pairing(const BarrierSpec& b, InequalityId id) {
    const auto want = family_for(id);
    const bool ok = b.family == want || (id == InequalityId::I7_krylov_slab && b.family == BarrierFamily::W_slab);
    if (!ok) throw ValidationError("incompatible pairing: " + to_string(b.family) + " with " + to_string(id));
}

/// (1 + l v) [(1/l) log(1 + l v)]^-alpha, the up-transformed singular factor.
inline double up_singular(double v, double l, double alpha) {
    if (l == 0.0) return std::pow(v, -alpha);
    return (1.0 + l * v) * std::pow(std::log1p(l * v) / l, -alpha);
}

/// (1 - l v) [-(1/l) log(1 - l v)]^-alpha, the down-transformed singular factor.
inline double down_singular(double v, double l, double alpha) {
    if (l == 0.0) return std::pow(v, -alpha);
    return (1.0 - l * v) * std::pow(-std::log1p(-l * v) / l, -alpha);
}

inline double radial_margin(const BarrierSpec& b, InequalityId id, const ProblemSpec& spec, double r) {
    const auto& ell = spec.ellipticity;
    const auto& gr = spec.growth;
    const auto& f = spec.forcing;
    const auto dc = derived_constants(gr, ell);
    const double l = dc.l2;
    const auto j = eval_barrier(b, r);
    switch (id) {
    case InequalityId::I1_sub_regularized: {
        const double d = r - spec.geometry.rho;
        return radial_f2(j.d2, j.d1, r, ell, gr.b, PucciSign::plus) - gr.c0 * j.value +
               f.M * std::pow(d, f.mu) * std::pow(j.value + b.get("delta"), -f.alpha);
    }
    case InequalityId::I2_super_transformed: {
        const double d = r - spec.geometry.rho;
        const double v = j.value;
        const double c0term = l == 0.0 ? gr.c0 * v : gr.c0 / l * (1.0 + l * v) * std::log1p(l * v);
        return -(radial_f2(j.d2, j.d1, r, ell, gr.b, PucciSign::plus) - c0term +
                 f.M * std::pow(d, f.mu) * up_singular(v, l, f.alpha));
    }
    case InequalityId::I3_arbi1:
    case InequalityId::I5_ca4: {
        const double d = r - b.get("rho");
        return -(radial_f2(j.d2, j.d1, r, ell, gr.b, PucciSign::plus) +
                 f.C2 * std::pow(d, f.mu) * up_singular(j.value, l, f.alpha));
    }
    case InequalityId::I4_B666:
    case InequalityId::I6_lower_regime3: {
        const double s = b.get("rho_b") - r;
        const double v = j.value;
        if (!(l * v < 1.0)) return -std::numeric_limits<double>::infinity();  // down-map undefined
        const double c0term = l == 0.0 ? -gr.c0 * v : gr.c0 / l * (1.0 - l * v) * std::log1p(-l * v);
        return radial_f2(j.d2, j.d1, r, ell, gr.b, PucciSign::minus) + c0term +
               f.C1 * std::pow(s, f.mu) * down_singular(v, l, f.alpha);
    }
    case InequalityId::I7_krylov_slab: break;
    }
    throw ValidationError("radial_margin: slab inequality needs a lattice");
}

} // namespace detail

/// Signed slack (positive = satisfied) at every radial sample point.
inline CertifyReport certify(const BarrierSpec& b, InequalityId id, const ProblemSpec& spec,
                             const std::vector<double>& sample) {
    detail::check_pairing(b, id);
    if (sample.empty()) throw ValidationError("certify: empty sample");
    if (id == InequalityId::I1_sub_regularized && !(b.get("m1") > 0))
        throw ValidationError("certify: degenerate barrier u1 = 0 (m1 must be positive, singular term undefined)");
    CertifyReport rep;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double m = detail::radial_margin(b, id, spec, sample[k]);
        const double mm = std::isnan(m) ? -std::numeric_limits<double>::infinity() : m;
        if (mm < rep.min_margin || rep.evaluated_nodes == 0) {
            rep.min_margin = mm;
            rep.worst_point = sample[k];
            rep.worst_index = k;
        }
        ++rep.evaluated_nodes;
    }
    return rep;
}

/// Krylov slab inequality M-(D^2 Z) - b|DZ| > 2 a2 x_N^-nu on a lattice.
inline CertifyReport certify(const BarrierSpec& b, InequalityId id, const ProblemSpec& spec,
                             const SlabLattice& lattice) {
    detail::check_pairing(b, id);
    if (lattice.lateral.empty() || lattice.normal.empty()) throw ValidationError("certify: empty sample");
    const auto& ell = spec.ellipticity;
    BarrierSpec z = b;
    z.family = BarrierFamily::Z_slab;
    if (!z.constants.count("l1")) z.set("l1", derived_constants(spec.growth, ell).l1);
    const double a2 = z.get_or("a2", spec.forcing.C2);
    const double nu = z.get("nu");
    CertifyReport rep;
    std::size_t k = 0;
    for (double s : lattice.lateral) {
        for (double xN : lattice.normal) {
            const auto j = eval_barrier(z, s, xN, ell.dim);
            const double m = pucci(j.hess, ell, PucciSign::minus) - spec.growth.b * j.grad.norm() -
                             2.0 * a2 * std::pow(xN, -nu);
            if (m < rep.min_margin || rep.evaluated_nodes == 0) {
                rep.min_margin = m;
                rep.worst_point = s;
                rep.worst_point_n = xN;
                rep.worst_index = k;
            }
            ++rep.evaluated_nodes;
            ++k;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sampling helpers

/// n points geometrically spaced in (lo, hi], lo > 0.
inline std::vector<double> geometric_points(double lo, double hi, std::size_t n) {
    detail::require(lo > 0 && hi > lo && n >= 2, "geometric_points: need 0 < lo < hi and n >= 2");
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return p;
}

inline std::vector<double> uniform_points(double lo, double hi, std::size_t n) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return p;
}

/// Interior nodes of `g`, refined `factor` times.
inline std::vector<double> interior_points(const RadialGrid& g, std::size_t factor = 1) {
    const auto fine = factor == 1 ? g : g.refined(factor);
    return {fine.nodes().begin() + 1, fine.nodes().end() - 1};
}

inline SlabLattice slab_lattice(double R, double delta_slab, std::size_t n_lateral, std::size_t n_normal) {
    const double top = delta_slab * R;
    return {uniform_points(0.0, 2.0 * R, n_lateral), geometric_points(top * 1e-6, top, n_normal)};
}

// ---------------------------------------------------------------------------
// Search for admissible constants

struct SearchBounds {
    std::map<std::string, double> initial;  ///< overrides of the default starting constants
    double grow = 2.0;
    double shrink = 0.5;
    int max_steps = 60;
    std::size_t sample_points = 256;        ///< radial sample size (geometric families)
    std::size_t lattice = 256;              ///< slab lattice points per axis
    std::size_t recheck_factor = 4;
    std::optional<double> sup_u;            ///< sup of the solution, for the upper-barrier side condition
    std::optional<double> inf_u_interior;   ///< min{u : d >= rho_b/2}, for the lower-barrier side condition
    std::optional<EigenPair> eigen;         ///< eigenpair for U1/U2 (computed if absent)
    double delta = 1e-2;                    ///< regularization at which I1 is certified
};

struct SearchResult {
    BarrierSpec barrier;
    CertifyReport report;   ///< on the base sample
    CertifyReport recheck;  ///< on the refined sample
    int steps = 0;
    std::vector<double> trajectory;  ///< min margin per step
};

namespace detail {

inline double annulus_diameter(const ProblemSpec& spec) { return 2.0 * spec.geometry.R; }

inline double default_ball_radius(const ProblemSpec& spec) {
    return 0.5 * (spec.geometry.R - spec.geometry.rho);
}

inline double choose_eta(const ProblemSpec& spec) {
    const double beta = (2.0 + spec.forcing.mu) / (1.0 + spec.forcing.alpha);
    return beta <= 0.5 ? 0.9 * beta : 0.5;
}

struct Plan {
    BarrierSpec barrier;
    std::vector<double> base, fine;
    SlabLattice base_lattice, fine_lattice;
    bool slab = false;
};

inline void fill(BarrierSpec& b, const std::map<std::string, double>& defaults,
                 const std::map<std::string, double>& overrides) {
    for (const auto& [k, v] : defaults) b.set(k, v);
    for (const auto& [k, v] : overrides) b.set(k, v);
}

inline std::vector<double> shell_points(double rho, double width, std::size_t n) {
    auto s = geometric_points(width * 1e-6, width, n);
    for (auto& x : s) x += rho;
    return s;
}

inline std::vector<double> ball_points(double rho_b, std::size_t n) {
    // s = rho_b - r in (0, rho_b/2]; listed from the boundary inwards
    auto s = geometric_points(rho_b * 0.5e-6, rho_b / 2.0, n);
    for (auto& x : s) x = rho_b - x;
    return s;
}

} // namespace detail

/// Monotone search: halve small constants (m1, cbar, delta_slab, theta_ann)
/// and double large ones (m2, Cbar) until the inequality and its side
/// conditions hold on the base sample and on a refined recheck sample.
inline SearchResult search_constants(BarrierFamily family, InequalityId id, const ProblemSpec& spec,
                                     const SearchBounds& bounds = {}) {
    validate(spec);
    BarrierSpec probe;
    probe.family = family;
    detail::check_pairing(probe, id);
    const auto& ell = spec.ellipticity;
    const auto& f = spec.forcing;
    const auto& geo = spec.geometry;
    const auto dc = derived_constants(spec.growth, ell);
    const double l2 = dc.l2;

    BarrierSpec b;
    b.family = family;
    b.set("alpha", f.alpha);
    b.set("mu", f.mu);
    const double D_default = 2.0 + std::log(2.0 * detail::annulus_diameter(spec));

    auto eigen_for = [&]() {
        if (bounds.eigen) return *bounds.eigen;
        return principal_eig(ell, spec.growth.b, geo);
    };

    SearchResult out;
    for (int step = 0; step < bounds.max_steps; ++step) {
        if (step == 0) {
            switch (id) {
            case InequalityId::I1_sub_regularized:
                detail::fill(b, {{"kappa", 1.5}, {"m1", 1.0}, {"delta", bounds.delta}}, bounds.initial);
                attach_eigenfunction(b, eigen_for());
                break;
            case InequalityId::I2_super_transformed:
                detail::fill(b,
                             {{"eta", detail::choose_eta(spec)},
                              {"m2", 1.0},
                              {"L", l2 == 0.0 ? geo.L : std::expm1(l2 * geo.L) / l2}},
                             bounds.initial);
                attach_eigenfunction(b, eigen_for());
                break;
            case InequalityId::I3_arbi1:
                detail::fill(b, {{"rho", geo.rho}, {"Cbar", 1.0}, {"D", D_default}, {"theta_ann", 0.5}},
                             bounds.initial);
                break;
            case InequalityId::I5_ca4:
                detail::fill(b, {{"rho", geo.rho}, {"Cbar", 1.0}, {"theta_ann", 0.5}}, bounds.initial);
                break;
            case InequalityId::I4_B666:
                detail::fill(b, {{"rho_b", detail::default_ball_radius(spec)}, {"cbar", 1.0}, {"D", D_default}},
                             bounds.initial);
                break;
            case InequalityId::I6_lower_regime3:
                detail::fill(b, {{"rho_b", detail::default_ball_radius(spec)}, {"cbar", 1.0}}, bounds.initial);
                break;
            case InequalityId::I7_krylov_slab:
                detail::fill(b,
                             {{"nu", 0.5}, {"L", 1.0}, {"R", 1.0}, {"delta_slab", 0.5}, {"l1", dc.l1},
                              {"a2", f.C2}},
                             bounds.initial);
                break;
            }
            if (id == InequalityId::I3_arbi1 || id == InequalityId::I5_ca4)
                b.set("theta_ann", std::min(b.get("theta_ann"), (geo.R - geo.rho) / geo.rho));
        }

        bool side_ok = true;
        bool pre_ok = true;
        CertifyReport base, fine;
        bool in_near_half = true;  // worst point close to the singular boundary
        if (id == InequalityId::I7_krylov_slab) {
            const double nu = b.get("nu"), R = b.get("R"), dl = b.get("delta_slab");
            pre_ok = nu > f.alpha - f.mu && nu < 1.0 && dl > 0 && dl < 1.0;
            const double K = std::pow(R * dl, (1.0 - nu) / 2.0);
            side_ok = K <= 0.25;
            if (pre_ok) {
                const auto lat = slab_lattice(R, dl, bounds.lattice, bounds.lattice);
                base = certify(b, id, spec, lat);
                double wmax = 0.0;
                for (double s : lat.lateral)
                    for (double xN : lat.normal) {
                        BarrierSpec w = b;
                        w.family = BarrierFamily::W_slab;
                        wmax = std::max(wmax, std::abs(eval_barrier(w, s, xN, ell.dim).value));
                    }
                const double bound = b.get("L") * ell.lambda * (2.0 - nu) * (1.0 - nu) / (2.0 * K) *
                                     std::exp(-dc.l1 * wmax);
                side_ok = side_ok && b.get("a2") <= bound;
            } else {
                base.min_margin = -std::numeric_limits<double>::infinity();
                base.evaluated_nodes = 1;
            }
        } else {
            std::vector<double> sample;
            switch (id) {
            case InequalityId::I1_sub_regularized:
            case InequalityId::I2_super_transformed:
                sample = interior_points(b.psi->data().grid());
                break;
            case InequalityId::I3_arbi1:
            case InequalityId::I5_ca4:
                sample = detail::shell_points(geo.rho, b.get("theta_ann") * geo.rho, bounds.sample_points);
                break;
            default:
                sample = detail::ball_points(b.get("rho_b"), bounds.sample_points);
                break;
            }
            base = certify(b, id, spec, sample);
            in_near_half = base.worst_index < sample.size() / 2;
            if (id == InequalityId::I3_arbi1 || id == InequalityId::I5_ca4) {
                const double Rp = (1.0 + b.get("theta_ann")) * geo.rho;
                const double top = eval_barrier(b, Rp).value;
                const double up = l2 == 0.0 ? top : std::log1p(l2 * top) / l2;
                side_ok = up >= bounds.sup_u.value_or(geo.L);
            }
            if (id == InequalityId::I4_B666 || id == InequalityId::I6_lower_regime3) {
                const double v = eval_barrier(b, b.get("rho_b") / 2.0).value;
                if (!(l2 * v < 1.0)) {
                    side_ok = false;
                } else {
                    const double low = l2 == 0.0 ? v : -std::log1p(-l2 * v) / l2;
                    if (bounds.inf_u_interior) side_ok = low <= *bounds.inf_u_interior;
                }
            }
        }
        out.trajectory.push_back(base.min_margin);

        bool pass = pre_ok && side_ok && base.min_margin >= 0;
        if (pass) {
            if (id == InequalityId::I7_krylov_slab) {
                const auto f4 = bounds.lattice * bounds.recheck_factor;
                fine = certify(b, id, spec, slab_lattice(b.get("R"), b.get("delta_slab"), f4, f4));
            } else {
                std::vector<double> sample;
                const auto fn = bounds.sample_points * bounds.recheck_factor;
                switch (id) {
                case InequalityId::I1_sub_regularized:
                case InequalityId::I2_super_transformed:
                    sample = interior_points(b.psi->data().grid(), bounds.recheck_factor);
                    break;
                case InequalityId::I3_arbi1:
                case InequalityId::I5_ca4:
                    sample = detail::shell_points(geo.rho, b.get("theta_ann") * geo.rho, fn);
                    break;
                default:
                    sample = detail::ball_points(b.get("rho_b"), fn);
                    break;
                }
                fine = certify(b, id, spec, sample);
                if (fine.min_margin < 0) in_near_half = fine.worst_index < sample.size() / 2;
            }
            pass = fine.min_margin >= 0;
        }
        if (pass) {
            out.barrier = b;
            out.report = base;
            out.recheck = fine;
            out.steps = step + 1;
            return out;
        }

        // adjust constants
        switch (id) {
        case InequalityId::I1_sub_regularized: b.set("m1", b.get("m1") * bounds.shrink); break;
        case InequalityId::I2_super_transformed: b.set("m2", b.get("m2") * bounds.grow); break;
        case InequalityId::I3_arbi1:
        case InequalityId::I5_ca4:
            if (!side_ok || in_near_half) b.set("Cbar", b.get("Cbar") * bounds.grow);
            else b.set("theta_ann", b.get("theta_ann") * bounds.shrink);
            break;
        case InequalityId::I4_B666:
        case InequalityId::I6_lower_regime3: b.set("cbar", b.get("cbar") * bounds.shrink); break;
        case InequalityId::I7_krylov_slab: b.set("delta_slab", b.get("delta_slab") * bounds.shrink); break;
        }
    }
    std::string traj;
    for (double m : out.trajectory) traj += (traj.empty() ? "" : ", ") + format_double(m);
    throw NumericalError("search exhaustion for " + to_string(id) + " after " + std::to_string(bounds.max_steps) +
                         " steps; margins: [" + traj + "]");
}

// ---------------------------------------------------------------------------
// Bracket of a computed solution by transformed barriers

struct BracketReport {
    bool passed = true;
    double min_upper_margin = std::numeric_limits<double>::infinity();  ///< min of upper - u
    double min_lower_margin = std::numeric_limits<double>::infinity();  ///< min of u - lower
    std::size_t upper_nodes = 0;
    std::size_t lower_nodes = 0;
};

/// Checks (-1/l2) log(1 - l2 u_low) <= u <= (1/l2) log(1 + l2 u_up) nodewise:
/// the upper barrier (U4 or U6) on the shell rho < r <= (1 + theta_ann) rho,
/// the lower barrier (U5 or U7) at distances s <= rho_b/2 from the boundary.
inline BracketReport bracket_check(const GridFunction& u, const BarrierSpec& upper, const BarrierSpec& lower,
                                   const ProblemSpec& spec) {
    const double l2 = derived_constants(spec.growth, spec.ellipticity).l2;
    const double rho = spec.geometry.rho;
    BracketReport rep;
    const double Rp = (1.0 + upper.get("theta_ann")) * upper.get("rho");
    const double rho_b = lower.get("rho_b");
    for (std::size_t i = 1; i < u.size(); ++i) {
        const double r = u.r(i);
        if (r <= Rp) {
            const double v = eval_barrier(upper, r).value;
            const double up = l2 == 0.0 ? v : std::log1p(l2 * v) / l2;
            rep.min_upper_margin = std::min(rep.min_upper_margin, up - u[i]);
            ++rep.upper_nodes;
        }
        const double s = r - rho;
        if (s <= rho_b / 2.0) {
            const double v = eval_barrier(lower, rho_b - s).value;
            const double low = l2 == 0.0 ? v : -std::log1p(-l2 * v) / l2;
            rep.min_lower_margin = std::min(rep.min_lower_margin, u[i] - low);
            ++rep.lower_nodes;
        }
    }
    rep.passed = rep.min_upper_margin >= 0 && rep.min_lower_margin >= 0;
    return rep;
}

/// min{u : d(x) >= rho_b/2}, with d the distance to either sphere.
inline double interior_minimum(const GridFunction& u, double rho_b) {
    double m = std::numeric_limits<double>::infinity();
    const double rho = u.grid().rho(), R = u.grid().R();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = std::min(u.r(i) - rho, R - u.r(i));
        if (d >= rho_b / 2.0) m = std::min(m, u[i]);
    }
    return m;
}

} // namespace pucci
