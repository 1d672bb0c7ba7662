#pragma once

// =============================================================================
// quadcert - solvability certificates
// =============================================================================
// Given a nominal solution (x*, u*) with invertible Jacobian J**, three
// scalars decide whether f(x, u) = 0 has a solution near x*:
//
//   e = || inv(J**) (f(x*, u) - f(x*, u*)) ||           affine deviation
//   g = || inv(J**) J*(u; .) - I ||                     Jacobian deviation
//   h >= max_{||y|| <= 1} || inv(J**) Q(y, y, u) ||     quadratic gain
//
// A solution exists in the ball ||x - x*|| <= rho whenever
// rho h + g + e / rho <= 1. Everything here uses the infinity norm.
// =============================================================================

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"
#include "quadcert/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace quadcert {

struct CertificateTerms {
    double e = 0.0;
    double g = 0.0;
    double h = 0.0;
    /// False when h is the monomial row-sum upper bound rather than the exact maximum.
    bool h_exact = false;
};

struct BallCertificate {
    bool certified = false;
    std::optional<double> witness_radius;
    double lhs_value = 0.0;
    std::string diagnostic;
};

namespace detail {

/// max over psi of sum_j |p_j + e^{i psi} q_j|, returned as an upper bound that
/// is within `rel_tol` of the true maximum (exact when at most one column has
/// both entries nonzero).
inline double phase_aggregated_row_sum(std::span<const Complex> p, std::span<const Complex> q,
                                       double rel_tol = 1e-9, std::size_t max_evals = 200000) {
    double fixed = 0.0;
    std::vector<std::pair<Complex, Complex>> both;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] != Complex{} && q[j] != Complex{}) {
            both.emplace_back(p[j], q[j]);
        } else {
            fixed += std::abs(p[j]) + std::abs(q[j]);
        }
    }
    double aligned = 0.0;
    double lipschitz = 0.0;
    for (const auto& [a, b] : both) {
        aligned += std::abs(a) + std::abs(b);
        lipschitz += std::abs(b);
    }
    if (both.size() <= 1) {
        return fixed + aligned;
    }

    auto value = [&](double psi) {
        const Complex rot = std::polar(1.0, psi);
        double s = 0.0;
        for (const auto& [a, b] : both) {
            s += std::abs(a + rot * b);
        }
        return s;
    };

    constexpr double two_pi = 2.0 * std::numbers::pi;
    double lower = 0.0;
    // Phases that align one column exactly are good starting candidates.
    for (const auto& [a, b] : both) {
        const double psi = std::arg(a) - std::arg(b);
        lower = std::max(lower, value(psi));
    }
    if (lower >= aligned * (1.0 - 1e-15)) {
        return fixed + aligned;
    }

    struct Interval {
        double mid;
        double half;
        double upper;
        bool operator<(const Interval& o) const { return upper < o.upper; }
    };
    std::priority_queue<Interval> open;
    constexpr std::size_t initial = 64;
    const double half0 = two_pi / (2.0 * initial);
    std::size_t evals = both.size();
    for (std::size_t s = 0; s < initial; ++s) {
        const double mid = (2.0 * s + 1.0) * half0;
        const double v = value(mid);
        ++evals;
        lower = std::max(lower, v);
        open.push({mid, half0, std::min(aligned, v + lipschitz * half0)});
    }
    while (true) {
        const Interval top = open.top();
        if (top.upper - lower <= rel_tol * std::max(1.0, lower) || evals >= max_evals) {
            return fixed + top.upper;
        }
        open.pop();
        const double half = top.half / 2.0;
        for (const double mid : {top.mid - half, top.mid + half}) {
            const double v = value(mid);
            ++evals;
            lower = std::max(lower, v);
            open.push({mid, half, std::min(aligned, v + lipschitz * half)});
        }
    }
}

enum class MonomialKind { XX, XConjX, ConjXConjX };

using MonomialKey = std::tuple<MonomialKind, std::size_t, std::size_t>;

/// Quadratic coefficients of Q(y, r(y), u) and of its conjugate, grouped by
/// monomial. Symmetric monomials (y_j y_l, conj(y_j) conj(y_l)) use j <= l so
/// that (j,l) and (l,j) coefficients aggregate before taking moduli.
struct MonomialColumns {
    std::map<MonomialKey, Vector> direct;
    std::map<MonomialKey, Vector> conjugated;
};

inline MonomialColumns collect_monomials(const QuadraticSystem& sys, std::span<const Complex> u) {
    MonomialColumns cols;
    const std::size_t n = sys.n();
    auto add = [n](std::map<MonomialKey, Vector>& into, const MonomialKey& key, std::size_t row,
                   Complex v) {
        auto [it, inserted] = into.try_emplace(key, Vector(n));
        it->second[row] += v;
    };
    for (const auto& t : sys.quad_terms()) {
        const Complex v = sys.slot_weight(t.slot, u) * t.coef;
        const std::size_t lo = std::min(t.left, t.right);
        const std::size_t hi = std::max(t.left, t.right);
        if (sys.conjugates()) {
            add(cols.direct, {MonomialKind::XConjX, t.left, t.right}, t.out, v);
            add(cols.conjugated, {MonomialKind::XConjX, t.right, t.left}, t.out, std::conj(v));
        } else {
            add(cols.direct, {MonomialKind::XX, lo, hi}, t.out, v);
            add(cols.conjugated, {MonomialKind::ConjXConjX, lo, hi}, t.out, std::conj(v));
        }
    }
    return cols;
}

} // namespace detail

/// The Jacobian-deviation map y -> P y + R conj(y) whose induced norm is g.
/// In the direct form R is zero.
struct JacobianDeviation {
    DenseMatrix p;
    DenseMatrix r;
};

inline JacobianDeviation jacobian_deviation(const NominalPoint& nominal, const QuadraticSystem& sys,
                                            std::span<const Complex> u) {
    const std::size_t n = sys.n();
    const WirtingerJacobian jac = wirtinger_jacobian(sys, nominal.x_star, u);
    const DenseMatrix eye = DenseMatrix::identity(n);
    if (nominal.form == NominalForm::Direct) {
        return {solve(nominal.jac_factor, jac.holo) - eye, DenseMatrix(n, n)};
    }
    // M (A y + B conj y) + N conj(A y + B conj y) - y
    //   = (M A + N conj(B) - I) y + (M B + N conj(A)) conj(y)
    DenseMatrix p = nominal.m_star * jac.holo;
    const DenseMatrix nb = nominal.n_star * jac.anti.conj();
    DenseMatrix r = nominal.m_star * jac.anti;
    const DenseMatrix na = nominal.n_star * jac.holo.conj();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) += nb(i, j) - (i == j ? 1.0 : 0.0);
            r(i, j) += na(i, j);
        }
    }
    return {p, r};
}

/// Induced infinity norm of y -> P y + R conj(y) over the complex unit ball.
/// Row i equals max_psi sum_j |P_ij + e^{i psi} conj(R_ij)|.
inline double deviation_norm(const JacobianDeviation& dev) {
    double best = 0.0;
    Vector rbar(dev.r.cols());
    for (std::size_t i = 0; i < dev.p.rows(); ++i) {
        for (std::size_t j = 0; j < dev.r.cols(); ++j) {
            rbar[j] = std::conj(dev.r(i, j));
        }
        best = std::max(best, detail::phase_aggregated_row_sum(dev.p.row(i), rbar));
    }
    return best;
}

/// Row-sum bound ||M^Q(u)||_inf over the monomial basis.
inline double quadratic_gain_bound(const NominalPoint& nominal, const QuadraticSystem& sys,
                                   std::span<const Complex> u) {
    const std::size_t n = sys.n();
    const detail::MonomialColumns cols = detail::collect_monomials(sys, u);
    std::vector<double> row_sums(n, 0.0);
    auto accumulate = [&](const Vector& column) {
        for (std::size_t i = 0; i < n; ++i) {
            row_sums[i] += std::abs(column[i]);
        }
    };
    if (nominal.form == NominalForm::Direct) {
        for (const auto& [key, q] : cols.direct) {
            accumulate(solve(nominal.jac_factor, q));
        }
    } else {
        std::map<detail::MonomialKey, Vector> mixed;
        for (const auto& [key, q] : cols.direct) {
            mixed[key] = nominal.m_star * q;
        }
        for (const auto& [key, q] : cols.conjugated) {
            const Vector nq = nominal.n_star * q;
            auto [it, inserted] = mixed.try_emplace(key, Vector(n));
            for (std::size_t i = 0; i < n; ++i) {
                it->second[i] += nq[i];
            }
        }
        for (const auto& [key, column] : mixed) {
            accumulate(column);
        }
    }
    return row_sums.empty() ? 0.0 : *std::max_element(row_sums.begin(), row_sums.end());
}

inline CertificateTerms compute_terms(const NominalPoint& nominal, const QuadraticSystem& sys,
                                      std::span<const Complex> u) {
    if (u.size() != sys.k() || nominal.n() != sys.n() || nominal.u_star.size() != sys.k()) {
        throw DimensionError("compute_terms: dimension mismatch");
    }
    CertificateTerms terms;
    const Vector shift =
        subtract(eval_f(sys, nominal.x_star, u), eval_f(sys, nominal.x_star, nominal.u_star));
    terms.e = inf_norm_vec(apply_inverse_jacobian(nominal, shift));
    terms.g = deviation_norm(jacobian_deviation(nominal, sys, u));
    terms.h = quadratic_gain_bound(nominal, sys, u);
    // With one state variable every monomial bound is attained on the unit circle.
    terms.h_exact = sys.n() == 1;
    return terms;
}

/// Best Brouwer radius in (0, r] for the terms: minimizes rho h + g + e / rho.
inline BallCertificate certify_terms_in_ball(const CertificateTerms& t, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("certify_in_ball: radius must be positive and finite");
    }
    BallCertificate cert;
    if (t.e == 0.0) {
        // x* itself solves the system; the infimum over rho is g.
        cert.lhs_value = t.g;
        cert.certified = t.g <= 1.0;
        if (cert.certified) {
            cert.witness_radius = r;
        }
        cert.diagnostic = "nominal point solves the system at this u";
        return cert;
    }
    const double rho = t.h > 0.0 ? std::min(std::sqrt(t.e / t.h), r) : r;
    cert.lhs_value = rho * t.h + t.g + t.e / rho;
    cert.certified = cert.lhs_value <= 1.0;
    if (cert.certified) {
        cert.witness_radius = rho;
    }
    return cert;
}

/// Union over all radii: 2 sqrt(h e) + g <= 1.
inline BallCertificate certify_terms_unbounded(const CertificateTerms& t) {
    BallCertificate cert;
    cert.lhs_value = 2.0 * std::sqrt(t.h * t.e) + t.g;
    if (t.e == 0.0) {
        cert.certified = cert.lhs_value <= 1.0;
        cert.diagnostic = "nominal point solves the system at this u";
        return cert;
    }
    if (t.h == 0.0) {
        // Infimum g is approached only as the radius grows without bound.
        cert.certified = cert.lhs_value < 1.0;
        if (!cert.certified && cert.lhs_value == 1.0) {
            cert.diagnostic = "h = 0 and g = 1: infimum not attained at any finite radius";
        }
        return cert;
    }
    cert.certified = cert.lhs_value <= 1.0;
    cert.witness_radius = std::sqrt(t.e / t.h);
    return cert;
}

inline BallCertificate certify_in_ball(const NominalPoint& nominal, const QuadraticSystem& sys,
                                       std::span<const Complex> u, double r) {
    if (!(r > 0.0)) {
        throw DomainError("certify_in_ball: radius must be positive");
    }
    return certify_terms_in_ball(compute_terms(nominal, sys, u), r);
}

inline BallCertificate certify_unbounded(const NominalPoint& nominal, const QuadraticSystem& sys,
                                         std::span<const Complex> u) {
    return certify_terms_unbounded(compute_terms(nominal, sys, u));
}

struct TightnessBounds {
    double inner_threshold = 0.0;  // e <= this  => solution in the ball
    double outer_threshold = 0.0;  // e >  this  => no solution in the ball
    double ball_radius = 0.0;
    double h_star = 0.0;

    bool certifies(double e) const { return e <= inner_threshold; }
    bool excludes(double e) const { return e > outer_threshold; }
};

/// Inner/outer thresholds on e for the fixed-Q, fixed-L form, with the ball
/// ||x - x*|| <= kappa / (2 h*).
inline TightnessBounds tightness_bounds(const NominalPoint& nominal, const QuadraticSystem& sys,
                                        double kappa) {
    if (!sys.has_fixed_quadratic_and_linear()) {
        throw UnsupportedFormError(
            "tightness_bounds: quadratic and linear terms must not depend on u");
    }
    if (!(kappa > 0.0 && kappa < 1.0)) {
        throw DomainError("tightness_bounds: kappa must lie in (0, 1)");
    }
    const double h_star = quadratic_gain_bound(nominal, sys, nominal.u_star);
    if (!(h_star > 0.0)) {
        throw DomainError("tightness_bounds: h* must be positive (system has no quadratic part)");
    }
    TightnessBounds b;
    b.h_star = h_star;
    b.inner_threshold = (2.0 * kappa - kappa * kappa) / (4.0 * h_star);
    b.outer_threshold = (2.0 * kappa + kappa * kappa) / (4.0 * h_star);
    b.ball_radius = kappa / (2.0 * h_star);
    return b;
}

} // namespace quadcert
