#pragma once

// =============================================================================
// quadcert - ground-truth oracles
// =============================================================================
// Independent of the certificate algebra: damped Newton from a grid of starts,
// closed-form regions for decoupled scalar quadratics, and occupancy scans of
// the true solvability region over a 2-D parameter slice.
// =============================================================================

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"
#include "quadcert/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace quadcert {

struct SolveReport {
    bool found = false;
    Vector x;
    double residual = std::numeric_limits<double>::infinity();
    double distance_from_nominal = std::numeric_limits<double>::infinity();
    std::size_t starts_tried = 0;
};

struct NewtonOptions {
    std::size_t max_iterations = 50;
    std::size_t max_halvings = 20;
    /// Grid multistart applies when the real unknown count is at most this.
    std::size_t max_grid_dimension = 4;
};

namespace detail {

inline bool is_real_problem(const QuadraticSystem& sys, std::span<const Complex> u,
                            std::span<const Complex> x_star) {
    if (sys.conjugates()) {
        return false;
    }
    auto real = [](Complex z) { return z.imag() == 0.0; };
    for (const auto& t : sys.quad_terms()) {
        if (!real(t.coef)) return false;
    }
    for (const auto& t : sys.lin_terms()) {
        if (!real(t.coef)) return false;
    }
    return std::all_of(sys.k0().begin(), sys.k0().end(), real) &&
           std::all_of(sys.k1().entries().begin(), sys.k1().entries().end(), real) &&
           std::all_of(u.begin(), u.end(), real) && std::all_of(x_star.begin(), x_star.end(), real);
}

/// Newton on the real unknowns of x (n of them for real problems, 2n otherwise).
class RealEmbeddedNewton {
public:
    RealEmbeddedNewton(const QuadraticSystem& sys, std::span<const Complex> u, bool real_problem)
        : sys_(sys), u_(u.begin(), u.end()), real_(real_problem) {}

    std::size_t dimension() const { return real_ ? sys_.n() : 2 * sys_.n(); }

    /// Direction in x-space of real unknown `c`.
    Vector unit(std::size_t c) const {
        Vector e(sys_.n());
        if (c < sys_.n()) {
            e[c] = 1.0;
        } else {
            e[c - sys_.n()] = Complex(0.0, 1.0);
        }
        return e;
    }

    Vector residual_real(const Vector& f) const {
        Vector out(dimension());
        for (std::size_t i = 0; i < sys_.n(); ++i) {
            out[i] = f[i].real();
            if (!real_) {
                out[sys_.n() + i] = f[i].imag();
            }
        }
        return out;
    }

    double residual(const Vector& x) const { return inf_norm_vec(eval_f(sys_, x, u_)); }

    /// Returns the converged point, or an empty vector.
    Vector run(Vector x, double tol, const NewtonOptions& opt) const {
        Vector f = eval_f(sys_, x, u_);
        double fnorm = inf_norm_vec(f);
        for (std::size_t it = 0; it < opt.max_iterations; ++it) {
            if (fnorm < tol) {
                return x;
            }
            const std::size_t d = dimension();
            DenseMatrix jac(d, d);
            for (std::size_t c = 0; c < d; ++c) {
                jac.set_column(c, residual_real(eval_jacobian_action(sys_, x, u_, unit(c))));
            }
            const LUFactorization lu = lu_factor(jac);
            if (lu.singular) {
                return {};
            }
            const Vector rhs = scaled(residual_real(f), -1.0);
            const Vector step = solve(lu, rhs);
            double alpha = 1.0;
            bool improved = false;
            for (std::size_t k = 0; k <= opt.max_halvings; ++k) {
                Vector trial = x;
                for (std::size_t c = 0; c < d; ++c) {
                    const Vector e = unit(c);
                    for (std::size_t i = 0; i < sys_.n(); ++i) {
                        trial[i] += alpha * step[c].real() * e[i];
                    }
                }
                Vector ft = eval_f(sys_, trial, u_);
                const double tn = inf_norm_vec(ft);
                if (std::isfinite(tn) && tn < fnorm) {
                    x = std::move(trial);
                    f = std::move(ft);
                    fnorm = tn;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!improved) {
                return {};
            }
        }
        return fnorm < tol ? x : Vector{};
    }

private:
    const QuadraticSystem& sys_;
    Vector u_;
    bool real_;
};

inline double distance_inf(std::span<const Complex> a, std::span<const Complex> b) {
    return inf_norm_vec(subtract(a, b));
}

} // namespace detail

/// Damped Newton from every node of a uniform grid over ||x - x*||_inf <= r
/// (plus x* itself); reports the converged root closest to x*.
inline SolveReport newton_multistart(const QuadraticSystem& sys, std::span<const Complex> u,
                                     std::span<const Complex> x_star, double r,
                                     std::size_t grid_points_per_dim = 5, double tol = 1e-10,
                                     const NewtonOptions& opt = {}) {
    if (x_star.size() != sys.n() || u.size() != sys.k()) {
        throw DimensionError("newton_multistart: dimension mismatch");
    }
    const bool real_problem = detail::is_real_problem(sys, u, x_star);
    const detail::RealEmbeddedNewton newton(sys, u, real_problem);
    const std::size_t d = newton.dimension();

    std::vector<Vector> starts{Vector(x_star.begin(), x_star.end())};
    if (d <= opt.max_grid_dimension && grid_points_per_dim > 1 && r > 0.0 && std::isfinite(r)) {
        std::size_t total = 1;
        for (std::size_t c = 0; c < d; ++c) {
            total *= grid_points_per_dim;
        }
        for (std::size_t node = 0; node < total; ++node) {
            Vector x(x_star.begin(), x_star.end());
            std::size_t rem = node;
            for (std::size_t c = 0; c < d; ++c) {
                const std::size_t idx = rem % grid_points_per_dim;
                rem /= grid_points_per_dim;
                const double offset =
                    -r + 2.0 * r * static_cast<double>(idx) / static_cast<double>(grid_points_per_dim - 1);
                const Vector e = newton.unit(c);
                for (std::size_t i = 0; i < x.size(); ++i) {
                    x[i] += offset * e[i];
                }
            }
            starts.push_back(std::move(x));
        }
    }

    SolveReport report;
    for (const auto& start : starts) {
        ++report.starts_tried;
        Vector x = newton.run(start, tol, opt);
        if (x.empty()) {
            continue;
        }
        // Re-verify through the system itself rather than the solver state.
        const double res = newton.residual(x);
        if (!(res < tol)) {
            continue;
        }
        const double dist = detail::distance_inf(x, x_star);
        if (!report.found || dist < report.distance_from_nominal) {
            report.found = true;
            report.x = std::move(x);
            report.residual = res;
            report.distance_from_nominal = dist;
        }
    }
    return report;
}

/// f_i = a x_i^2 + b x_i + c + d u_i
struct DiagonalQuadratic {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 1.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

/// Reads the coefficients of a decoupled real system; throws when the system
/// couples coordinates or lets u enter anywhere but the constant term.
inline std::vector<DiagonalQuadratic> extract_diagonal(const QuadraticSystem& sys) {
    const std::size_t n = sys.n();
    if (sys.conjugates() || sys.k() != n) {
        throw UnsupportedFormError("extract_diagonal: need a non-conjugating system with k = n");
    }
    std::vector<DiagonalQuadratic> eqs(n);
    for (std::size_t i = 0; i < n; ++i) {
        eqs[i].d = 0.0;
    }
    auto real_part = [](Complex z) {
        if (z.imag() != 0.0) {
            throw UnsupportedFormError("extract_diagonal: complex coefficient");
        }
        return z.real();
    };
    for (const auto& t : sys.quad_terms()) {
        if (t.slot != 0 || t.left != t.out || t.right != t.out) {
            throw UnsupportedFormError("extract_diagonal: coupled or u-dependent quadratic term");
        }
        eqs[t.out].a += real_part(t.coef);
    }
    for (const auto& t : sys.lin_terms()) {
        if (t.slot != 0 || t.in != t.out) {
            throw UnsupportedFormError("extract_diagonal: coupled or u-dependent linear term");
        }
        eqs[t.out].b += real_part(t.coef);
    }
    for (std::size_t i = 0; i < n; ++i) {
        eqs[i].c = real_part(sys.k0()[i]);
        for (std::size_t m = 0; m < n; ++m) {
            const double v = real_part(sys.k1()(i, m));
            if (m == i) {
                eqs[i].d = v;
            } else if (v != 0.0) {
                throw UnsupportedFormError("extract_diagonal: u_m enters equation i != m");
            }
        }
        if (eqs[i].d == 0.0) {
            throw UnsupportedFormError("extract_diagonal: u_i does not enter equation i");
        }
    }
    return eqs;
}

/// Exact set of u_i with a root of equation i in [center_i - radius, center_i + radius].
/// radius = +inf gives the unconstrained solvability interval. The region is
/// the box formed by the returned intervals.
inline std::vector<Interval> scalar_quadratic_region(std::span<const DiagonalQuadratic> eqs,
                                                     std::span<const double> center, double radius) {
    if (center.size() != eqs.size()) {
        throw DimensionError("scalar_quadratic_region: center length mismatch");
    }
    if (!(radius >= 0.0)) {
        throw DomainError("scalar_quadratic_region: radius must be nonnegative");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<Interval> out;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        const auto& q = eqs[i];
        if (q.d == 0.0) {
            throw UnsupportedFormError("scalar_quadratic_region: u does not enter equation");
        }
        auto poly = [&](double x) { return q.a * x * x + q.b * x + q.c; };
        double lo = 0.0;
        double hi = 0.0;
        if (std::isinf(radius)) {
            if (q.a != 0.0) {
                const double vertex = poly(-q.b / (2.0 * q.a));
                lo = q.a > 0.0 ? vertex : -inf;
                hi = q.a > 0.0 ? inf : vertex;
            } else if (q.b != 0.0) {
                lo = -inf;
                hi = inf;
            } else {
                lo = hi = q.c;
            }
        } else {
            const double x0 = center[i] - radius;
            const double x1 = center[i] + radius;
            lo = std::min(poly(x0), poly(x1));
            hi = std::max(poly(x0), poly(x1));
            if (q.a != 0.0) {
                const double xv = -q.b / (2.0 * q.a);
                if (x0 <= xv && xv <= x1) {
                    lo = std::min(lo, poly(xv));
                    hi = std::max(hi, poly(xv));
                }
            }
        }
        // a x^2 + b x + c + d u = 0  <=>  u = -poly(x) / d
        double ulo = -hi / q.d;
        double uhi = -lo / q.d;
        if (q.d < 0.0) {
            std::swap(ulo, uhi);
        }
        out.push_back({ulo, uhi});
    }
    return out;
}

/// u = origin + a axis1 + b axis2 over a count1 x count2 grid.
struct SliceGrid {
    Vector origin;
    Vector axis1;
    Vector axis2;
    double lo1 = -1.0;
    double hi1 = 1.0;
    std::size_t count1 = 21;
    double lo2 = 0.0;
    double hi2 = 0.0;
    std::size_t count2 = 1;

    double coord1(std::size_t i) const { return coord(lo1, hi1, count1, i); }
    double coord2(std::size_t j) const { return coord(lo2, hi2, count2, j); }

    Vector point(std::size_t i, std::size_t j) const {
        Vector u = origin;
        const double a = coord1(i);
        const double b = coord2(j);
        for (std::size_t m = 0; m < u.size(); ++m) {
            u[m] += a * axis1[m] + b * axis2[m];
        }
        return u;
    }

private:
    static double coord(double lo, double hi, std::size_t count, std::size_t i) {
        return count <= 1 ? lo
                          : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

struct OccupancyGrid {
    std::size_t count1 = 0;
    std::size_t count2 = 0;
    std::vector<char> occupied;  // row-major: index i * count2 + j

    bool at(std::size_t i, std::size_t j) const { return occupied[i * count2 + j] != 0; }
};

/// Marks grid nodes whose u admits a Newton-found root within ||x - x*|| <= r.
inline OccupancyGrid region_scan_2d(const QuadraticSystem& sys, std::span<const Complex> x_star,
                                    const SliceGrid& grid, double r,
                                    std::size_t grid_points_per_dim = 5) {
    if (grid.origin.size() != sys.k() || grid.axis1.size() != sys.k() ||
        grid.axis2.size() != sys.k()) {
        throw DimensionError("region_scan_2d: slice vectors must have length k");
    }
    OccupancyGrid occ{grid.count1, grid.count2, std::vector<char>(grid.count1 * grid.count2, 0)};
    for (std::size_t i = 0; i < grid.count1; ++i) {
        for (std::size_t j = 0; j < grid.count2; ++j) {
            const Vector u = grid.point(i, j);
            const SolveReport rep = newton_multistart(sys, u, x_star, r, grid_points_per_dim);
            occ.occupied[i * grid.count2 + j] = rep.found && rep.distance_from_nominal <= r;
        }
    }
    return occ;
}

} // namespace quadcert
