#pragma once

// =============================================================================
// quadcert - AC power flow specialization
// =============================================================================
// With the slack bus eliminated, the power flow equations read
//   V = w + Z diag(conj V)^-1 conj(s),   Z = Y^-1,   Y w = -Y0 V0
// and in the scaled unknown gamma = w / V they become the conjugating
// quadratic system
//   diag(gamma) zeta(s) conj(gamma) + gamma - 1 = 0,
//   zeta(s) = diag(w)^-1 Z diag(conj w)^-1 diag(conj s),
// whose nominal solution is gamma = 1 at s = 0.
// =============================================================================

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"
#include "quadcert/matpower.hpp"
#include "quadcert/quadform.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace quadcert {

struct PowerFlowModel {
    std::size_t n = 0;              // non-slack buses
    int slack_id = 0;
    std::vector<int> bus_ids;       // external ids of the non-slack buses, model order
    double base_mva = 100.0;
    DenseMatrix y;                  // n x n admittance among non-slack buses, pu
    Vector y0;                      // coupling of each non-slack bus to the slack
    Complex v0{1.0};                // slack voltage
    DenseMatrix z;                  // inv(y)
    Vector w;                       // no-load voltages
    Vector s_nominal;               // scheduled injections, pu
    std::vector<std::string> warnings;
};

/// Full bus admittance matrix in case bus order.
inline DenseMatrix build_admittance(const GridCase& c) {
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        index[c.buses[i].id] = i;
    }
    const std::size_t nb = c.buses.size();
    DenseMatrix y(nb, nb);
    constexpr Complex j{0.0, 1.0};
    for (const auto& br : c.branches) {
        if (br.status == 0) {
            continue;
        }
        const auto f = index.at(br.from);
        const auto t = index.at(br.to);
        if (br.r == 0.0 && br.x == 0.0) {
            throw ModelError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                             " has zero impedance");
        }
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const double tau = br.effective_tap();
        const double theta = br.shift_deg * std::numbers::pi / 180.0;
        const Complex charging = j * (br.b / 2.0);
        y(f, f) += (ys + charging) / (tau * tau);
        y(f, t) += -ys / (tau * std::polar(1.0, -theta));
        y(t, f) += -ys / (tau * std::polar(1.0, theta));
        y(t, t) += ys + charging;
    }
    for (std::size_t i = 0; i < nb; ++i) {
        y(i, i) += Complex(c.buses[i].gs, c.buses[i].bs) / c.base_mva;
    }
    return y;
}

inline PowerFlowModel build_model(const GridCase& c) {
    if (!(c.base_mva > 0.0)) {
        throw ModelError("base MVA must be positive");
    }
    const DenseMatrix ybus = build_admittance(c);
    std::size_t slack = c.buses.size();
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        if (c.buses[i].type == BusType::Slack) {
            if (slack != c.buses.size()) {
                throw ModelError("multiple slack buses");
            }
            slack = i;
        }
    }
    if (slack == c.buses.size()) {
        throw ModelError("no slack bus");
    }

    PowerFlowModel m;
    m.base_mva = c.base_mva;
    const Bus& sb = c.buses[slack];
    m.slack_id = sb.id;
    double vmag = sb.vm;
    for (const auto& g : c.gens) {
        if (g.bus == sb.id && g.status != 0) {
            vmag = g.vg;
            break;
        }
    }
    m.v0 = std::polar(vmag, sb.va * std::numbers::pi / 180.0);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < c.buses.size(); ++i) {
        if (i != slack) {
            keep.push_back(i);
            m.bus_ids.push_back(c.buses[i].id);
        }
    }
    m.n = keep.size();
    m.y = DenseMatrix(m.n, m.n);
    m.y0.assign(m.n, Complex{});
    for (std::size_t a = 0; a < m.n; ++a) {
        for (std::size_t b = 0; b < m.n; ++b) {
            m.y(a, b) = ybus(keep[a], keep[b]);
        }
        m.y0[a] = ybus(keep[a], slack);
    }

    const LUFactorization lu = lu_factor(m.y);
    if (lu.singular) {
        throw ModelError("admittance matrix of the non-slack buses is singular (islanded bus?)");
    }
    m.z = inverse(lu);
    Vector rhs(m.n);
    for (std::size_t a = 0; a < m.n; ++a) {
        rhs[a] = -m.y0[a] * m.v0;
    }
    m.w = solve(lu, rhs);
    for (std::size_t a = 0; a < m.n; ++a) {
        if (std::abs(m.w[a]) == 0.0) {
            throw ModelError("no-load voltage is zero at bus " + std::to_string(m.bus_ids[a]));
        }
    }

    std::map<int, std::size_t> pos;
    for (std::size_t a = 0; a < m.n; ++a) {
        pos[m.bus_ids[a]] = a;
    }
    m.s_nominal.assign(m.n, Complex{});
    for (std::size_t a = 0; a < m.n; ++a) {
        const Bus& b = c.buses[keep[a]];
        m.s_nominal[a] -= Complex(b.pd, b.qd) / c.base_mva;
        if (b.type == BusType::PV) {
            m.warnings.push_back("PV bus " + std::to_string(b.id) +
                                 " treated as PQ with scheduled (Pg, Qg)");
        }
    }
    for (const auto& g : c.gens) {
        if (g.status == 0 || g.bus == m.slack_id) {
            continue;
        }
        m.s_nominal[pos.at(g.bus)] += Complex(g.pg, g.qg) / c.base_mva;
    }
    return m;
}

namespace detail {
inline void check_injection(const PowerFlowModel& m, std::span<const Complex> s) {
    if (s.size() != m.n) {
        throw DimensionError("injection vector has length " + std::to_string(s.size()) +
                             ", expected " + std::to_string(m.n));
    }
}
} // namespace detail

inline DenseMatrix zeta(const PowerFlowModel& m, std::span<const Complex> s) {
    detail::check_injection(m, s);
    DenseMatrix out(m.n, m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t l = 0; l < m.n; ++l) {
            out(i, l) = m.z(i, l) * std::conj(s[l]) / (m.w[i] * std::conj(m.w[l]));
        }
    }
    return out;
}

/// ||zeta(s) 1||_inf and ||zeta(s)||_inf in one pass.
struct ZetaNorms {
    double row_sum_modulus = 0.0;  // ||zeta 1||_inf
    double induced = 0.0;          // ||zeta||_inf
};

inline ZetaNorms zeta_norms(const PowerFlowModel& m, std::span<const Complex> s) {
    const DenseMatrix zt = zeta(m, s);
    ZetaNorms out;
    for (std::size_t i = 0; i < m.n; ++i) {
        Complex sum{};
        double abs_sum = 0.0;
        for (const auto& v : zt.row(i)) {
            sum += v;
            abs_sum += std::abs(v);
        }
        out.row_sum_modulus = std::max(out.row_sum_modulus, std::abs(sum));
        out.induced = std::max(out.induced, abs_sum);
    }
    return out;
}

/// 2 ||zeta 1|| + 2 sqrt(||zeta 1|| ||zeta||); a solution exists whenever this is <= 1.
inline double kappa(const PowerFlowModel& m, std::span<const Complex> s) {
    const ZetaNorms z = zeta_norms(m, s);
    return 2.0 * z.row_sum_modulus + 2.0 * std::sqrt(z.row_sum_modulus * z.induced);
}

/// Comparator condition 4 ||zeta(s)||_inf <= 1.
inline double kappa_prime(const PowerFlowModel& m, std::span<const Complex> s) {
    return 4.0 * inf_norm_induced(zeta(m, s));
}

struct PicardReport {
    bool converged = false;
    Vector voltage;
    std::size_t iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::string reason;
};

/// Fixed-point iteration V <- w + Z diag(conj V)^-1 conj(s) started from w.
/// Divergence is reported, not thrown.
inline PicardReport picard_solve(const PowerFlowModel& m, std::span<const Complex> s,
                                 double tol = 1e-10, std::size_t max_iter = 200) {
    detail::check_injection(m, s);
    if (!(tol > 0.0)) {
        throw DomainError("picard_solve: tolerance must be positive");
    }
    PicardReport rep;
    Vector v = m.w;
    Vector current(m.n);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < m.n; ++i) {
            current[i] = std::conj(s[i]) / std::conj(v[i]);
        }
        Vector next = m.z * current;
        double res = 0.0;
        bool finite = true;
        double vmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m.n; ++i) {
            next[i] += m.w[i];
            res = std::max(res, std::abs(next[i] - v[i]));
            finite = finite && std::isfinite(next[i].real()) && std::isfinite(next[i].imag());
            vmin = std::min(vmin, std::abs(next[i]));
        }
        rep.iterations = it;
        rep.residual = res;
        if (!finite) {
            rep.reason = "non-finite iterate";
            return rep;
        }
        v = std::move(next);
        if (res < tol) {
            rep.converged = true;
            rep.voltage = v;
            return rep;
        }
        if (vmin < 1e-8) {
            rep.reason = "voltage collapsed to zero";
            return rep;
        }
    }
    rep.reason = "no convergence within " + std::to_string(max_iter) + " iterations";
    return rep;
}

/// ||V .* conj(Y V + Y0 V0) - s||_inf, the power-flow mismatch in pu.
inline double injection_mismatch(const PowerFlowModel& m, std::span<const Complex> v,
                                 std::span<const Complex> s) {
    detail::check_injection(m, s);
    detail::check_injection(m, v);
    const Vector current = m.y * v;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
        const Complex si = v[i] * std::conj(current[i] + m.y0[i] * m.v0);
        worst = std::max(worst, std::abs(si - s[i]));
    }
    return worst;
}

/// The gamma-form power flow as a conjugating quadratic system. Its
/// parameter is u = conj(s), which makes the coefficients linear in u.
inline QuadraticSystem scaled_power_flow_system(const PowerFlowModel& m) {
    std::vector<QuadTerm> quad;
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t l = 0; l < m.n; ++l) {
            const Complex c = m.z(i, l) / (m.w[i] * std::conj(m.w[l]));
            if (c != Complex{}) {
                quad.push_back({l + 1, i, i, l, c});
            }
        }
    }
    std::vector<LinTerm> lin;
    for (std::size_t i = 0; i < m.n; ++i) {
        lin.push_back({0, i, i, Complex{1.0}});
    }
    return QuadraticSystem(m.n, m.n, true, std::move(quad), std::move(lin),
                           Vector(m.n, Complex{-1.0}));
}

/// Parameter vector of scaled_power_flow_system for injections s.
inline Vector power_flow_parameter(std::span<const Complex> s) { return conj(s); }

/// Voltages recovered from the scaled unknown: V = w / gamma.
inline Vector voltage_from_gamma(const PowerFlowModel& m, std::span<const Complex> gamma) {
    Vector v(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        v[i] = m.w[i] / gamma[i];
    }
    return v;
}

} // namespace quadcert
