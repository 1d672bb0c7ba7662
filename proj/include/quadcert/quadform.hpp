#pragma once

// =============================================================================
// quadcert - affinely parameterized quadratic systems
// =============================================================================
//   f(x, u) = Q(x, r(x), u) + L(x, u) + K(u),   r(x) = x or conj(x)
//
// Q and L are stored as sparse coefficient lists indexed by a parameter slot
// m: slot 0 is the u-independent part, slot m >= 1 is multiplied by u[m-1].
// K(u) = K0 + K1 u. Coefficients are kept exactly as given (no
// symmetrization of Q).
// =============================================================================

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace quadcert {

/// Contributes coef * weight_m(u) * x[left] * r(x)[right] to output row `out`.
struct QuadTerm {
    std::size_t slot = 0;
    std::size_t out = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    Complex coef{};

    bool operator==(const QuadTerm&) const = default;
};

/// Contributes coef * weight_m(u) * x[in] to output row `out`.
struct LinTerm {
    std::size_t slot = 0;
    std::size_t out = 0;
    std::size_t in = 0;
    Complex coef{};

    bool operator==(const LinTerm&) const = default;
};

class QuadraticSystem {
public:
    QuadraticSystem() = default;

    /// `k1` may be empty (0x0), meaning K1 = 0.
    QuadraticSystem(std::size_t n, std::size_t k, bool conjugate_right, std::vector<QuadTerm> quad,
                    std::vector<LinTerm> lin, Vector k0, DenseMatrix k1 = {})
        : n_(n), k_(k), conjugate_right_(conjugate_right), quad_(std::move(quad)),
          lin_(std::move(lin)), k0_(std::move(k0)), k1_(std::move(k1)) {
        if (k0_.empty() && n_ > 0) {
            k0_.assign(n_, Complex{});
        }
        if (k1_.rows() == 0 && k1_.cols() == 0) {
            k1_ = DenseMatrix(n_, k_);
        }
        validate();
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return k_; }
    /// True for the Q(x, conj(x), u) form.
    bool conjugates() const noexcept { return conjugate_right_; }
    const std::vector<QuadTerm>& quad_terms() const noexcept { return quad_; }
    const std::vector<LinTerm>& lin_terms() const noexcept { return lin_; }
    const Vector& k0() const noexcept { return k0_; }
    const DenseMatrix& k1() const noexcept { return k1_; }

    /// Q and L carry no u-dependent slots (the Q(x,x) + Lx + K(u) form).
    bool has_fixed_quadratic_and_linear() const {
        for (const auto& t : quad_) {
            if (t.slot != 0) {
                return false;
            }
        }
        for (const auto& t : lin_) {
            if (t.slot != 0) {
                return false;
            }
        }
        return true;
    }

    Complex slot_weight(std::size_t slot, std::span<const Complex> u) const {
        return slot == 0 ? Complex{1.0} : u[slot - 1];
    }

    /// Q(x, r(y), u); the conjugation applies to the right argument only.
    Vector quad_part(std::span<const Complex> x, std::span<const Complex> y,
                     std::span<const Complex> u) const {
        check_state(x, "x");
        check_state(y, "y");
        check_param(u);
        Vector out(n_);
        for (const auto& t : quad_) {
            const Complex right = conjugate_right_ ? std::conj(y[t.right]) : y[t.right];
            out[t.out] += slot_weight(t.slot, u) * t.coef * x[t.left] * right;
        }
        return out;
    }

    Vector lin_part(std::span<const Complex> x, std::span<const Complex> u) const {
        check_state(x, "x");
        check_param(u);
        Vector out(n_);
        for (const auto& t : lin_) {
            out[t.out] += slot_weight(t.slot, u) * t.coef * x[t.in];
        }
        return out;
    }

    Vector const_part(std::span<const Complex> u) const {
        check_param(u);
        Vector out = k1_ * u;
        for (std::size_t i = 0; i < n_; ++i) {
            out[i] += k0_[i];
        }
        return out;
    }

    bool operator==(const QuadraticSystem&) const = default;

private:
    void check_state(std::span<const Complex> v, const char* name) const {
        if (v.size() != n_) {
            throw DimensionError(std::string("quadratic system: ") + name + " has length " +
                                 std::to_string(v.size()) + ", expected n = " + std::to_string(n_));
        }
    }

    void check_param(std::span<const Complex> u) const {
        if (u.size() != k_) {
            throw DimensionError("quadratic system: u has length " + std::to_string(u.size()) +
                                 ", expected k = " + std::to_string(k_));
        }
    }

    void validate() const {
        for (const auto& t : quad_) {
            if (t.slot > k_ || t.out >= n_ || t.left >= n_ || t.right >= n_) {
                throw DimensionError("quadratic term index out of range");
            }
        }
        for (const auto& t : lin_) {
            if (t.slot > k_ || t.out >= n_ || t.in >= n_) {
                throw DimensionError("linear term index out of range");
            }
        }
        if (k0_.size() != n_) {
            throw DimensionError("K0 has length " + std::to_string(k0_.size()) + ", expected " +
                                 std::to_string(n_));
        }
        if (k1_.rows() != n_ || k1_.cols() != k_) {
            throw DimensionError("K1 must be n x k");
        }
    }

    std::size_t n_ = 0;
    std::size_t k_ = 0;
    bool conjugate_right_ = false;
    std::vector<QuadTerm> quad_;
    std::vector<LinTerm> lin_;
    Vector k0_;
    DenseMatrix k1_;
};

inline Vector eval_f(const QuadraticSystem& sys, std::span<const Complex> x,
                     std::span<const Complex> u) {
    Vector out = sys.quad_part(x, x, u);
    const Vector lin = sys.lin_part(x, u);
    const Vector cst = sys.const_part(u);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += lin[i] + cst[i];
    }
    return out;
}

/// Directional derivative of f in x along y. For the conjugating form this is
/// df/dx y + df/dconj(x) conj(y), i.e. Q(x, r(y)) + Q(y, r(x)) + L(y).
inline Vector eval_jacobian_action(const QuadraticSystem& sys, std::span<const Complex> x,
                                   std::span<const Complex> u, std::span<const Complex> y) {
    Vector out = sys.quad_part(x, y, u);
    const Vector swapped = sys.quad_part(y, x, u);
    const Vector lin = sys.lin_part(y, u);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += swapped[i] + lin[i];
    }
    return out;
}

/// Wirtinger derivatives at (x, u): holo = df/dx, anti = df/dconj(x).
/// For non-conjugating systems anti is identically zero.
struct WirtingerJacobian {
    DenseMatrix holo;
    DenseMatrix anti;
};

inline WirtingerJacobian wirtinger_jacobian(const QuadraticSystem& sys, std::span<const Complex> x,
                                            std::span<const Complex> u) {
    const std::size_t n = sys.n();
    if (x.size() != n || u.size() != sys.k()) {
        throw DimensionError("wirtinger_jacobian: dimension mismatch");
    }
    WirtingerJacobian jac{DenseMatrix(n, n), DenseMatrix(n, n)};
    for (const auto& t : sys.quad_terms()) {
        const Complex c = sys.slot_weight(t.slot, u) * t.coef;
        if (sys.conjugates()) {
            jac.holo(t.out, t.left) += c * std::conj(x[t.right]);
            jac.anti(t.out, t.right) += c * x[t.left];
        } else {
            jac.holo(t.out, t.left) += c * x[t.right];
            jac.holo(t.out, t.right) += c * x[t.left];
        }
    }
    for (const auto& t : sys.lin_terms()) {
        jac.holo(t.out, t.in) += sys.slot_weight(t.slot, u) * t.coef;
    }
    return jac;
}

/// Which Jacobian J** a nominal point is built around.
enum class NominalForm {
    /// n x n Jacobian; valid for non-conjugating systems (real or complex coefficients).
    Direct,
    /// 2n x 2n block [[A, B], [conj(B), conj(A)]] with A = df/dx, B = df/dconj(x).
    Conjugate,
};

/// Largest residual ||f(x*, u*)||_inf accepted as a nominal solution.
inline constexpr double kNominalResidualTolerance = 1e-9;

struct NominalPoint {
    Vector x_star;
    Vector u_star;
    NominalForm form = NominalForm::Direct;
    DenseMatrix jacobian;       // J**
    LUFactorization jac_factor;
    // Top blocks of inv(J**) in the conjugate form. In the direct form
    // m_star = inv(J**) and n_star = 0, so both forms share one e/g/h algebra.
    DenseMatrix m_star;
    DenseMatrix n_star;

    std::size_t n() const noexcept { return x_star.size(); }
};

inline NominalForm default_form(const QuadraticSystem& sys) {
    return sys.conjugates() ? NominalForm::Conjugate : NominalForm::Direct;
}

inline NominalPoint make_nominal(const QuadraticSystem& sys, Vector x_star, Vector u_star,
                                 NominalForm form) {
    if (form == NominalForm::Direct && sys.conjugates()) {
        throw UnsupportedFormError(
            "make_nominal: a conjugating system needs the conjugate (2n x 2n) Jacobian form");
    }
    const Vector residual = eval_f(sys, x_star, u_star);
    const double res = inf_norm_vec(residual);
    if (!(res <= kNominalResidualTolerance)) {
        throw NotASolutionError("make_nominal: ||f(x*, u*)||_inf = " + std::to_string(res) +
                                " exceeds " + std::to_string(kNominalResidualTolerance));
    }

    const std::size_t n = sys.n();
    NominalPoint p;
    p.form = form;
    const WirtingerJacobian w = wirtinger_jacobian(sys, x_star, u_star);
    if (form == NominalForm::Direct) {
        p.jacobian = w.holo;
    } else {
        p.jacobian = DenseMatrix(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                p.jacobian(i, j) = w.holo(i, j);
                p.jacobian(i, n + j) = w.anti(i, j);
                p.jacobian(n + i, j) = std::conj(w.anti(i, j));
                p.jacobian(n + i, n + j) = std::conj(w.holo(i, j));
            }
        }
    }
    p.jac_factor = lu_factor(p.jacobian);
    if (p.jac_factor.singular) {
        throw SingularJacobianError("make_nominal: nominal Jacobian is singular");
    }
    const DenseMatrix inv = inverse(p.jac_factor);
    if (form == NominalForm::Direct) {
        p.m_star = inv;
        p.n_star = DenseMatrix(n, n);
    } else {
        p.m_star = DenseMatrix(n, n);
        p.n_star = DenseMatrix(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                p.m_star(i, j) = inv(i, j);
                p.n_star(i, j) = inv(i, n + j);
            }
        }
    }
    p.x_star = std::move(x_star);
    p.u_star = std::move(u_star);
    return p;
}

inline NominalPoint make_nominal(const QuadraticSystem& sys, Vector x_star, Vector u_star) {
    const NominalForm form = default_form(sys);
    return make_nominal(sys, std::move(x_star), std::move(u_star), form);
}

/// Applies inv(J**) in the nominal's form: M v + N conj(v).
inline Vector apply_inverse_jacobian(const NominalPoint& p, std::span<const Complex> v) {
    if (p.form == NominalForm::Direct) {
        return solve(p.jac_factor, v);
    }
    Vector out = p.m_star * v;
    const Vector nv = p.n_star * conj(v);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += nv[i];
    }
    return out;
}

} // namespace quadcert
