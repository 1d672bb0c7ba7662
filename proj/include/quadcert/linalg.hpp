#pragma once

// =============================================================================
// quadcert - dense complex linear algebra
// =============================================================================
// Just enough for the certificate machinery: a row-major complex matrix,
// LU with partial pivoting, and the infinity norms. Real problems use the
// same types with zero imaginary parts.
// =============================================================================

#include "quadcert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace quadcert {

using Complex = std::complex<double>;
using Vector = std::vector<Complex>;

class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, Complex{}) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (entries_.size() != rows_ * cols_) {
            throw DimensionError("DenseMatrix: entry count does not match shape");
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    /// Row-major construction from nested initializer lists, mostly for tests.
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        std::vector<Complex> entries;
        entries.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) {
                throw DimensionError("DenseMatrix::from_rows: ragged rows");
            }
            entries.insert(entries.end(), row.begin(), row.end());
        }
        return DenseMatrix(r, c, std::move(entries));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    std::span<const Complex> row(std::size_t i) const {
        return {entries_.data() + i * cols_, cols_};
    }
    const std::vector<Complex>& entries() const noexcept { return entries_; }

    Vector column(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            c[i] = (*this)(i, j);
        }
        return c;
    }

    void set_column(std::size_t j, std::span<const Complex> values) {
        if (values.size() != rows_) {
            throw DimensionError("DenseMatrix::set_column: length mismatch");
        }
        for (std::size_t i = 0; i < rows_; ++i) {
            (*this)(i, j) = values[i];
        }
    }

    Vector operator*(std::span<const Complex> v) const {
        if (v.size() != cols_) {
            throw DimensionError("DenseMatrix * vector: length mismatch");
        }
        Vector out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            Complex acc{};
            for (std::size_t j = 0; j < cols_; ++j) {
                acc += (*this)(i, j) * v[j];
            }
            out[i] = acc;
        }
        return out;
    }

    DenseMatrix operator*(const DenseMatrix& other) const {
        if (cols_ != other.rows_) {
            throw DimensionError("DenseMatrix * DenseMatrix: inner dimension mismatch");
        }
        DenseMatrix out(rows_, other.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t p = 0; p < cols_; ++p) {
                const Complex a = (*this)(i, p);
                if (a == Complex{}) {
                    continue;
                }
                for (std::size_t j = 0; j < other.cols_; ++j) {
                    out(i, j) += a * other(p, j);
                }
            }
        }
        return out;
    }

    DenseMatrix operator-(const DenseMatrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_) {
            throw DimensionError("DenseMatrix - DenseMatrix: shape mismatch");
        }
        DenseMatrix out = *this;
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            out.entries_[k] -= other.entries_[k];
        }
        return out;
    }

    DenseMatrix conj() const {
        DenseMatrix out = *this;
        for (auto& z : out.entries_) {
            z = std::conj(z);
        }
        return out;
    }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> entries_;
};

/// Packed LU factors of a square matrix, P*A = L*U with unit-diagonal L.
struct LUFactorization {
    DenseMatrix packed;
    std::vector<std::size_t> pivots;  // pivots[k] = original row placed at position k
    bool singular = false;

    std::size_t size() const noexcept { return packed.rows(); }
};

/// Pivots below this fraction of the largest input modulus mark the matrix singular.
inline constexpr double kSingularPivotRatio = 1e-12;

inline LUFactorization lu_factor(const DenseMatrix& m) {
    if (!m.is_square()) {
        throw DimensionError("lu_factor: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected square");
    }
    const std::size_t n = m.rows();
    LUFactorization f{m, {}, false};
    f.pivots.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.pivots[i] = i;
    }

    double scale = 0.0;
    for (const auto& z : m.entries()) {
        scale = std::max(scale, std::abs(z));
    }
    const double threshold = kSingularPivotRatio * scale;
    if (scale == 0.0 && n > 0) {
        f.singular = true;
    }

    DenseMatrix& a = f.packed;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_mag = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double mag = std::abs(a(i, k));
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (best != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(k, j), a(best, j));
            }
            std::swap(f.pivots[k], f.pivots[best]);
        }
        if (best_mag < threshold || best_mag == 0.0) {
            f.singular = true;
            continue;
        }
        const Complex pivot = a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex mult = a(i, k) / pivot;
            a(i, k) = mult;
            if (mult == Complex{}) {
                continue;
            }
            for (std::size_t j = k + 1; j < n; ++j) {
                a(i, j) -= mult * a(k, j);
            }
        }
    }
    return f;
}

inline Vector solve(const LUFactorization& f, std::span<const Complex> b) {
    const std::size_t n = f.size();
    if (b.size() != n) {
        throw DimensionError("solve: right-hand side has length " + std::to_string(b.size()) +
                             ", expected " + std::to_string(n));
    }
    if (f.singular) {
        throw SingularJacobianError("solve: factorization is singular");
    }
    const DenseMatrix& a = f.packed;
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc = b[f.pivots[i]];
        for (std::size_t j = 0; j < i; ++j) {
            acc -= a(i, j) * x[j];
        }
        x[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
        Complex acc = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            acc -= a(i, j) * x[j];
        }
        x[i] = acc / a(i, i);
    }
    return x;
}

/// Solves A X = B column by column.
inline DenseMatrix solve(const LUFactorization& f, const DenseMatrix& b) {
    if (b.rows() != f.size()) {
        throw DimensionError("solve: right-hand side row count mismatch");
    }
    DenseMatrix out(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        out.set_column(j, solve(f, b.column(j)));
    }
    return out;
}

inline DenseMatrix inverse(const LUFactorization& f) {
    return solve(f, DenseMatrix::identity(f.size()));
}

/// max_i sum_j |m_ij|
inline double inf_norm_induced(const DenseMatrix& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (const auto& z : m.row(i)) {
            sum += std::abs(z);
        }
        best = std::max(best, sum);
    }
    return best;
}

inline double inf_norm_vec(std::span<const Complex> v) {
    double best = 0.0;
    for (const auto& z : v) {
        best = std::max(best, std::abs(z));
    }
    return best;
}

inline Vector subtract(std::span<const Complex> a, std::span<const Complex> b) {
    if (a.size() != b.size()) {
        throw DimensionError("subtract: length mismatch");
    }
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

inline Vector conj(std::span<const Complex> v) {
    Vector out(v.begin(), v.end());
    for (auto& z : out) {
        z = std::conj(z);
    }
    return out;
}

inline Vector scaled(std::span<const Complex> v, Complex c) {
    Vector out(v.begin(), v.end());
    for (auto& z : out) {
        z *= c;
    }
    return out;
}

inline double norm2(std::span<const Complex> v) {
    double acc = 0.0;
    for (const auto& z : v) {
        acc += std::norm(z);
    }
    return std::sqrt(acc);
}

} // namespace quadcert
