#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "otflow/errors.hpp"

namespace otflow {

class Vector {
public:
    Vector() = default;
    explicit Vector(int dim, double fill = 0.0);
    Vector(std::initializer_list<double> init);
    static Vector from(std::vector<double> data);

    int dim() const noexcept { return static_cast<int>(data_.size()); }
    double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }

    const std::vector<double>& raw() const noexcept { return data_; }
    std::vector<double>& raw() noexcept { return data_; }

    Vector& operator+=(const Vector& o);
    Vector& operator-=(const Vector& o);
    Vector& operator*=(double s);
    // this += s * o, fused into one pass.
    Vector& axpy(double s, const Vector& o);

    bool all_finite() const noexcept;

private:
    std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector a);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm2_sq(const Vector& a);
double norm_inf(const Vector& a);

void require_same_dim(const Vector& a, const Vector& b, const char* where);

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0);
    static Matrix identity(int d);
    static Matrix diag(const Vector& d);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    double operator()(int i, int j) const {
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double& operator()(int i, int j) {
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }

    const std::vector<double>& raw() const noexcept { return a_; }
    std::vector<double>& raw() noexcept { return a_; }

    Matrix transposed() const;
    Vector matvec(const Vector& x) const;
    Matrix operator*(const Matrix& o) const;
    Matrix operator+(const Matrix& o) const;
    Matrix operator-(const Matrix& o) const;
    Matrix scaled(double s) const;

    double frobenius() const;
    bool all_finite() const noexcept;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// Symmetric positive definite matrix. Construction checks symmetry to 1e-10
// relative tolerance, symmetrizes exactly, and verifies definiteness by
// running a Cholesky factorization.
class SpdMatrix {
public:
    explicit SpdMatrix(Matrix m);
    static SpdMatrix identity(int d);
    static SpdMatrix from_diag(const Vector& d);

    int dim() const noexcept { return m_.rows(); }
    const Matrix& mat() const noexcept { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    SpdMatrix() = default;
    Matrix m_;
};

// Lower-triangular L with L L^T = m. Throws NotSpd on a non-positive pivot.
Matrix cholesky_lower(const Matrix& sym);
Matrix cholesky(const SpdMatrix& m);

// Solve m x = b given the lower Cholesky factor of m.
Vector cholesky_solve(const Matrix& lower, const Vector& b);

struct SymEig {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors, A = V diag(values) V^T
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Throws
// NoConvergence if the off-diagonal mass does not vanish within max_sweeps.
SymEig jacobi_eigen(const Matrix& sym, int max_sweeps = 100);

// SPD square root via eigendecomposition; B B = m.
SpdMatrix sym_matrix_sqrt(const SpdMatrix& m);
// m^{-1/2}, same route.
SpdMatrix sym_matrix_inv_sqrt(const SpdMatrix& m);

// Ratio of extreme eigenvalues; the transport oracle refuses covariances
// beyond 1e10.
double spd_condition(const SpdMatrix& m);

// Central-difference gradient of a scalar function, one evaluation pair per
// coordinate. The callable receives a Vector and returns double.
template <typename F>
Vector finite_diff_gradient(F&& f, const Vector& x, double h) {
    if (!(h > 0.0)) throw RangeError("finite_diff_gradient step must be > 0");
    Vector g(x.dim());
    Vector probe = x;
    for (int i = 0; i < x.dim(); ++i) {
        const double xi = x[i];
        probe[i] = xi + h;
        const double fp = f(probe);
        probe[i] = xi - h;
        const double fm = f(probe);
        probe[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace otflow
