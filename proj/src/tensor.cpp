#include "otflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace otflow {

Vector::Vector(int dim, double fill)
    : data_(static_cast<std::size_t>(dim), fill) {
    if (dim < 0) throw RangeError("vector dim must be >= 0");
}

Vector::Vector(std::initializer_list<double> init) : data_(init) {}

Vector Vector::from(std::vector<double> data) {
    Vector v;
    v.data_ = std::move(data);
    return v;
}

void require_same_dim(const Vector& a, const Vector& b, const char* where) {
    if (a.dim() != b.dim()) {
        throw DimMismatch(std::string(where) + ": " + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()));
    }
}

Vector& Vector::operator+=(const Vector& o) {
    require_same_dim(*this, o, "vector add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Vector& Vector::operator-=(const Vector& o) {
    require_same_dim(*this, o, "vector sub");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Vector& Vector::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

Vector& Vector::axpy(double s, const Vector& o) {
    require_same_dim(*this, o, "vector axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
}

bool Vector::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double s, Vector a) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

double norm2_sq(const Vector& a) { return dot(a, a); }
double norm2(const Vector& a) { return std::sqrt(norm2_sq(a)); }

double norm_inf(const Vector& a) {
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 0 || cols < 0) throw RangeError("matrix dims must be >= 0");
}

Matrix Matrix::identity(int d) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const Vector& d) {
    Matrix m(d.dim(), d.dim());
    for (int i = 0; i < d.dim(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vector Matrix::matvec(const Vector& x) const {
    if (x.dim() != cols_) throw DimMismatch("matvec");
    Vector y(rows_);
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix Matrix::operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw DimMismatch("matmul");
    Matrix r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i) {
        for (int k = 0; k < cols_; ++k) {
            const double aik = (*this)(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < o.cols_; ++j) r(i, j) += aik * o(k, j);
        }
    }
    return r;
}

Matrix Matrix::operator+(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimMismatch("matrix add");
    Matrix r = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
    return r;
}

Matrix Matrix::operator-(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimMismatch("matrix sub");
    Matrix r = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
    return r;
}

Matrix Matrix::scaled(double s) const {
    Matrix r = *this;
    for (auto& v : r.a_) v *= s;
    return r;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

bool Matrix::all_finite() const noexcept {
    for (double v : a_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

SpdMatrix::SpdMatrix(Matrix m) {
    if (m.rows() != m.cols()) throw DimMismatch("SpdMatrix must be square");
    double max_abs = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            max_abs = std::max(max_abs, std::fabs(m(i, j)));
    const double tol = 1e-10 * std::max(1.0, max_abs);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = i + 1; j < m.cols(); ++j) {
            if (std::fabs(m(i, j) - m(j, i)) > tol) {
                throw NotSpd("matrix is not symmetric");
            }
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    }
    m_ = std::move(m);
    cholesky_lower(m_);  // definiteness check
}

SpdMatrix SpdMatrix::identity(int d) { return SpdMatrix(Matrix::identity(d)); }

SpdMatrix SpdMatrix::from_diag(const Vector& d) {
    return SpdMatrix(Matrix::diag(d));
}

Matrix cholesky_lower(const Matrix& sym) {
    if (sym.rows() != sym.cols()) throw DimMismatch("cholesky needs square");
    const int d = sym.rows();
    Matrix l(d, d);
    for (int j = 0; j < d; ++j) {
        double diag = sym(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) {
            throw NotSpd("pivot " + std::to_string(j) + " is not positive");
        }
        l(j, j) = std::sqrt(diag);
        for (int i = j + 1; i < d; ++i) {
            double s = sym(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Matrix cholesky(const SpdMatrix& m) { return cholesky_lower(m.mat()); }

Vector cholesky_solve(const Matrix& lower, const Vector& b) {
    const int d = lower.rows();
    if (b.dim() != d) throw DimMismatch("cholesky_solve");
    Vector y(d);
    for (int i = 0; i < d; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    Vector x(d);
    for (int i = d - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < d; ++k) s -= lower(k, i) * x[k];
        x[i] = s / lower(i, i);
    }
    return x;
}

SymEig jacobi_eigen(const Matrix& sym, int max_sweeps) {
    if (sym.rows() != sym.cols()) throw DimMismatch("jacobi_eigen needs square");
    const int d = sym.rows();
    Matrix a = sym;
    Matrix v = Matrix::identity(d);

    auto off_diag = [&]() {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double scale = std::max(a.frobenius(), 1e-300);
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diag() <= 1e-14 * scale) {
            converged = true;
            break;
        }
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged && off_diag() > 1e-14 * scale) {
        throw NoConvergence("jacobi_eigen did not converge in " +
                            std::to_string(max_sweeps) + " sweeps");
    }

    // Sort ascending by eigenvalue, permuting columns with them.
    std::vector<int> order(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return a(x, x) < a(y, y); });

    SymEig out;
    out.values = Vector(d);
    out.vectors = Matrix(d, d);
    for (int j = 0; j < d; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        out.values[j] = a(src, src);
        for (int i = 0; i < d; ++i) out.vectors(i, j) = v(i, src);
    }
    return out;
}

namespace {
SpdMatrix spd_from_eig_power(const SpdMatrix& m, double power) {
    const SymEig eig = jacobi_eigen(m.mat());
    const int d = m.dim();
    for (int i = 0; i < d; ++i) {
        if (!(eig.values[i] > 0.0)) {
            throw NotSpd("eigenvalue " + std::to_string(i) + " is not positive");
        }
    }
    Matrix scaled = eig.vectors;
    for (int j = 0; j < d; ++j) {
        const double f = std::pow(eig.values[j], power);
        for (int i = 0; i < d; ++i) scaled(i, j) *= f;
    }
    return SpdMatrix(scaled * eig.vectors.transposed());
}
}  // namespace

SpdMatrix sym_matrix_sqrt(const SpdMatrix& m) {
    return spd_from_eig_power(m, 0.5);
}

SpdMatrix sym_matrix_inv_sqrt(const SpdMatrix& m) {
    return spd_from_eig_power(m, -0.5);
}

double spd_condition(const SpdMatrix& m) {
    const SymEig eig = jacobi_eigen(m.mat());
    const double lo = eig.values[0];
    const double hi = eig.values[m.dim() - 1];
    if (!(lo > 0.0)) throw NotSpd("non-positive eigenvalue in condition check");
    return hi / lo;
}

}  // namespace otflow
