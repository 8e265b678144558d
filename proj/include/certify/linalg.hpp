#ifndef CERTIFY_LINALG_HPP
#define CERTIFY_LINALG_HPP

#include <cstddef>
#include <vector>
#include <stdexcept>
#include <string>

namespace certify::la {

// Dense row-major square/rectangular matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n, double scale = 1.0) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

struct LinalgError : std::runtime_error {
    explicit LinalgError(const std::string& what) : std::runtime_error(what) {}
};

// In-place lower Cholesky of a symmetric positive definite matrix (only the
// lower triangle of `a` is referenced; the factor lands in the lower
// triangle).  Returns false when a non-positive pivot is met.
bool cholesky(Matrix& a);
bool cholesky_serial(Matrix& a);

// Solve L L^T x = b given the Cholesky factor in the lower triangle.
void cholesky_solve(const Matrix& chol, std::vector<double>& b);

// Solve for several right-hand sides (columns of B), in place.
void cholesky_solve_many(const Matrix& chol, Matrix& b);

// C = A * B (parallel / serial reference).
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

// All eigenvalues of a symmetric matrix (Householder tridiagonalization +
// implicit QL), ascending.  Destroys `a`.
std::vector<double> sym_eigenvalues(Matrix a);

// Smallest eigenvalue convenience wrapper.
double sym_min_eigenvalue(const Matrix& a);

// Largest alpha in [0, 1] with  m + alpha*dm  positive semidefinite, found by
// Cholesky bisection with a PSD slack of `eps` on the diagonal.
double max_psd_step(const Matrix& m, const Matrix& dm, double eps = 0.0);

} // namespace certify::la

#endif
