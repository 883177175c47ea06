#ifndef ABP_LINALG_HPP
#define ABP_LINALG_HPP

#include <span>
#include <vector>

namespace abp {

// Small dense row-major matrix for the closed-form linear machinery.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    static Matrix identity(int n);

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& x);
std::vector<double> matvec(const Matrix& x, std::span<const double> v);
Matrix mat_add(const Matrix& x, const Matrix& y);
Matrix mat_sub(const Matrix& x, const Matrix& y);
Matrix mat_scaled(const Matrix& x, double c);
double frobenius_norm(const Matrix& x);
double max_abs_asymmetry(const Matrix& x);

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Pairs are returned sorted by descending eigenvalue; columns of `vectors`
// are the corresponding orthonormal eigenvectors.
struct EigenSym {
    std::vector<double> values;
    Matrix vectors;
};
EigenSym jacobi_eigensym(const Matrix& sym, double off_diag_tol = 1e-12, int max_sweeps = 100);

// Lower Cholesky factor of a symmetric PSD matrix. Diagonal entries below
// `tol` (relative to the largest diagonal) are treated as zero rank; a
// negative pivot beyond tolerance throws NumericError.
Matrix cholesky_psd(const Matrix& sym, double tol = 1e-10);

}  // namespace abp

#endif
