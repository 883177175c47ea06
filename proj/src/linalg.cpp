#include "abp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abp/errors.hpp"

namespace abp {

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw ShapeError("matmul: inner dimensions differ");
    Matrix out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int k = 0; k < x.cols; ++k) {
            const double v = x.at(i, k);
            if (v == 0.0) continue;
            const double* yrow = &y.a[static_cast<std::size_t>(k) * y.cols];
            double* orow = &out.a[static_cast<std::size_t>(i) * out.cols];
            for (int j = 0; j < y.cols; ++j) orow[j] += v * yrow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& x) {
    Matrix out(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) out.at(j, i) = x.at(i, j);
    return out;
}

std::vector<double> matvec(const Matrix& x, std::span<const double> v) {
    if (x.cols != static_cast<int>(v.size())) throw ShapeError("matvec: dimension mismatch");
    std::vector<double> out(x.rows, 0.0);
    for (int i = 0; i < x.rows; ++i) {
        const double* row = &x.a[static_cast<std::size_t>(i) * x.cols];
        double s = 0.0;
        for (int j = 0; j < x.cols; ++j) s += row[j] * v[j];
        out[i] = s;
    }
    return out;
}

Matrix mat_add(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw ShapeError("mat_add: shape mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

Matrix mat_sub(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw ShapeError("mat_sub: shape mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
    return out;
}

Matrix mat_scaled(const Matrix& x, double c) {
    Matrix out = x;
    for (double& v : out.a) v *= c;
    return out;
}

double frobenius_norm(const Matrix& x) {
    double s = 0.0;
    for (double v : x.a) s += v * v;
    return std::sqrt(s);
}

double max_abs_asymmetry(const Matrix& x) {
    double m = 0.0;
    for (int i = 0; i < x.rows; ++i)
        for (int j = i + 1; j < x.cols; ++j) m = std::max(m, std::abs(x.at(i, j) - x.at(j, i)));
    return m;
}

EigenSym jacobi_eigensym(const Matrix& sym, double off_diag_tol, int max_sweeps) {
    if (sym.rows != sym.cols) throw ShapeError("jacobi_eigensym: matrix not square");
    const int n = sym.rows;
    Matrix a = sym;
    Matrix v = Matrix::identity(n);

    auto off_diag = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s = std::max(s, std::abs(a.at(i, j)));
        return s;
    };

    for (int sweep = 0; sweep < max_sweeps && off_diag() > off_diag_tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= off_diag_tol) continue;
                const double app = a.at(p, p), aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a.at(i, i) > a.at(j, j); });

    EigenSym out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = a.at(order[j], order[j]);
        for (int i = 0; i < n; ++i) out.vectors.at(i, j) = v.at(i, order[j]);
    }
    return out;
}

Matrix cholesky_psd(const Matrix& sym, double tol) {
    if (sym.rows != sym.cols) throw ShapeError("cholesky_psd: matrix not square");
    const int n = sym.rows;
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(sym.at(i, i)));
    const double cut = tol * std::max(dmax, 1.0);

    Matrix l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = sym.at(j, j);
        for (int k = 0; k < j; ++k) d -= l.at(j, k) * l.at(j, k);
        if (d < -cut) throw NumericError("cholesky_psd: matrix not positive semidefinite");
        if (d <= cut) {
            // Rank-deficient direction: zero column.
            l.at(j, j) = 0.0;
            continue;
        }
        const double root = std::sqrt(d);
        l.at(j, j) = root;
        for (int i = j + 1; i < n; ++i) {
            double s = sym.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            l.at(i, j) = s / root;
        }
    }
    return l;
}

}  // namespace abp
