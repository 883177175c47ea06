#include "abp/linear_baselines.hpp"

#include <cmath>

#include "abp/errors.hpp"

namespace abp {

Matrix sweep(Matrix a, int k) {
    if (a.rows != a.cols) throw ShapeError("sweep: matrix not square");
    if (k < 0 || k >= a.rows) throw ShapeError("sweep: pivot index out of range");
    const double pivot = a.at(k, k);
    if (std::abs(pivot) <= 1e-12) {
        throw NumericError("sweep: near-zero pivot at index " + std::to_string(k));
    }
    const int n = a.rows;
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const double aik = a.at(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            if (j == k) continue;
            a.at(i, j) -= aik * a.at(k, j) / pivot;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        a.at(i, k) /= pivot;
        a.at(k, i) /= pivot;
    }
    a.at(k, k) = -1.0 / pivot;
    return a;
}

namespace {

// Joint Gram matrix of (Z, Y) under the model: [[I, W^T], [W, WW^T + s2 I]].
Matrix joint_gram(const FAModel& model) {
    const int d = model.w.cols, big_d = model.w.rows;
    Matrix s(d + big_d, d + big_d);
    for (int i = 0; i < d; ++i) s.at(i, i) = 1.0;
    for (int i = 0; i < big_d; ++i) {
        for (int j = 0; j < d; ++j) {
            s.at(d + i, j) = model.w.at(i, j);
            s.at(j, d + i) = model.w.at(i, j);
        }
    }
    for (int i = 0; i < big_d; ++i) {
        for (int j = 0; j < big_d; ++j) {
            double v = 0.0;
            for (int k = 0; k < d; ++k) v += model.w.at(i, k) * model.w.at(j, k);
            s.at(d + i, d + j) = v + (i == j ? model.sigma2 : 0.0);
        }
    }
    return s;
}

void check_model(const FAModel& model) {
    if (!(model.sigma2 > 0.0)) throw ShapeError("factor model needs sigma2 > 0");
    if (model.w.rows < 1 || model.w.cols < 1) throw ShapeError("empty loading matrix");
}

// Solves L L^T x = b given the lower Cholesky factor.
std::vector<double> chol_solve(const Matrix& l, std::span<const double> b) {
    const int n = l.rows;
    std::vector<double> x(b.begin(), b.end());
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= l.at(i, k) * x[k];
        x[i] = s / l.at(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * x[k];
        x[i] = s / l.at(i, i);
    }
    return x;
}

}  // namespace

FAPosterior fa_posterior(const FAModel& model) {
    check_model(model);
    const int d = model.w.cols, big_d = model.w.rows;
    Matrix s = joint_gram(model);
    for (int k = d; k < d + big_d; ++k) s = sweep(std::move(s), k);

    FAPosterior post;
    post.beta = Matrix(d, big_d);
    post.v = Matrix(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < big_d; ++j) post.beta.at(i, j) = s.at(i, d + j);
        for (int j = 0; j < d; ++j) post.v.at(i, j) = s.at(i, j);
    }
    return post;
}

double fa_observed_loglik(const Matrix& data, const FAModel& model) {
    check_model(model);
    const int n = data.rows, big_d = data.cols;
    if (big_d != model.w.rows) throw ShapeError("data dimension does not match loading matrix");
    // C = W W^T + sigma2 I
    Matrix c = matmul(model.w, transpose(model.w));
    for (int i = 0; i < big_d; ++i) c.at(i, i) += model.sigma2;
    const Matrix l = cholesky_psd(c, 1e-14);
    double logdet = 0.0;
    for (int i = 0; i < big_d; ++i) {
        if (l.at(i, i) <= 0.0) throw NumericError("observed covariance not positive definite");
        logdet += 2.0 * std::log(l.at(i, i));
    }
    const double log2pi = 1.8378770664093454835606594728112;
    double ll = -0.5 * n * (big_d * log2pi + logdet);
    for (int i = 0; i < n; ++i) {
        std::span<const double> row(&data.a[static_cast<std::size_t>(i) * big_d],
                                    static_cast<std::size_t>(big_d));
        const std::vector<double> x = chol_solve(l, row);
        double quad = 0.0;
        for (int j = 0; j < big_d; ++j) quad += row[j] * x[j];
        ll -= 0.5 * quad;
    }
    return ll;
}

FAModel fa_em_fit(const Matrix& data, int d, int iterations, Rng& rng,
                  std::vector<double>* loglik_trace) {
    const int n = data.rows, big_d = data.cols;
    if (d < 1 || d > big_d) throw ShapeError("factor count must lie in [1, D]");
    if (n < d) throw ShapeError("need at least d data rows");

    // Sample second moment of the (centred) data.
    Matrix syy(big_d, big_d);
    for (int r = 0; r < n; ++r) {
        const double* row = &data.a[static_cast<std::size_t>(r) * big_d];
        for (int i = 0; i < big_d; ++i) {
            for (int j = 0; j < big_d; ++j) syy.at(i, j) += row[i] * row[j];
        }
    }
    for (double& v : syy.a) v /= n;

    FAModel model;
    model.w = Matrix(big_d, d);
    for (double& v : model.w.a) v = rng.normal(0.0, 0.1);
    double var_mean = 0.0;
    for (int i = 0; i < big_d; ++i) var_mean += syy.at(i, i);
    model.sigma2 = std::max(var_mean / big_d, 1e-8);

    if (loglik_trace) loglik_trace->push_back(fa_observed_loglik(data, model));

    for (int it = 0; it < iterations; ++it) {
        const FAPosterior post = fa_posterior(model);

        // Conditional second moments pooled over the data.
        const Matrix beta_syy = matmul(post.beta, syy);                    // d x D
        const Matrix szz = mat_add(post.v, matmul(beta_syy, transpose(post.beta)));

        Matrix gram(d + big_d, d + big_d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) gram.at(i, j) = szz.at(i, j);
            for (int j = 0; j < big_d; ++j) {
                gram.at(i, d + j) = beta_syy.at(i, j);
                gram.at(d + j, i) = beta_syy.at(i, j);
            }
        }
        for (int i = 0; i < big_d; ++i) {
            for (int j = 0; j < big_d; ++j) gram.at(d + i, d + j) = syy.at(i, j);
        }
        for (int k = 0; k < d; ++k) gram = sweep(std::move(gram), k);

        // Regression of Y on Z: loading matrix and residual covariance.
        for (int i = 0; i < big_d; ++i) {
            for (int j = 0; j < d; ++j) model.w.at(i, j) = gram.at(d + i, j);
        }
        double resid = 0.0;
        for (int i = 0; i < big_d; ++i) resid += gram.at(d + i, d + i);
        model.sigma2 = std::max(resid / big_d, 1e-12);

        if (loglik_trace) loglik_trace->push_back(fa_observed_loglik(data, model));
    }
    return model;
}

PCAFit pca_fit(const Matrix& data, int d) {
    const int n = data.rows, big_d = data.cols;
    if (d < 1) throw ShapeError("component count must be >= 1");
    if (n < d) throw ShapeError("need at least d data rows");

    PCAFit fit;
    fit.mean.assign(static_cast<std::size_t>(big_d), 0.0);
    for (int r = 0; r < n; ++r) {
        const double* row = &data.a[static_cast<std::size_t>(r) * big_d];
        for (int j = 0; j < big_d; ++j) fit.mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (double& v : fit.mean) v /= n;

    Matrix cov(big_d, big_d);
    for (int r = 0; r < n; ++r) {
        const double* row = &data.a[static_cast<std::size_t>(r) * big_d];
        for (int i = 0; i < big_d; ++i) {
            const double di = row[i] - fit.mean[static_cast<std::size_t>(i)];
            for (int j = i; j < big_d; ++j) {
                cov.at(i, j) += di * (row[j] - fit.mean[static_cast<std::size_t>(j)]);
            }
        }
    }
    for (int i = 0; i < big_d; ++i) {
        for (int j = i; j < big_d; ++j) {
            cov.at(i, j) /= n;
            cov.at(j, i) = cov.at(i, j);
        }
    }

    const EigenSym eig = jacobi_eigensym(cov);
    const double top = std::max(eig.values[0], 0.0);
    if (eig.values[static_cast<std::size_t>(d - 1)] <= 1e-12 * std::max(top, 1e-12)) {
        throw NumericError("requested " + std::to_string(d) +
                           " components but data rank is lower");
    }
    fit.components = Matrix(big_d, d);
    for (int i = 0; i < big_d; ++i) {
        for (int j = 0; j < d; ++j) fit.components.at(i, j) = eig.vectors.at(i, j);
    }
    return fit;
}

std::vector<double> pca_reconstruct(std::span<const double> y, const PCAFit& fit) {
    const int big_d = fit.components.rows, d = fit.components.cols;
    if (static_cast<int>(y.size()) != big_d) {
        throw ShapeError("pca_reconstruct: vector length does not match fit");
    }
    std::vector<double> coef(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int i = 0; i < big_d; ++i) {
            s += fit.components.at(i, j) * (y[static_cast<std::size_t>(i)] - fit.mean[static_cast<std::size_t>(i)]);
        }
        coef[static_cast<std::size_t>(j)] = s;
    }
    std::vector<double> out(fit.mean.begin(), fit.mean.end());
    for (int i = 0; i < big_d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += fit.components.at(i, j) * coef[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] += s;
    }
    return out;
}

}  // namespace abp
