#include "abp/dynamics.hpp"

#include <cmath>

#include "abp/errors.hpp"
#include "abp/linear_baselines.hpp"

namespace abp {

VARModel fit_var(const Matrix& z_seq) {
    const int t_len = z_seq.rows, d = z_seq.cols;
    if (t_len < d + 2) {
        throw ShapeError("fit_var: need at least d+2 states, got " + std::to_string(t_len));
    }
    const int pairs = t_len - 1;

    // Normal equations: A = (sum z_{t+1} z_t^T)(sum z_t z_t^T)^{-1}.
    Matrix gram(d, d), cross(d, d);
    for (int t = 0; t < pairs; ++t) {
        const double* zt = &z_seq.a[static_cast<std::size_t>(t) * d];
        const double* zn = &z_seq.a[static_cast<std::size_t>(t + 1) * d];
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                gram.at(i, j) += zt[i] * zt[j];
                cross.at(i, j) += zn[i] * zt[j];
            }
        }
    }
    Matrix gram_inv = gram;
    try {
        for (int k = 0; k < d; ++k) gram_inv = sweep(std::move(gram_inv), k);
    } catch (const NumericError&) {
        throw NumericError("fit_var: singular regressor Gram matrix (constant or too-short sequence)");
    }
    for (double& v : gram_inv.a) v = -v;  // swept SPD matrix is -inverse

    VARModel model;
    model.a = matmul(cross, gram_inv);
    model.q = Matrix(d, d);
    for (int t = 0; t < pairs; ++t) {
        const double* zt = &z_seq.a[static_cast<std::size_t>(t) * d];
        const double* zn = &z_seq.a[static_cast<std::size_t>(t + 1) * d];
        std::vector<double> eta(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i) {
            double s = zn[i];
            for (int j = 0; j < d; ++j) s -= model.a.at(i, j) * zt[j];
            eta[static_cast<std::size_t>(i)] = s;
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                model.q.at(i, j) += eta[static_cast<std::size_t>(i)] * eta[static_cast<std::size_t>(j)];
            }
        }
    }
    for (double& v : model.q.a) v /= pairs;
    // Symmetrize away roundoff.
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double m = 0.5 * (model.q.at(i, j) + model.q.at(j, i));
            model.q.at(i, j) = m;
            model.q.at(j, i) = m;
        }
    }
    return model;
}

std::vector<Tensor> synthesize_dynamic(const Weights& w, const NetSpec& spec, const VARModel& var,
                                       int frames, int burn_in, Rng& rng) {
    const int d = var.a.rows;
    if (var.a.cols != d || var.q.rows != d || var.q.cols != d) {
        throw ShapeError("synthesize_dynamic: transition/innovation dimensions disagree");
    }
    if (spec.latent_dim() != d) {
        throw ShapeError("synthesize_dynamic: model dimension " + std::to_string(d) +
                         " does not match network latent size " +
                         std::to_string(spec.latent_dim()));
    }
    if (burn_in < 0 || frames < 0) throw ShapeError("synthesize_dynamic: negative frame count");
    const Matrix chol = cholesky_psd(var.q);

    std::vector<double> z(static_cast<std::size_t>(d));
    for (double& v : z) v = rng.normal();

    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(std::max(0, frames - burn_in)));
    for (int t = 0; t < frames; ++t) {
        if (t >= burn_in) {
            Tensor zt(spec.latent_shape);
            for (int i = 0; i < d; ++i) zt[i] = z[static_cast<std::size_t>(i)];
            out.push_back(forward(zt, w, spec));
        }
        std::vector<double> u(static_cast<std::size_t>(d));
        for (double& v : u) v = rng.normal();
        std::vector<double> next(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                s += var.a.at(i, j) * z[static_cast<std::size_t>(j)] +
                     chol.at(i, j) * u[static_cast<std::size_t>(j)];
            }
            next[static_cast<std::size_t>(i)] = s;
        }
        z = std::move(next);
        for (double v : z) {
            if (!std::isfinite(v)) {
                throw NumericError("synthesize_dynamic: latent chain diverged at frame " +
                                   std::to_string(t + 1));
            }
        }
    }
    return out;
}

}  // namespace abp
