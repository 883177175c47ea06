#ifndef ABP_LINEAR_BASELINES_HPP
#define ABP_LINEAR_BASELINES_HPP

#include <vector>

#include "abp/linalg.hpp"
#include "abp/rng.hpp"

namespace abp {

// Linear factor model Y = W Z + eps, Z ~ N(0, I_d), eps ~ N(0, sigma2 I_D).
struct FAModel {
    Matrix w;  // D x d loading matrix
    double sigma2 = 1.0;
};

// In-place pivot transform on a symmetric matrix: regression on coordinate k.
//   a'_kk = -1/a_kk, a'_ik = a_ik/a_kk, a'_kj = a_kj/a_kk,
//   a'_ij = a_ij - a_ik a_kj / a_kk.
// Sweeping the same pivot twice restores the matrix; sweeping every pivot of
// an SPD matrix yields its negated inverse.
Matrix sweep(Matrix a, int k);

// Posterior of Z given Y: [Z | Y] ~ N(beta Y, V), computed by sweeping the
// joint Gram matrix on its YY block.
struct FAPosterior {
    Matrix beta;  // d x D
    Matrix v;     // d x d
};
FAPosterior fa_posterior(const FAModel& model);

// Observed-data log-likelihood of centred data rows under the model.
double fa_observed_loglik(const Matrix& data, const FAModel& model);

// Fits the factor model by expectation-maximization with sweep-based
// regressions in both steps. Data rows must be centred by the caller. The
// observed-data log-likelihood is non-decreasing across iterations; pass
// loglik_trace to record it.
FAModel fa_em_fit(const Matrix& data, int d, int iterations, Rng& rng,
                  std::vector<double>* loglik_trace = nullptr);

// Principal components of the data: sample mean plus the top-d eigenvectors
// of the sample covariance (Jacobi rotations).
struct PCAFit {
    std::vector<double> mean;  // D
    Matrix components;         // D x d, orthonormal columns
};
PCAFit pca_fit(const Matrix& data, int d);
std::vector<double> pca_reconstruct(std::span<const double> y, const PCAFit& fit);

}  // namespace abp

#endif
