#ifndef ABP_DYNAMICS_HPP
#define ABP_DYNAMICS_HPP

#include <vector>

#include "abp/generator.hpp"
#include "abp/linalg.hpp"
#include "abp/rng.hpp"

namespace abp {

// First-order latent dynamics Z_{t+1} = A Z_t + eta_t, eta_t ~ N(0, Q).
// No intercept: the latent prior is zero-mean.
struct VARModel {
    Matrix a;  // d x d transition
    Matrix q;  // d x d innovation covariance, symmetric PSD
};

// Least-squares fit of the transition matrix from a latent sequence (rows of
// z_seq are consecutive latent vectors); Q is the second moment of the
// fit residuals.
VARModel fit_var(const Matrix& z_seq);

// Samples a latent chain from Z_0 ~ N(0, I) through the fitted dynamics and
// renders each kept state through the network. The first burn_in states are
// discarded, so `frames` counts the whole chain and the output holds
// frames - burn_in rendered signals.
std::vector<Tensor> synthesize_dynamic(const Weights& w, const NetSpec& spec, const VARModel& var,
                                       int frames, int burn_in, Rng& rng);

}  // namespace abp

#endif
