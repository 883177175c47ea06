#ifndef ABP_LATENT_TOOLS_HPP
#define ABP_LATENT_TOOLS_HPP

#include <vector>

#include "abp/rng.hpp"
#include "abp/tensor.hpp"

namespace abp {

// Draw from the standard-normal latent prior.
Tensor sample_prior(std::span<const int> shape, Rng& rng);

// Spherical interpolation between two latent tensors. Collinear (or
// near-zero) inputs fall back to linear interpolation; two zero inputs are
// rejected.
Tensor slerp(const Tensor& a, const Tensor& b, double t);

// n x n panel interpolating four corner latents (row-major corners:
// top-left, top-right, bottom-left, bottom-right): slerp along the two
// corner rows, then slerp between the row results.
std::vector<Tensor> latent_grid_corners(const Tensor& tl, const Tensor& tr, const Tensor& bl,
                                        const Tensor& br, int n);

// Cartesian grid over [lo, hi]^2 for 2-dimensional latents, n points per
// axis; entry (i, j) is (lo + j*step, lo + i*step).
std::vector<Tensor> latent_grid_range(double lo, double hi, int n);

}  // namespace abp

#endif
