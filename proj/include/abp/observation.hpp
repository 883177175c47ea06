#ifndef ABP_OBSERVATION_HPP
#define ABP_OBSERVATION_HPP

#include <utility>

#include "abp/rng.hpp"
#include "abp/tensor.hpp"

namespace abp {

enum class ObservationKind { full, masked, projected };

// How a training signal was observed: completely, through an occlusion mask
// (1 = observed, 0 = occluded, shared across channels is the caller's
// choice), or through a linear projection y = S * vec(signal).
struct ObservationModel {
    ObservationKind kind = ObservationKind::full;
    Tensor mask;     // masked: same shape as the signal, entries in {0,1}
    Tensor sensing;  // projected: [K, D]

    static ObservationModel full_obs();
    static ObservationModel masked_obs(Tensor mask);
    static ObservationModel projected_obs(Tensor sensing);
};

void validate_model(const ObservationModel& model, std::span<const int> signal_shape);

// Observed data. For full and masked observation `data` has the signal
// shape (occluded entries hold 0 and are ignored: the mask is
// authoritative); for projected observation it is the K-vector S*y.
struct Observation {
    Tensor data;
};

// Builds the observation of a fully known signal under a model.
Observation observe(const Tensor& signal, const ObservationModel& model);

// Squared-error data term and its gradient in the reconstruction:
//   full:      |Y - Yhat|^2,        d = -2 (Y - Yhat)
//   masked:    sum over observed,   d zero at occluded entries
//   projected: |SY - S Yhat|^2,     d = -2 S^T (SY - S Yhat)
std::pair<double, Tensor> loss_and_grad(const Observation& obs, const Tensor& y_hat,
                                        const ObservationModel& model);

// Residual pulled back through the observation model: (Y - Yhat) restricted
// to observed entries, or S^T (SY - S Yhat). Equal to -grad/2.
Tensor pullback_residual(const Observation& obs, const Tensor& y_hat,
                         const ObservationModel& model);

// Scatters random patch occlusions until the occluded fraction first
// reaches `coverage`. Returns the observed-indicator mask (1 = observed).
Tensor make_pepper_mask(std::span<const int> shape, double coverage, Rng& rng, int patch = 3);

// Single m-by-m occluded square at a uniformly random in-bounds position.
Tensor make_region_mask(std::span<const int> shape, int m, Rng& rng);

// K x D sensing matrix with i.i.d. N(0, std^2) entries.
Tensor make_sensing_matrix(int k, int d, Rng& rng, double std_dev = 0.5);

double occluded_fraction(const Tensor& mask);

enum class RecoveryRegion { all, occluded_only };

// Mean absolute difference over the selected region, relative to the pixel
// range width 2 (signals live in [-1, 1]).
double recovery_error(const Tensor& y_true, const Tensor& y_rec, RecoveryRegion region,
                      const Tensor* mask = nullptr);

}  // namespace abp

#endif
