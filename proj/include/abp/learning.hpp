#ifndef ABP_LEARNING_HPP
#define ABP_LEARNING_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "abp/inference.hpp"

namespace abp {

struct Hyper {
    int iterations = 600;
    double learning_rate = 1e-4;
    double momentum = 0.5;
    InferConfig infer;
    int batch_size = 0;  // 0 = full batch up to 512 examples, then 128
    std::uint64_t seed = 0;
    int threads = 1;  // inference-phase workers; 0 = hardware concurrency
};

struct HistoryRecord {
    int iteration = 0;
    double mean_loss = 0.0;        // observation loss averaged over the batch
    double mean_z_sq_per_dim = 0.0;
    double grad_norm = 0.0;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
};

void write_history_csv(const TrainHistory& history, std::ostream& os);

// Gradient of the complete-data log-likelihood in the weights, summed over
// the batch: sum_i (1/sigma^2) * J_W^T(pulled-back residual_i). Ascent
// direction. `models` holds either one shared model or one per example.
Weights learning_gradient(std::span<const Observation> obs, std::span<const Tensor> latents,
                          const Weights& w, const NetSpec& spec,
                          std::span<const ObservationModel> models, double sigma);

// velocity <- m*velocity + grad;  w <- w + lr*velocity  (ascent).
void sgd_momentum(Weights& w, const Weights& grad, Weights& velocity, double learning_rate,
                  double momentum);

struct TrainResult {
    Weights w;
    Weights velocity;
    std::vector<LatentState> latents;
    TrainHistory history;
    int iterations_done = 0;
};

// Alternating training: every iteration first refreshes each batch member's
// latent factors by warm-started inference, then applies one momentum update
// from the summed learning gradient. Deterministic given hyper.seed: every
// chain draws from a private substream keyed by (seed, example, iteration),
// so results do not depend on thread count, and resumed runs reproduce
// uninterrupted ones bit for bit. `models` holds one shared observation
// model or one per example. Pass `resume` to continue a previous result up
// to hyper.iterations.
TrainResult abp_train(const std::vector<Observation>& data, const NetSpec& spec,
                      std::span<const ObservationModel> models, const Hyper& hyper,
                      const TrainResult* resume = nullptr);

// Variant updating the weights and all latent factors simultaneously by one
// joint gradient step per iteration (no Langevin noise).
TrainResult joint_gd_train(const std::vector<Observation>& data, const NetSpec& spec,
                           std::span<const ObservationModel> models, const Hyper& hyper,
                           const TrainResult* resume = nullptr);

}  // namespace abp

#endif
