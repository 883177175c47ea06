#ifndef ABP_INFERENCE_HPP
#define ABP_INFERENCE_HPP

#include "abp/generator.hpp"
#include "abp/observation.hpp"
#include "abp/rng.hpp"
#include "abp/tensor.hpp"

namespace abp {

// Per-example latent factors with their persistent chain state; training
// warm-starts each inference round from the previous value.
struct LatentState {
    Tensor z;
    long chain_age = 0;  // inference rounds since initialization
};

enum class InferMode { langevin, gradient_descent };

InferMode infer_mode_from_name(const std::string& name);
const char* infer_mode_name(InferMode mode);

struct InferConfig {
    int steps = 10;
    double step_size = 0.1;
    double sigma = 0.3;
    InferMode mode = InferMode::langevin;
};

void validate_infer_config(const InferConfig& cfg);

// Joint log-density of (observation, latent) up to an additive constant:
//   -loss(obs, f(Z;W)) / (2 sigma^2) - |Z|^2 / 2.
double log_joint(const Observation& obs, const Tensor& z, const Weights& w, const NetSpec& spec,
                 const ObservationModel& model, double sigma);

// Gradient of log_joint in Z: residual pulled back through the observation
// model and the network, scaled by 1/sigma^2, minus Z.
Tensor grad_log_joint_z(const Observation& obs, const Tensor& z, const Weights& w,
                        const NetSpec& spec, const ObservationModel& model, double sigma);

// One Langevin transition: Z' = Z + s*U + (s^2/2)*grad, U ~ N(0, I).
Tensor langevin_step(const Tensor& z, const Tensor& grad, double step_size, Rng& rng);

// Runs cfg.steps transitions from the current state (warm start). In
// gradient_descent mode the noise term is omitted, leaving deterministic
// ascent steps of size s^2/2.
LatentState infer(const Observation& obs, LatentState state, const Weights& w,
                  const NetSpec& spec, const ObservationModel& model, const InferConfig& cfg,
                  Rng& rng);

}  // namespace abp

#endif
