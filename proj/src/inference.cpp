#include "abp/inference.hpp"

#include <cmath>

#include "abp/errors.hpp"

namespace abp {

InferMode infer_mode_from_name(const std::string& name) {
    if (name == "langevin") return InferMode::langevin;
    if (name == "gradient_descent") return InferMode::gradient_descent;
    throw FormatError("unknown inference mode '" + name + "'");
}

const char* infer_mode_name(InferMode mode) {
    return mode == InferMode::langevin ? "langevin" : "gradient_descent";
}

void validate_infer_config(const InferConfig& cfg) {
    if (cfg.steps < 0) throw ShapeError("inference steps must be >= 0");
    if (!(cfg.step_size > 0.0)) throw ShapeError("inference step size must be > 0");
    if (!(cfg.sigma > 0.0)) throw ShapeError("sigma must be > 0");
}

double log_joint(const Observation& obs, const Tensor& z, const Weights& w, const NetSpec& spec,
                 const ObservationModel& model, double sigma) {
    const Tensor y_hat = forward(z, w, spec);
    const auto [loss, grad] = loss_and_grad(obs, y_hat, model);
    (void)grad;
    return -loss / (2.0 * sigma * sigma) - 0.5 * squared_norm(z);
}

Tensor grad_log_joint_z(const Observation& obs, const Tensor& z, const Weights& w,
                        const NetSpec& spec, const ObservationModel& model, double sigma) {
    ForwardCache cache;
    const Tensor y_hat = forward(z, w, spec, &cache);
    const Tensor pb = pullback_residual(obs, y_hat, model);
    Tensor grad = backward_data(spec, w, cache, pb);
    const double w_data = 1.0 / (sigma * sigma);
    for (std::int64_t i = 0; i < grad.size(); ++i) grad[i] = w_data * grad[i] - z[i];
    return grad;
}

Tensor langevin_step(const Tensor& z, const Tensor& grad, double step_size, Rng& rng) {
    if (!(step_size > 0.0)) throw ShapeError("langevin step size must be > 0");
    if (!z.same_shape(grad)) {
        throw ShapeError("langevin_step: gradient shape " + shape_string(grad.shape) +
                         " does not match latent shape " + shape_string(z.shape));
    }
    Tensor out = z;
    const double drift = 0.5 * step_size * step_size;
    for (std::int64_t i = 0; i < out.size(); ++i) {
        out[i] += step_size * rng.normal() + drift * grad[i];
    }
    return out;
}

LatentState infer(const Observation& obs, LatentState state, const Weights& w,
                  const NetSpec& spec, const ObservationModel& model, const InferConfig& cfg,
                  Rng& rng) {
    validate_infer_config(cfg);
    const double drift = 0.5 * cfg.step_size * cfg.step_size;
    for (int step = 0; step < cfg.steps; ++step) {
        const Tensor grad = grad_log_joint_z(obs, state.z, w, spec, model, cfg.sigma);
        if (cfg.mode == InferMode::langevin) {
            state.z = langevin_step(state.z, grad, cfg.step_size, rng);
        } else {
            axpy(drift, grad, state.z);
        }
        if (!state.z.all_finite()) {
            throw NumericError("inference diverged: non-finite latent after step " +
                               std::to_string(step));
        }
    }
    state.chain_age += 1;
    return state;
}

}  // namespace abp
