#include "abp/learning.hpp"

#include <cmath>
#include <ostream>

#include "abp/errors.hpp"
#include "abp/parallel.hpp"

namespace abp {

namespace {

constexpr double kLossCeiling = 1e6;

// Substream tags; child streams are keyed (tag, index) off the run seed.
constexpr std::uint64_t kTagWeightsInit = 0x57494e49ULL;  // "WINI"
constexpr std::uint64_t kTagLatentInit = 0x5a494e49ULL;   // "ZINI"

const ObservationModel& model_for(std::span<const ObservationModel> models, std::size_t i) {
    return models.size() == 1 ? models[0] : models[i];
}

void check_train_args(const std::vector<Observation>& data,
                      std::span<const ObservationModel> models, const Hyper& hyper) {
    if (data.empty()) throw DataError("training set is empty");
    if (models.size() != 1 && models.size() != data.size()) {
        throw ShapeError("observation model count must be 1 or match the dataset size");
    }
    if (hyper.iterations < 0) throw ShapeError("iteration count must be >= 0");
    if (!(hyper.learning_rate >= 0.0)) throw ShapeError("learning rate must be >= 0");
    if (!(hyper.momentum >= 0.0 && hyper.momentum < 1.0)) {
        throw ShapeError("momentum must lie in [0,1)");
    }
    validate_infer_config(hyper.infer);
}

int effective_batch(const Hyper& hyper, int n) {
    if (hyper.batch_size > 0) return std::min(hyper.batch_size, n);
    return n <= 512 ? n : 128;
}

struct Slot {
    Weights dw;
    double loss = 0.0;
    double z_sq = 0.0;
    bool diverged = false;
};

TrainResult run_training(const std::vector<Observation>& data, const NetSpec& spec,
                         std::span<const ObservationModel> models, const Hyper& hyper,
                         const TrainResult* resume, bool joint) {
    check_train_args(data, models, hyper);
    const int n = static_cast<int>(data.size());
    const Rng root(hyper.seed);
    const double sigma = hyper.infer.sigma;
    const double inv_sigma_sq = 1.0 / (sigma * sigma);

    TrainResult st;
    if (resume) {
        st = *resume;
        if (static_cast<int>(st.latents.size()) != n) {
            throw DataError("resume state has " + std::to_string(st.latents.size()) +
                            " latent chains, dataset has " + std::to_string(n));
        }
    } else {
        Rng winit = root.child(kTagWeightsInit, 0);
        st.w = init_weights(spec, winit);
        st.velocity = zeros_like(st.w);
        st.latents.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Rng zinit = root.child(kTagLatentInit, static_cast<std::uint64_t>(i));
            LatentState& ls = st.latents[static_cast<std::size_t>(i)];
            ls.z = Tensor(spec.latent_shape);
            for (double& v : ls.z.data) v = zinit.normal();
            ls.chain_age = 0;
        }
    }
    validate_weights(spec, st.w);
    for (int i = 0; i < n; ++i) validate_model(model_for(models, static_cast<std::size_t>(i)), spec.output_shape);

    const int batch = effective_batch(hyper, n);
    std::vector<Slot> slots(static_cast<std::size_t>(batch));

    for (int t = st.iterations_done; t < hyper.iterations; ++t) {
        const int base = n == batch ? 0 : (t * batch) % n;

        // Inference phase: every batch member finishes before any update.
        parallel_for(batch, hyper.threads, [&](int b) {
            const int i = (base + b) % n;
            const std::size_t ui = static_cast<std::size_t>(i);
            const Observation& obs = data[ui];
            const ObservationModel& model = model_for(models, ui);
            Slot& slot = slots[static_cast<std::size_t>(b)];

            Tensor z;
            if (joint) {
                z = st.latents[ui].z;
            } else {
                Rng chain = root.child(static_cast<std::uint64_t>(i),
                                       static_cast<std::uint64_t>(t) + 1);
                st.latents[ui] =
                    infer(obs, std::move(st.latents[ui]), st.w, spec, model, hyper.infer, chain);
                z = st.latents[ui].z;
            }

            ForwardCache cache;
            const Tensor y_hat = forward(z, st.w, spec, &cache);
            const auto [loss, d_loss] = loss_and_grad(obs, y_hat, model);
            slot.loss = loss;
            slot.z_sq = squared_norm(z);
            slot.diverged = !std::isfinite(loss) || loss > kLossCeiling;
            if (slot.diverged) return;

            // d log p / d y_hat = -d_loss / (2 sigma^2)
            Tensor probe = scaled(d_loss, -0.5 * inv_sigma_sq);
            if (joint) {
                Tensor dz;
                slot.dw = backward_weights(spec, st.w, cache, probe, &dz);
                // Simultaneous latent step: ascend the joint density.
                for (std::int64_t e = 0; e < dz.size(); ++e) dz[e] -= z[e];
                axpy(0.5 * hyper.infer.step_size * hyper.infer.step_size, dz, st.latents[ui].z);
                st.latents[ui].chain_age += 1;
            } else {
                slot.dw = backward_weights(spec, st.w, cache, probe);
            }
        });

        // Update phase: fixed accumulation order keeps runs reproducible
        // across thread counts.
        Weights grad = zeros_like(st.w);
        double loss_sum = 0.0, z_sq_sum = 0.0;
        for (int b = 0; b < batch; ++b) {
            const Slot& slot = slots[static_cast<std::size_t>(b)];
            if (slot.diverged) {
                throw NumericError("training diverged at iteration " + std::to_string(t) +
                                   ", example " + std::to_string((base + b) % n));
            }
            weights_axpy(1.0, slot.dw, grad);
            loss_sum += slot.loss;
            z_sq_sum += slot.z_sq;
        }

        sgd_momentum(st.w, grad, st.velocity, hyper.learning_rate, hyper.momentum);
        if (!weights_all_finite(st.w)) {
            throw NumericError("training diverged at iteration " + std::to_string(t) +
                               ": non-finite weights after update");
        }

        HistoryRecord rec;
        rec.iteration = t;
        rec.mean_loss = loss_sum / batch;
        rec.mean_z_sq_per_dim = z_sq_sum / (batch * static_cast<double>(spec.latent_dim()));
        rec.grad_norm = std::sqrt(weights_squared_norm(grad));
        st.history.records.push_back(rec);
        st.iterations_done = t + 1;
    }
    return st;
}

}  // namespace

void write_history_csv(const TrainHistory& history, std::ostream& os) {
    os << "iteration,mean_loss,mean_z_sq_per_dim,grad_norm\n";
    for (const HistoryRecord& r : history.records) {
        os << r.iteration << ',' << r.mean_loss << ',' << r.mean_z_sq_per_dim << ','
           << r.grad_norm << '\n';
    }
}

Weights learning_gradient(std::span<const Observation> obs, std::span<const Tensor> latents,
                          const Weights& w, const NetSpec& spec,
                          std::span<const ObservationModel> models, double sigma) {
    if (obs.size() != latents.size()) {
        throw ShapeError("learning_gradient: observation and latent counts differ");
    }
    if (models.size() != 1 && models.size() != obs.size()) {
        throw ShapeError("learning_gradient: model count must be 1 or match the batch");
    }
    if (!(sigma > 0.0)) throw ShapeError("sigma must be > 0");
    const double inv_sigma_sq = 1.0 / (sigma * sigma);
    Weights grad = zeros_like(w);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ForwardCache cache;
        const Tensor y_hat = forward(latents[i], w, spec, &cache);
        const Tensor pb = pullback_residual(obs[i], y_hat, model_for(models, i));
        const Weights dw = backward_weights(spec, w, cache, scaled(pb, inv_sigma_sq));
        weights_axpy(1.0, dw, grad);
    }
    return grad;
}

void sgd_momentum(Weights& w, const Weights& grad, Weights& velocity, double learning_rate,
                  double momentum) {
    weights_scale(velocity, momentum);
    weights_axpy(1.0, grad, velocity);
    weights_axpy(learning_rate, velocity, w);
}

TrainResult abp_train(const std::vector<Observation>& data, const NetSpec& spec,
                      std::span<const ObservationModel> models, const Hyper& hyper,
                      const TrainResult* resume) {
    return run_training(data, spec, models, hyper, resume, /*joint=*/false);
}

TrainResult joint_gd_train(const std::vector<Observation>& data, const NetSpec& spec,
                           std::span<const ObservationModel> models, const Hyper& hyper,
                           const TrainResult* resume) {
    return run_training(data, spec, models, hyper, resume, /*joint=*/true);
}

}  // namespace abp
