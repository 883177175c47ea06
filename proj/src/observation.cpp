#include "abp/observation.hpp"

#include <cmath>

#include "abp/errors.hpp"

namespace abp {

ObservationModel ObservationModel::full_obs() { return ObservationModel{}; }

ObservationModel ObservationModel::masked_obs(Tensor mask) {
    ObservationModel m;
    m.kind = ObservationKind::masked;
    m.mask = std::move(mask);
    for (double v : m.mask.data) {
        if (v != 0.0 && v != 1.0) throw ShapeError("mask entries must be 0 or 1");
    }
    return m;
}

ObservationModel ObservationModel::projected_obs(Tensor sensing) {
    ObservationModel m;
    m.kind = ObservationKind::projected;
    m.sensing = std::move(sensing);
    if (m.sensing.rank() != 2) throw ShapeError("sensing matrix must be rank 2");
    if (!m.sensing.all_finite()) throw NumericError("sensing matrix has non-finite entries");
    return m;
}

void validate_model(const ObservationModel& model, std::span<const int> signal_shape) {
    switch (model.kind) {
        case ObservationKind::full:
            return;
        case ObservationKind::masked:
            if (model.mask.shape != std::vector<int>(signal_shape.begin(), signal_shape.end())) {
                throw ShapeError("mask shape " + shape_string(model.mask.shape) +
                                 " does not match signal shape " + shape_string(signal_shape));
            }
            return;
        case ObservationKind::projected: {
            const std::int64_t d = shape_size(signal_shape);
            if (model.sensing.shape[1] != d) {
                throw ShapeError("sensing matrix has " + std::to_string(model.sensing.shape[1]) +
                                 " columns, signal has " + std::to_string(d) + " entries");
            }
            if (model.sensing.shape[0] > d) {
                throw ShapeError("sensing matrix has more rows than signal entries");
            }
            return;
        }
    }
}

namespace {

std::vector<double> project(const Tensor& s, const Tensor& y) {
    const int k = s.shape[0], d = s.shape[1];
    std::vector<double> out(k, 0.0);
    for (int i = 0; i < k; ++i) {
        const double* row = &s.data[static_cast<std::size_t>(i) * d];
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += row[j] * y[j];
        out[i] = acc;
    }
    return out;
}

}  // namespace

Observation observe(const Tensor& signal, const ObservationModel& model) {
    validate_model(model, signal.shape);
    Observation obs;
    switch (model.kind) {
        case ObservationKind::full:
            obs.data = signal;
            break;
        case ObservationKind::masked:
            obs.data = signal;
            for (std::int64_t i = 0; i < obs.data.size(); ++i) {
                if (model.mask[i] == 0.0) obs.data[i] = 0.0;
            }
            break;
        case ObservationKind::projected: {
            obs.data = Tensor::from({model.sensing.shape[0]}, project(model.sensing, signal));
            break;
        }
    }
    return obs;
}

std::pair<double, Tensor> loss_and_grad(const Observation& obs, const Tensor& y_hat,
                                        const ObservationModel& model) {
    const Tensor pb = pullback_residual(obs, y_hat, model);
    double loss = 0.0;
    switch (model.kind) {
        case ObservationKind::full:
        case ObservationKind::masked:
            // Residual is already restricted to observed entries.
            loss = squared_norm(pb);
            break;
        case ObservationKind::projected: {
            const std::vector<double> sy_hat = project(model.sensing, y_hat);
            for (std::size_t i = 0; i < sy_hat.size(); ++i) {
                const double r = obs.data[static_cast<std::int64_t>(i)] - sy_hat[i];
                loss += r * r;
            }
            break;
        }
    }
    return {loss, scaled(pb, -2.0)};
}

Tensor pullback_residual(const Observation& obs, const Tensor& y_hat,
                         const ObservationModel& model) {
    validate_model(model, y_hat.shape);
    switch (model.kind) {
        case ObservationKind::full: {
            if (!obs.data.same_shape(y_hat)) {
                throw ShapeError("observation shape " + shape_string(obs.data.shape) +
                                 " does not match reconstruction " + shape_string(y_hat.shape));
            }
            return sub(obs.data, y_hat);
        }
        case ObservationKind::masked: {
            if (!obs.data.same_shape(y_hat)) {
                throw ShapeError("observation shape " + shape_string(obs.data.shape) +
                                 " does not match reconstruction " + shape_string(y_hat.shape));
            }
            Tensor r(y_hat.shape);
            for (std::int64_t i = 0; i < r.size(); ++i) {
                r[i] = model.mask[i] == 0.0 ? 0.0 : obs.data[i] - y_hat[i];
            }
            return r;
        }
        case ObservationKind::projected: {
            const int k = model.sensing.shape[0], d = model.sensing.shape[1];
            if (obs.data.size() != k) {
                throw ShapeError("projected observation has " + std::to_string(obs.data.size()) +
                                 " entries, sensing matrix has " + std::to_string(k) + " rows");
            }
            const std::vector<double> sy_hat = project(model.sensing, y_hat);
            Tensor r(y_hat.shape);
            for (int i = 0; i < k; ++i) {
                const double res = obs.data[i] - sy_hat[static_cast<std::size_t>(i)];
                if (res == 0.0) continue;
                const double* row = &model.sensing.data[static_cast<std::size_t>(i) * d];
                for (int j = 0; j < d; ++j) r[j] += row[j] * res;
            }
            return r;
        }
    }
    throw ShapeError("unreachable observation kind");
}

namespace {

std::pair<int, int> spatial_extents(std::span<const int> shape) {
    if (shape.size() == 3) return {shape[1], shape[2]};
    if (shape.size() == 2) return {1, shape[1]};
    throw ShapeError("mask generation expects a rank-2 or rank-3 shape, got " +
                     shape_string(shape));
}

}  // namespace

Tensor make_pepper_mask(std::span<const int> shape, double coverage, Rng& rng, int patch) {
    if (coverage < 0.0 || coverage > 1.0) {
        throw ShapeError("pepper coverage must lie in [0,1], got " + std::to_string(coverage));
    }
    const auto [h, w] = spatial_extents(shape);
    const int channels = shape[0];
    Tensor mask(std::vector<int>(shape.begin(), shape.end()));
    mask.fill(1.0);
    if (coverage == 0.0) return mask;

    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<char> occluded(static_cast<std::size_t>(plane), 0);
    std::int64_t count = 0;
    const double target = coverage * static_cast<double>(plane);
    // One spatial occlusion pattern shared by all channels. Patches may
    // overlap; placement repeats until the occluded fraction first reaches
    // the requested coverage.
    while (static_cast<double>(count) < target) {
        const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h - patch + 1))));
        const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, w - patch + 1))));
        for (int i = top; i < std::min(h, top + patch); ++i) {
            for (int j = left; j < std::min(w, left + patch); ++j) {
                char& cell = occluded[static_cast<std::size_t>(i) * w + j];
                if (!cell) {
                    cell = 1;
                    ++count;
                }
            }
        }
    }
    for (int c = 0; c < channels; ++c) {
        double* plane_data = mask.data.data() + static_cast<std::size_t>(c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
            if (occluded[static_cast<std::size_t>(i)]) plane_data[i] = 0.0;
        }
    }
    return mask;
}

Tensor make_region_mask(std::span<const int> shape, int m, Rng& rng) {
    const auto [h, w] = spatial_extents(shape);
    if (m > h || m > w) {
        throw ShapeError("region mask side " + std::to_string(m) + " exceeds spatial extent " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    if (m < 1) throw ShapeError("region mask side must be >= 1");
    const int channels = shape[0];
    Tensor mask(std::vector<int>(shape.begin(), shape.end()));
    mask.fill(1.0);
    const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - m + 1)));
    const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - m + 1)));
    for (int c = 0; c < channels; ++c) {
        for (int i = top; i < top + m; ++i) {
            for (int j = left; j < left + m; ++j) {
                mask.data[(static_cast<std::size_t>(c) * h + i) * w + j] = 0.0;
            }
        }
    }
    return mask;
}

Tensor make_sensing_matrix(int k, int d, Rng& rng, double std_dev) {
    if (k < 1 || d < 1) throw ShapeError("sensing matrix extents must be >= 1");
    Tensor s({k, d});
    for (double& v : s.data) v = rng.normal(0.0, std_dev);
    return s;
}

double occluded_fraction(const Tensor& mask) {
    std::int64_t occluded = 0;
    for (double v : mask.data) {
        if (v == 0.0) ++occluded;
    }
    return static_cast<double>(occluded) / static_cast<double>(mask.size());
}

double recovery_error(const Tensor& y_true, const Tensor& y_rec, RecoveryRegion region,
                      const Tensor* mask) {
    if (!y_true.same_shape(y_rec)) {
        throw ShapeError("recovery_error: shape " + shape_string(y_true.shape) + " vs " +
                         shape_string(y_rec.shape));
    }
    double sum = 0.0;
    std::int64_t count = 0;
    if (region == RecoveryRegion::all) {
        for (std::int64_t i = 0; i < y_true.size(); ++i) sum += std::abs(y_true[i] - y_rec[i]);
        count = y_true.size();
    } else {
        if (!mask || !mask->same_shape(y_true)) {
            throw ShapeError("recovery_error: occluded_only region needs a matching mask");
        }
        for (std::int64_t i = 0; i < y_true.size(); ++i) {
            if ((*mask)[i] == 0.0) {
                sum += std::abs(y_true[i] - y_rec[i]);
                ++count;
            }
        }
    }
    if (count == 0) throw ShapeError("recovery_error: empty region");
    return sum / (2.0 * static_cast<double>(count));
}

}  // namespace abp
