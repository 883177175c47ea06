#include "abp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abp/errors.hpp"

namespace abp {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    for (int e : shape) {
        if (e < 1) throw ShapeError("tensor extent must be positive, got " + shape_string(shape));
    }
    data.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
}

Tensor Tensor::from(std::vector<int> s, std::vector<double> values) {
    Tensor t;
    t.shape = std::move(s);
    if (shape_size(t.shape) != static_cast<std::int64_t>(values.size())) {
        throw ShapeError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(t.shape));
    }
    t.data = std::move(values);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::int64_t shape_size(std::span<const int> shape) {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
}

std::string shape_string(std::span<const int> shape) {
    std::ostringstream os;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    return os.str();
}

std::vector<int> parse_shape(const std::string& text) {
    std::vector<int> out;
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, 'x')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw FormatError("bad shape '" + text + "'");
        }
    }
    if (out.empty()) throw FormatError("bad shape '" + text + "'");
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape " + shape_string(a.shape) + " vs " +
                         shape_string(b.shape));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor scaled(const Tensor& a, double c) {
    Tensor out = a;
    for (double& v : out.data) v *= c;
    return out;
}

void axpy(double a, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    for (std::int64_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

namespace {

void check_deconv_shapes(const Tensor& input, const Tensor& kernels,
                         std::span<const double> bias, int up_factor) {
    const int in_rank = input.rank();
    const int k_rank = kernels.rank();
    if (in_rank != 2 && in_rank != 3) {
        throw ShapeError("deconvolve: input must have rank 2 or 3, got shape " +
                         shape_string(input.shape));
    }
    if (k_rank != in_rank + 1) {
        throw ShapeError("deconvolve: kernel axis count " + std::to_string(k_rank) +
                         " does not fit input rank " + std::to_string(in_rank) +
                         " (expected " + std::to_string(in_rank + 1) + ")");
    }
    if (input.shape[0] != kernels.shape[1]) {
        throw ShapeError("deconvolve: channel axis mismatch, input has " +
                         std::to_string(input.shape[0]) + " channels, kernel bank expects " +
                         std::to_string(kernels.shape[1]));
    }
    if (static_cast<int>(bias.size()) != kernels.shape[0]) {
        throw ShapeError("deconvolve: bias axis has " + std::to_string(bias.size()) +
                         " entries, kernel bank has " + std::to_string(kernels.shape[0]) +
                         " output channels");
    }
    if (up_factor < 1) throw ShapeError("deconvolve: up_factor must be >= 1");
    for (int a = 2; a < k_rank; ++a) {
        if (kernels.shape[a] < 1) {
            throw ShapeError("deconvolve: kernel extent axis " + std::to_string(a) +
                             " must be >= 1");
        }
    }
}

struct TapRange {
    int lo, hi;  // inclusive tap indices
};

// Valid kernel taps for input position x: taps j with
// 0 <= x*up + j - centre < out_extent.
inline TapRange tap_range(int x, int up, int centre, int k, int out_extent) {
    const int base = x * up - centre;
    return {std::max(0, -base), std::min(k - 1, out_extent - 1 - base)};
}

}  // namespace

Tensor deconvolve(const Tensor& input, const Tensor& kernels, std::span<const double> bias,
                  int up_factor) {
    check_deconv_shapes(input, kernels, bias, up_factor);
    const int up = up_factor;
    const int oc_n = kernels.shape[0];
    const int ic_n = kernels.shape[1];

    if (input.rank() == 2) {
        const int len = input.shape[1];
        const int k = kernels.shape[2];
        const int c = k / 2;
        const int out_len = len * up;
        Tensor out({oc_n, out_len});
        for (int oc = 0; oc < oc_n; ++oc) {
            double* orow = &out.at2(oc, 0);
            for (int i = 0; i < out_len; ++i) orow[i] = bias[oc];
            for (int ic = 0; ic < ic_n; ++ic) {
                const double* kb = &kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * k];
                const double* irow = &input.at2(ic, 0);
                for (int x = 0; x < len; ++x) {
                    const double a = irow[x];
                    const TapRange r = tap_range(x, up, c, k, out_len);
                    double* dst = orow + x * up - c;
                    for (int j = r.lo; j <= r.hi; ++j) dst[j] += a * kb[j];
                }
            }
        }
        return out;
    }

    const int h = input.shape[1], w = input.shape[2];
    const int kh = kernels.shape[2], kw = kernels.shape[3];
    const int ch = kh / 2, cw = kw / 2;
    const int oh = h * up, ow = w * up;
    Tensor out({oc_n, oh, ow});
    for (int oc = 0; oc < oc_n; ++oc) {
        double* oplane = &out.at3(oc, 0, 0);
        for (int i = 0; i < oh * ow; ++i) oplane[i] = bias[oc];
        for (int ic = 0; ic < ic_n; ++ic) {
            const double* kb =
                &kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * kh * kw];
            for (int xh = 0; xh < h; ++xh) {
                const TapRange rh = tap_range(xh, up, ch, kh, oh);
                const double* irow = &input.at3(ic, xh, 0);
                for (int xw = 0; xw < w; ++xw) {
                    const double a = irow[xw];
                    if (a == 0.0) continue;
                    const TapRange rw = tap_range(xw, up, cw, kw, ow);
                    const int col0 = xw * up - cw;
                    for (int jh = rh.lo; jh <= rh.hi; ++jh) {
                        double* dst = oplane + (xh * up + jh - ch) * ow + col0;
                        const double* krow = kb + jh * kw;
                        for (int jw = rw.lo; jw <= rw.hi; ++jw) dst[jw] += a * krow[jw];
                    }
                }
            }
        }
    }
    return out;
}

Tensor deconvolve_backward_input(const Tensor& d_output, const Tensor& kernels, int up_factor,
                                 std::span<const int> input_shape) {
    Tensor d_input(std::vector<int>(input_shape.begin(), input_shape.end()));
    const std::vector<double> dummy_bias(kernels.shape[0], 0.0);
    check_deconv_shapes(d_input, kernels, dummy_bias, up_factor);
    const int up = up_factor;
    const int oc_n = kernels.shape[0];
    const int ic_n = kernels.shape[1];

    if (d_input.rank() == 2) {
        const int len = d_input.shape[1];
        const int k = kernels.shape[2];
        const int c = k / 2;
        const int out_len = len * up;
        if (d_output.shape != std::vector<int>{oc_n, out_len}) {
            throw ShapeError("deconvolve backward: output gradient shape " +
                             shape_string(d_output.shape) + ", expected " +
                             shape_string(std::vector<int>{oc_n, out_len}));
        }
        for (int oc = 0; oc < oc_n; ++oc) {
            const double* orow = &d_output.at2(oc, 0);
            for (int ic = 0; ic < ic_n; ++ic) {
                const double* kb = &kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * k];
                double* drow = &d_input.at2(ic, 0);
                for (int x = 0; x < len; ++x) {
                    const TapRange r = tap_range(x, up, c, k, out_len);
                    const double* src = orow + x * up - c;
                    double s = 0.0;
                    for (int j = r.lo; j <= r.hi; ++j) s += src[j] * kb[j];
                    drow[x] += s;
                }
            }
        }
        return d_input;
    }

    const int h = d_input.shape[1], w = d_input.shape[2];
    const int kh = kernels.shape[2], kw = kernels.shape[3];
    const int ch = kh / 2, cw = kw / 2;
    const int oh = h * up, ow = w * up;
    if (d_output.shape != std::vector<int>{oc_n, oh, ow}) {
        throw ShapeError("deconvolve backward: output gradient shape " +
                         shape_string(d_output.shape) + ", expected " +
                         shape_string(std::vector<int>{oc_n, oh, ow}));
    }
    for (int oc = 0; oc < oc_n; ++oc) {
        const double* oplane = &d_output.at3(oc, 0, 0);
        for (int ic = 0; ic < ic_n; ++ic) {
            const double* kb = &kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * kh * kw];
            for (int xh = 0; xh < h; ++xh) {
                const TapRange rh = tap_range(xh, up, ch, kh, oh);
                double* drow = &d_input.at3(ic, xh, 0);
                for (int xw = 0; xw < w; ++xw) {
                    const TapRange rw = tap_range(xw, up, cw, kw, ow);
                    const int col0 = xw * up - cw;
                    double s = 0.0;
                    for (int jh = rh.lo; jh <= rh.hi; ++jh) {
                        const double* src = oplane + (xh * up + jh - ch) * ow + col0;
                        const double* krow = kb + jh * kw;
                        for (int jw = rw.lo; jw <= rw.hi; ++jw) s += src[jw] * krow[jw];
                    }
                    drow[xw] += s;
                }
            }
        }
    }
    return d_input;
}

void deconvolve_backward_params(const Tensor& d_output, const Tensor& input,
                                const Tensor& kernels, int up_factor, Tensor& d_kernels,
                                std::vector<double>& d_bias) {
    const std::size_t oc_count = static_cast<std::size_t>(kernels.shape[0]);
    if (!d_kernels.same_shape(kernels)) d_kernels = Tensor(kernels.shape);
    if (d_bias.size() != oc_count) d_bias.assign(oc_count, 0.0);
    check_deconv_shapes(input, kernels, d_bias, up_factor);
    const int up = up_factor;
    const int oc_n = kernels.shape[0];
    const int ic_n = kernels.shape[1];

    if (input.rank() == 2) {
        const int len = input.shape[1];
        const int k = kernels.shape[2];
        const int c = k / 2;
        const int out_len = len * up;
        for (int oc = 0; oc < oc_n; ++oc) {
            const double* orow = &d_output.at2(oc, 0);
            double bsum = 0.0;
            for (int i = 0; i < out_len; ++i) bsum += orow[i];
            d_bias[oc] += bsum;
            for (int ic = 0; ic < ic_n; ++ic) {
                double* kb = &d_kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * k];
                const double* irow = &input.at2(ic, 0);
                for (int x = 0; x < len; ++x) {
                    const double a = irow[x];
                    if (a == 0.0) continue;
                    const TapRange r = tap_range(x, up, c, k, out_len);
                    const double* src = orow + x * up - c;
                    for (int j = r.lo; j <= r.hi; ++j) kb[j] += a * src[j];
                }
            }
        }
        return;
    }

    const int h = input.shape[1], w = input.shape[2];
    const int kh = kernels.shape[2], kw = kernels.shape[3];
    const int ch = kh / 2, cw = kw / 2;
    const int oh = h * up, ow = w * up;
    for (int oc = 0; oc < oc_n; ++oc) {
        const double* oplane = &d_output.at3(oc, 0, 0);
        double bsum = 0.0;
        for (int i = 0; i < oh * ow; ++i) bsum += oplane[i];
        d_bias[oc] += bsum;
        for (int ic = 0; ic < ic_n; ++ic) {
            double* kb = &d_kernels.data[(static_cast<std::size_t>(oc) * ic_n + ic) * kh * kw];
            for (int xh = 0; xh < h; ++xh) {
                const TapRange rh = tap_range(xh, up, ch, kh, oh);
                const double* irow = &input.at3(ic, xh, 0);
                for (int xw = 0; xw < w; ++xw) {
                    const double a = irow[xw];
                    if (a == 0.0) continue;
                    const TapRange rw = tap_range(xw, up, cw, kw, ow);
                    const int col0 = xw * up - cw;
                    for (int jh = rh.lo; jh <= rh.hi; ++jh) {
                        const double* src = oplane + (xh * up + jh - ch) * ow + col0;
                        double* krow = kb + jh * kw;
                        for (int jw = rw.lo; jw <= rw.hi; ++jw) krow[jw] += a * src[jw];
                    }
                }
            }
        }
    }
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "tanh") return Activation::tanh;
    throw FormatError("unknown activation '" + name + "'");
}

Tensor activate(const Tensor& x, Activation kind, double alpha) {
    if (kind == Activation::leaky_relu && !(alpha > 0.0 && alpha < 1.0)) {
        throw ShapeError("leaky_relu leak must lie in (0,1), got " + std::to_string(alpha));
    }
    Tensor out = x;
    switch (kind) {
        case Activation::identity:
            break;
        case Activation::relu:
            for (double& v : out.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::leaky_relu:
            for (double& v : out.data) v = v > 0.0 ? v : alpha * v;
            break;
        case Activation::tanh:
            for (double& v : out.data) v = std::tanh(v);
            break;
    }
    return out;
}

Tensor activate_backward(const Tensor& pre, const Tensor& d_post, Activation kind, double alpha) {
    if (!pre.same_shape(d_post)) {
        throw ShapeError("activate_backward: shape " + shape_string(pre.shape) + " vs " +
                         shape_string(d_post.shape));
    }
    Tensor out = d_post;
    switch (kind) {
        case Activation::identity:
            break;
        case Activation::relu:
            for (std::int64_t i = 0; i < out.size(); ++i) {
                if (pre[i] <= 0.0) out[i] = 0.0;
            }
            break;
        case Activation::leaky_relu:
            for (std::int64_t i = 0; i < out.size(); ++i) {
                if (pre[i] <= 0.0) out[i] *= alpha;
            }
            break;
        case Activation::tanh:
            for (std::int64_t i = 0; i < out.size(); ++i) {
                const double t = std::tanh(pre[i]);
                out[i] *= 1.0 - t * t;
            }
            break;
    }
    return out;
}

namespace {

void check_norm_batch(std::span<const Tensor> batch, std::span<const double> gain,
                      std::span<const double> shift) {
    if (batch.empty()) throw ShapeError("normalize_channels: empty batch");
    const int channels = batch[0].shape.empty() ? 0 : batch[0].shape[0];
    if (channels < 1) throw ShapeError("normalize_channels: missing channel axis");
    for (const Tensor& t : batch) {
        if (!t.same_shape(batch[0])) {
            throw ShapeError("normalize_channels: batch member shape " + shape_string(t.shape) +
                             " differs from " + shape_string(batch[0].shape));
        }
    }
    if (static_cast<int>(gain.size()) != channels || static_cast<int>(shift.size()) != channels) {
        throw ShapeError("normalize_channels: gain/shift length must equal channel count " +
                         std::to_string(channels));
    }
}

}  // namespace

std::vector<Tensor> normalize_channels(std::span<const Tensor> batch, std::span<const double> gain,
                                       std::span<const double> shift, double eps,
                                       ChannelNormStats* stats) {
    check_norm_batch(batch, gain, shift);
    if (!(eps > 0.0)) throw ShapeError("normalize_channels: eps must be > 0");
    const int channels = batch[0].shape[0];
    const std::int64_t ext = batch[0].size() / channels;
    const double inv_count = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(ext));

    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    for (const Tensor& t : batch) {
        for (int c = 0; c < channels; ++c) {
            const double* p = t.data.data() + c * ext;
            double s = 0.0;
            for (std::int64_t i = 0; i < ext; ++i) s += p[i];
            mean[c] += s;
        }
    }
    for (int c = 0; c < channels; ++c) mean[c] *= inv_count;
    for (const Tensor& t : batch) {
        for (int c = 0; c < channels; ++c) {
            const double* p = t.data.data() + c * ext;
            double s = 0.0;
            for (std::int64_t i = 0; i < ext; ++i) {
                const double d = p[i] - mean[c];
                s += d * d;
            }
            var[c] += s;
        }
    }
    for (int c = 0; c < channels; ++c) var[c] *= inv_count;

    std::vector<Tensor> out(batch.begin(), batch.end());
    for (Tensor& t : out) {
        for (int c = 0; c < channels; ++c) {
            const double scale = gain[c] / std::sqrt(var[c] + eps);
            double* p = t.data.data() + c * ext;
            for (std::int64_t i = 0; i < ext; ++i) p[i] = (p[i] - mean[c]) * scale + shift[c];
        }
    }
    if (stats) {
        stats->mean = std::move(mean);
        stats->var = std::move(var);
        stats->eps = eps;
    }
    return out;
}

std::vector<Tensor> normalize_channels_backward(std::span<const Tensor> batch,
                                                std::span<const Tensor> d_out,
                                                std::span<const double> gain,
                                                const ChannelNormStats& stats,
                                                std::vector<double>* d_gain,
                                                std::vector<double>* d_shift) {
    if (batch.size() != d_out.size()) {
        throw ShapeError("normalize_channels_backward: batch and gradient counts differ");
    }
    const int channels = batch[0].shape[0];
    const std::int64_t ext = batch[0].size() / channels;
    const double count = static_cast<double>(batch.size()) * static_cast<double>(ext);

    if (d_gain) d_gain->assign(channels, 0.0);
    if (d_shift) d_shift->assign(channels, 0.0);

    std::vector<Tensor> d_in(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) d_in[b] = Tensor(batch[0].shape);

    for (int c = 0; c < channels; ++c) {
        const double inv_std = 1.0 / std::sqrt(stats.var[c] + stats.eps);
        // First pass: mean of dy and of dy * xhat over the channel.
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const double* x = batch[b].data.data() + c * ext;
            const double* dy = d_out[b].data.data() + c * ext;
            for (std::int64_t i = 0; i < ext; ++i) {
                const double xhat = (x[i] - stats.mean[c]) * inv_std;
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xhat;
            }
        }
        if (d_gain) (*d_gain)[c] = sum_dy_xhat;
        if (d_shift) (*d_shift)[c] = sum_dy;
        const double mean_dy = sum_dy / count;
        const double mean_dy_xhat = sum_dy_xhat / count;
        const double g = gain[c] * inv_std;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const double* x = batch[b].data.data() + c * ext;
            const double* dy = d_out[b].data.data() + c * ext;
            double* dx = d_in[b].data.data() + c * ext;
            for (std::int64_t i = 0; i < ext; ++i) {
                const double xhat = (x[i] - stats.mean[c]) * inv_std;
                dx[i] = g * (dy[i] - mean_dy - xhat * mean_dy_xhat);
            }
        }
    }
    return d_in;
}

}  // namespace abp
