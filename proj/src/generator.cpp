#include "abp/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abp/errors.hpp"

namespace abp {

LayerSpec LayerSpec::fc(int in_dim, std::vector<int> out_shape, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::fully_connected;
    l.in_dim = in_dim;
    l.out_shape = std::move(out_shape);
    l.activation = act;
    return l;
}

LayerSpec LayerSpec::deconv2d(int in_ch, int out_ch, int kh, int kw, int up, Activation act,
                              bool normalize) {
    LayerSpec l;
    l.kind = LayerKind::deconv;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = {kh, kw};
    l.up_factor = up;
    l.activation = act;
    l.normalize = normalize;
    return l;
}

LayerSpec LayerSpec::deconv1d(int in_ch, int out_ch, int k, int up, Activation act,
                              bool normalize) {
    LayerSpec l;
    l.kind = LayerKind::deconv;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = {k};
    l.up_factor = up;
    l.activation = act;
    l.normalize = normalize;
    return l;
}

bool NetSpec::fully_convolutional() const {
    return std::none_of(layers.begin(), layers.end(), [](const LayerSpec& l) {
        return l.kind == LayerKind::fully_connected;
    });
}

std::vector<int> layer_output_shape(const LayerSpec& layer, const std::vector<int>& in_shape,
                                    int layer_index) {
    const std::string where = "layer " + std::to_string(layer_index);
    if (layer.kind == LayerKind::fully_connected) {
        if (shape_size(in_shape) != layer.in_dim) {
            throw ShapeError(where + ": fully connected expects " + std::to_string(layer.in_dim) +
                             " inputs, got shape " + shape_string(in_shape));
        }
        if (layer.out_shape.empty()) throw ShapeError(where + ": missing out_shape");
        return layer.out_shape;
    }
    const int spatial_rank = static_cast<int>(layer.kernel.size());
    if (spatial_rank != 1 && spatial_rank != 2) {
        throw ShapeError(where + ": deconv kernel must be 1-D or 2-D");
    }
    if (static_cast<int>(in_shape.size()) != spatial_rank + 1) {
        throw ShapeError(where + ": deconv expects input rank " + std::to_string(spatial_rank + 1) +
                         ", got shape " + shape_string(in_shape));
    }
    if (in_shape[0] != layer.in_channels) {
        throw ShapeError(where + ": channel mismatch, input has " + std::to_string(in_shape[0]) +
                         " channels, layer expects " + std::to_string(layer.in_channels));
    }
    if (layer.up_factor < 1) throw ShapeError(where + ": up_factor must be >= 1");
    std::vector<int> out(in_shape.size());
    out[0] = layer.out_channels;
    for (int a = 1; a < static_cast<int>(in_shape.size()); ++a) {
        out[a] = in_shape[a] * layer.up_factor;
    }
    return out;
}

void validate_netspec(NetSpec& spec) {
    if (spec.layers.empty()) throw ShapeError("net spec has no layers");
    if (spec.latent_shape.empty()) throw ShapeError("net spec has no latent shape");
    std::vector<int> shape = spec.latent_shape;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        if (ls.activation == Activation::leaky_relu && !(ls.leak > 0.0 && ls.leak < 1.0)) {
            throw ShapeError("layer " + std::to_string(l) + ": leak must lie in (0,1)");
        }
        shape = layer_output_shape(ls, shape, static_cast<int>(l));
    }
    if (!spec.output_shape.empty() && spec.output_shape != shape) {
        throw ShapeError("net spec output shape " + shape_string(spec.output_shape) +
                         " does not match composed shape " + shape_string(shape));
    }
    spec.output_shape = shape;
}

namespace {

int norm_channel_count(const std::vector<int>& shape) { return shape[0]; }

std::vector<int> kernel_tensor_shape(const LayerSpec& l) {
    std::vector<int> s{l.out_channels, l.in_channels};
    s.insert(s.end(), l.kernel.begin(), l.kernel.end());
    return s;
}

}  // namespace

Weights zeros_like(const Weights& w) {
    Weights out;
    out.layers.reserve(w.layers.size());
    for (const LayerWeights& lw : w.layers) {
        LayerWeights z;
        z.weight = Tensor(lw.weight.shape);
        z.bias.assign(lw.bias.size(), 0.0);
        z.gain.assign(lw.gain.size(), 0.0);
        z.shift.assign(lw.shift.size(), 0.0);
        out.layers.push_back(std::move(z));
    }
    return out;
}

void weights_axpy(double a, const Weights& x, Weights& y) {
    if (x.layers.size() != y.layers.size()) throw ShapeError("weights_axpy: layer count mismatch");
    for (std::size_t l = 0; l < x.layers.size(); ++l) {
        axpy(a, x.layers[l].weight, y.layers[l].weight);
        for (std::size_t i = 0; i < x.layers[l].bias.size(); ++i) {
            y.layers[l].bias[i] += a * x.layers[l].bias[i];
        }
        for (std::size_t i = 0; i < x.layers[l].gain.size(); ++i) {
            y.layers[l].gain[i] += a * x.layers[l].gain[i];
        }
        for (std::size_t i = 0; i < x.layers[l].shift.size(); ++i) {
            y.layers[l].shift[i] += a * x.layers[l].shift[i];
        }
    }
}

void weights_scale(Weights& w, double c) {
    for (LayerWeights& lw : w.layers) {
        for (double& v : lw.weight.data) v *= c;
        for (double& v : lw.bias) v *= c;
        for (double& v : lw.gain) v *= c;
        for (double& v : lw.shift) v *= c;
    }
}

double weights_squared_norm(const Weights& w) {
    double s = 0.0;
    for (const LayerWeights& lw : w.layers) {
        s += squared_norm(lw.weight);
        for (double v : lw.bias) s += v * v;
        for (double v : lw.gain) s += v * v;
        for (double v : lw.shift) s += v * v;
    }
    return s;
}

bool weights_all_finite(const Weights& w) {
    for (const LayerWeights& lw : w.layers) {
        if (!lw.weight.all_finite()) return false;
        for (double v : lw.bias) {
            if (!std::isfinite(v)) return false;
        }
        for (double v : lw.gain) {
            if (!std::isfinite(v)) return false;
        }
        for (double v : lw.shift) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

Weights init_weights(const NetSpec& spec, Rng& rng, double std_dev) {
    Weights w;
    std::vector<int> shape = spec.latent_shape;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        const std::vector<int> out_shape = layer_output_shape(ls, shape, static_cast<int>(l));
        LayerWeights lw;
        if (ls.kind == LayerKind::fully_connected) {
            const int out_size = static_cast<int>(shape_size(ls.out_shape));
            lw.weight = Tensor({out_size, ls.in_dim});
            lw.bias.assign(out_size, 0.0);
        } else {
            lw.weight = Tensor(kernel_tensor_shape(ls));
            lw.bias.assign(ls.out_channels, 0.0);
        }
        for (double& v : lw.weight.data) v = rng.normal(0.0, std_dev);
        if (ls.normalize) {
            const int c = norm_channel_count(out_shape);
            lw.gain.assign(c, 1.0);
            lw.shift.assign(c, 0.0);
        }
        w.layers.push_back(std::move(lw));
        shape = out_shape;
    }
    return w;
}

void validate_weights(const NetSpec& spec, const Weights& w) {
    if (w.layers.size() != spec.layers.size()) {
        throw ShapeError("weights have " + std::to_string(w.layers.size()) + " layers, spec has " +
                         std::to_string(spec.layers.size()));
    }
    std::vector<int> shape = spec.latent_shape;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        const LayerWeights& lw = w.layers[l];
        const std::vector<int> out_shape = layer_output_shape(ls, shape, static_cast<int>(l));
        const std::string where = "layer " + std::to_string(l);
        if (ls.kind == LayerKind::fully_connected) {
            const int out_size = static_cast<int>(shape_size(ls.out_shape));
            if (lw.weight.shape != std::vector<int>{out_size, ls.in_dim}) {
                throw ShapeError(where + ": weight shape " + shape_string(lw.weight.shape) +
                                 " does not match spec");
            }
            if (static_cast<int>(lw.bias.size()) != out_size) {
                throw ShapeError(where + ": bias length mismatch");
            }
        } else {
            if (lw.weight.shape != kernel_tensor_shape(ls)) {
                throw ShapeError(where + ": kernel shape " + shape_string(lw.weight.shape) +
                                 " does not match spec");
            }
            if (static_cast<int>(lw.bias.size()) != ls.out_channels) {
                throw ShapeError(where + ": bias length mismatch");
            }
        }
        if (ls.normalize) {
            const std::size_t c = static_cast<std::size_t>(norm_channel_count(out_shape));
            if (lw.gain.size() != c || lw.shift.size() != c) {
                throw ShapeError(where + ": gain/shift length mismatch");
            }
        }
        if (!lw.weight.all_finite()) throw NumericError(where + ": non-finite weight");
        shape = out_shape;
    }
}

namespace {

Tensor fc_forward(const Tensor& z, const LayerWeights& lw, const LayerSpec& ls) {
    const int out_size = lw.weight.shape[0];
    const int in_size = lw.weight.shape[1];
    Tensor out(ls.out_shape);
    for (int o = 0; o < out_size; ++o) {
        const double* row = &lw.weight.data[static_cast<std::size_t>(o) * in_size];
        double s = lw.bias[o];
        for (int i = 0; i < in_size; ++i) s += row[i] * z[i];
        out[o] = s;
    }
    return out;
}

}  // namespace

Tensor forward(const Tensor& z, const Weights& w, const NetSpec& spec, ForwardCache* cache) {
    if (z.shape != spec.latent_shape) {
        throw ShapeError("forward: latent shape " + shape_string(z.shape) +
                         " does not match spec latent shape " + shape_string(spec.latent_shape));
    }
    validate_weights(spec, w);
    if (cache) {
        cache->input = z;
        cache->layers.clear();
        cache->layers.resize(spec.layers.size());
    }
    Tensor cur = z;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        const LayerWeights& lw = w.layers[l];
        Tensor lin = ls.kind == LayerKind::fully_connected
                         ? fc_forward(cur, lw, ls)
                         : deconvolve(cur, lw.weight, lw.bias, ls.up_factor);
        Tensor pre;
        ChannelNormStats stats;
        if (ls.normalize) {
            auto normed = normalize_channels(std::span<const Tensor>(&lin, 1), lw.gain, lw.shift,
                                             1e-8, &stats);
            pre = std::move(normed[0]);
        } else {
            pre = lin;
        }
        Tensor post = activate(pre, ls.activation, ls.leak);
        if (cache) {
            ForwardCache::LayerTrace& tr = cache->layers[l];
            tr.lin = std::move(lin);
            tr.pre = pre;
            tr.post = post;
            tr.norm = std::move(stats);
        }
        cur = std::move(post);
    }
    return cur;
}

namespace {

void validate_cache(const NetSpec& spec, const Weights& w, const ForwardCache& cache) {
    if (cache.layers.size() != spec.layers.size()) {
        throw ShapeError("stale forward cache: layer count mismatch");
    }
    if (cache.input.shape != spec.latent_shape) {
        throw ShapeError("stale forward cache: input shape " + shape_string(cache.input.shape) +
                         " vs spec latent " + shape_string(spec.latent_shape));
    }
    std::vector<int> shape = cache.input.shape;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        shape = layer_output_shape(spec.layers[l], shape, static_cast<int>(l));
        if (cache.layers[l].post.shape != shape || cache.layers[l].pre.shape != shape) {
            throw ShapeError("stale forward cache: layer " + std::to_string(l) +
                             " trace shape drifted");
        }
    }
    validate_weights(spec, w);
}

// Chain-rule descent shared by the data and weight back-propagations: walks
// the cached layers top signal down to the latent input, pulling the output
// gradient through activation, normalization, and the linear map. When
// `grads` is non-null, parameter gradients are accumulated along the way.
Tensor backpropagate(const NetSpec& spec, const Weights& w, const ForwardCache& cache,
                     const Tensor& d_output, Weights* grads) {
    validate_cache(spec, w, cache);
    if (d_output.shape != cache.layers.back().post.shape) {
        throw ShapeError("backward: output gradient shape " + shape_string(d_output.shape) +
                         " does not match network output " +
                         shape_string(cache.layers.back().post.shape));
    }
    Tensor d = d_output;
    for (int l = static_cast<int>(spec.layers.size()) - 1; l >= 0; --l) {
        const LayerSpec& ls = spec.layers[l];
        const LayerWeights& lw = w.layers[l];
        const ForwardCache::LayerTrace& tr = cache.layers[l];

        d = activate_backward(tr.pre, d, ls.activation, ls.leak);

        if (ls.normalize) {
            std::vector<double> d_gain, d_shift;
            auto d_lin = normalize_channels_backward(
                std::span<const Tensor>(&tr.lin, 1), std::span<const Tensor>(&d, 1), lw.gain,
                tr.norm, grads ? &d_gain : nullptr, grads ? &d_shift : nullptr);
            d = std::move(d_lin[0]);
            if (grads) {
                LayerWeights& g = grads->layers[l];
                for (std::size_t i = 0; i < d_gain.size(); ++i) g.gain[i] += d_gain[i];
                for (std::size_t i = 0; i < d_shift.size(); ++i) g.shift[i] += d_shift[i];
            }
        }

        const Tensor& layer_in = l == 0 ? cache.input : cache.layers[l - 1].post;
        if (ls.kind == LayerKind::fully_connected) {
            const int out_size = lw.weight.shape[0];
            const int in_size = lw.weight.shape[1];
            if (grads) {
                LayerWeights& g = grads->layers[l];
                for (int o = 0; o < out_size; ++o) {
                    const double dv = d[o];
                    g.bias[o] += dv;
                    if (dv == 0.0) continue;
                    double* grow = &g.weight.data[static_cast<std::size_t>(o) * in_size];
                    for (int i = 0; i < in_size; ++i) grow[i] += dv * layer_in[i];
                }
            }
            Tensor d_in(layer_in.shape);
            for (int o = 0; o < out_size; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                const double* row = &lw.weight.data[static_cast<std::size_t>(o) * in_size];
                for (int i = 0; i < in_size; ++i) d_in[i] += dv * row[i];
            }
            d = std::move(d_in);
        } else {
            if (grads) {
                LayerWeights& g = grads->layers[l];
                deconvolve_backward_params(d, layer_in, lw.weight, ls.up_factor, g.weight, g.bias);
            }
            d = deconvolve_backward_input(d, lw.weight, ls.up_factor, layer_in.shape);
        }
    }
    return d;
}

}  // namespace

Tensor backward_data(const NetSpec& spec, const Weights& w, const ForwardCache& cache,
                     const Tensor& d_output) {
    return backpropagate(spec, w, cache, d_output, nullptr);
}

Weights backward_weights(const NetSpec& spec, const Weights& w, const ForwardCache& cache,
                         const Tensor& d_output, Tensor* d_input) {
    Weights grads = zeros_like(w);
    Tensor dz = backpropagate(spec, w, cache, d_output, &grads);
    if (d_input) *d_input = std::move(dz);
    return grads;
}

Tensor expand_synthesize(const Weights& w, const NetSpec& spec, const Tensor& z_big) {
    if (!spec.fully_convolutional()) {
        throw ShapeError("expand_synthesize: network contains a fully connected layer");
    }
    if (z_big.rank() != static_cast<int>(spec.latent_shape.size())) {
        throw ShapeError("expand_synthesize: latent rank " + std::to_string(z_big.rank()) +
                         " does not match spec latent " + shape_string(spec.latent_shape));
    }
    for (std::size_t a = 1; a < spec.latent_shape.size(); ++a) {
        if (z_big.shape[a] < spec.latent_shape[a]) {
            throw ShapeError("expand_synthesize: latent extent below training extent on axis " +
                             std::to_string(a));
        }
    }
    NetSpec expanded = spec;
    expanded.latent_shape = z_big.shape;
    expanded.output_shape.clear();
    validate_netspec(expanded);
    return forward(z_big, w, expanded);
}

LocalLinearMap local_linear_map(const Tensor& z, const Weights& w, const NetSpec& spec) {
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (spec.layers[l].activation == Activation::tanh) {
            throw ShapeError("local_linear_map: layer " + std::to_string(l) +
                             " uses tanh, which is not piecewise linear");
        }
        if (spec.layers[l].normalize) {
            throw ShapeError("local_linear_map: layer " + std::to_string(l) +
                             " normalizes, which is not piecewise linear");
        }
    }
    ForwardCache cache;
    const Tensor y = forward(z, w, spec, &cache);
    const int out_dim = static_cast<int>(y.size());
    const int in_dim = static_cast<int>(z.size());

    LocalLinearMap map;
    map.jacobian = Matrix(out_dim, in_dim);
    map.offset.assign(out_dim, 0.0);

    Tensor probe(y.shape);
    for (int j = 0; j < out_dim; ++j) {
        probe.fill(0.0);
        probe[j] = 1.0;
        const Tensor row = backward_data(spec, w, cache, probe);
        for (int i = 0; i < in_dim; ++i) map.jacobian.at(j, i) = row[i];
    }
    for (int j = 0; j < out_dim; ++j) {
        double s = y[j];
        for (int i = 0; i < in_dim; ++i) s -= map.jacobian.at(j, i) * z[i];
        map.offset[j] = s;
    }
    return map;
}

NetSpec make_preset(const std::string& name, int latent_dim) {
    NetSpec spec;
    if (name == "texture") {
        spec.latent_shape = {1, 7, 7};
        spec.layers = {
            LayerSpec::deconv2d(1, 512, 5, 5, 2, Activation::relu),
            LayerSpec::deconv2d(512, 256, 5, 5, 2, Activation::relu),
            LayerSpec::deconv2d(256, 128, 5, 5, 2, Activation::relu),
            LayerSpec::deconv2d(128, 64, 5, 5, 2, Activation::relu),
            LayerSpec::deconv2d(64, 3, 5, 5, 2, Activation::tanh),
        };
    } else if (name == "sound") {
        spec.latent_shape = {1, 6};
        spec.layers = {
            LayerSpec::deconv1d(1, 256, 25, 10, Activation::relu),
            LayerSpec::deconv1d(256, 128, 25, 10, Activation::relu),
            LayerSpec::deconv1d(128, 64, 25, 10, Activation::relu),
            LayerSpec::deconv1d(64, 1, 25, 10, Activation::tanh),
        };
    } else if (name == "object-64") {
        const int d = latent_dim > 0 ? latent_dim : 100;
        spec.latent_shape = {d};
        spec.layers = {
            LayerSpec::fc(d, {512, 4, 4}, Activation::leaky_relu),
            LayerSpec::deconv2d(512, 256, 5, 5, 2, Activation::leaky_relu),
            LayerSpec::deconv2d(256, 128, 5, 5, 2, Activation::leaky_relu),
            LayerSpec::deconv2d(128, 64, 5, 5, 2, Activation::leaky_relu),
            LayerSpec::deconv2d(64, 3, 5, 5, 2, Activation::tanh),
        };
    } else {
        throw FormatError("unknown preset '" + name + "'");
    }
    validate_netspec(spec);
    return spec;
}

namespace {

std::string shape_key(const std::vector<int>& s) { return shape_string(s); }

std::string fetch(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("missing key '" + key + "'");
    return it->second;
}

int fetch_int(const std::map<std::string, std::string>& kv, const std::string& key) {
    try {
        return std::stoi(fetch(kv, key));
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception&) {
        throw FormatError("bad integer for key '" + key + "'");
    }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> serialize_netspec(const NetSpec& spec) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("net.latent", shape_key(spec.latent_shape));
    kv.emplace_back("net.output", shape_key(spec.output_shape));
    kv.emplace_back("net.layers", std::to_string(spec.layers.size()));
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const LayerSpec& ls = spec.layers[l];
        const std::string p = "net.layer." + std::to_string(l) + ".";
        if (ls.kind == LayerKind::fully_connected) {
            kv.emplace_back(p + "kind", "fc");
            kv.emplace_back(p + "in_dim", std::to_string(ls.in_dim));
            kv.emplace_back(p + "out_shape", shape_key(ls.out_shape));
        } else {
            kv.emplace_back(p + "kind", "deconv");
            kv.emplace_back(p + "in_channels", std::to_string(ls.in_channels));
            kv.emplace_back(p + "out_channels", std::to_string(ls.out_channels));
            kv.emplace_back(p + "kernel", shape_key(ls.kernel));
            kv.emplace_back(p + "up", std::to_string(ls.up_factor));
        }
        kv.emplace_back(p + "activation", activation_name(ls.activation));
        if (ls.activation == Activation::leaky_relu) {
            std::ostringstream os;
            os << ls.leak;
            kv.emplace_back(p + "leak", os.str());
        }
        kv.emplace_back(p + "normalize", ls.normalize ? "1" : "0");
    }
    return kv;
}

NetSpec parse_netspec(const std::map<std::string, std::string>& kv) {
    NetSpec spec;
    spec.latent_shape = parse_shape(fetch(kv, "net.latent"));
    const int n_layers = fetch_int(kv, "net.layers");
    if (n_layers < 1) throw FormatError("net.layers must be >= 1");
    for (int l = 0; l < n_layers; ++l) {
        const std::string p = "net.layer." + std::to_string(l) + ".";
        LayerSpec ls;
        const std::string kind = fetch(kv, p + "kind");
        if (kind == "fc") {
            ls.kind = LayerKind::fully_connected;
            ls.in_dim = fetch_int(kv, p + "in_dim");
            ls.out_shape = parse_shape(fetch(kv, p + "out_shape"));
        } else if (kind == "deconv") {
            ls.kind = LayerKind::deconv;
            ls.in_channels = fetch_int(kv, p + "in_channels");
            ls.out_channels = fetch_int(kv, p + "out_channels");
            ls.kernel = parse_shape(fetch(kv, p + "kernel"));
            ls.up_factor = fetch_int(kv, p + "up");
        } else {
            throw FormatError("unknown layer kind '" + kind + "'");
        }
        ls.activation = activation_from_name(fetch(kv, p + "activation"));
        if (auto it = kv.find(p + "leak"); it != kv.end()) ls.leak = std::stod(it->second);
        if (auto it = kv.find(p + "normalize"); it != kv.end()) ls.normalize = it->second == "1";
        spec.layers.push_back(std::move(ls));
    }
    validate_netspec(spec);
    if (auto it = kv.find("net.output"); it != kv.end()) {
        if (parse_shape(it->second) != spec.output_shape) {
            throw FormatError("net.output does not match composed layer shapes");
        }
    }
    return spec;
}

}  // namespace abp
