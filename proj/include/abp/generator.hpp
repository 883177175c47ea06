#ifndef ABP_GENERATOR_HPP
#define ABP_GENERATOR_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abp/linalg.hpp"
#include "abp/rng.hpp"
#include "abp/tensor.hpp"

namespace abp {

enum class LayerKind { fully_connected, deconv };

// One layer of the top-down network: a linear map (dense or transposed
// convolution), optional per-channel normalization, then an elementwise
// nonlinearity.
struct LayerSpec {
    LayerKind kind = LayerKind::deconv;

    // fully_connected
    int in_dim = 0;
    std::vector<int> out_shape;

    // deconv
    int in_channels = 0;
    int out_channels = 0;
    std::vector<int> kernel;  // [k] or [kh, kw]
    int up_factor = 1;

    Activation activation = Activation::identity;
    double leak = 0.2;
    bool normalize = false;

    static LayerSpec fc(int in_dim, std::vector<int> out_shape,
                        Activation act = Activation::identity);
    static LayerSpec deconv2d(int in_ch, int out_ch, int kh, int kw, int up, Activation act,
                              bool normalize = false);
    static LayerSpec deconv1d(int in_ch, int out_ch, int k, int up, Activation act,
                              bool normalize = false);
};

// Layered description of the network mapping latent factors to a signal.
struct NetSpec {
    std::vector<LayerSpec> layers;
    std::vector<int> latent_shape;
    std::vector<int> output_shape;  // derived by validate()

    int latent_dim() const { return static_cast<int>(shape_size(latent_shape)); }
    int output_dim() const { return static_cast<int>(shape_size(output_shape)); }
    bool fully_convolutional() const;
};

// Computes the output shape of a layer applied to an input shape, checking
// compatibility.
std::vector<int> layer_output_shape(const LayerSpec& layer, const std::vector<int>& in_shape,
                                    int layer_index);

// Fills in output_shape by composing the layers from latent_shape; throws on
// any incompatibility, naming the offending layer.
void validate_netspec(NetSpec& spec);

// Parameters of one layer. `weight` is the dense matrix [out, in] for a
// fully connected layer or the kernel bank tensor for a deconv layer.
// gain/shift are present only when the layer normalizes.
struct LayerWeights {
    Tensor weight;
    std::vector<double> bias;
    std::vector<double> gain;
    std::vector<double> shift;
};

struct Weights {
    std::vector<LayerWeights> layers;
};

Weights zeros_like(const Weights& w);
void weights_axpy(double a, const Weights& x, Weights& y);
void weights_scale(Weights& w, double c);
double weights_squared_norm(const Weights& w);
bool weights_all_finite(const Weights& w);

// Gaussian init: kernel/matrix entries i.i.d. N(0, std^2), zero biases,
// unit gain / zero shift for normalizing layers.
Weights init_weights(const NetSpec& spec, Rng& rng, double std_dev = 0.02);

// Checks that weight shapes match the spec exactly.
void validate_weights(const NetSpec& spec, const Weights& w);

// Intermediate activations of one forward pass, consumed by the backward
// passes. lin is the output of the linear map, pre the input to the
// activation (equal to lin unless the layer normalizes), post the layer
// output.
struct ForwardCache {
    Tensor input;
    struct LayerTrace {
        Tensor lin;
        Tensor pre;
        Tensor post;
        ChannelNormStats norm;
    };
    std::vector<LayerTrace> layers;
};

// Evaluates the network on one latent tensor. When cache is non-null the
// intermediates required by the backward passes are recorded.
Tensor forward(const Tensor& z, const Weights& w, const NetSpec& spec,
               ForwardCache* cache = nullptr);

// Pulls an output-space gradient back to the latent input via the chain
// rule through the cached activations.
Tensor backward_data(const NetSpec& spec, const Weights& w, const ForwardCache& cache,
                     const Tensor& d_output);

// Gradients of <d_output, f(Z;W)> with respect to every parameter tensor.
// Runs the same chain-rule descent as backward_data; the latent gradient is
// returned through d_input when requested.
Weights backward_weights(const NetSpec& spec, const Weights& w, const ForwardCache& cache,
                         const Tensor& d_output, Tensor* d_input = nullptr);

// Evaluates a fully convolutional network on an enlarged latent map. With
// z_big equal to the training latent shape this is exactly forward().
Tensor expand_synthesize(const Weights& w, const NetSpec& spec, const Tensor& z_big);

// Jacobian and offset of the linear piece containing z, for networks whose
// activations are all piecewise linear. f(z') = jacobian*z' + offset exactly
// while the activation pattern is unchanged.
struct LocalLinearMap {
    Matrix jacobian;             // output_dim x latent_dim
    std::vector<double> offset;  // output_dim
};
LocalLinearMap local_linear_map(const Tensor& z, const Weights& w, const NetSpec& spec);

// Named architectures: "texture" (7x7 latent map to 224x224x3),
// "sound" (length-6 latent to 60000 samples), "object-64" (dense layer from
// latent_dim to a 4x4x512 stack, then deconv to 64x64x3).
NetSpec make_preset(const std::string& name, int latent_dim = 0);

// Canonical flat key=value serialization of a NetSpec, shared by configs and
// checkpoints. Keys are prefixed "net.".
std::vector<std::pair<std::string, std::string>> serialize_netspec(const NetSpec& spec);
NetSpec parse_netspec(const std::map<std::string, std::string>& kv);

}  // namespace abp

#endif
