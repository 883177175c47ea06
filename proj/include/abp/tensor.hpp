#ifndef ABP_TENSOR_HPP
#define ABP_TENSOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace abp {

// Dense row-major tensor of 64-bit reals. Rank conventions used throughout:
//   rank 1: flat vector (latent factors, flattened signals)
//   rank 2: [channels, length]           one-dimensional signals
//   rank 3: [channels, height, width]    images, channel-planar
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor from(std::vector<int> s, std::vector<double> values);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    double& at2(int a, int b) { return data[static_cast<std::size_t>(a) * shape[1] + b]; }
    double at2(int a, int b) const { return data[static_cast<std::size_t>(a) * shape[1] + b]; }
    double& at3(int a, int b, int c) {
        return data[(static_cast<std::size_t>(a) * shape[1] + b) * shape[2] + c];
    }
    double at3(int a, int b, int c) const {
        return data[(static_cast<std::size_t>(a) * shape[1] + b) * shape[2] + c];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(double v);
};

std::int64_t shape_size(std::span<const int> shape);
std::string shape_string(std::span<const int> shape);
std::vector<int> parse_shape(const std::string& text);  // "3x64x64"

// Elementwise arithmetic. Shapes must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scaled(const Tensor& a, double c);
void axpy(double a, const Tensor& x, Tensor& y);  // y += a*x
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& a);

// Bank of transposed-convolution kernels. kernels has 4 axes for images
// [out_channels, in_channels, kh, kw] and 3 axes for 1-D signals
// [out_channels, in_channels, k]. bias is per output channel. up_factor is
// the stride between successive kernel stamps in the output.
struct KernelBank {
    Tensor kernels;
    std::vector<double> bias;
    int up_factor = 1;

    int out_channels() const { return kernels.shape[0]; }
    int in_channels() const { return kernels.shape[1]; }
};

// Transposed convolution with up-sampling. Every input coefficient stamps a
// copy of its kernel into the output, copies spaced up_factor apart, overlaps
// summed. Output spatial extent is exactly input extent * up_factor: the
// stamp for input position x is centred so kernel tap j lands at
// x*up_factor + j - floor(k/2), and taps falling outside are cropped.
Tensor deconvolve(const Tensor& input, const Tensor& kernels, std::span<const double> bias,
                  int up_factor);
inline Tensor deconvolve(const Tensor& input, const KernelBank& bank) {
    return deconvolve(input, bank.kernels, bank.bias, bank.up_factor);
}

// Gradient of deconvolve w.r.t. its input, given the gradient at the output.
Tensor deconvolve_backward_input(const Tensor& d_output, const Tensor& kernels, int up_factor,
                                 std::span<const int> input_shape);
inline Tensor deconvolve_backward_input(const Tensor& d_output, const KernelBank& bank,
                                        std::span<const int> input_shape) {
    return deconvolve_backward_input(d_output, bank.kernels, bank.up_factor, input_shape);
}

// Gradient of deconvolve w.r.t. kernels and bias; accumulates into the
// provided buffers.
void deconvolve_backward_params(const Tensor& d_output, const Tensor& input,
                                const Tensor& kernels, int up_factor, Tensor& d_kernels,
                                std::vector<double>& d_bias);
inline void deconvolve_backward_params(const Tensor& d_output, const Tensor& input,
                                       const KernelBank& bank, Tensor& d_kernels,
                                       std::vector<double>& d_bias) {
    deconvolve_backward_params(d_output, input, bank.kernels, bank.up_factor, d_kernels, d_bias);
}

enum class Activation { identity, relu, leaky_relu, tanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Elementwise nonlinearity. alpha is the leak for leaky_relu and must lie in
// (0, 1). relu'(0) is taken as 0 (and leaky_relu'(0) as alpha).
Tensor activate(const Tensor& x, Activation kind, double alpha = 0.2);

// d_pre = d_post .* f'(pre).
Tensor activate_backward(const Tensor& pre, const Tensor& d_post, Activation kind,
                         double alpha = 0.2);

// Per-channel statistics of channel-normalization, kept for the backward pass.
struct ChannelNormStats {
    std::vector<double> mean;
    std::vector<double> var;
    double eps = 0.0;
};

// Normalizes each channel of a batch to zero mean and unit variance across
// the batch and spatial axes, then applies gain and shift. All tensors in the
// batch must share one shape with the channel as the leading axis (rank-1
// tensors are treated as one channel per entry). Population variance; eps
// guards constant channels.
std::vector<Tensor> normalize_channels(std::span<const Tensor> batch,
                                       std::span<const double> gain,
                                       std::span<const double> shift, double eps,
                                       ChannelNormStats* stats = nullptr);

// Backward pass of normalize_channels. Gradients flow through the batch mean
// and variance. d_gain/d_shift may be null when parameter gradients are not
// wanted.
std::vector<Tensor> normalize_channels_backward(std::span<const Tensor> batch,
                                                std::span<const Tensor> d_out,
                                                std::span<const double> gain,
                                                const ChannelNormStats& stats,
                                                std::vector<double>* d_gain,
                                                std::vector<double>* d_shift);

}  // namespace abp

#endif
