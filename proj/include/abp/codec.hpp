#ifndef ABP_CODEC_HPP
#define ABP_CODEC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "abp/tensor.hpp"

namespace abp {

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// Binary pixmap (P6) or graymap (P5), 8-bit only. Pixels map to [-1, 1] by
// v/127.5 - 1; color images come back channel-planar [3, H, W], gray [1, H, W].
Tensor decode_image(std::span<const std::uint8_t> bytes);

// Inverse of decode_image: rounds half away from zero and clamps to [0, 255].
// Accepts [1, H, W] or [3, H, W].
std::vector<std::uint8_t> encode_image(const Tensor& image);

Tensor load_image(const std::string& path);
void save_image(const std::string& path, const Tensor& image);

// Occlusion masks ride in binary graymaps: 0 = occluded, 255 = observed.
Tensor decode_mask(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask(const Tensor& mask);
Tensor load_mask(const std::string& path);
void save_mask(const std::string& path, const Tensor& mask);

// 16-bit PCM mono WAV. Samples map to [-1, 1) by s/32768; the decoded tensor
// has shape [1, N].
Tensor decode_wav(std::span<const std::uint8_t> bytes, int* sample_rate = nullptr);
std::vector<std::uint8_t> encode_wav(const Tensor& sound, int sample_rate = 11025);

Tensor load_wav(const std::string& path, int* sample_rate = nullptr);
void save_wav(const std::string& path, const Tensor& sound, int sample_rate = 11025);

}  // namespace abp

#endif
