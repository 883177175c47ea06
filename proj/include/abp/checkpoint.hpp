#ifndef ABP_CHECKPOINT_HPP
#define ABP_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "abp/generator.hpp"
#include "abp/inference.hpp"
#include "abp/learning.hpp"
#include "abp/observation.hpp"

namespace abp {

// Single-file training snapshot: "ABPC" magic, a 32-bit format version, a
// canonical-text manifest (net spec, hyperparameters, observation-model
// descriptor, seed, iteration count, and a table of named tensors), then a
// 64-byte-aligned payload of raw little-endian doubles.
struct Checkpoint {
    NetSpec net;
    Hyper hyper;
    ObservationKind obs_kind = ObservationKind::full;
    std::uint64_t seed = 0;
    int iteration = 0;

    struct NamedTensor {
        std::string name;
        Tensor value;
    };
    std::vector<NamedTensor> tensors;

    const Tensor* find(const std::string& name) const;
    Tensor& require(const std::string& name);
    const Tensor& require(const std::string& name) const;
    void put(const std::string& name, Tensor value);
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Weight/latent tensors use stable names inside the container:
// "<prefix>.<layer>.weight|bias|gain|shift" and "latent.<index>".
void pack_weights(Checkpoint& ckpt, const NetSpec& spec, const Weights& w,
                  const std::string& prefix);
Weights unpack_weights(const Checkpoint& ckpt, const NetSpec& spec, const std::string& prefix);
void pack_latents(Checkpoint& ckpt, std::span<const LatentState> latents);
std::vector<LatentState> unpack_latents(const Checkpoint& ckpt, const NetSpec& spec);

const char* observation_kind_name(ObservationKind k);
ObservationKind observation_kind_from_name(const std::string& name);

}  // namespace abp

#endif
