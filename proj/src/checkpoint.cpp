#include "abp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <set>

#include "abp/codec.hpp"
#include "abp/config.hpp"
#include "abp/errors.hpp"

namespace abp {

namespace {

constexpr char kMagic[4] = {'A', 'B', 'P', 'C'};
constexpr std::size_t kAlign = 64;

std::size_t align_up(std::size_t v) { return (v + kAlign - 1) / kAlign * kAlign; }

void push_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void push_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64le(std::span<const std::uint8_t> b, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | b[pos + static_cast<std::size_t>(i)];
    return v;
}

std::uint32_t read_u32le(std::span<const std::uint8_t> b, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | b[pos + static_cast<std::size_t>(i)];
    return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const NamedTensor& nt : tensors) {
        if (nt.name == name) return &nt.value;
    }
    return nullptr;
}

Tensor& Checkpoint::require(const std::string& name) {
    for (NamedTensor& nt : tensors) {
        if (nt.name == name) return nt.value;
    }
    throw FormatError("checkpoint is missing tensor '" + name + "'");
}

const Tensor& Checkpoint::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw FormatError("checkpoint is missing tensor '" + name + "'");
    return *t;
}

void Checkpoint::put(const std::string& name, Tensor value) {
    for (NamedTensor& nt : tensors) {
        if (nt.name == name) {
            nt.value = std::move(value);
            return;
        }
    }
    tensors.push_back({name, std::move(value)});
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::vector<std::pair<std::string, std::string>> kv = serialize_netspec(ckpt.net);
    kv.emplace_back("hyper.iterations", std::to_string(ckpt.hyper.iterations));
    kv.emplace_back("hyper.learning_rate", format_double(ckpt.hyper.learning_rate));
    kv.emplace_back("hyper.momentum", format_double(ckpt.hyper.momentum));
    kv.emplace_back("hyper.batch", std::to_string(ckpt.hyper.batch_size));
    kv.emplace_back("hyper.seed", std::to_string(ckpt.hyper.seed));
    kv.emplace_back("hyper.steps", std::to_string(ckpt.hyper.infer.steps));
    kv.emplace_back("hyper.step_size", format_double(ckpt.hyper.infer.step_size));
    kv.emplace_back("hyper.sigma", format_double(ckpt.hyper.infer.sigma));
    kv.emplace_back("hyper.mode", infer_mode_name(ckpt.hyper.infer.mode));
    kv.emplace_back("obs.kind", observation_kind_name(ckpt.obs_kind));
    kv.emplace_back("run.seed", std::to_string(ckpt.seed));
    kv.emplace_back("run.iteration", std::to_string(ckpt.iteration));
    kv.emplace_back("tensor.count", std::to_string(ckpt.tensors.size()));

    std::set<std::string> seen;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        const Checkpoint::NamedTensor& nt = ckpt.tensors[i];
        if (!seen.insert(nt.name).second) {
            throw FormatError("duplicate tensor name '" + nt.name + "'");
        }
        if (!nt.value.all_finite()) {
            throw NumericError("refusing to save non-finite tensor '" + nt.name + "'");
        }
        const std::string p = "tensor." + std::to_string(i) + ".";
        kv.emplace_back(p + "name", nt.name);
        kv.emplace_back(p + "dtype", "f64");
        kv.emplace_back(p + "shape", shape_string(nt.value.shape));
        kv.emplace_back(p + "offset", std::to_string(offset));
        offset = align_up(offset + static_cast<std::size_t>(nt.value.size()) * 8);
    }

    const std::string manifest = format_key_values(kv);
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    push_u32le(out, kCheckpointVersion);
    push_u64le(out, manifest.size());
    out.insert(out.end(), manifest.begin(), manifest.end());
    out.resize(align_up(out.size()), 0);

    const std::size_t payload_start = out.size();
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        out.resize(align_up(out.size()), 0);
        (void)payload_start;
        for (double v : ckpt.tensors[i].value.data) {
            push_u64le(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(path + ": not a checkpoint");
    }
    const std::uint32_t version = read_u32le(bytes, 4);
    if (version > kCheckpointVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    }
    const std::uint64_t manifest_len = read_u64le(bytes, 8);
    if (manifest_len > bytes.size() - 16) {
        throw FormatError(path + ": corrupt (truncated manifest)");
    }
    const std::string manifest(reinterpret_cast<const char*>(bytes.data() + 16),
                               static_cast<std::size_t>(manifest_len));
    KeyValues kv;
    try {
        kv = parse_key_values(manifest);
    } catch (const FormatError& e) {
        throw FormatError(path + ": corrupt manifest: " + e.what());
    }

    const std::size_t payload_start = align_up(16 + static_cast<std::size_t>(manifest_len));
    if (payload_start > bytes.size()) throw FormatError(path + ": corrupt (missing payload)");
    const std::span<const std::uint8_t> payload(bytes.data() + payload_start,
                                                bytes.size() - payload_start);

    Checkpoint ckpt;
    ckpt.net = parse_netspec(std::map<std::string, std::string>(kv.begin(), kv.end()));
    ckpt.hyper.iterations = kv_get_int(kv, "hyper.iterations", 600);
    ckpt.hyper.learning_rate = kv_get_double(kv, "hyper.learning_rate", 1e-4);
    ckpt.hyper.momentum = kv_get_double(kv, "hyper.momentum", 0.5);
    ckpt.hyper.batch_size = kv_get_int(kv, "hyper.batch", 0);
    ckpt.hyper.seed = kv_get_u64(kv, "hyper.seed", 0);
    ckpt.hyper.infer.steps = kv_get_int(kv, "hyper.steps", 10);
    ckpt.hyper.infer.step_size = kv_get_double(kv, "hyper.step_size", 0.1);
    ckpt.hyper.infer.sigma = kv_get_double(kv, "hyper.sigma", 0.3);
    ckpt.hyper.infer.mode = infer_mode_from_name(kv_get_or(kv, "hyper.mode", "langevin"));
    ckpt.obs_kind = observation_kind_from_name(kv_get_or(kv, "obs.kind", "full"));
    ckpt.seed = kv_get_u64(kv, "run.seed", 0);
    ckpt.iteration = kv_get_int(kv, "run.iteration", 0);

    const int count = kv_get_int(kv, "tensor.count", 0);
    if (count < 0) throw FormatError(path + ": corrupt tensor table");
    std::set<std::string> seen;
    for (int i = 0; i < count; ++i) {
        const std::string p = "tensor." + std::to_string(i) + ".";
        Checkpoint::NamedTensor nt;
        nt.name = kv_get(kv, p + "name");
        if (!seen.insert(nt.name).second) {
            throw FormatError(path + ": duplicate tensor name '" + nt.name + "'");
        }
        if (kv_get(kv, p + "dtype") != "f64") {
            throw FormatError(path + ": unsupported dtype for tensor '" + nt.name + "'");
        }
        const std::vector<int> shape = parse_shape(kv_get(kv, p + "shape"));
        const std::uint64_t offset = kv_get_u64(kv, p + "offset", ~0ULL);
        const std::uint64_t nbytes = static_cast<std::uint64_t>(shape_size(shape)) * 8;
        if (offset % kAlign != 0 || offset + nbytes > payload.size()) {
            throw FormatError(path + ": corrupt (tensor '" + nt.name +
                              "' outside payload bounds)");
        }
        nt.value = Tensor(shape);
        for (std::int64_t j = 0; j < nt.value.size(); ++j) {
            nt.value[j] = std::bit_cast<double>(
                read_u64le(payload, static_cast<std::size_t>(offset) + 8 * static_cast<std::size_t>(j)));
        }
        if (!nt.value.all_finite()) {
            throw FormatError(path + ": corrupt (non-finite value in tensor '" + nt.name + "')");
        }
        ckpt.tensors.push_back(std::move(nt));
    }
    return ckpt;
}

namespace {

Tensor vector_tensor(std::span<const double> v) {
    return Tensor::from({static_cast<int>(v.size())},
                        std::vector<double>(v.begin(), v.end()));
}

}  // namespace

void pack_weights(Checkpoint& ckpt, const NetSpec& spec, const Weights& w,
                  const std::string& prefix) {
    validate_weights(spec, w);
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        const LayerWeights& lw = w.layers[l];
        const std::string p = prefix + "." + std::to_string(l) + ".";
        ckpt.put(p + "weight", lw.weight);
        ckpt.put(p + "bias", vector_tensor(lw.bias));
        if (!lw.gain.empty()) ckpt.put(p + "gain", vector_tensor(lw.gain));
        if (!lw.shift.empty()) ckpt.put(p + "shift", vector_tensor(lw.shift));
    }
}

Weights unpack_weights(const Checkpoint& ckpt, const NetSpec& spec, const std::string& prefix) {
    Weights w;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::string p = prefix + "." + std::to_string(l) + ".";
        LayerWeights lw;
        lw.weight = ckpt.require(p + "weight");
        const Tensor& bias = ckpt.require(p + "bias");
        lw.bias.assign(bias.data.begin(), bias.data.end());
        if (const Tensor* gain = ckpt.find(p + "gain")) {
            lw.gain.assign(gain->data.begin(), gain->data.end());
        }
        if (const Tensor* shift = ckpt.find(p + "shift")) {
            lw.shift.assign(shift->data.begin(), shift->data.end());
        }
        w.layers.push_back(std::move(lw));
    }
    validate_weights(spec, w);
    return w;
}

void pack_latents(Checkpoint& ckpt, std::span<const LatentState> latents) {
    Tensor ages({std::max(1, static_cast<int>(latents.size()))});
    for (std::size_t i = 0; i < latents.size(); ++i) {
        ckpt.put("latent." + std::to_string(i), latents[i].z);
        ages[static_cast<std::int64_t>(i)] = static_cast<double>(latents[i].chain_age);
    }
    ckpt.put("latent_age", std::move(ages));
}

std::vector<LatentState> unpack_latents(const Checkpoint& ckpt, const NetSpec& spec) {
    std::vector<LatentState> out;
    const Tensor* ages = ckpt.find("latent_age");
    for (int i = 0;; ++i) {
        const Tensor* z = ckpt.find("latent." + std::to_string(i));
        if (!z) break;
        if (z->shape != spec.latent_shape) {
            throw FormatError("latent." + std::to_string(i) + " shape " +
                              shape_string(z->shape) + " does not match net latent shape");
        }
        LatentState ls;
        ls.z = *z;
        if (ages && i < ages->size()) ls.chain_age = static_cast<long>((*ages)[i]);
        out.push_back(std::move(ls));
    }
    return out;
}

const char* observation_kind_name(ObservationKind k) {
    switch (k) {
        case ObservationKind::full: return "full";
        case ObservationKind::masked: return "masked";
        case ObservationKind::projected: return "projected";
    }
    return "full";
}

ObservationKind observation_kind_from_name(const std::string& name) {
    if (name == "full") return ObservationKind::full;
    if (name == "masked") return ObservationKind::masked;
    if (name == "projected") return ObservationKind::projected;
    throw FormatError("unknown observation kind '" + name + "'");
}

}  // namespace abp
