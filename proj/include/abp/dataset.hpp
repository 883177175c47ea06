#ifndef ABP_DATASET_HPP
#define ABP_DATASET_HPP

#include <string>
#include <vector>

#include "abp/tensor.hpp"

namespace abp {

// Text manifest describing a training or testing set:
//   kind=image|sound
//   normalize=pm1
//   length=55125              # sound only; declared sample count
//   sample=rel/path [mask=rel/path]
// Paths are resolved against the manifest's directory.
struct DatasetManifest {
    std::string kind = "image";
    std::string normalize = "pm1";
    int sound_length = 0;  // 0 = take the first clip's length

    struct Sample {
        std::string path;
        std::string mask_path;  // empty when absent
    };
    std::vector<Sample> samples;

    static DatasetManifest load(const std::string& path);
};

struct Dataset {
    std::vector<Tensor> signals;
    std::vector<Tensor> masks;  // empty, or one per sample
    std::vector<int> shape;
    int sample_rate = 11025;
    bool is_sound = false;
};

// Loads every referenced file, checks that all samples share one shape, and
// pads or truncates sound clips to the declared length.
Dataset load_dataset(const DatasetManifest& manifest);

}  // namespace abp

#endif
