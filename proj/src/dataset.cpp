#include "abp/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "abp/codec.hpp"
#include "abp/errors.hpp"

namespace fs = std::filesystem;

namespace abp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path + "'");
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest mf;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "kind") {
            if (value != "image" && value != "sound") {
                throw FormatError(path + ": kind must be image or sound");
            }
            mf.kind = value;
        } else if (key == "normalize") {
            if (value != "pm1") throw FormatError(path + ": unsupported normalization rule");
            mf.normalize = value;
        } else if (key == "length") {
            mf.sound_length = std::stoi(value);
        } else if (key == "sample") {
            Sample s;
            std::istringstream parts(value);
            std::string tok;
            parts >> tok;
            s.path = (base / tok).string();
            while (parts >> tok) {
                if (tok.rfind("mask=", 0) == 0) {
                    s.mask_path = (base / tok.substr(5)).string();
                } else {
                    throw FormatError(path + ":" + std::to_string(line_no) +
                                      ": unknown sample attribute '" + tok + "'");
                }
            }
            mf.samples.push_back(std::move(s));
        } else {
            throw FormatError(path + ": unknown manifest key '" + key + "'");
        }
    }
    if (mf.samples.empty()) throw DataError(path + ": manifest lists no samples");
    return mf;
}

Dataset load_dataset(const DatasetManifest& manifest) {
    Dataset ds;
    ds.is_sound = manifest.kind == "sound";
    const bool any_mask = std::any_of(manifest.samples.begin(), manifest.samples.end(),
                                      [](const auto& s) { return !s.mask_path.empty(); });

    for (const DatasetManifest::Sample& rec : manifest.samples) {
        if (!fs::exists(rec.path)) throw DataError("sample file missing: '" + rec.path + "'");
        if (!rec.mask_path.empty() && !fs::exists(rec.mask_path)) {
            throw DataError("mask file missing: '" + rec.mask_path + "'");
        }
        Tensor signal;
        if (ds.is_sound) {
            int rate = 0;
            signal = load_wav(rec.path, &rate);
            if (ds.signals.empty() && rate > 0) ds.sample_rate = rate;
            // The declared length wins; pad with zeros or truncate.
            int want = manifest.sound_length;
            if (want == 0) want = ds.signals.empty() ? signal.shape[1] : ds.shape[1];
            if (signal.shape[1] != want) {
                Tensor fixed({1, want});
                const int keep = std::min(want, signal.shape[1]);
                for (int i = 0; i < keep; ++i) fixed[i] = signal[i];
                signal = std::move(fixed);
            }
        } else {
            signal = load_image(rec.path);
        }
        if (ds.signals.empty()) {
            ds.shape = signal.shape;
        } else if (signal.shape != ds.shape) {
            throw DataError("sample '" + rec.path + "' has shape " +
                            shape_string(signal.shape) + ", expected " + shape_string(ds.shape));
        }
        ds.signals.push_back(std::move(signal));

        if (any_mask) {
            if (rec.mask_path.empty()) {
                throw DataError("sample '" + rec.path +
                                "' lacks a mask while other samples have one");
            }
            Tensor mask = load_mask(rec.mask_path);
            // Stored masks are single-plane; broadcast across channels.
            if (mask.shape != ds.shape) {
                if (mask.rank() == 3 && ds.shape.size() == 3 && mask.shape[0] == 1 &&
                    mask.shape[1] == ds.shape[1] && mask.shape[2] == ds.shape[2]) {
                    Tensor wide(ds.shape);
                    const std::int64_t plane = mask.size();
                    for (int c = 0; c < ds.shape[0]; ++c) {
                        for (std::int64_t i = 0; i < plane; ++i) {
                            wide[c * plane + i] = mask[i];
                        }
                    }
                    mask = std::move(wide);
                } else {
                    throw DataError("mask '" + rec.mask_path + "' has shape " +
                                    shape_string(mask.shape) + ", sample shape is " +
                                    shape_string(ds.shape));
                }
            }
            ds.masks.push_back(std::move(mask));
        }
    }
    return ds;
}

}  // namespace abp
