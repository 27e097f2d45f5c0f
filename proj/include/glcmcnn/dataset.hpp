#ifndef GLCMCNN_DATASET_HPP
#define GLCMCNN_DATASET_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "glcm.hpp"
#include "io.hpp"
#include "net.hpp"
#include "rng.hpp"

namespace glcmcnn {

struct ManifestEntry {
    std::string id;
    std::string image_path; // relative to the manifest's directory
    std::string mask_path;
    int label = 0;
    int fold = -1;
};

inline void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "id,image_path,mask_path,label,fold\n";
    for (const auto& e : entries)
        out << e.id << "," << e.image_path << "," << e.mask_path << "," << e.label << ","
            << e.fold << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty manifest");
    if (line != "id,image_path,mask_path,label,fold")
        throw IoError(path + ": unexpected manifest header: " + line);
    std::vector<ManifestEntry> entries;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        ManifestEntry e;
        std::string label, fold;
        if (!std::getline(ss, e.id, ',') || !std::getline(ss, e.image_path, ',') ||
            !std::getline(ss, e.mask_path, ',') || !std::getline(ss, label, ',') ||
            !std::getline(ss, fold, ','))
            throw IoError(path + ": malformed manifest row: " + line);
        e.label = std::stoi(label);
        e.fold = std::stoi(fold);
        entries.push_back(std::move(e));
    }
    return entries;
}

// Per-class round-robin assignment after a seeded shuffle; fold class
// proportions match global proportions within one sample per class.
inline std::vector<int> stratified_kfold(const std::vector<int>& labels, int k,
                                         std::uint64_t seed) {
    if (k < 2) throw ValidationError("k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& [cls, idx] : by_class)
        if (static_cast<int>(idx.size()) < k)
            throw ValidationError("class " + std::to_string(cls) + " has " +
                                  std::to_string(idx.size()) + " members, fewer than k=" +
                                  std::to_string(k));
    std::vector<int> folds(labels.size(), -1);
    Rng rng(seed);
    for (auto& [cls, idx] : by_class) {
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            folds[idx[i]] = static_cast<int>(i % k);
    }
    return folds;
}

// How a (image, mask) pair becomes the two network inputs.
struct PipelineConfig {
    QuantizationSpec quant;
    Regime regime = Regime::TwoD;
    bool symmetric = true;
    int displacement = 1;
};

// Image input is rescaled to [0,1] over the quantization range; the GLCM
// input is the probability GLCM image scaled by L^2.
template <typename S>
Sample<S> make_sample(const GridImage& image, const RoiMask& mask, int label,
                      const PipelineConfig& pipe) {
    validate_pair(image, mask);
    if (image.dims.z != 1)
        throw ValidationError("network samples require 2D images (z == 1)");
    Sample<S> s;
    s.label = label;
    s.image = Tensor<S>({image.channels, image.dims.y, image.dims.x});
    double lo = pipe.quant.range_lo, hi = pipe.quant.range_hi;
    for (std::size_t i = 0; i < image.values.size(); ++i)
        s.image.values[i] = static_cast<S>((image.values[i] - lo) / (hi - lo));

    GlcmImage g;
    if (image.channels == 1) {
        g = glcm_image_2d(image, mask, pipe.quant, pipe.symmetric, Normalization::Probability,
                          pipe.displacement);
    } else {
        g = glcm_image_multichannel(image, mask, pipe.quant, pipe.regime, pipe.symmetric,
                                    Normalization::Probability, pipe.displacement);
    }
    double scale = glcm_input_scale(g.levels);
    s.glcm = Tensor<S>({g.channels, g.levels, g.levels});
    for (std::size_t i = 0; i < g.values.size(); ++i)
        s.glcm.values[i] = static_cast<S>(g.values[i] * scale);
    return s;
}

template <typename S>
std::vector<Sample<S>> load_samples(const std::string& manifest_path,
                                    const std::vector<ManifestEntry>& entries,
                                    const PipelineConfig& pipe) {
    namespace fs = std::filesystem;
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<Sample<S>> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        GridImage img = load_volume((base / e.image_path).string());
        RoiMask mask = load_mask((base / e.mask_path).string());
        out.push_back(make_sample<S>(img, mask, e.label, pipe));
    }
    return out;
}

} // namespace glcmcnn

#endif // GLCMCNN_DATASET_HPP
