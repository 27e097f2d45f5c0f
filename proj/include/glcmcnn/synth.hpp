#ifndef GLCMCNN_SYNTH_HPP
#define GLCMCNN_SYNTH_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace glcmcnn {

// Synthetic 2D dataset whose class signal is second-order texture only.
// Every class paints the ROI with a two-tone pattern using the same two
// intensities and an exact 50/50 tone split, so first-order histograms are
// identical across classes; only the spatial arrangement differs:
//   class 0: pixel checkerboard
//   class 1: width-2 stripes (random horizontal/vertical orientation)
//   class 2: width-2 diagonal stripes
//   class 3: 2x2 block checkerboard
struct SynthSpec {
    int width = 64, height = 64;
    int num_classes = 2;       // up to 4 texture laws
    int samples_per_class = 50;
    int roi_min_voxels = 60;   // target blob sizes
    int roi_max_voxels = 110;
    double tone_lo = 80.0;     // the two pattern intensities
    double tone_hi = 176.0;
    double jitter_sigma = 8.0; // additive noise, identical law for all classes
    double background_lo = 0.0;
    double background_hi = 255.0;
    int k_folds = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (width < 8 || height < 8) throw ValidationError("image too small");
        if (num_classes < 2 || num_classes > 4)
            throw ValidationError("num_classes must be in [2, 4]");
        if (samples_per_class < 1) throw ValidationError("samples_per_class must be >= 1");
        if (roi_min_voxels < 9)
            throw ValidationError("ROI must be at least 9 voxels");
        if (roi_max_voxels < roi_min_voxels)
            throw ValidationError("roi_max_voxels < roi_min_voxels");
        if (roi_max_voxels >= width * height)
            throw ValidationError("ROI larger than image");
        if (k_folds < 2) throw ValidationError("k_folds must be >= 2");
    }
};

namespace detail {

// Seeded BFS-style blob growth from a random interior center; connected by
// construction.
inline RoiMask grow_blob(int width, int height, int target, Rng& rng) {
    RoiMask mask;
    mask.dims = {width, height, 1};
    mask.bits.assign(static_cast<std::size_t>(width) * height, 0);
    int cx = 2 + static_cast<int>(rng.uniform_index(std::max(1, width - 4)));
    int cy = 2 + static_cast<int>(rng.uniform_index(std::max(1, height - 4)));
    std::vector<std::pair<int, int>> frontier{{cx, cy}};
    mask.set(0, cy, cx);
    int grown = 1;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (grown < target && !frontier.empty()) {
        std::size_t pick = rng.uniform_index(frontier.size());
        auto [px, py] = frontier[pick];
        int start = static_cast<int>(rng.uniform_index(4));
        bool extended = false;
        for (int i = 0; i < 4 && grown < target; ++i) {
            int d = (start + i) % 4;
            int nx = px + dx[d], ny = py + dy[d];
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
            if (mask.at(0, ny, nx)) continue;
            mask.set(0, ny, nx);
            frontier.push_back({nx, ny});
            ++grown;
            extended = true;
        }
        if (!extended) {
            frontier[pick] = frontier.back();
            frontier.pop_back();
        }
    }
    return mask;
}

inline bool texture_tone(int cls, int x, int y, int phase, bool vertical) {
    switch (cls) {
        case 0: return ((x + y + phase) % 2) != 0;                       // pixel checker
        case 1: return (((vertical ? x : y) + phase) / 2) % 2 != 0;      // width-2 stripes
        case 2: return (((x + y + phase) / 2) % 2) != 0;                 // diagonal stripes
        default: return ((x / 2 + y / 2 + phase) % 2) != 0;              // 2x2 block checker
    }
}

} // namespace detail

struct GeneratedDataset {
    std::vector<ManifestEntry> entries;
    std::string manifest_path;
};

inline GeneratedDataset generate_dataset(const SynthSpec& spec, const std::string& outdir) {
    spec.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (!fs::is_directory(outdir))
        throw IoError("cannot create output directory: " + outdir);

    GeneratedDataset out;
    std::vector<int> labels;
    int id = 0;
    for (int cls = 0; cls < spec.num_classes; ++cls) {
        for (int n = 0; n < spec.samples_per_class; ++n, ++id) {
            // per-sample derived stream so generation order never matters
            Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(id));

            int target = spec.roi_min_voxels +
                         static_cast<int>(rng.uniform_index(
                             static_cast<std::uint64_t>(spec.roi_max_voxels - spec.roi_min_voxels + 1)));
            RoiMask mask = detail::grow_blob(spec.width, spec.height, target, rng);

            GridImage img;
            img.dims = {spec.width, spec.height, 1};
            img.channels = 1;
            img.values.resize(static_cast<std::size_t>(spec.width) * spec.height);
            int phase = static_cast<int>(rng.uniform_index(4));
            bool vertical = rng.uniform() < 0.5;
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x) {
                    double v;
                    if (mask.at(0, y, x)) {
                        bool tone = detail::texture_tone(cls, x, y, phase, vertical);
                        v = (tone ? spec.tone_hi : spec.tone_lo) + spec.jitter_sigma * rng.normal();
                    } else {
                        v = rng.uniform(spec.background_lo, spec.background_hi);
                    }
                    v = std::clamp(v, spec.background_lo, spec.background_hi);
                    img.at(0, 0, y, x) = static_cast<float>(v);
                }

            char name[32];
            std::snprintf(name, sizeof(name), "s%04d", id);
            ManifestEntry e;
            e.id = name;
            e.image_path = std::string(name) + ".grd";
            e.mask_path = std::string(name) + ".msk";
            e.label = cls;
            save_volume((fs::path(outdir) / e.image_path).string(), img);
            save_mask((fs::path(outdir) / e.mask_path).string(), mask);
            out.entries.push_back(std::move(e));
            labels.push_back(cls);
        }
    }
    std::vector<int> folds = stratified_kfold(labels, spec.k_folds, spec.seed);
    for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].fold = folds[i];
    out.manifest_path = (fs::path(outdir) / "manifest.csv").string();
    save_manifest(out.manifest_path, out.entries);
    return out;
}

// The <3%-area ROI preset used by the training experiments.
inline SynthSpec micro_roi_preset(std::uint64_t seed, int samples_per_class = 250) {
    SynthSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.num_classes = 2;
    spec.samples_per_class = samples_per_class;
    spec.roi_min_voxels = 60;
    spec.roi_max_voxels = 110; // < 3% of 64*64
    spec.seed = seed;
    return spec;
}

} // namespace glcmcnn

#endif // GLCMCNN_SYNTH_HPP
