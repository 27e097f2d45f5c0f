#ifndef GLCMCNN_GLCM_HPP
#define GLCMCNN_GLCM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "grid.hpp"

namespace glcmcnn {

// Integer voxel displacement, components in {-1,0,1}, not all zero.
// Canonical form: the first nonzero component in (z, y, x) order is positive,
// which keeps exactly one of each antiparallel pair.
struct Offset {
    int dz = 0;
    int dy = 0;
    int dx = 0;

    bool operator==(const Offset&) const = default;
    Offset negated() const { return {-dz, -dy, -dx}; }

    bool canonical() const {
        if (dz != 0) return dz > 0;
        if (dy != 0) return dy > 0;
        return dx > 0;
    }
};

using DirectionSet = std::vector<Offset>;

// The four canonical 2D offsets for 0, 45, 90 and 135 degrees, in that order.
inline DirectionSet directions_2d() {
    return {
        {0, 0, 1},  // 0 deg
        {0, 1, 1},  // 45 deg
        {0, 1, 0},  // 90 deg
        {0, 1, -1}, // 135 deg
    };
}

// The 13 canonical 3D offsets: {-1,0,1}^3 minus origin, antiparallel pairs
// deduplicated, in lexicographic (dz, dy, dx) order.
inline DirectionSet directions_3d() {
    DirectionSet out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                Offset o{dz, dy, dx};
                if (dz == 0 && dy == 0 && dx == 0) continue;
                if (o.canonical()) out.push_back(o);
            }
    return out;
}

// Per-direction co-occurrence counts.
struct Glcm {
    int levels = 0;
    bool symmetric = true;
    std::vector<std::int64_t> counts; // levels x levels, row-major

    std::int64_t& at(int i, int j) { return counts[static_cast<std::size_t>(i) * levels + j]; }
    std::int64_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * levels + j]; }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

enum class Normalization { Probability, Raw, Log1p };

inline std::string to_string(Normalization n) {
    switch (n) {
        case Normalization::Probability: return "probability";
        case Normalization::Raw: return "raw";
        default: return "log1p";
    }
}

inline Normalization normalization_from_string(const std::string& s) {
    if (s == "probability") return Normalization::Probability;
    if (s == "raw") return Normalization::Raw;
    if (s == "log1p") return Normalization::Log1p;
    throw ValidationError("unknown normalization: " + s);
}

// Fused fixed-size L x L x C matrix fed to the network.
struct GlcmImage {
    int levels = 0;
    int channels = 1;
    Normalization normalization = Normalization::Probability;
    std::vector<double> values; // channel-major, L*L per channel, row-major

    double& at(int c, int i, int j) {
        return values[(static_cast<std::size_t>(c) * levels + i) * levels + j];
    }
    double at(int c, int i, int j) const {
        return values[(static_cast<std::size_t>(c) * levels + i) * levels + j];
    }
    double channel_sum(int c) const {
        double s = 0;
        for (int i = 0; i < levels; ++i)
            for (int j = 0; j < levels; ++j) s += at(c, i, j);
        return s;
    }
};

// Counts pairs (p, p+offset) with both endpoints inside the mask.
// `displacement` scales the offset uniformly (distance-d co-occurrence).
inline Glcm accumulate(const QuantizedGrid& grid, const RoiMask& mask, const Offset& offset,
                       bool symmetric = true, int channel = 0, int displacement = 1) {
    if (grid.dims != mask.dims)
        throw ValidationError("grid/mask dimension mismatch");
    Glcm g;
    g.levels = grid.levels;
    g.symmetric = symmetric;
    g.counts.assign(static_cast<std::size_t>(grid.levels) * grid.levels, 0);

    const int dz = offset.dz * displacement;
    const int dy = offset.dy * displacement;
    const int dx = offset.dx * displacement;
    BoundingBox box = mask_bounding_box(mask); // throws on empty mask

    for (int zi = box.z_lo; zi <= box.z_hi; ++zi) {
        int zj = zi + dz;
        if (zj < 0 || zj >= grid.dims.z) continue;
        for (int yi = box.y_lo; yi <= box.y_hi; ++yi) {
            int yj = yi + dy;
            if (yj < 0 || yj >= grid.dims.y) continue;
            for (int xi = box.x_lo; xi <= box.x_hi; ++xi) {
                int xj = xi + dx;
                if (xj < 0 || xj >= grid.dims.x) continue;
                if (!mask.at(zi, yi, xi) || !mask.at(zj, yj, xj)) continue;
                int a = grid.at(channel, zi, yi, xi);
                int b = grid.at(channel, zj, yj, xj);
                ++g.at(a, b);
                if (symmetric) ++g.at(b, a);
            }
        }
    }
    return g;
}

namespace detail {

// Shared tail of all builders: counts (as reals) -> normalized channel values.
inline void normalize_channel(std::vector<double>& cells, Normalization mode) {
    double total = 0;
    for (double v : cells) total += v;
    if (mode == Normalization::Raw) return;
    if (total <= 0)
        throw NumericError("no admissible voxel pairs: GLCM has zero total count");
    for (double& v : cells) v /= total;
    if (mode == Normalization::Log1p)
        for (double& v : cells) v = std::log1p(v);
}

} // namespace detail

inline GlcmImage normalize(const Glcm& glcm, Normalization mode) {
    GlcmImage img;
    img.levels = glcm.levels;
    img.channels = 1;
    img.normalization = mode;
    img.values.assign(glcm.counts.begin(), glcm.counts.end());
    detail::normalize_channel(img.values, mode);
    return img;
}

namespace detail {

// Average of per-direction count matrices (cases 1 and 2), then normalize.
inline std::vector<double> averaged_counts(const QuantizedGrid& grid, const RoiMask& mask,
                                           const DirectionSet& dirs, bool symmetric,
                                           int channel, int displacement) {
    std::vector<double> acc(static_cast<std::size_t>(grid.levels) * grid.levels, 0.0);
    for (const Offset& o : dirs) {
        Glcm g = accumulate(grid, mask, o, symmetric, channel, displacement);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(g.counts[i]);
    }
    for (double& v : acc) v /= static_cast<double>(dirs.size());
    return acc;
}

inline RoiMask slice_mask(const RoiMask& mask, int zi) {
    RoiMask m;
    m.dims = {mask.dims.x, mask.dims.y, 1};
    m.bits.assign(mask.bits.begin() + static_cast<std::size_t>(zi) * mask.dims.y * mask.dims.x,
                  mask.bits.begin() + static_cast<std::size_t>(zi + 1) * mask.dims.y * mask.dims.x);
    return m;
}

inline QuantizedGrid slice_grid(const QuantizedGrid& grid, int channel, int zi) {
    QuantizedGrid g;
    g.dims = {grid.dims.x, grid.dims.y, 1};
    g.channels = 1;
    g.levels = grid.levels;
    std::size_t plane = static_cast<std::size_t>(grid.dims.y) * grid.dims.x;
    std::size_t base = (static_cast<std::size_t>(channel) * grid.dims.z + zi) * plane;
    g.codes.assign(grid.codes.begin() + base, grid.codes.begin() + base + plane);
    return g;
}

inline QuantizedGrid channel_grid(const QuantizedGrid& grid, int channel) {
    QuantizedGrid g;
    g.dims = grid.dims;
    g.channels = 1;
    g.levels = grid.levels;
    std::size_t vol = static_cast<std::size_t>(grid.dims.voxels());
    g.codes.assign(grid.codes.begin() + static_cast<std::size_t>(channel) * vol,
                   grid.codes.begin() + static_cast<std::size_t>(channel + 1) * vol);
    return g;
}

inline GlcmImage from_counts(std::vector<double> counts, int levels, Normalization norm) {
    GlcmImage img;
    img.levels = levels;
    img.channels = 1;
    img.normalization = norm;
    img.values = std::move(counts);
    normalize_channel(img.values, norm);
    return img;
}

inline GlcmImage glcm_image_2d_quantized(const QuantizedGrid& grid, const RoiMask& mask,
                                         bool symmetric, Normalization norm,
                                         int channel, int displacement) {
    return from_counts(averaged_counts(grid, mask, directions_2d(), symmetric, channel, displacement),
                       grid.levels, norm);
}

// Case 3 core: per-slice 2D accumulation, slice count matrices summed.
inline std::vector<double> sliced_counts(const QuantizedGrid& grid, const RoiMask& mask,
                                         bool symmetric, int channel, int displacement) {
    std::vector<double> acc(static_cast<std::size_t>(grid.levels) * grid.levels, 0.0);
    const DirectionSet dirs = directions_2d();
    for (int zi = 0; zi < grid.dims.z; ++zi) {
        RoiMask sm = slice_mask(mask, zi);
        if (sm.count() == 0) continue;
        QuantizedGrid sg = slice_grid(grid, channel, zi);
        for (const Offset& o : dirs) {
            Glcm g = accumulate(sg, sm, o, symmetric, 0, displacement);
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] += static_cast<double>(g.counts[i]);
        }
    }
    return acc;
}

} // namespace detail

constexpr double kDefaultIsotropyTolerance = 1.2;

enum class Regime { TwoD, ThreeDIso, ThreeDAniso };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::TwoD: return "2d";
        case Regime::ThreeDIso: return "3d-iso";
        default: return "3d-aniso";
    }
}

inline Regime regime_from_string(const std::string& s) {
    if (s == "2d") return Regime::TwoD;
    if (s == "3d-iso") return Regime::ThreeDIso;
    if (s == "3d-aniso") return Regime::ThreeDAniso;
    throw ValidationError("unknown regime: " + s);
}

// Case (1): 2D single-channel image, average of the 4 direction GLCMs.
inline GlcmImage glcm_image_2d(const GridImage& image, const RoiMask& mask,
                               const QuantizationSpec& spec, bool symmetric = true,
                               Normalization norm = Normalization::Probability,
                               int displacement = 1) {
    validate_pair(image, mask);
    if (image.dims.z != 1)
        throw ValidationError("2d builder requires z == 1");
    if (image.channels != 1)
        throw ValidationError("2d builder requires a single channel");
    QuantizedGrid q = quantize(image, spec);
    return detail::glcm_image_2d_quantized(q, mask, symmetric, norm, 0, displacement);
}

// Case (2): isotropic 3D volume, average of the 13 direction GLCMs.
inline GlcmImage glcm_image_3d_isotropic(const GridImage& image, const RoiMask& mask,
                                         const QuantizationSpec& spec, bool symmetric = true,
                                         Normalization norm = Normalization::Probability,
                                         int displacement = 1,
                                         double isotropy_tolerance = kDefaultIsotropyTolerance) {
    validate_pair(image, mask);
    if (image.channels != 1)
        throw ValidationError("3d builder requires a single channel");
    double smin = std::min({image.spacing_mm[0], image.spacing_mm[1], image.spacing_mm[2]});
    double smax = std::max({image.spacing_mm[0], image.spacing_mm[1], image.spacing_mm[2]});
    if (smax / smin > isotropy_tolerance)
        throw ValidationError("spacing anisotropy " + std::to_string(smax / smin) +
                              " exceeds tolerance; use the anisotropic (slice-wise) builder");
    QuantizedGrid q = quantize(image, spec);
    return detail::from_counts(
        detail::averaged_counts(q, mask, directions_3d(), symmetric, 0, displacement),
        spec.levels, norm);
}

// Case (3): anisotropic volume, slice-wise 2D GLCMs summed across slices.
inline GlcmImage glcm_image_3d_anisotropic(const GridImage& image, const RoiMask& mask,
                                           const QuantizationSpec& spec, bool symmetric = true,
                                           Normalization norm = Normalization::Probability,
                                           int displacement = 1) {
    validate_pair(image, mask);
    if (image.channels != 1)
        throw ValidationError("3d builder requires a single channel");
    QuantizedGrid q = quantize(image, spec);
    return detail::from_counts(detail::sliced_counts(q, mask, symmetric, 0, displacement),
                               spec.levels, norm);
}

// Case (4): per-channel GLCM images stacked in channel order.
inline GlcmImage glcm_image_multichannel(const GridImage& image, const RoiMask& mask,
                                         const QuantizationSpec& spec, Regime regime,
                                         bool symmetric = true,
                                         Normalization norm = Normalization::Probability,
                                         int displacement = 1,
                                         double isotropy_tolerance = kDefaultIsotropyTolerance) {
    validate_pair(image, mask);
    if (image.channels < 2)
        throw ValidationError("multichannel builder requires C >= 2");
    if (regime == Regime::TwoD && image.dims.z != 1)
        throw ValidationError("2d regime requires z == 1");
    if (regime == Regime::ThreeDIso) {
        double smin = std::min({image.spacing_mm[0], image.spacing_mm[1], image.spacing_mm[2]});
        double smax = std::max({image.spacing_mm[0], image.spacing_mm[1], image.spacing_mm[2]});
        if (smax / smin > isotropy_tolerance)
            throw ValidationError("spacing anisotropy exceeds tolerance; use the 3d-aniso regime");
    }
    QuantizedGrid q = quantize(image, spec);

    GlcmImage out;
    out.levels = spec.levels;
    out.channels = image.channels;
    out.normalization = norm;
    out.values.reserve(static_cast<std::size_t>(spec.levels) * spec.levels * image.channels);
    for (int c = 0; c < image.channels; ++c) {
        std::vector<double> counts;
        try {
            switch (regime) {
                case Regime::TwoD:
                    counts = detail::averaged_counts(q, mask, directions_2d(), symmetric, c, displacement);
                    break;
                case Regime::ThreeDIso:
                    counts = detail::averaged_counts(q, mask, directions_3d(), symmetric, c, displacement);
                    break;
                case Regime::ThreeDAniso: {
                    QuantizedGrid cg = detail::channel_grid(q, c);
                    counts = detail::sliced_counts(cg, mask, symmetric, 0, displacement);
                    break;
                }
            }
            detail::normalize_channel(counts, norm);
        } catch (const NumericError&) {
            throw NumericError("no admissible voxel pairs in channel " + std::to_string(c));
        }
        out.values.insert(out.values.end(), counts.begin(), counts.end());
    }
    return out;
}

} // namespace glcmcnn

#endif // GLCMCNN_GLCM_HPP
