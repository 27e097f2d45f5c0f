#ifndef GLCMCNN_GRID_HPP
#define GLCMCNN_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace glcmcnn {

// Spatial extents in voxels. 2D data uses z == 1. Linear index order is
// channel-major, then z, y, x with x fastest.
struct Dims {
    int x = 0;
    int y = 0;
    int z = 1;

    bool operator==(const Dims&) const = default;
    std::int64_t voxels() const {
        return static_cast<std::int64_t>(x) * y * z;
    }
};

// Multi-channel scalar field on a regular grid with physical spacing.
struct GridImage {
    Dims dims;
    int channels = 1;
    std::array<double, 3> spacing_mm = {1.0, 1.0, 1.0};
    std::vector<float> values;

    std::int64_t index(int c, int zi, int yi, int xi) const {
        return ((static_cast<std::int64_t>(c) * dims.z + zi) * dims.y + yi) * dims.x + xi;
    }
    float at(int c, int zi, int yi, int xi) const { return values[index(c, zi, yi, xi)]; }
    float& at(int c, int zi, int yi, int xi) { return values[index(c, zi, yi, xi)]; }

    void validate() const {
        if (dims.x < 1 || dims.y < 1 || dims.z < 1 || channels < 1)
            throw ValidationError("image dims/channels must be positive");
        if (static_cast<std::int64_t>(values.size()) != dims.voxels() * channels)
            throw ValidationError("image value count does not match dims*channels");
        for (double s : spacing_mm)
            if (!(s > 0.0)) throw ValidationError("spacing entries must be strictly positive");
        for (float v : values)
            if (!std::isfinite(v)) throw ValidationError("image contains non-finite value");
    }
};

// Boolean field marking the region of interest; dims must match the paired image.
struct RoiMask {
    Dims dims;
    std::vector<std::uint8_t> bits;

    std::int64_t index(int zi, int yi, int xi) const {
        return (static_cast<std::int64_t>(zi) * dims.y + yi) * dims.x + xi;
    }
    bool at(int zi, int yi, int xi) const { return bits[index(zi, yi, xi)] != 0; }
    void set(int zi, int yi, int xi, bool v = true) { bits[index(zi, yi, xi)] = v ? 1 : 0; }

    std::int64_t count() const {
        std::int64_t n = 0;
        for (auto b : bits) n += (b != 0);
        return n;
    }
};

struct QuantizationSpec {
    int levels = 96;
    double range_lo = 0.0;
    double range_hi = 255.0;
    bool clamp = true;

    void validate() const {
        if (levels < 2 || levels > 4096)
            throw ValidationError("levels must be in [2, 4096]");
        if (!(range_lo < range_hi))
            throw ValidationError("quantization range requires range_lo < range_hi");
    }
};

struct QuantizedGrid {
    Dims dims;
    int channels = 1;
    int levels = 0;
    std::vector<std::uint16_t> codes;

    std::int64_t index(int c, int zi, int yi, int xi) const {
        return ((static_cast<std::int64_t>(c) * dims.z + zi) * dims.y + yi) * dims.x + xi;
    }
    int at(int c, int zi, int yi, int xi) const { return codes[index(c, zi, yi, xi)]; }
};

// code = floor(L * (v - lo) / (hi - lo)), with v == hi mapped to L-1.
inline int quantize_value(float v, const QuantizationSpec& spec) {
    if (!std::isfinite(v))
        throw ValidationError("cannot quantize non-finite value");
    double x = v;
    if (x < spec.range_lo || x > spec.range_hi) {
        if (!spec.clamp)
            throw ValidationError("value " + std::to_string(x) + " outside quantization range");
        x = x < spec.range_lo ? spec.range_lo : spec.range_hi;
    }
    double t = (x - spec.range_lo) / (spec.range_hi - spec.range_lo);
    int code = static_cast<int>(std::floor(t * spec.levels));
    if (code >= spec.levels) code = spec.levels - 1;
    if (code < 0) code = 0;
    return code;
}

inline QuantizedGrid quantize(const GridImage& image, const QuantizationSpec& spec) {
    spec.validate();
    QuantizedGrid q;
    q.dims = image.dims;
    q.channels = image.channels;
    q.levels = spec.levels;
    q.codes.resize(image.values.size());
    for (std::size_t i = 0; i < image.values.size(); ++i)
        q.codes[i] = static_cast<std::uint16_t>(quantize_value(image.values[i], spec));
    return q;
}

inline void validate_pair(const GridImage& image, const RoiMask& mask) {
    if (image.dims != mask.dims)
        throw ValidationError("image/mask dimension mismatch");
    if (mask.count() == 0)
        throw ValidationError("mask is empty");
}

struct BoundingBox {
    // inclusive index ranges per axis
    int x_lo = 0, x_hi = 0;
    int y_lo = 0, y_hi = 0;
    int z_lo = 0, z_hi = 0;
};

inline BoundingBox mask_bounding_box(const RoiMask& mask) {
    BoundingBox box;
    bool found = false;
    for (int zi = 0; zi < mask.dims.z; ++zi)
        for (int yi = 0; yi < mask.dims.y; ++yi)
            for (int xi = 0; xi < mask.dims.x; ++xi) {
                if (!mask.at(zi, yi, xi)) continue;
                if (!found) {
                    box = {xi, xi, yi, yi, zi, zi};
                    found = true;
                } else {
                    box.x_lo = std::min(box.x_lo, xi);
                    box.x_hi = std::max(box.x_hi, xi);
                    box.y_lo = std::min(box.y_lo, yi);
                    box.y_hi = std::max(box.y_hi, yi);
                    box.z_lo = std::min(box.z_lo, zi);
                    box.z_hi = std::max(box.z_hi, zi);
                }
            }
    if (!found) throw ValidationError("mask is empty");
    return box;
}

} // namespace glcmcnn

#endif // GLCMCNN_GRID_HPP
