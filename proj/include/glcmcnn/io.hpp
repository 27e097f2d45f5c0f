#ifndef GLCMCNN_IO_HPP
#define GLCMCNN_IO_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glcm.hpp"
#include "grid.hpp"

namespace glcmcnn {

// GRD1/MSK1 container: one line of JSON header, then the raw little-endian
// payload in channel-major, z, y, x order (x fastest). 2D data uses z == 1.

namespace detail {

inline nlohmann::json read_header_line(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path + ": missing header line");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed header: " + e.what());
    }
    return h;
}

inline void check_payload_size(std::ifstream& in, const std::string& path,
                               std::size_t expected_bytes) {
    auto data_start = in.tellg();
    in.seekg(0, std::ios::end);
    std::size_t actual = static_cast<std::size_t>(in.tellg() - data_start);
    in.seekg(data_start);
    if (actual != expected_bytes)
        throw IoError(path + ": payload size mismatch, expected " +
                      std::to_string(expected_bytes) + " bytes, found " + std::to_string(actual));
}

} // namespace detail

inline void save_volume(const std::string& path, const GridImage& image) {
    image.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    nlohmann::json h = {
        {"magic", "GRD1"},
        {"dims", {image.dims.x, image.dims.y, image.dims.z}},
        {"channels", image.channels},
        {"spacing_mm", {image.spacing_mm[0], image.spacing_mm[1], image.spacing_mm[2]}},
        {"dtype", "f32le"},
    };
    out << h.dump() << "\n";
    out.write(reinterpret_cast<const char*>(image.values.data()),
              static_cast<std::streamsize>(image.values.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path);
}

inline GridImage load_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json h = detail::read_header_line(in, path);
    if (h.value("magic", "") != "GRD1")
        throw IoError(path + ": magic mismatch, expected GRD1");
    if (h.value("dtype", "") != "f32le")
        throw IoError(path + ": dtype mismatch, expected f32le");
    GridImage img;
    auto dims = h.at("dims");
    if (!dims.is_array() || dims.size() != 3)
        throw IoError(path + ": dims must be [x,y,z]");
    img.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    img.channels = h.at("channels").get<int>();
    auto sp = h.at("spacing_mm");
    img.spacing_mm = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    if (img.dims.x < 1 || img.dims.y < 1 || img.dims.z < 1 || img.channels < 1)
        throw IoError(path + ": non-positive dims in header");
    std::size_t n = static_cast<std::size_t>(img.dims.voxels()) * img.channels;
    detail::check_payload_size(in, path, n * sizeof(float));
    img.values.resize(n);
    in.read(reinterpret_cast<char*>(img.values.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw IoError(path + ": truncated payload");
    img.validate();
    return img;
}

inline void save_mask(const std::string& path, const RoiMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    nlohmann::json h = {
        {"magic", "MSK1"},
        {"dims", {mask.dims.x, mask.dims.y, mask.dims.z}},
        {"channels", 1},
        {"spacing_mm", {1.0, 1.0, 1.0}},
        {"dtype", "u8"},
    };
    out << h.dump() << "\n";
    out.write(reinterpret_cast<const char*>(mask.bits.data()),
              static_cast<std::streamsize>(mask.bits.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline RoiMask load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json h = detail::read_header_line(in, path);
    if (h.value("magic", "") != "MSK1")
        throw IoError(path + ": magic mismatch, expected MSK1");
    if (h.value("dtype", "") != "u8")
        throw IoError(path + ": dtype mismatch, expected u8");
    RoiMask mask;
    auto dims = h.at("dims");
    mask.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    if (mask.dims.x < 1 || mask.dims.y < 1 || mask.dims.z < 1)
        throw IoError(path + ": non-positive dims in header");
    std::size_t n = static_cast<std::size_t>(mask.dims.voxels());
    detail::check_payload_size(in, path, n);
    mask.bits.resize(n);
    in.read(reinterpret_cast<char*>(mask.bits.data()), static_cast<std::streamsize>(n));
    if (!in) throw IoError(path + ": truncated payload");
    for (auto& b : mask.bits)
        if (b > 1) throw IoError(path + ": mask values must be 0/1");
    return mask;
}

// A GLCM image is stored as a GRD1 volume of dims [L, L, 1] with C channels,
// plus a JSON sidecar recording how it was produced.
inline void save_glcm_image(const std::string& path, const GlcmImage& glcm) {
    GridImage img;
    img.dims = {glcm.levels, glcm.levels, 1};
    img.channels = glcm.channels;
    img.values.assign(glcm.values.begin(), glcm.values.end());
    save_volume(path, img);
}

inline GlcmImage load_glcm_image(const std::string& path, Normalization norm) {
    GridImage img = load_volume(path);
    if (img.dims.z != 1 || img.dims.x != img.dims.y)
        throw IoError(path + ": not a square 2D GLCM image");
    GlcmImage g;
    g.levels = img.dims.x;
    g.channels = img.channels;
    g.normalization = norm;
    g.values.assign(img.values.begin(), img.values.end());
    return g;
}

struct GlcmProvenance {
    QuantizationSpec spec;
    Regime regime = Regime::TwoD;
    bool symmetric = true;
    Normalization normalization = Normalization::Probability;
    int displacement = 1;
    DirectionSet directions;
};

inline void save_glcm_sidecar(const std::string& path, const GlcmProvenance& p) {
    nlohmann::json dirs = nlohmann::json::array();
    for (const Offset& o : p.directions) dirs.push_back({o.dz, o.dy, o.dx});
    nlohmann::json j = {
        {"levels", p.spec.levels},
        {"range_lo", p.spec.range_lo},
        {"range_hi", p.spec.range_hi},
        {"clamp", p.spec.clamp},
        {"regime", to_string(p.regime)},
        {"symmetric", p.symmetric},
        {"normalization", to_string(p.normalization)},
        {"displacement", p.displacement},
        {"directions", dirs},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

} // namespace glcmcnn

#endif // GLCMCNN_IO_HPP
