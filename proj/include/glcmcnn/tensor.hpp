#ifndef GLCMCNN_TENSOR_HPP
#define GLCMCNN_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace glcmcnn {

// Dense n-d array of scalars. Training code keeps gradients in separate
// Tensors of the same shape rather than attaching them here.
template <typename S>
struct Tensor {
    std::vector<int> shape;
    std::vector<S> values;

    Tensor() = default;
    explicit Tensor(std::vector<int> sh, S fill = S(0)) : shape(std::move(sh)) {
        values.assign(static_cast<std::size_t>(size_of(shape)), fill);
    }

    static std::int64_t size_of(const std::vector<int>& sh) {
        std::int64_t n = 1;
        for (int d : sh) n *= d;
        return n;
    }
    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

    bool finite() const {
        for (S v : values)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out;
        out.shape = shape;
        out.values.reserve(values.size());
        for (S v : values) out.values.push_back(static_cast<T>(v));
        return out;
    }
};

inline std::string shape_string(const std::vector<int>& sh) {
    std::string s = "(";
    for (std::size_t i = 0; i < sh.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(sh[i]);
    }
    return s + ")";
}

} // namespace glcmcnn

#endif // GLCMCNN_TENSOR_HPP
