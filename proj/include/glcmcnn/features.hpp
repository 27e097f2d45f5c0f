#ifndef GLCMCNN_FEATURES_HPP
#define GLCMCNN_FEATURES_HPP

#include <array>
#include <cmath>
#include <string>

#include "glcm.hpp"

namespace glcmcnn {

struct FeatureVector {
    double contrast = 0;
    double homogeneity = 0;
    double energy = 0;
    double entropy = 0;
    double correlation = 0;

    static constexpr std::array<const char*, 5> names() {
        return {"contrast", "homogeneity", "energy", "entropy", "correlation"};
    }
    std::array<double, 5> as_array() const {
        return {contrast, homogeneity, energy, entropy, correlation};
    }
};

namespace detail {

inline void require_normalized(const GlcmImage& P, int channel) {
    if (P.normalization != Normalization::Probability)
        throw ValidationError("texture features require a probability-normalized GLCM");
    double s = P.channel_sum(channel);
    if (std::abs(s - 1.0) > 1e-6)
        throw ValidationError("GLCM channel sum deviates from 1: " + std::to_string(s));
}

} // namespace detail

// sum_ij P[i][j] * (i-j)^2
inline double contrast(const GlcmImage& P, int channel = 0) {
    detail::require_normalized(P, channel);
    double acc = 0;
    for (int i = 0; i < P.levels; ++i)
        for (int j = 0; j < P.levels; ++j) {
            double d = i - j;
            acc += P.at(channel, i, j) * d * d;
        }
    return acc;
}

// sum_ij P[i][j] / (1 + (i-j)^2)
inline double homogeneity(const GlcmImage& P, int channel = 0) {
    detail::require_normalized(P, channel);
    double acc = 0;
    for (int i = 0; i < P.levels; ++i)
        for (int j = 0; j < P.levels; ++j) {
            double d = i - j;
            acc += P.at(channel, i, j) / (1.0 + d * d);
        }
    return acc;
}

// One-pass extended set: contrast, homogeneity, energy (sum P^2),
// entropy (-sum P ln P, 0 ln 0 := 0) and correlation.
inline FeatureVector feature_vector(const GlcmImage& P, int channel = 0) {
    detail::require_normalized(P, channel);
    FeatureVector f;
    double mu_i = 0, mu_j = 0;
    for (int i = 0; i < P.levels; ++i)
        for (int j = 0; j < P.levels; ++j) {
            double p = P.at(channel, i, j);
            double d = i - j;
            f.contrast += p * d * d;
            f.homogeneity += p / (1.0 + d * d);
            f.energy += p * p;
            if (p > 0) f.entropy -= p * std::log(p);
            mu_i += p * i;
            mu_j += p * j;
        }
    double var_i = 0, var_j = 0, cov = 0;
    for (int i = 0; i < P.levels; ++i)
        for (int j = 0; j < P.levels; ++j) {
            double p = P.at(channel, i, j);
            var_i += p * (i - mu_i) * (i - mu_i);
            var_j += p * (j - mu_j) * (j - mu_j);
            cov += p * (i - mu_i) * (j - mu_j);
        }
    double denom = std::sqrt(var_i * var_j);
    f.correlation = denom > 0 ? cov / denom : 0.0;
    return f;
}

} // namespace glcmcnn

#endif // GLCMCNN_FEATURES_HPP
