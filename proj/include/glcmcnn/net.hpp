#ifndef GLCMCNN_NET_HPP
#define GLCMCNN_NET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rng.hpp"
#include "tensor.hpp"

namespace glcmcnn {

// Probability-normalized GLCM images are multiplied by L^2 before entering
// the network so the mean cell value is about 1.
inline double glcm_input_scale(int levels) {
    return static_cast<double>(levels) * levels;
}

inline double kaiming_init(int fan_in, Rng& rng) {
    return rng.normal() * std::sqrt(2.0 / fan_in);
}

template <typename S>
struct ParamBlock {
    std::string name;
    std::vector<S>* values;
    std::vector<S>* grads;
};

// ---------------------------------------------------------------------------
// Layers. Each caches what its backward pass needs; backward accumulates
// parameter gradients (callers zero them per batch) and returns the input
// gradient.
// ---------------------------------------------------------------------------

template <typename S>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<S> forward(const Tensor<S>& x) = 0;
    virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
    virtual std::vector<ParamBlock<S>> params() { return {}; }
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
    virtual std::string name() const = 0;
};

// 2D cross-correlation over (C, H, W) input.
template <typename S>
class Conv2d : public Layer<S> {
public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
        : cin_(in_channels), cout_(out_channels), k_(kernel), stride_(stride), pad_(padding) {
        if (kernel < 1 || stride < 1 || padding < 0 || in_channels < 1 || out_channels < 1)
            throw ValidationError("bad conv parameters");
        int fan_in = cin_ * k_ * k_;
        weights_.resize(static_cast<std::size_t>(cout_) * cin_ * k_ * k_);
        for (auto& w : weights_) w = static_cast<S>(kaiming_init(fan_in, rng));
        bias_.assign(cout_, S(0));
        wgrad_.assign(weights_.size(), S(0));
        bgrad_.assign(bias_.size(), S(0));
    }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 3 || in[0] != cin_)
            throw ValidationError("conv input shape mismatch: " + shape_string(in));
        int ho = (in[1] + 2 * pad_ - k_) / stride_ + 1;
        int wo = (in[2] + 2 * pad_ - k_) / stride_ + 1;
        if (ho < 1 || wo < 1)
            throw ValidationError("conv output would be empty for input " + shape_string(in));
        return {cout_, ho, wo};
    }

    Tensor<S> forward(const Tensor<S>& x) override {
        in_ = x;
        auto osh = output_shape(x.shape);
        Tensor<S> y(osh);
        const int h = x.shape[1], w = x.shape[2];
        const int ho = osh[1], wo = osh[2];
        for (int oc = 0; oc < cout_; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    S acc = bias_[oc];
                    for (int ic = 0; ic < cin_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            int iy = oy * stride_ + ky - pad_;
                            if (iy < 0 || iy >= h) continue;
                            const S* xrow = &x.values[(static_cast<std::size_t>(ic) * h + iy) * w];
                            const S* wrow = &weights_[((static_cast<std::size_t>(oc) * cin_ + ic) * k_ + ky) * k_];
                            for (int kx = 0; kx < k_; ++kx) {
                                int ix = ox * stride_ + kx - pad_;
                                if (ix < 0 || ix >= w) continue;
                                acc += wrow[kx] * xrow[ix];
                            }
                        }
                    y.values[(static_cast<std::size_t>(oc) * ho + oy) * wo + ox] = acc;
                }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const int h = in_.shape[1], w = in_.shape[2];
        const int ho = dy.shape[1], wo = dy.shape[2];
        Tensor<S> dx(in_.shape);
        for (int oc = 0; oc < cout_; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    S g = dy.values[(static_cast<std::size_t>(oc) * ho + oy) * wo + ox];
                    bgrad_[oc] += g;
                    for (int ic = 0; ic < cin_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            int iy = oy * stride_ + ky - pad_;
                            if (iy < 0 || iy >= h) continue;
                            const S* xrow = &in_.values[(static_cast<std::size_t>(ic) * h + iy) * w];
                            S* dxrow = &dx.values[(static_cast<std::size_t>(ic) * h + iy) * w];
                            S* wrow = &weights_[((static_cast<std::size_t>(oc) * cin_ + ic) * k_ + ky) * k_];
                            S* gwrow = &wgrad_[((static_cast<std::size_t>(oc) * cin_ + ic) * k_ + ky) * k_];
                            for (int kx = 0; kx < k_; ++kx) {
                                int ix = ox * stride_ + kx - pad_;
                                if (ix < 0 || ix >= w) continue;
                                gwrow[kx] += g * xrow[ix];
                                dxrow[ix] += g * wrow[kx];
                            }
                        }
                }
        return dx;
    }

    std::vector<ParamBlock<S>> params() override {
        return {{"conv.weight", &weights_, &wgrad_}, {"conv.bias", &bias_, &bgrad_}};
    }
    std::string name() const override { return "conv2d"; }

private:
    int cin_, cout_, k_, stride_, pad_;
    std::vector<S> weights_, bias_, wgrad_, bgrad_;
    Tensor<S> in_;
};

template <typename S>
class Relu : public Layer<S> {
public:
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor<S> forward(const Tensor<S>& x) override {
        in_ = x;
        Tensor<S> y = x;
        for (auto& v : y.values) v = v > S(0) ? v : S(0);
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx = dy;
        for (std::size_t i = 0; i < dx.values.size(); ++i)
            if (!(in_.values[i] > S(0))) dx.values[i] = S(0);
        return dx;
    }
    std::string name() const override { return "relu"; }

private:
    Tensor<S> in_;
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
// Ties route the gradient to the first element in scan order.
template <typename S>
class MaxPool2 : public Layer<S> {
public:
    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (in.size() != 3) throw ValidationError("maxpool expects (C,H,W) input");
        if (in[1] < 2 || in[2] < 2)
            throw ValidationError("maxpool input too small: " + shape_string(in));
        return {in[0], in[1] / 2, in[2] / 2};
    }
    Tensor<S> forward(const Tensor<S>& x) override {
        in_shape_ = x.shape;
        auto osh = output_shape(x.shape);
        Tensor<S> y(osh);
        argmax_.assign(y.values.size(), 0);
        const int h = x.shape[1], w = x.shape[2];
        const int ho = osh[1], wo = osh[2];
        for (int c = 0; c < osh[0]; ++c)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    S best = S(0);
                    std::size_t best_idx = 0;
                    bool first = true;
                    for (int ky = 0; ky < 2; ++ky)
                        for (int kx = 0; kx < 2; ++kx) {
                            std::size_t idx =
                                (static_cast<std::size_t>(c) * h + oy * 2 + ky) * w + ox * 2 + kx;
                            if (first || x.values[idx] > best) {
                                best = x.values[idx];
                                best_idx = idx;
                                first = false;
                            }
                        }
                    std::size_t oidx = (static_cast<std::size_t>(c) * ho + oy) * wo + ox;
                    y.values[oidx] = best;
                    argmax_[oidx] = best_idx;
                }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx(in_shape_);
        for (std::size_t i = 0; i < dy.values.size(); ++i)
            dx.values[argmax_[i]] += dy.values[i];
        return dx;
    }
    std::string name() const override { return "maxpool2"; }

private:
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

template <typename S>
class Flatten : public Layer<S> {
public:
    std::vector<int> output_shape(const std::vector<int>& in) const override {
        return {static_cast<int>(Tensor<S>::size_of(in))};
    }
    Tensor<S> forward(const Tensor<S>& x) override {
        in_shape_ = x.shape;
        Tensor<S> y = x;
        y.shape = output_shape(x.shape);
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx = dy;
        dx.shape = in_shape_;
        return dx;
    }
    std::string name() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
};

template <typename S>
class Dense : public Layer<S> {
public:
    Dense(int in_width, int out_width, Rng& rng) : in_(in_width), out_(out_width) {
        if (in_width < 1 || out_width < 1) throw ValidationError("bad dense widths");
        weights_.resize(static_cast<std::size_t>(out_) * in_);
        for (auto& w : weights_) w = static_cast<S>(kaiming_init(in_, rng));
        bias_.assign(out_, S(0));
        wgrad_.assign(weights_.size(), S(0));
        bgrad_.assign(bias_.size(), S(0));
    }

    std::vector<int> output_shape(const std::vector<int>& in) const override {
        if (Tensor<S>::size_of(in) != in_)
            throw ValidationError("dense input width mismatch: got " + shape_string(in) +
                                  ", expected " + std::to_string(in_));
        return {out_};
    }
    Tensor<S> forward(const Tensor<S>& x) override {
        in_val_ = x;
        Tensor<S> y({out_});
        for (int o = 0; o < out_; ++o) {
            S acc = bias_[o];
            const S* wrow = &weights_[static_cast<std::size_t>(o) * in_];
            for (int i = 0; i < in_; ++i) acc += wrow[i] * x.values[i];
            y.values[o] = acc;
        }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx(in_val_.shape);
        for (int o = 0; o < out_; ++o) {
            S g = dy.values[o];
            bgrad_[o] += g;
            const S* wrow = &weights_[static_cast<std::size_t>(o) * in_];
            S* gwrow = &wgrad_[static_cast<std::size_t>(o) * in_];
            for (int i = 0; i < in_; ++i) {
                gwrow[i] += g * in_val_.values[i];
                dx.values[i] += g * wrow[i];
            }
        }
        return dx;
    }
    std::vector<ParamBlock<S>> params() override {
        return {{"dense.weight", &weights_, &wgrad_}, {"dense.bias", &bias_, &bgrad_}};
    }
    std::string name() const override { return "dense"; }

private:
    int in_, out_;
    std::vector<S> weights_, bias_, wgrad_, bgrad_;
    Tensor<S> in_val_;
};

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

template <typename S>
struct LossGrad {
    double loss;
    std::vector<double> probabilities;
    Tensor<S> dlogits;
};

// Max-subtracted softmax; loss = -log p[label]; gradient = p - onehot(label).
template <typename S>
LossGrad<S> softmax_cross_entropy(const Tensor<S>& logits, int label) {
    int k = static_cast<int>(logits.values.size());
    if (k < 2) throw ValidationError("softmax needs K >= 2 classes");
    if (label < 0 || label >= k)
        throw ValidationError("label " + std::to_string(label) + " out of range for K=" +
                              std::to_string(k));
    double mx = static_cast<double>(logits.values[0]);
    for (S v : logits.values) mx = std::max(mx, static_cast<double>(v));
    std::vector<double> p(k);
    double z = 0;
    for (int i = 0; i < k; ++i) {
        p[i] = std::exp(static_cast<double>(logits.values[i]) - mx);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    LossGrad<S> out;
    out.loss = -std::log(std::max(p[label], 1e-300));
    out.probabilities = p;
    out.dlogits = Tensor<S>(logits.shape);
    for (int i = 0; i < k; ++i)
        out.dlogits.values[i] = static_cast<S>(p[i] - (i == label ? 1.0 : 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// Network configuration
// ---------------------------------------------------------------------------

struct LayerSpec {
    enum class Kind { Conv, Relu, MaxPool, Dense };
    Kind kind = Kind::Conv;
    int width = 0;  // conv: out channels; dense: out width
    int kernel = 3;
    int stride = 1;
    int padding = 0;
};

inline LayerSpec conv_spec(int out_channels, int kernel, int stride = 1, int padding = 0) {
    return {LayerSpec::Kind::Conv, out_channels, kernel, stride, padding};
}
inline LayerSpec relu_spec() { return {LayerSpec::Kind::Relu, 0, 0, 0, 0}; }
inline LayerSpec pool_spec() { return {LayerSpec::Kind::MaxPool, 0, 0, 0, 0}; }
inline LayerSpec dense_spec(int out_width) { return {LayerSpec::Kind::Dense, out_width, 0, 0, 0}; }

struct NetworkConfig {
    std::vector<int> image_shape;  // (C, H, W)
    std::vector<int> glcm_shape;   // (C, L, L); ignored when glcm_feature_width == 0
    std::vector<LayerSpec> image_branch;
    std::vector<LayerSpec> glcm_branch;
    int image_feature_width = 64;
    int glcm_feature_width = 16;
    int num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
        if (image_feature_width < 1) throw ValidationError("image_feature_width must be >= 1");
        if (glcm_feature_width < 0) throw ValidationError("glcm_feature_width must be >= 0");
        if (image_shape.size() != 3) throw ValidationError("image_shape must be (C,H,W)");
        if (glcm_feature_width > 0 && glcm_shape.size() != 3)
            throw ValidationError("glcm_shape must be (C,L,L)");
    }
};

inline nlohmann::json layer_spec_to_json(const LayerSpec& s) {
    switch (s.kind) {
        case LayerSpec::Kind::Conv:
            return {{"kind", "conv"}, {"width", s.width}, {"kernel", s.kernel},
                    {"stride", s.stride}, {"padding", s.padding}};
        case LayerSpec::Kind::Relu: return {{"kind", "relu"}};
        case LayerSpec::Kind::MaxPool: return {{"kind", "maxpool"}};
        default: return {{"kind", "dense"}, {"width", s.width}};
    }
}

inline LayerSpec layer_spec_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv")
        return conv_spec(j.at("width").get<int>(), j.at("kernel").get<int>(),
                         j.value("stride", 1), j.value("padding", 0));
    if (kind == "relu") return relu_spec();
    if (kind == "maxpool") return pool_spec();
    if (kind == "dense") return dense_spec(j.at("width").get<int>());
    throw ValidationError("unknown layer kind: " + kind);
}

inline nlohmann::json network_config_to_json(const NetworkConfig& c) {
    nlohmann::json ib = nlohmann::json::array(), gb = nlohmann::json::array();
    for (const auto& s : c.image_branch) ib.push_back(layer_spec_to_json(s));
    for (const auto& s : c.glcm_branch) gb.push_back(layer_spec_to_json(s));
    return {{"image_shape", c.image_shape},
            {"glcm_shape", c.glcm_shape},
            {"image_branch", ib},
            {"glcm_branch", gb},
            {"image_feature_width", c.image_feature_width},
            {"glcm_feature_width", c.glcm_feature_width},
            {"num_classes", c.num_classes},
            {"seed", c.seed}};
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.image_shape = j.at("image_shape").get<std::vector<int>>();
    c.glcm_shape = j.at("glcm_shape").get<std::vector<int>>();
    for (const auto& s : j.at("image_branch")) c.image_branch.push_back(layer_spec_from_json(s));
    for (const auto& s : j.at("glcm_branch")) c.glcm_branch.push_back(layer_spec_from_json(s));
    c.image_feature_width = j.at("image_feature_width").get<int>();
    c.glcm_feature_width = j.at("glcm_feature_width").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

// ---------------------------------------------------------------------------
// Dual-branch network
// ---------------------------------------------------------------------------

template <typename S>
class DualBranchNet {
public:
    explicit DualBranchNet(const NetworkConfig& config) : config_(config) {
        config.validate();
        Rng rng(config.seed);
        std::vector<int> ish = build_branch(image_layers_, config.image_branch,
                                            config.image_shape, config.image_feature_width, rng);
        int fusion_in = ish[0];
        if (config.glcm_feature_width > 0) {
            std::vector<int> gsh = build_branch(glcm_layers_, config.glcm_branch,
                                                config.glcm_shape, config.glcm_feature_width, rng);
            fusion_in += gsh[0];
        }
        fusion_ = std::make_unique<Dense<S>>(fusion_in, config.num_classes, rng);
    }

    const NetworkConfig& config() const { return config_; }
    bool has_glcm_branch() const { return !glcm_layers_.empty(); }

    Tensor<S> forward_dual(const Tensor<S>& image, const Tensor<S>& glcm) {
        if (image.shape != config_.image_shape)
            throw ValidationError("image shape " + shape_string(image.shape) +
                                  " does not match config " + shape_string(config_.image_shape));
        Tensor<S> f_img = run_forward(image_layers_, image);
        Tensor<S> fused;
        if (has_glcm_branch()) {
            if (glcm.shape != config_.glcm_shape)
                throw ValidationError("glcm shape " + shape_string(glcm.shape) +
                                      " does not match config " + shape_string(config_.glcm_shape));
            Tensor<S> f_glcm = run_forward(glcm_layers_, glcm);
            fused = Tensor<S>({static_cast<int>(f_img.values.size() + f_glcm.values.size())});
            std::copy(f_img.values.begin(), f_img.values.end(), fused.values.begin());
            std::copy(f_glcm.values.begin(), f_glcm.values.end(),
                      fused.values.begin() + f_img.values.size());
            image_feature_count_ = f_img.values.size();
        } else {
            fused = std::move(f_img);
            image_feature_count_ = fused.values.size();
        }
        Tensor<S> logits = fusion_->forward(fused);
        if (!logits.finite())
            throw NumericError("non-finite logits in forward pass");
        return logits;
    }

    // Propagates dlogits into every parameter gradient; returns nothing
    // (input gradients are internal).
    void backward(const Tensor<S>& dlogits) {
        Tensor<S> dfused = fusion_->backward(dlogits);
        Tensor<S> d_img({static_cast<int>(image_feature_count_)});
        std::copy(dfused.values.begin(), dfused.values.begin() + image_feature_count_,
                  d_img.values.begin());
        run_backward(image_layers_, d_img);
        if (has_glcm_branch()) {
            Tensor<S> d_glcm({static_cast<int>(dfused.values.size() - image_feature_count_)});
            std::copy(dfused.values.begin() + image_feature_count_, dfused.values.end(),
                      d_glcm.values.begin());
            run_backward(glcm_layers_, d_glcm);
        }
    }

    // Parameter blocks in documented order: image branch layers (input to
    // output), then glcm branch layers, then the fusion head.
    std::vector<ParamBlock<S>> params() {
        std::vector<ParamBlock<S>> out;
        auto add = [&out](std::vector<std::unique_ptr<Layer<S>>>& layers, const std::string& prefix) {
            for (std::size_t i = 0; i < layers.size(); ++i)
                for (auto& p : layers[i]->params())
                    out.push_back({prefix + std::to_string(i) + "." + p.name, p.values, p.grads});
        };
        add(image_layers_, "image.");
        add(glcm_layers_, "glcm.");
        for (auto& p : fusion_->params()) out.push_back({"fusion." + p.name, p.values, p.grads});
        return out;
    }

    void zero_grads() {
        for (auto& p : params())
            std::fill(p.grads->begin(), p.grads->end(), S(0));
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (auto& p : params()) n += static_cast<std::int64_t>(p.values->size());
        return n;
    }

    template <typename T>
    DualBranchNet<T> cast() {
        DualBranchNet<T> other(config_);
        auto src = params();
        auto dst = other.params();
        for (std::size_t b = 0; b < src.size(); ++b)
            for (std::size_t i = 0; i < src[b].values->size(); ++i)
                (*dst[b].values)[i] = static_cast<T>((*src[b].values)[i]);
        return other;
    }

private:
    static std::vector<int> build_branch(std::vector<std::unique_ptr<Layer<S>>>& layers,
                                         const std::vector<LayerSpec>& specs,
                                         std::vector<int> shape, int feature_width, Rng& rng) {
        for (const LayerSpec& s : specs) {
            std::unique_ptr<Layer<S>> layer;
            switch (s.kind) {
                case LayerSpec::Kind::Conv:
                    layer = std::make_unique<Conv2d<S>>(shape[0], s.width, s.kernel, s.stride,
                                                        s.padding, rng);
                    break;
                case LayerSpec::Kind::Relu:
                    layer = std::make_unique<Relu<S>>();
                    break;
                case LayerSpec::Kind::MaxPool:
                    layer = std::make_unique<MaxPool2<S>>();
                    break;
                case LayerSpec::Kind::Dense: {
                    if (shape.size() != 1) {
                        layers.push_back(std::make_unique<Flatten<S>>());
                        shape = layers.back()->output_shape(shape);
                    }
                    layer = std::make_unique<Dense<S>>(shape[0], s.width, rng);
                    break;
                }
            }
            shape = layer->output_shape(shape);
            layers.push_back(std::move(layer));
        }
        // every branch ends in flatten + dense + relu producing its feature vector
        if (shape.size() != 1) {
            layers.push_back(std::make_unique<Flatten<S>>());
            shape = layers.back()->output_shape(shape);
        }
        layers.push_back(std::make_unique<Dense<S>>(shape[0], feature_width, rng));
        shape = {feature_width};
        layers.push_back(std::make_unique<Relu<S>>());
        return shape;
    }

    static Tensor<S> run_forward(std::vector<std::unique_ptr<Layer<S>>>& layers, Tensor<S> x) {
        for (auto& l : layers) x = l->forward(x);
        return x;
    }
    static void run_backward(std::vector<std::unique_ptr<Layer<S>>>& layers, Tensor<S> dy) {
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) dy = (*it)->backward(dy);
    }

    NetworkConfig config_;
    std::vector<std::unique_ptr<Layer<S>>> image_layers_, glcm_layers_;
    std::unique_ptr<Dense<S>> fusion_;
    std::size_t image_feature_count_ = 0;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;
};

// Bias-corrected Adam over a flat parameter view.
template <typename S>
void adam_step(std::vector<ParamBlock<S>>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    std::size_t total = 0;
    for (auto& p : params) total += p.values->size();
    if (state.m.empty()) {
        state.m.assign(total, 0.0);
        state.v.assign(total, 0.0);
    }
    if (state.m.size() != total)
        throw ValidationError("adam state size mismatch");
    ++state.t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    std::size_t k = 0;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p.values->size(); ++i, ++k) {
            double g = static_cast<double>((*p.grads)[i]);
            if (!std::isfinite(g))
                throw NumericError("non-finite gradient in " + p.name);
            state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
            state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g;
            double mhat = state.m[k] / bc1;
            double vhat = state.v[k] / bc2;
            (*p.values)[i] = static_cast<S>(static_cast<double>((*p.values)[i]) -
                                            lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <typename S>
struct Sample {
    Tensor<S> image;
    Tensor<S> glcm;
    int label = 0;
};

struct TrainOptions {
    int epochs = 50;
    double lr = 1e-3;
    int batch_size = 16;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss, test_loss, test_acc;
    int epochs = 0;
};

template <typename S>
std::vector<double> predict_probabilities(DualBranchNet<S>& net, const Sample<S>& sample) {
    Tensor<S> logits = net.forward_dual(sample.image, sample.glcm);
    double mx = static_cast<double>(logits.values[0]);
    for (S v : logits.values) mx = std::max(mx, static_cast<double>(v));
    std::vector<double> p(logits.values.size());
    double z = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits.values[i]) - mx);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return p;
}

template <typename S>
std::pair<double, double> evaluate(DualBranchNet<S>& net, const std::vector<Sample<S>>& samples) {
    if (samples.empty()) return {0.0, 0.0};
    double loss = 0;
    std::int64_t correct = 0;
    for (const auto& s : samples) {
        auto p = predict_probabilities(net, s);
        loss += -std::log(std::max(p[s.label], 1e-12));
        int arg = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[arg]) arg = static_cast<int>(i);
        correct += (arg == s.label);
    }
    return {loss / samples.size(), static_cast<double>(correct) / samples.size()};
}

// Seeded shuffling each epoch; deterministic given seed (single-threaded).
template <typename S>
TrainReport train(DualBranchNet<S>& net, const std::vector<Sample<S>>& train_set,
                  const std::vector<Sample<S>>& test_set, const TrainOptions& opt) {
    if (train_set.empty()) throw ValidationError("empty training set");
    for (const auto& s : train_set)
        if (s.label < 0 || s.label >= net.config().num_classes)
            throw ValidationError("training label out of range");
    TrainReport report;
    report.epochs = opt.epochs;
    Rng rng(opt.seed);
    AdamState state;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            std::size_t end = std::min(order.size(), start + opt.batch_size);
            net.zero_grads();
            double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const Sample<S>& s = train_set[order[i]];
                Tensor<S> logits = net.forward_dual(s.image, s.glcm);
                LossGrad<S> lg = softmax_cross_entropy(logits, s.label);
                if (!std::isfinite(lg.loss))
                    throw NumericError("training diverged at epoch " + std::to_string(epoch));
                epoch_loss += lg.loss;
                for (auto& v : lg.dlogits.values) v = static_cast<S>(static_cast<double>(v) * inv);
                net.backward(lg.dlogits);
            }
            auto params = net.params();
            adam_step(params, state, opt.lr, opt.beta1, opt.beta2, opt.eps);
        }
        report.train_loss.push_back(epoch_loss / train_set.size());
        auto [tl, ta] = evaluate(net, test_set);
        report.test_loss.push_back(tl);
        report.test_acc.push_back(ta);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Gradient checking (64-bit mode)
// ---------------------------------------------------------------------------

// Central-difference check of every parameter gradient; returns the max
// relative error. Relative error uses a small floor so exactly-zero pairs
// report 0.
inline double gradient_relative_error(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

inline double gradient_check(DualBranchNet<double>& net, const Sample<double>& sample,
                             double step = 1e-5) {
    net.zero_grads();
    Tensor<double> logits = net.forward_dual(sample.image, sample.glcm);
    LossGrad<double> lg = softmax_cross_entropy(logits, sample.label);
    net.backward(lg.dlogits);

    auto params = net.params();
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) analytic.push_back(*p.grads);

    double max_err = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].values->size(); ++i) {
            double saved = (*params[b].values)[i];
            (*params[b].values)[i] = saved + step;
            double lp = softmax_cross_entropy(net.forward_dual(sample.image, sample.glcm),
                                              sample.label).loss;
            (*params[b].values)[i] = saved - step;
            double lm = softmax_cross_entropy(net.forward_dual(sample.image, sample.glcm),
                                              sample.label).loss;
            (*params[b].values)[i] = saved;
            double numeric = (lp - lm) / (2 * step);
            max_err = std::max(max_err, gradient_relative_error(analytic[b][i], numeric));
        }
    }
    return max_err;
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON header line (config, seed, epoch) followed by the
// raw little-endian float32 parameter blob in params() order.
// ---------------------------------------------------------------------------

template <typename S>
void save_checkpoint(const std::string& path, DualBranchNet<S>& net, int epoch) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    nlohmann::json h = {
        {"magic", "NET1"},
        {"config", network_config_to_json(net.config())},
        {"seed", net.config().seed},
        {"epoch", epoch},
        {"param_count", net.param_count()},
    };
    out << h.dump() << "\n";
    for (auto& p : net.params())
        for (S v : *p.values) {
            float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof(float));
        }
    if (!out) throw IoError("write failed: " + path);
}

template <typename S>
DualBranchNet<S> load_checkpoint(const std::string& path, int* epoch_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": missing header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed header: " + e.what());
    }
    if (h.value("magic", "") != "NET1") throw IoError(path + ": magic mismatch, expected NET1");
    DualBranchNet<S> net(network_config_from_json(h.at("config")));
    if (epoch_out) *epoch_out = h.value("epoch", 0);
    std::int64_t expected = h.at("param_count").get<std::int64_t>();
    if (expected != net.param_count())
        throw IoError(path + ": parameter count mismatch");
    for (auto& p : net.params())
        for (auto& v : *p.values) {
            float f;
            in.read(reinterpret_cast<char*>(&f), sizeof(float));
            if (!in) throw IoError(path + ": truncated parameter blob");
            v = static_cast<S>(f);
        }
    return net;
}

// Small default branch architectures used by the CLI presets.
inline std::vector<LayerSpec> default_image_branch() {
    return {conv_spec(4, 5, 2, 2), relu_spec(), pool_spec(),
            conv_spec(8, 3, 2, 1), relu_spec()};
}
inline std::vector<LayerSpec> default_glcm_branch() {
    return {conv_spec(4, 3, 2, 1), relu_spec(), pool_spec()};
}

} // namespace glcmcnn

#endif // GLCMCNN_NET_HPP
