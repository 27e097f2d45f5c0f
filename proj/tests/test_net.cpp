#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <limits>

#include <glcmcnn/net.hpp>

using namespace glcmcnn;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1, double hi = 1) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

NetworkConfig small_dual_config() {
    NetworkConfig cfg;
    cfg.image_shape = {1, 16, 16};
    cfg.glcm_shape = {1, 8, 8};
    cfg.image_branch = {conv_spec(3, 3, 1, 1), relu_spec(), pool_spec()};
    cfg.glcm_branch = {conv_spec(2, 3, 1, 0), relu_spec()};
    cfg.image_feature_width = 8;
    cfg.glcm_feature_width = 4;
    cfg.num_classes = 3;
    cfg.seed = 42;
    return cfg;
}

// Finite-difference check of a single layer through a scalar readout
// sum(w_out * y) so the loss is generic in every output element.
double layer_fd_check(Layer<double>& layer, const Tensor<double>& input, Rng& rng) {
    Tensor<double> y = layer.forward(input);
    Tensor<double> readout = random_tensor(y.shape, rng);
    auto loss_of = [&](const Tensor<double>& x) {
        Tensor<double> out = layer.forward(x);
        double l = 0;
        for (std::size_t i = 0; i < out.values.size(); ++i) l += readout.values[i] * out.values[i];
        return l;
    };
    // analytic gradients
    for (auto& p : layer.params()) std::fill(p.grads->begin(), p.grads->end(), 0.0);
    layer.forward(input);
    Tensor<double> dx = layer.backward(readout);

    const double h = 1e-6;
    double max_err = 0;
    // input gradient
    Tensor<double> xp = input;
    for (std::size_t i = 0; i < input.values.size(); ++i) {
        double saved = xp.values[i];
        xp.values[i] = saved + h;
        double lp = loss_of(xp);
        xp.values[i] = saved - h;
        double lm = loss_of(xp);
        xp.values[i] = saved;
        max_err = std::max(max_err,
                           gradient_relative_error(dx.values[i], (lp - lm) / (2 * h)));
    }
    // parameter gradients
    layer.forward(input);
    layer.backward(readout); // grads now hold 2x; redo cleanly instead
    for (auto& p : layer.params()) std::fill(p.grads->begin(), p.grads->end(), 0.0);
    layer.forward(input);
    layer.backward(readout);
    for (auto& p : layer.params()) {
        std::vector<double> analytic = *p.grads;
        for (std::size_t i = 0; i < p.values->size(); ++i) {
            double saved = (*p.values)[i];
            (*p.values)[i] = saved + h;
            double lp = loss_of(input);
            (*p.values)[i] = saved - h;
            double lm = loss_of(input);
            (*p.values)[i] = saved;
            max_err = std::max(max_err,
                               gradient_relative_error(analytic[i], (lp - lm) / (2 * h)));
        }
    }
    return max_err;
}

} // namespace

TEST_CASE("conv with 1x1 identity kernel is the identity map") {
    Rng rng(1);
    Conv2d<double> conv(1, 1, 1, 1, 0, rng);
    auto params = conv.params();
    (*params[0].values)[0] = 1.0; // weight
    (*params[1].values)[0] = 0.0; // bias
    Tensor<double> x = random_tensor({1, 4, 5}, rng);
    Tensor<double> y = conv.forward(x);
    CHECK(y.shape == x.shape);
    CHECK(y.values == x.values);
}

TEST_CASE("conv on zero input gives zero output and zero kernel gradient") {
    Rng rng(2);
    Conv2d<double> conv(1, 2, 3, 1, 1, rng);
    Tensor<double> x({1, 5, 5}, 0.0);
    Tensor<double> y = conv.forward(x);
    for (double v : y.values) CHECK(v == 0.0); // zero-init bias
    Tensor<double> dy(y.shape, 1.0);
    conv.backward(dy);
    auto params = conv.params();
    for (double g : *params[0].grads) CHECK(g == 0.0);
}

TEST_CASE("conv backward matches finite differences") {
    Rng rng(3);
    Conv2d<double> conv(2, 3, 3, 1, 1, rng);
    Tensor<double> x = random_tensor({2, 5, 5}, rng);
    CHECK(layer_fd_check(conv, x, rng) < 1e-4);
    Conv2d<double> strided(1, 2, 3, 2, 0, rng);
    Tensor<double> x2 = random_tensor({1, 7, 7}, rng);
    CHECK(layer_fd_check(strided, x2, rng) < 1e-4);
}

TEST_CASE("relu forward values") {
    Relu<double> relu;
    Tensor<double> x({3});
    x.values = {-1.0, 0.0, 2.0};
    Tensor<double> y = relu.forward(x);
    CHECK(y.values == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("relu and maxpool and dense backward match finite differences") {
    Rng rng(4);
    Relu<double> relu;
    Tensor<double> x = random_tensor({2, 4, 4}, rng);
    // keep away from the kink
    for (auto& v : x.values)
        if (std::abs(v) < 1e-3) v = 0.1;
    CHECK(layer_fd_check(relu, x, rng) < 1e-4);

    MaxPool2<double> pool;
    Tensor<double> xp = random_tensor({2, 6, 6}, rng);
    CHECK(layer_fd_check(pool, xp, rng) < 1e-4);

    Dense<double> dense(12, 5, rng);
    Tensor<double> xd = random_tensor({12}, rng);
    CHECK(layer_fd_check(dense, xd, rng) < 1e-4);
}

TEST_CASE("maxpool of constant block routes gradient to first element") {
    MaxPool2<double> pool;
    Tensor<double> x({1, 2, 2}, 3.5);
    Tensor<double> y = pool.forward(x);
    REQUIRE(y.values.size() == 1);
    CHECK(y.values[0] == 3.5);
    Tensor<double> dy({1, 1, 1}, 1.0);
    Tensor<double> dx = pool.backward(dy);
    CHECK(dx.values == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("softmax cross entropy examples") {
    Tensor<double> uniform({4}, 0.0);
    LossGrad<double> lg = softmax_cross_entropy(uniform, 2);
    CHECK(lg.loss == Catch::Approx(std::log(4.0)));
    for (double p : lg.probabilities) CHECK(p == Catch::Approx(0.25));

    Tensor<double> confident({3});
    confident.values = {50.0, 0.0, 0.0};
    CHECK(softmax_cross_entropy(confident, 0).loss == Catch::Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(softmax_cross_entropy(uniform, 4), ValidationError);
    CHECK_THROWS_AS(softmax_cross_entropy(uniform, -1), ValidationError);
}

TEST_CASE("softmax gradient matches finite differences and sums to zero") {
    Rng rng(6);
    Tensor<double> logits = random_tensor({5}, rng, -2, 2);
    LossGrad<double> lg = softmax_cross_entropy(logits, 3);
    double psum = 0;
    for (double p : lg.probabilities) psum += p;
    CHECK(psum == Catch::Approx(1.0).margin(1e-12));
    const double h = 1e-6;
    for (int i = 0; i < 5; ++i) {
        Tensor<double> l2 = logits;
        l2.values[i] += h;
        double lp = softmax_cross_entropy(l2, 3).loss;
        l2.values[i] -= 2 * h;
        double lm = softmax_cross_entropy(l2, 3).loss;
        CHECK(gradient_relative_error(lg.dlogits.values[i], (lp - lm) / (2 * h)) < 1e-4);
    }
}

TEST_CASE("kaiming init statistics") {
    Rng rng(7);
    CHECK(std::sqrt(2.0 / 2) == Catch::Approx(1.0));
    CHECK(std::sqrt(2.0 / 100) == Catch::Approx(0.1414).margin(1e-3));
    double sum = 0, sumsq = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double w = kaiming_init(50, rng);
        sum += w;
        sumsq += w * w;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == Catch::Approx(0.04).epsilon(0.05));
}

TEST_CASE("adam hand-evaluated first step") {
    std::vector<double> w{1.0}, g{1.0};
    std::vector<ParamBlock<double>> params{{"w", &w, &g}};
    AdamState state;
    adam_step(params, state, 0.1);
    // bias correction makes mhat = vhat = 1 at t=1
    CHECK(w[0] == Catch::Approx(0.9).margin(1e-6));
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
    std::vector<double> w{1.5, -2.0}, g{0.0, 0.0};
    std::vector<ParamBlock<double>> params{{"w", &w, &g}};
    AdamState state;
    for (int t = 0; t < 10; ++t) adam_step(params, state, 0.1);
    CHECK(w == std::vector<double>{1.5, -2.0});
}

TEST_CASE("adam rejects non-finite gradients") {
    std::vector<double> w{1.0}, g{std::numeric_limits<double>::quiet_NaN()};
    std::vector<ParamBlock<double>> params{{"w", &w, &g}};
    AdamState state;
    CHECK_THROWS_AS(adam_step(params, state, 0.1), NumericError);
}

TEST_CASE("fusion layer width follows concatenated features") {
    NetworkConfig cfg = small_dual_config();
    cfg.image_feature_width = 8;
    cfg.glcm_feature_width = 4;
    DualBranchNet<double> net(cfg);
    auto params = net.params();
    // last two blocks are the fusion dense weight and bias
    CHECK(params[params.size() - 2].values->size() == 12u * 3u);
    CHECK(params.back().values->size() == 3u);
}

TEST_CASE("zeroing glcm-branch weights makes logits independent of glcm input") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<double> net(cfg);
    for (auto& p : net.params())
        if (p.name.rfind("glcm.", 0) == 0)
            std::fill(p.values->begin(), p.values->end(), 0.0);
    Rng rng(8);
    Tensor<double> image = random_tensor({1, 16, 16}, rng);
    Tensor<double> g1 = random_tensor({1, 8, 8}, rng);
    Tensor<double> g2 = random_tensor({1, 8, 8}, rng);
    CHECK(net.forward_dual(image, g1).values == net.forward_dual(image, g2).values);
}

TEST_CASE("gradients flow to both branches") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<double> net(cfg);
    Rng rng(9);
    Tensor<double> image = random_tensor({1, 16, 16}, rng);
    Tensor<double> glcm = random_tensor({1, 8, 8}, rng, 0, 2);
    net.zero_grads();
    LossGrad<double> lg = softmax_cross_entropy(net.forward_dual(image, glcm), 1);
    net.backward(lg.dlogits);
    double image_norm = 0, glcm_norm = 0;
    for (auto& p : net.params()) {
        double n = 0;
        for (double g : *p.grads) n += g * g;
        if (p.name.rfind("image.", 0) == 0) image_norm += n;
        if (p.name.rfind("glcm.", 0) == 0) glcm_norm += n;
    }
    CHECK(image_norm > 0.0);
    CHECK(glcm_norm > 0.0);
}

TEST_CASE("full dual-branch gradient check") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<double> net(cfg);
    Rng rng(10);
    Sample<double> s;
    s.image = random_tensor({1, 16, 16}, rng);
    s.glcm = random_tensor({1, 8, 8}, rng, 0, 2);
    s.label = 2;
    CHECK(gradient_check(net, s) < 1e-4);
}

TEST_CASE("gradient check harness catches a sign-flipped backward") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<double> net(cfg);
    Rng rng(11);
    Sample<double> s;
    s.image = random_tensor({1, 16, 16}, rng);
    s.glcm = random_tensor({1, 8, 8}, rng, 0, 2);
    s.label = 0;
    // replicate the check loop with corrupted (negated) analytic gradients
    net.zero_grads();
    LossGrad<double> lg = softmax_cross_entropy(net.forward_dual(s.image, s.glcm), s.label);
    net.backward(lg.dlogits);
    auto params = net.params();
    double max_err = 0;
    const double h = 1e-5;
    auto& block = params.back(); // fusion bias: gradients are p - onehot, never all tiny
    for (std::size_t i = 0; i < block.values->size(); ++i) {
        double corrupted = -(*block.grads)[i];
        double saved = (*block.values)[i];
        (*block.values)[i] = saved + h;
        double lp = softmax_cross_entropy(net.forward_dual(s.image, s.glcm), s.label).loss;
        (*block.values)[i] = saved - h;
        double lm = softmax_cross_entropy(net.forward_dual(s.image, s.glcm), s.label).loss;
        (*block.values)[i] = saved;
        max_err = std::max(max_err, gradient_relative_error(corrupted, (lp - lm) / (2 * h)));
    }
    CHECK(max_err > 1e-2);
}

TEST_CASE("zero-weight zero-input net reports zero gradient error") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<double> net(cfg);
    for (auto& p : net.params()) std::fill(p.values->begin(), p.values->end(), 0.0);
    Sample<double> s;
    s.image = Tensor<double>({1, 16, 16}, 0.0);
    s.glcm = Tensor<double>({1, 8, 8}, 0.0);
    s.label = 0;
    // all logits are zero; gradient p - onehot is nonzero only in the fusion
    // bias, everything upstream is exactly zero on both routes
    double err = gradient_check(net, s);
    CHECK(err < 1e-4);
}

TEST_CASE("training separates a linearly separable toy set") {
    NetworkConfig cfg;
    cfg.image_shape = {1, 4, 4};
    cfg.glcm_shape = {1, 4, 4};
    cfg.image_branch = {};
    cfg.glcm_branch = {};
    cfg.image_feature_width = 8;
    cfg.glcm_feature_width = 4;
    cfg.num_classes = 2;
    cfg.seed = 1;
    DualBranchNet<float> net(cfg);
    Rng rng(12);
    std::vector<Sample<float>> train_set, test_set;
    for (int i = 0; i < 60; ++i) {
        Sample<float> s;
        s.label = i % 2;
        s.image = Tensor<float>({1, 4, 4});
        s.glcm = Tensor<float>({1, 4, 4});
        for (auto& v : s.image.values)
            v = static_cast<float>(rng.uniform(0, 0.2) + (s.label ? 1.0 : 0.0));
        for (auto& v : s.glcm.values) v = static_cast<float>(rng.uniform(0, 1));
        (i < 40 ? train_set : test_set).push_back(std::move(s));
    }
    TrainOptions opt;
    opt.epochs = 50;
    opt.lr = 1e-2;
    opt.seed = 3;
    TrainReport report = train(net, train_set, test_set, opt);
    REQUIRE(report.test_acc.size() == 50);
    CHECK(report.test_acc.back() == 1.0);
}

TEST_CASE("zero epochs yields an empty history") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<float> net(cfg);
    std::vector<Sample<float>> train_set(1);
    train_set[0].image = Tensor<float>({1, 16, 16}, 0.1f);
    train_set[0].glcm = Tensor<float>({1, 8, 8}, 0.1f);
    train_set[0].label = 0;
    TrainOptions opt;
    opt.epochs = 0;
    TrainReport report = train(net, train_set, {}, opt);
    CHECK(report.train_loss.empty());
    CHECK(report.epochs == 0);
}

TEST_CASE("untrained balanced loss is about ln K") {
    NetworkConfig cfg = small_dual_config();
    cfg.num_classes = 4;
    DualBranchNet<double> net(cfg);
    // kaiming init keeps logits small; loss should sit near ln 4
    Rng rng(14);
    double loss = 0;
    const int n = 32;
    for (int i = 0; i < n; ++i) {
        Sample<double> s;
        s.image = random_tensor({1, 16, 16}, rng, 0, 1);
        s.glcm = random_tensor({1, 8, 8}, rng, 0, 1);
        s.label = i % 4;
        loss += softmax_cross_entropy(net.forward_dual(s.image, s.glcm), s.label).loss;
    }
    loss /= n;
    CHECK(loss == Catch::Approx(std::log(4.0)).margin(0.5));
}

TEST_CASE("training is bit-identical across runs with equal seeds") {
    auto run = [] {
        NetworkConfig cfg = small_dual_config();
        cfg.num_classes = 2;
        DualBranchNet<float> net(cfg);
        Rng rng(15);
        std::vector<Sample<float>> data;
        for (int i = 0; i < 24; ++i) {
            Sample<float> s;
            s.image = Tensor<float>({1, 16, 16});
            s.glcm = Tensor<float>({1, 8, 8});
            for (auto& v : s.image.values) v = static_cast<float>(rng.uniform(0, 1));
            for (auto& v : s.glcm.values) v = static_cast<float>(rng.uniform(0, 1));
            s.label = i % 2;
            data.push_back(std::move(s));
        }
        TrainOptions opt;
        opt.epochs = 3;
        opt.seed = 9;
        train(net, data, data, opt);
        std::vector<float> flat;
        for (auto& p : net.params())
            flat.insert(flat.end(), p.values->begin(), p.values->end());
        return flat;
    };
    CHECK(run() == run());
}

TEST_CASE("ablated config reproduces the image-only baseline exactly") {
    // glcm_feature_width == 0 must remove the branch entirely
    NetworkConfig cfg = small_dual_config();
    cfg.glcm_feature_width = 0;
    cfg.glcm_branch.clear();
    DualBranchNet<double> net(cfg);
    CHECK_FALSE(net.has_glcm_branch());
    for (auto& p : net.params()) CHECK(p.name.rfind("glcm.", 0) != 0);
    Rng rng(16);
    Tensor<double> image = random_tensor({1, 16, 16}, rng);
    Tensor<double> zeros({1, 8, 8}, 0.0);
    Tensor<double> junk = random_tensor({1, 8, 8}, rng);
    CHECK(net.forward_dual(image, zeros).values == net.forward_dual(image, junk).values);
}

TEST_CASE("checkpoint round-trip preserves parameters") {
    NetworkConfig cfg = small_dual_config();
    DualBranchNet<float> net(cfg);
    std::string path =
        (std::filesystem::temp_directory_path() / "glcmcnn_ckpt_test.net").string();
    save_checkpoint(path, net, 7);
    int epoch = -1;
    DualBranchNet<float> back = load_checkpoint<float>(path, &epoch);
    CHECK(epoch == 7);
    auto p1 = net.params();
    auto p2 = back.params();
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(*p1[i].values == *p2[i].values);
    std::filesystem::remove(path);
}

TEST_CASE("forward rejects mismatched input shapes") {
    DualBranchNet<double> net(small_dual_config());
    Tensor<double> bad({1, 8, 8}, 0.0);
    Tensor<double> glcm({1, 8, 8}, 0.0);
    CHECK_THROWS_AS(net.forward_dual(bad, glcm), ValidationError);
}
