#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include <glcmcnn/metrics.hpp>
#include <glcmcnn/synth.hpp>

using namespace glcmcnn;

TEST_CASE("accuracy examples") {
    std::vector<std::vector<double>> all_correct{{0.9, 0.1}, {0.2, 0.8}};
    CHECK(accuracy(all_correct, {0, 1}) == 1.0);

    std::vector<std::vector<double>> uniform{{0.25, 0.25, 0.25, 0.25}};
    // argmax ties break toward class 0
    CHECK(accuracy(uniform, {0}) == 1.0);
    CHECK(accuracy(uniform, {3}) == 0.0);

    std::vector<std::vector<double>> mixed{{0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.1}};
    CHECK(accuracy(mixed, {0, 0, 1, 1}) == 0.75);

    CHECK_THROWS_AS(accuracy(mixed, {0, 1}), ValidationError);
}

TEST_CASE("mean cross entropy examples") {
    std::vector<std::vector<double>> perfect{{1.0, 0.0}, {0.0, 1.0}};
    CHECK(mean_cross_entropy(perfect, {0, 1}) == Catch::Approx(0.0).margin(1e-9));

    std::vector<std::vector<double>> uniform{{0.25, 0.25, 0.25, 0.25}};
    CHECK(mean_cross_entropy(uniform, {2}) == Catch::Approx(std::log(4.0)));

    std::vector<std::vector<double>> half{{1.0, 0.0, 0.0, 0.0}, {0.25, 0.25, 0.25, 0.25}};
    CHECK(mean_cross_entropy(half, {0, 1}) == Catch::Approx(std::log(4.0) / 2).margin(1e-9));

    std::vector<std::vector<double>> bad{{0.5, 0.1}};
    CHECK_THROWS_AS(mean_cross_entropy(bad, {0}), ValidationError);
}

TEST_CASE("auc examples") {
    CHECK(auc_one_vs_others({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, 1) == 1.0);
    CHECK(auc_one_vs_others({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}, 1) == 0.5);
    // 2 pos*neg pairs: (0.9 vs 0.8) win, (0.3 vs 0.8) loss
    CHECK(auc_one_vs_others({0.9, 0.8, 0.3}, {1, 0, 1}, 1) == 0.5);
    CHECK_THROWS_AS(auc_one_vs_others({0.9, 0.8}, {1, 1}, 1), ValidationError);
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(201);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        scores.push_back(rng.uniform());
        labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    double base = auc_one_vs_others(scores, labels, 1);
    std::vector<double> transformed;
    for (double s : scores) transformed.push_back(std::exp(3 * s) + 7);
    CHECK(auc_one_vs_others(transformed, labels, 1) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("auc of negated scores complements") {
    Rng rng(203);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        scores.push_back(rng.uniform());
        labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> neg;
    for (double s : scores) neg.push_back(-s);
    CHECK(auc_one_vs_others(scores, labels, 1) + auc_one_vs_others(neg, labels, 1) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("cross entropy decreases when the true-class probability rises") {
    std::vector<std::vector<double>> low{{0.4, 0.6}};
    std::vector<std::vector<double>> high{{0.7, 0.3}};
    CHECK(mean_cross_entropy(high, {0}) < mean_cross_entropy(low, {0}));
}

TEST_CASE("cross_validate aggregates fold metrics") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "glcmcnn_xval_test";
    fs::remove_all(dir);
    SynthSpec spec;
    spec.samples_per_class = 10;
    spec.k_folds = 2;
    spec.seed = 7;
    auto ds = generate_dataset(spec, dir.string());

    PipelineConfig pipe;
    pipe.quant = {16, 0.0, 255.0, true};
    NetworkConfig cfg;
    cfg.image_shape = {1, 64, 64};
    cfg.glcm_shape = {1, 16, 16};
    cfg.image_branch = {conv_spec(2, 5, 4, 0), relu_spec()};
    cfg.glcm_branch = {pool_spec()};
    cfg.image_feature_width = 8;
    cfg.glcm_feature_width = 8;
    cfg.num_classes = 2;
    cfg.seed = 1;
    TrainOptions opt;
    opt.epochs = 3;
    opt.seed = 1;

    EvalResult r = cross_validate<float>(cfg, ds.manifest_path, ds.entries, pipe, 2, opt);
    REQUIRE(r.folds.size() == 2);
    int total = 0;
    double weighted_acc = 0, weighted_loss = 0;
    for (const auto& f : r.folds) {
        CHECK(f.test_count == 10);
        CHECK(f.accuracy >= 0.0);
        CHECK(f.accuracy <= 1.0);
        CHECK(f.loss >= 0.0);
        REQUIRE(f.auc.size() == 2);
        total += f.test_count;
        weighted_acc += f.accuracy * f.test_count;
        weighted_loss += f.loss * f.test_count;
    }
    CHECK(r.accuracy == Catch::Approx(weighted_acc / total).margin(1e-12));
    CHECK(r.mean_loss == Catch::Approx(weighted_loss / total).margin(1e-12));
    for (double a : r.auc) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }

    // deterministic under a fixed seed
    EvalResult r2 = cross_validate<float>(cfg, ds.manifest_path, ds.entries, pipe, 2, opt);
    CHECK(r.accuracy == r2.accuracy);
    CHECK(r.mean_loss == r2.mean_loss);
    fs::remove_all(dir);
}

TEST_CASE("cross_validate rejects out-of-range folds") {
    std::vector<ManifestEntry> entries{{"a", "a.grd", "a.msk", 0, 5}};
    PipelineConfig pipe;
    NetworkConfig cfg;
    cfg.image_shape = {1, 4, 4};
    cfg.glcm_shape = {1, 4, 4};
    cfg.num_classes = 2;
    TrainOptions opt;
    CHECK_THROWS_AS(cross_validate<float>(cfg, "m.csv", entries, pipe, 2, opt),
                    ValidationError);
}
