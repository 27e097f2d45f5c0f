// Batch command-line surface for the GLCM-CNN pipeline.
//
// Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 numeric
// failure (no co-occurrence pairs, divergence).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <glcmcnn/glcmcnn.hpp>

using namespace glcmcnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct QuantFlags {
    int levels = 96;
    double range_lo = 0.0;
    double range_hi = 255.0;
    bool strict = false;

    QuantizationSpec spec() const { return {levels, range_lo, range_hi, !strict}; }
    void attach(CLI::App* cmd) {
        cmd->add_option("--levels", levels, "quantization levels L (GLCM side length)");
        cmd->add_option("--range-lo", range_lo, "lower intensity bound");
        cmd->add_option("--range-hi", range_hi, "upper intensity bound");
        cmd->add_flag("--strict-range", strict, "error on out-of-range values instead of clamping");
    }
};

json quant_to_json(const QuantizationSpec& q) {
    return {{"levels", q.levels}, {"range_lo", q.range_lo}, {"range_hi", q.range_hi},
            {"clamp", q.clamp}};
}

QuantizationSpec quant_from_json(const json& j) {
    QuantizationSpec q;
    q.levels = j.value("levels", 96);
    q.range_lo = j.value("range_lo", 0.0);
    q.range_hi = j.value("range_hi", 255.0);
    q.clamp = j.value("clamp", true);
    return q;
}

// Writes the fully resolved configuration next to an output for provenance.
void write_resolved_config(const std::string& out_path, const json& resolved) {
    std::ofstream out(out_path + ".config.json");
    if (!out) throw IoError("cannot write resolved config: " + out_path + ".config.json");
    out << resolved.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path + ": malformed JSON: " + e.what());
    }
}

SynthSpec synth_spec_from_json(const json& j) {
    SynthSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
    s.roi_min_voxels = j.value("roi_min_voxels", s.roi_min_voxels);
    s.roi_max_voxels = j.value("roi_max_voxels", s.roi_max_voxels);
    s.tone_lo = j.value("tone_lo", s.tone_lo);
    s.tone_hi = j.value("tone_hi", s.tone_hi);
    s.jitter_sigma = j.value("jitter_sigma", s.jitter_sigma);
    s.background_lo = j.value("background_lo", s.background_lo);
    s.background_hi = j.value("background_hi", s.background_hi);
    s.k_folds = j.value("k_folds", s.k_folds);
    s.seed = j.value("seed", s.seed);
    return s;
}

json synth_spec_to_json(const SynthSpec& s) {
    return {{"width", s.width},
            {"height", s.height},
            {"num_classes", s.num_classes},
            {"samples_per_class", s.samples_per_class},
            {"roi_min_voxels", s.roi_min_voxels},
            {"roi_max_voxels", s.roi_max_voxels},
            {"tone_lo", s.tone_lo},
            {"tone_hi", s.tone_hi},
            {"jitter_sigma", s.jitter_sigma},
            {"background_lo", s.background_lo},
            {"background_hi", s.background_hi},
            {"k_folds", s.k_folds},
            {"seed", s.seed}};
}

struct TrainSetup {
    PipelineConfig pipe;
    NetworkConfig net;
    TrainOptions opt;
    json resolved;
};

// Builds the training setup from an optional JSON config file plus CLI
// overrides; network input shapes are derived from the data.
TrainSetup make_train_setup(const std::string& config_path, const std::string& manifest_path,
                            const std::vector<ManifestEntry>& entries,
                            std::optional<std::uint64_t> seed_override,
                            std::optional<double> lr_override,
                            std::optional<int> epochs_override, bool ablate_glcm) {
    json cfg = json::object();
    if (!config_path.empty()) cfg = load_json_file(config_path);

    TrainSetup setup;
    json pipe = cfg.value("pipeline", json::object());
    setup.pipe.quant = quant_from_json(pipe);
    setup.pipe.regime = regime_from_string(pipe.value("regime", std::string("2d")));
    setup.pipe.symmetric = pipe.value("symmetric", true);
    setup.pipe.displacement = pipe.value("displacement", 1);
    if (!pipe.contains("levels")) setup.pipe.quant.levels = 32; // training default

    json tr = cfg.value("train", json::object());
    setup.opt.epochs = epochs_override.value_or(tr.value("epochs", 20));
    setup.opt.lr = lr_override.value_or(tr.value("lr", 1e-3));
    setup.opt.batch_size = tr.value("batch_size", 16);
    setup.opt.seed = seed_override.value_or(tr.value("seed", 0));

    int num_classes = 0;
    for (const auto& e : entries) num_classes = std::max(num_classes, e.label + 1);

    // probe the first sample for input shapes
    fs::path base = fs::path(manifest_path).parent_path();
    GridImage first = load_volume((base / entries.at(0).image_path).string());

    json net = cfg.value("network", json::object());
    setup.net.image_shape = {first.channels, first.dims.y, first.dims.x};
    setup.net.glcm_shape = {first.channels, setup.pipe.quant.levels, setup.pipe.quant.levels};
    setup.net.image_feature_width = net.value("image_feature_width", 64);
    setup.net.glcm_feature_width = ablate_glcm ? 0 : net.value("glcm_feature_width", 16);
    setup.net.num_classes = net.value("num_classes", num_classes);
    setup.net.seed = net.value("seed", setup.opt.seed);
    if (net.contains("image_branch"))
        for (const auto& l : net["image_branch"])
            setup.net.image_branch.push_back(layer_spec_from_json(l));
    else
        setup.net.image_branch = default_image_branch();
    if (net.contains("glcm_branch"))
        for (const auto& l : net["glcm_branch"])
            setup.net.glcm_branch.push_back(layer_spec_from_json(l));
    else
        setup.net.glcm_branch = default_glcm_branch();

    setup.resolved = {
        {"pipeline",
         {{"levels", setup.pipe.quant.levels},
          {"range_lo", setup.pipe.quant.range_lo},
          {"range_hi", setup.pipe.quant.range_hi},
          {"clamp", setup.pipe.quant.clamp},
          {"regime", to_string(setup.pipe.regime)},
          {"symmetric", setup.pipe.symmetric},
          {"displacement", setup.pipe.displacement}}},
        {"network", network_config_to_json(setup.net)},
        {"train",
         {{"epochs", setup.opt.epochs},
          {"lr", setup.opt.lr},
          {"batch_size", setup.opt.batch_size},
          {"seed", setup.opt.seed}}},
        {"ablate_glcm", ablate_glcm},
    };
    return setup;
}

void write_report_csv(const std::string& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << "epoch,train_loss,test_loss,test_acc\n";
    for (std::size_t i = 0; i < report.train_loss.size(); ++i)
        out << i << "," << report.train_loss[i] << "," << report.test_loss[i] << ","
            << report.test_acc[i] << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"GLCM-CNN toolkit: irregular-ROI co-occurrence images, texture features, "
                 "and a dual-branch classifier"};
    app.require_subcommand(1);

    // ---- glcm ----
    auto* cmd_glcm = app.add_subcommand("glcm", "build a GLCM image from an image + ROI mask");
    std::string g_image, g_mask, g_out, g_regime = "2d", g_norm = "probability";
    bool g_asymmetric = false;
    int g_displacement = 1;
    QuantFlags g_quant;
    cmd_glcm->add_option("--image", g_image, "GRD1 input volume")->required();
    cmd_glcm->add_option("--mask", g_mask, "MSK1 ROI mask")->required();
    cmd_glcm->add_option("--out", g_out, "output GRD1 GLCM image")->required();
    cmd_glcm->add_option("--regime", g_regime, "2d | 3d-iso | 3d-aniso | multichannel");
    cmd_glcm->add_option("--norm", g_norm, "probability | raw | log1p");
    cmd_glcm->add_flag("--asymmetric", g_asymmetric, "asymmetric counting mode");
    cmd_glcm->add_option("--displacement", g_displacement, "offset distance in voxels");
    g_quant.attach(cmd_glcm);

    // ---- features ----
    auto* cmd_features = app.add_subcommand("features", "compute texture features as CSV");
    std::string f_glcm_image, f_image, f_mask, f_manifest, f_out;
    QuantFlags f_quant;
    cmd_features->add_option("--glcm-image", f_glcm_image, "probability GLCM image (GRD1)");
    cmd_features->add_option("--image", f_image, "GRD1 image (with --mask)");
    cmd_features->add_option("--mask", f_mask, "MSK1 mask");
    cmd_features->add_option("--manifest", f_manifest, "batch mode: manifest CSV");
    cmd_features->add_option("--out", f_out, "output CSV")->required();
    f_quant.attach(cmd_features);

    // ---- synth ----
    auto* cmd_synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    std::string s_spec, s_outdir, s_preset;
    std::optional<std::uint64_t> s_seed;
    cmd_synth->add_option("--spec", s_spec, "SynthSpec JSON file");
    cmd_synth->add_option("--preset", s_preset, "named preset: micro-roi");
    cmd_synth->add_option("--outdir", s_outdir, "output directory")->required();
    cmd_synth->add_option("--seed", s_seed, "override the spec seed");

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "train the dual-branch model");
    std::string t_config, t_manifest, t_out_prefix;
    int t_test_fold = 0;
    bool t_ablate = false;
    std::optional<std::uint64_t> t_seed;
    std::optional<double> t_lr;
    std::optional<int> t_epochs;
    cmd_train->add_option("--config", t_config, "JSON run config");
    cmd_train->add_option("--manifest", t_manifest, "dataset manifest CSV")->required();
    cmd_train->add_option("--out-prefix", t_out_prefix, "output prefix")->required();
    cmd_train->add_option("--test-fold", t_test_fold, "fold held out for testing");
    cmd_train->add_flag("--ablate-glcm", t_ablate, "train the image-only baseline");
    cmd_train->add_option("--seed", t_seed, "override seed");
    cmd_train->add_option("--lr", t_lr, "override learning rate");
    cmd_train->add_option("--epochs", t_epochs, "override epoch count");

    // ---- xval ----
    auto* cmd_xval = app.add_subcommand("xval", "k-fold cross validation");
    std::string x_config, x_manifest, x_out;
    int x_k = 5;
    bool x_ablate = false;
    std::optional<std::uint64_t> x_seed;
    cmd_xval->add_option("--config", x_config, "JSON run config");
    cmd_xval->add_option("--manifest", x_manifest, "dataset manifest CSV")->required();
    cmd_xval->add_option("--out", x_out, "results CSV")->required();
    cmd_xval->add_option("--k", x_k, "number of folds");
    cmd_xval->add_flag("--ablate-glcm", x_ablate, "image-only baseline");
    cmd_xval->add_option("--seed", x_seed, "override seed");

    // ---- eval ----
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    std::string e_checkpoint, e_manifest, e_config;
    std::optional<int> e_fold;
    cmd_eval->add_option("--checkpoint", e_checkpoint, "model checkpoint")->required();
    cmd_eval->add_option("--manifest", e_manifest, "dataset manifest CSV")->required();
    cmd_eval->add_option("--config", e_config, "JSON run config (pipeline section)");
    cmd_eval->add_option("--fold", e_fold, "restrict to one fold");

    CLI11_PARSE(app, argc, argv);

    if (*cmd_glcm) {
        GridImage image = load_volume(g_image);
        RoiMask mask = load_mask(g_mask);
        QuantizationSpec spec = g_quant.spec();
        Normalization norm = normalization_from_string(g_norm);
        bool symmetric = !g_asymmetric;
        GlcmImage out;
        GlcmProvenance prov;
        prov.spec = spec;
        prov.symmetric = symmetric;
        prov.normalization = norm;
        prov.displacement = g_displacement;
        if (g_regime == "multichannel") {
            Regime sub = image.dims.z == 1 ? Regime::TwoD : Regime::ThreeDAniso;
            out = glcm_image_multichannel(image, mask, spec, sub, symmetric, norm, g_displacement);
            prov.regime = sub;
            prov.directions = sub == Regime::TwoD ? directions_2d() : directions_2d();
        } else {
            prov.regime = regime_from_string(g_regime);
            switch (prov.regime) {
                case Regime::TwoD:
                    out = glcm_image_2d(image, mask, spec, symmetric, norm, g_displacement);
                    prov.directions = directions_2d();
                    break;
                case Regime::ThreeDIso:
                    out = glcm_image_3d_isotropic(image, mask, spec, symmetric, norm, g_displacement);
                    prov.directions = directions_3d();
                    break;
                case Regime::ThreeDAniso:
                    out = glcm_image_3d_anisotropic(image, mask, spec, symmetric, norm,
                                                    g_displacement);
                    prov.directions = directions_2d();
                    break;
            }
        }
        save_glcm_image(g_out, out);
        save_glcm_sidecar(g_out + ".json", prov);
        write_resolved_config(g_out, {{"image", g_image},
                                      {"mask", g_mask},
                                      {"quantization", quant_to_json(spec)},
                                      {"regime", g_regime},
                                      {"symmetric", symmetric},
                                      {"normalization", g_norm},
                                      {"displacement", g_displacement}});
        std::cout << "levels=" << out.levels << " channels=" << out.channels
                  << " roi_voxels=" << mask.count() << "\n";
        return 0;
    }

    if (*cmd_features) {
        std::ofstream out(f_out);
        if (!out) throw IoError("cannot write: " + f_out);
        out << "sample,channel";
        for (const char* n : FeatureVector::names()) out << "," << n;
        out << "\n";
        auto emit = [&out](const std::string& id, const GlcmImage& P) {
            for (int c = 0; c < P.channels; ++c) {
                FeatureVector f = feature_vector(P, c);
                out << id << "," << c;
                for (double v : f.as_array()) out << "," << v;
                out << "\n";
            }
        };
        QuantizationSpec spec = f_quant.spec();
        if (!f_manifest.empty()) {
            fs::path base = fs::path(f_manifest).parent_path();
            for (const auto& e : load_manifest(f_manifest)) {
                GridImage img = load_volume((base / e.image_path).string());
                RoiMask mask = load_mask((base / e.mask_path).string());
                emit(e.id, glcm_image_2d(img, mask, spec));
            }
        } else if (!f_glcm_image.empty()) {
            emit("glcm", load_glcm_image(f_glcm_image, Normalization::Probability));
        } else if (!f_image.empty() && !f_mask.empty()) {
            GridImage img = load_volume(f_image);
            RoiMask mask = load_mask(f_mask);
            emit("sample", glcm_image_2d(img, mask, spec));
        } else {
            throw ValidationError("features needs --manifest, --glcm-image, or --image + --mask");
        }
        write_resolved_config(f_out, {{"quantization", quant_to_json(spec)},
                                      {"manifest", f_manifest},
                                      {"glcm_image", f_glcm_image},
                                      {"image", f_image},
                                      {"mask", f_mask}});
        return 0;
    }

    if (*cmd_synth) {
        SynthSpec spec;
        if (!s_spec.empty())
            spec = synth_spec_from_json(load_json_file(s_spec));
        else if (s_preset == "micro-roi")
            spec = micro_roi_preset(0);
        else
            throw ValidationError("synth needs --spec or --preset micro-roi");
        if (s_seed) spec.seed = *s_seed;
        GeneratedDataset ds = generate_dataset(spec, s_outdir);
        write_resolved_config((fs::path(s_outdir) / "dataset").string(),
                              synth_spec_to_json(spec));
        std::cout << "samples=" << ds.entries.size() << " manifest=" << ds.manifest_path << "\n";
        return 0;
    }

    if (*cmd_train) {
        std::vector<ManifestEntry> entries = load_manifest(t_manifest);
        TrainSetup setup = make_train_setup(t_config, t_manifest, entries, t_seed, t_lr,
                                            t_epochs, t_ablate);
        setup.resolved["manifest"] = t_manifest;
        setup.resolved["test_fold"] = t_test_fold;
        std::vector<ManifestEntry> train_entries, test_entries;
        for (const auto& e : entries)
            (e.fold == t_test_fold ? test_entries : train_entries).push_back(e);
        if (train_entries.empty() || test_entries.empty())
            throw ValidationError("test fold " + std::to_string(t_test_fold) +
                                  " leaves an empty split");
        auto train_set = load_samples<float>(t_manifest, train_entries, setup.pipe);
        auto test_set = load_samples<float>(t_manifest, test_entries, setup.pipe);
        DualBranchNet<float> net(setup.net);
        TrainReport report = train(net, train_set, test_set, setup.opt);
        save_checkpoint(t_out_prefix + ".net", net, setup.opt.epochs);
        write_report_csv(t_out_prefix + ".report.csv", report);
        write_resolved_config(t_out_prefix, setup.resolved);
        double final_acc = report.test_acc.empty() ? 0.0 : report.test_acc.back();
        std::cout << "epochs=" << setup.opt.epochs << " final_test_acc=" << final_acc << "\n";
        return 0;
    }

    if (*cmd_xval) {
        std::vector<ManifestEntry> entries = load_manifest(x_manifest);
        TrainSetup setup = make_train_setup(x_config, x_manifest, entries, x_seed, {}, {},
                                            x_ablate);
        setup.resolved["manifest"] = x_manifest;
        setup.resolved["k"] = x_k;
        EvalResult r = cross_validate<float>(setup.net, x_manifest, entries, setup.pipe, x_k,
                                             setup.opt);
        std::ofstream out(x_out);
        if (!out) throw IoError("cannot write: " + x_out);
        out << "fold,n,loss,acc";
        for (int c = 0; c < setup.net.num_classes; ++c) out << ",auc" << (c + 1);
        out << "\n";
        for (const auto& f : r.folds) {
            out << f.fold << "," << f.test_count << "," << f.loss << "," << f.accuracy;
            for (double a : f.auc) out << "," << a;
            out << "\n";
        }
        out << "aggregate," << entries.size() << "," << r.mean_loss << "," << r.accuracy;
        for (double a : r.auc) out << "," << a;
        out << "\n";
        write_resolved_config(x_out, setup.resolved);

        std::cout << "Method\tLoss\tAcc";
        for (int c = 0; c < setup.net.num_classes; ++c) std::cout << "\tAUC" << (c + 1);
        std::cout << "\n" << (x_ablate ? "image-only" : "dual-branch") << "\t" << r.mean_loss
                  << "\t" << r.accuracy;
        for (double a : r.auc) std::cout << "\t" << a;
        std::cout << "\n";
        return 0;
    }

    if (*cmd_eval) {
        int epoch = 0;
        DualBranchNet<float> net = load_checkpoint<float>(e_checkpoint, &epoch);
        PipelineConfig pipe;
        pipe.quant.levels = net.config().glcm_shape.size() == 3 ? net.config().glcm_shape[1] : 32;
        if (!e_config.empty()) {
            json cfg = load_json_file(e_config);
            json pj = cfg.value("pipeline", json::object());
            pipe.quant = quant_from_json(pj);
            pipe.regime = regime_from_string(pj.value("regime", std::string("2d")));
            pipe.symmetric = pj.value("symmetric", true);
            pipe.displacement = pj.value("displacement", 1);
        }
        std::vector<ManifestEntry> entries = load_manifest(e_manifest);
        if (e_fold) {
            std::vector<ManifestEntry> kept;
            for (const auto& e : entries)
                if (e.fold == *e_fold) kept.push_back(e);
            entries = std::move(kept);
        }
        if (entries.empty()) throw ValidationError("no samples selected");
        auto samples = load_samples<float>(e_manifest, entries, pipe);
        FoldResult r = evaluate_fold(net, samples, e_fold.value_or(-1));
        std::cout << "n=" << r.test_count << " loss=" << r.loss << " acc=" << r.accuracy;
        for (std::size_t c = 0; c < r.auc.size(); ++c) std::cout << " auc" << (c + 1) << "=" << r.auc[c];
        std::cout << "\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
