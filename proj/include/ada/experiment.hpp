#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ada/attacks.hpp"
#include "ada/config.hpp"
#include "ada/data.hpp"
#include "ada/defense.hpp"
#include "ada/dump.hpp"
#include "ada/fedsim.hpp"
#include "ada/metrics.hpp"
#include "ada/nn.hpp"

namespace ada {

struct ExperimentConfig {
    // dataset
    std::string dataset_kind = "blobs";  // blobs | idx
    std::size_t blobs_n_per_class = 60;
    std::size_t blobs_dims = 8;
    std::size_t blobs_classes = 4;
    double blobs_spread = 0.3;
    std::string idx_images, idx_labels;
    std::size_t idx_downsample = 1;
    std::size_t idx_limit = 0;  // 0 = all
    double value_range = 1.0;
    double test_fraction = 0.2;

    MlpSpec model;
    int clients = 4;
    int rounds = 30;
    RoundConfig round_cfg;

    std::string attack_method = "grad_match";  // analytic_fc | label_sign | grad_match
    AttackConfig attack_cfg;

    int experiment_seeds = 5;
    std::uint64_t seed = 1;
};

inline Transform parse_transform(const Config& c, const std::string& prefix) {
    Transform t;
    const std::string kind = c.get_str(prefix + ".transform", "identity");
    if (kind == "identity") t.kind = Transform::Kind::Identity;
    else if (kind == "adadefense") t.kind = Transform::Kind::AdaDefense;
    else if (kind == "noise") t.kind = Transform::Kind::GaussianNoise;
    else if (kind == "clip") t.kind = Transform::Kind::Clip;
    else throw ConfigError("config: unknown transform '" + kind + "'");
    t.sigma = c.get_double(prefix + ".noise_sigma", 0.1);
    t.clip = c.get_double(prefix + ".clip_norm", 1.0);
    if (t.sigma < 0.0) throw ConfigError("config: noise_sigma must be >= 0");
    if (t.clip <= 0.0) throw ConfigError("config: clip_norm must be > 0");
    return t;
}

inline ExperimentConfig parse_experiment(const Config& c) {
    ExperimentConfig e;
    e.dataset_kind = c.get_str("dataset.kind", "blobs");
    if (e.dataset_kind == "blobs") {
        e.blobs_n_per_class = static_cast<std::size_t>(c.get_int("dataset.n_per_class", 60));
        e.blobs_dims = static_cast<std::size_t>(c.get_int("dataset.dims", 8));
        e.blobs_classes = static_cast<std::size_t>(c.get_int("dataset.classes", 4));
        e.blobs_spread = c.get_double("dataset.spread", 0.3);
        e.value_range = c.get_double("dataset.value_range", 1.0);
    } else if (e.dataset_kind == "idx") {
        e.idx_images = c.get_str("dataset.images");
        e.idx_labels = c.get_str("dataset.labels");
        e.idx_downsample = static_cast<std::size_t>(c.get_int("dataset.downsample", 1));
        e.idx_limit = static_cast<std::size_t>(c.get_int("dataset.limit", 0));
        e.value_range = c.get_double("dataset.value_range", 255.0);
        if (!std::filesystem::exists(e.idx_images))
            throw ConfigError("config: dataset.images path does not exist: " + e.idx_images);
        if (!std::filesystem::exists(e.idx_labels))
            throw ConfigError("config: dataset.labels path does not exist: " + e.idx_labels);
    } else {
        throw ConfigError("config: unknown dataset.kind '" + e.dataset_kind + "'");
    }
    e.test_fraction = c.get_double("dataset.test_fraction", 0.2);
    if (e.test_fraction < 0.0 || e.test_fraction >= 1.0)
        throw ConfigError("config: dataset.test_fraction must be in [0,1)");

    // model.layers = comma-separated sizes, e.g. "64,16,4"
    {
        const std::string layers = c.get_str("model.layers", "8,4");
        std::size_t pos = 0;
        while (pos < layers.size()) {
            const auto comma = layers.find(',', pos);
            const std::string tok = layers.substr(pos, comma == std::string::npos
                                                           ? std::string::npos
                                                           : comma - pos);
            try {
                e.model.layer_sizes.push_back(static_cast<std::size_t>(std::stoull(tok)));
            } catch (const std::exception&) {
                throw ConfigError("config: bad model.layers entry '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (e.model.layer_sizes.size() < 2)
            throw ConfigError("config: model.layers needs at least two sizes");
    }
    const std::string act = c.get_str("model.activation", "tanh");
    if (act == "tanh") e.model.activation = Activation::Tanh;
    else if (act == "sigmoid") e.model.activation = Activation::Sigmoid;
    else if (act == "relu") e.model.activation = Activation::Relu;
    else throw ConfigError("config: unknown activation '" + act + "'");

    e.clients = static_cast<int>(c.get_int("federation.clients", 4));
    e.rounds = static_cast<int>(c.get_int("federation.rounds", 30));
    if (e.clients < 1) throw ConfigError("config: federation.clients must be >= 1");
    if (e.rounds < 1) throw ConfigError("config: federation.rounds must be >= 1");
    e.round_cfg.local_iterations = static_cast<int>(c.get_int("federation.local_iterations", 1));
    e.round_cfg.batch_size = static_cast<std::size_t>(c.get_int("federation.batch_size", 16));
    e.round_cfg.local_lr = c.get_double("federation.local_lr", 0.1);
    e.round_cfg.transform = parse_transform(c, "federation");
    e.round_cfg.server_lr = c.get_double(
        "federation.server_lr",
        e.round_cfg.transform.kind == Transform::Kind::AdaDefense ? 0.01 : 1.0);

    e.attack_method = c.get_str("attack.method", "grad_match");
    if (e.attack_method != "analytic_fc" && e.attack_method != "label_sign" &&
        e.attack_method != "grad_match")
        throw ConfigError("config: unknown attack.method '" + e.attack_method + "'");
    const std::string dist = c.get_str("attack.distance", "l2");
    if (dist == "l2") e.attack_cfg.distance = DistanceKind::L2;
    else if (dist == "cosine") e.attack_cfg.distance = DistanceKind::CosineSim;
    else throw ConfigError("config: unknown attack.distance '" + dist + "'");
    e.attack_cfg.iterations = static_cast<int>(c.get_int("attack.iterations", 500));
    e.attack_cfg.step_size = c.get_double("attack.step_size", 0.1);
    e.attack_cfg.finite_diff_h = c.get_double("attack.finite_diff_h", 1e-4);

    e.experiment_seeds = static_cast<int>(c.get_int("experiment.seeds", 5));
    if (e.experiment_seeds < 1) throw ConfigError("config: experiment.seeds must be >= 1");
    e.seed = c.get_u64("seed", 1);

    try {
        e.model.validate();
        e.round_cfg.validate();
        e.attack_cfg.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    return e;
}

inline Dataset build_dataset(const ExperimentConfig& e, std::uint64_t seed) {
    if (e.dataset_kind == "blobs")
        return gen_blobs(e.blobs_n_per_class, e.blobs_dims, e.blobs_classes, e.blobs_spread,
                         seed);
    Dataset raw = load_idx(e.idx_images, e.idx_labels);
    if (e.idx_limit > 0 && raw.size() > e.idx_limit) raw.resize(e.idx_limit);
    if (e.idx_downsample > 1)
        for (Sample& s : raw) s.x = downsample(s.x, e.idx_downsample);
    // flatten images to model input vectors
    for (Sample& s : raw) s.x.shape = {s.x.numel()};
    return raw;
}

// Seeded shuffle, then a held-out test split; the train part is trimmed
// so it divides evenly across clients (the remainder joins the test set).
inline std::pair<Dataset, Dataset> train_test_split(Dataset data, double test_fraction,
                                                    int clients, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x7e57);
    std::shuffle(data.begin(), data.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(data.size()));
    std::size_t n_train = data.size() - n_test;
    n_train -= n_train % static_cast<std::size_t>(clients);
    Dataset train(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
    Dataset test(data.begin() + static_cast<std::ptrdiff_t>(n_train), data.end());
    if (train.empty()) throw ConfigError("config: no training data after split");
    return {std::move(train), std::move(test)};
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline void run_train(const ExperimentConfig& e, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Dataset data = build_dataset(e, e.seed);
    auto [train, test] = train_test_split(std::move(data), e.test_fraction, e.clients, e.seed);
    Params global = init_params(e.model, e.seed);
    auto clients = make_clients(train, e.clients, global, e.seed);
    RunHistory hist = run_federation(e.model, global, clients, e.round_cfg, e.rounds, test);

    std::ofstream csv(out_dir + "/history.csv");
    if (!csv) throw std::runtime_error("run_train: cannot write history.csv");
    csv << "round,train_loss,test_accuracy,payload_norm\n";
    for (const auto& r : hist.rounds)
        csv << r.round << "," << format_double(r.train_loss) << ","
            << format_double(r.test_accuracy) << "," << format_double(r.payload_norm) << "\n";
}

// Batch-1 round-1 gradients per client, transformed per config, plus the
// ground-truth sample each gradient was computed from.
inline void run_dump_grads(const ExperimentConfig& e, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Dataset data = build_dataset(e, e.seed);
    auto [train, test] = train_test_split(std::move(data), e.test_fraction, e.clients, e.seed);
    (void)test;
    Params global = init_params(e.model, e.seed);
    auto clients = make_clients(train, e.clients, global, e.seed);
    for (auto& c : clients) {
        const Sample& target = c.shard.front();
        LossGrad lg = loss_and_grad(e.model, global, target.x, target.label);
        GradientSet payload =
            apply_transform(e.round_cfg.transform, c.moment, lg.grads, e.seed + 77);
        GradientDump d;
        d.spec_hash = spec_hash(e.model);
        d.round = 1;
        d.client_id = static_cast<std::uint32_t>(c.id);
        d.transform_kind = static_cast<std::uint32_t>(e.round_cfg.transform.kind);
        d.grads = std::move(payload);
        const std::string tag = std::to_string(c.id);
        write_gradient_dump(d, out_dir + "/grads_client" + tag + ".bin");
        write_sample(target, out_dir + "/truth_client" + tag + ".bin");
    }
}

inline std::optional<Tensor> reshape_square(const Tensor& x) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(x.numel()))));
    if (side * side != x.numel()) return std::nullopt;
    Tensor img = x;
    img.shape = {side, side};
    return img;
}

struct MetricsRow {
    double mse = 0.0, psnr = 0.0, ssim = 0.0;
};

inline MetricsRow image_metrics(const Tensor& truth, const Tensor& recon, double value_range) {
    MetricsRow row;
    const auto t2 = reshape_square(truth);
    const auto r2 = reshape_square(recon);
    if (!t2 || !r2 || t2->rows() < 8)
        throw std::runtime_error("image_metrics: square input of side >= 8 required");
    ImagePair pair{*t2, *r2, value_range};
    row.mse = mse(pair);
    row.psnr = psnr(pair);
    row.ssim = ssim(pair);
    return row;
}

inline void run_attack_cmd(const ExperimentConfig& e, const std::string& dump_dir,
                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Params global = init_params(e.model, e.seed);
    std::ofstream csv(out_dir + "/attack_report.csv");
    if (!csv) throw std::runtime_error("run_attack: cannot write attack_report.csv");
    csv << "client,method,final_objective,inferred_label,true_label,mse,psnr,ssim\n";

    for (int cid = 0;; ++cid) {
        const std::string tag = std::to_string(cid);
        const std::string gpath = dump_dir + "/grads_client" + tag + ".bin";
        if (!std::filesystem::exists(gpath)) break;
        GradientDump d = read_gradient_dump(gpath);
        if (d.spec_hash != spec_hash(e.model))
            throw std::runtime_error("run_attack: dump was produced with a different model");
        Sample truth = read_sample(dump_dir + "/truth_client" + tag + ".bin");
        truth.x.shape = {truth.x.numel()};

        Tensor recon({truth.x.numel()});
        std::size_t inferred = infer_label_sign(d.grads.layers.back().b);
        double objective = 0.0;
        if (e.attack_method == "analytic_fc") {
            recon = analytic_fc_reconstruct(d.grads.layers.front().w, d.grads.layers.front().b);
        } else if (e.attack_method == "grad_match") {
            AttackConfig acfg = e.attack_cfg;
            acfg.seed = e.seed + static_cast<std::uint64_t>(cid);
            AttackReport rep = grad_match_attack(d.grads, e.model, global, acfg);
            recon = rep.reconstructed;
            inferred = rep.inferred_label;
            objective = rep.final_objective;
        } else {  // label_sign: no reconstruction, report zeros image
        }
        MetricsRow m = image_metrics(truth.x, recon, e.value_range);
        csv << cid << "," << e.attack_method << "," << format_double(objective) << ","
            << inferred << "," << truth.label << "," << format_double(m.mse) << ","
            << format_double(m.psnr) << "," << format_double(m.ssim) << "\n";
        if (auto img = reshape_square(recon))
            write_pgm(*img, e.value_range, out_dir + "/recon_client" + tag + ".pgm");
    }
}

// One synthetic leakage trial: a fresh net, one sample, its raw gradient
// and the defended payload.
struct LeakageTrial {
    Params params;
    Sample sample;
    GradientSet raw;
    GradientSet defended;  // AdaDefense stand-in at round 1
};

inline LeakageTrial make_leakage_trial(const MlpSpec& spec, std::uint64_t seed,
                                       double value_range) {
    LeakageTrial t;
    t.params = init_params(spec, seed);
    std::mt19937_64 rng(seed ^ 0xa77ac);
    std::uniform_real_distribution<double> pix(0.0, value_range);
    t.sample.x = Tensor({spec.input_dim()});
    for (double& v : t.sample.x.data) v = pix(rng);
    t.sample.label = std::uniform_int_distribution<std::size_t>(0, spec.class_count() - 1)(rng);
    t.raw = loss_and_grad(spec, t.params, t.sample.x, t.sample.label).grads;
    MomentState moment = MomentState::zeros_like(t.params);
    t.defended = standin_update(moment, t.raw);
    return t;
}

// Defense-efficacy table: per (attack, defense, seed), reconstruction
// quality of the attack against raw vs stand-in gradients.
inline void run_experiment(const ExperimentConfig& e, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (!reshape_square(Tensor({e.model.input_dim()})))
        throw ConfigError("config: experiment requires a square model input dimension");

    std::ofstream csv(out_dir + "/experiment.csv");
    if (!csv) throw std::runtime_error("run_experiment: cannot write experiment.csv");
    csv << "method,model,dataset,defense,mse,psnr,ssim,seed\n";

    std::string model_name;
    for (std::size_t i = 0; i < e.model.layer_sizes.size(); ++i)
        model_name += (i ? "x" : "") + std::to_string(e.model.layer_sizes[i]);

    for (int s = 0; s < e.experiment_seeds; ++s) {
        const std::uint64_t seed = e.seed + static_cast<std::uint64_t>(s);
        LeakageTrial trial = make_leakage_trial(e.model, seed, e.value_range);
        for (const bool defended : {false, true}) {
            const GradientSet& target = defended ? trial.defended : trial.raw;
            const std::string defense = defended ? "adadefense" : "none";

            Tensor analytic = analytic_fc_reconstruct(target.layers.front().w,
                                                      target.layers.front().b);
            MetricsRow ma = image_metrics(trial.sample.x, analytic, e.value_range);
            csv << "analytic_fc," << model_name << ",synthetic," << defense << ","
                << format_double(ma.mse) << "," << format_double(ma.psnr) << ","
                << format_double(ma.ssim) << "," << seed << "\n";

            AttackConfig acfg = e.attack_cfg;
            acfg.seed = seed + 10000;
            AttackReport rep =
                grad_match_attack(target, e.model, trial.params, acfg, trial.sample.label);
            MetricsRow mg = image_metrics(trial.sample.x, rep.reconstructed, e.value_range);
            csv << "grad_match," << model_name << ",synthetic," << defense << ","
                << format_double(mg.mse) << "," << format_double(mg.psnr) << ","
                << format_double(mg.ssim) << "," << seed << "\n";

            if (auto img = reshape_square(rep.reconstructed))
                write_pgm(*img, e.value_range,
                          out_dir + "/gradmatch_" + defense + "_seed" + std::to_string(seed) +
                              ".pgm");
        }
    }
}

}  // namespace ada
