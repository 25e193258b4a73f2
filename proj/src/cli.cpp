#include "mcdc/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcdc/analysis.hpp"
#include "mcdc/checkpoint.hpp"
#include "mcdc/cluster.hpp"
#include "mcdc/data.hpp"
#include "mcdc/errors.hpp"
#include "mcdc/model.hpp"
#include "mcdc/train.hpp"

namespace fs = std::filesystem;

namespace mcdc {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Flat key=value writer used for manifests and metric files.
struct KvFile {
    std::vector<std::pair<std::string, std::string>> entries;

    void put(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void put(const std::string& key, double value) { put(key, fmt(value)); }
    void put(const std::string& key, uint64_t value) { put(key, std::to_string(value)); }
    void put(const std::string& key, int value) { put(key, std::to_string(value)); }

    void write(const fs::path& path) const {
        std::ofstream os(path);
        for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
    }
};

struct DatasetOpts {
    std::string name;                // mnist | mnist2 | digits2 | blobs
    std::string data_dir;            // flag > MCDC_DATA_DIR > "data"
    std::string split = "train";
    size_t per_class_cap = 500;
    size_t blob_k = 4;
    size_t blob_dim = 2;
    double blob_sep = 10.0;
    size_t blob_n = 250;
};

struct ModelOpts {
    std::string family = "mlp"; // mlp | conv
    size_t latent = 0;          // 0 = family default (2 mlp, 256 conv)
    size_t base_channels = 16;
    size_t blocks = 0;          // 0 = family default (2 mlp, 3 conv)
    double neg_slope = 0.2;
};

struct CommonOpts {
    std::string out_dir = "out";
    uint64_t seed = 0;
    std::string deterministic = "on";
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--deterministic", o.deterministic, "Deterministic mode")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    cmd->add_option("--config", o.config_path, "Config file (key = value lines, # comments)");
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Flat `key = value` config file; # comments, no sections. Values fill any
// option the command line did not set, so precedence is flag > file > default.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr) {
            std::cerr << "warning: config key '" << key << "' does not apply to this command\n";
            continue;
        }
        if (opt->count() > 0) continue; // command line wins
        opt->add_result(value);
        opt->run_callback();
    }
}

// required via flag or config; CLI11's required() fires before the config
// file is read, so the check lives here
void require_option(CLI::App* cmd, const char* name, const std::string& value) {
    if (value.empty())
        throw std::invalid_argument(std::string(name) +
                                    " is required (command line or config file)");
    (void)cmd;
}

void add_dataset(CLI::App* cmd, DatasetOpts& o) {
    cmd->add_option("--dataset", o.name, "Dataset: mnist, mnist2, digits2, blobs");
    cmd->add_option("--data-dir", o.data_dir, "Dataset root (default: $MCDC_DATA_DIR or ./data)");
    cmd->add_option("--split", o.split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
    cmd->add_option("--per-class-cap", o.per_class_cap, "Max samples per class (mnist2/digits2)")
        ->capture_default_str();
    cmd->add_option("--blob-k", o.blob_k, "blobs: cluster count")->capture_default_str();
    cmd->add_option("--blob-dim", o.blob_dim, "blobs: dimensionality")->capture_default_str();
    cmd->add_option("--blob-sep", o.blob_sep, "blobs: mean separation")->capture_default_str();
    cmd->add_option("--blob-n", o.blob_n, "blobs: samples per cluster")->capture_default_str();
}

void add_model(CLI::App* cmd, ModelOpts& o) {
    cmd->add_option("--family", o.family, "Architecture family: mlp or conv")
        ->check(CLI::IsMember({"mlp", "conv"}))
        ->capture_default_str();
    cmd->add_option("--latent", o.latent, "Latent dimensionality (0 = family default)")
        ->capture_default_str();
    cmd->add_option("--base-channels", o.base_channels,
                    "Base channel count (conv) / hidden width (mlp)")
        ->capture_default_str();
    cmd->add_option("--blocks", o.blocks, "Block count (0 = family default)")->capture_default_str();
    cmd->add_option("--neg-slope", o.neg_slope, "Leaky ReLU negative slope")->capture_default_str();
}

std::string resolve_data_dir(const DatasetOpts& o) {
    if (!o.data_dir.empty()) return o.data_dir;
    if (const char* env = std::getenv("MCDC_DATA_DIR"); env && *env) return env;
    return "data";
}

LabeledDataset resize_all(const LabeledDataset& ds, size_t side) {
    if (ds.images.dim(2) == side && ds.images.dim(3) == side) return ds;
    LabeledDataset out;
    const size_t n = ds.images.dim(0), c = ds.images.dim(1);
    out.images = Tensor({n, c, side, side});
    const size_t in_stride = ds.images.numel() / n;
    const size_t out_stride = c * side * side;
    for (size_t i = 0; i < n; ++i) {
        Tensor img({c, ds.images.dim(2), ds.images.dim(3)});
        std::copy_n(&ds.images.data[i * in_stride], in_stride, img.data.begin());
        const Tensor resized = bilinear_resize(img, side, side);
        std::copy_n(resized.data.begin(), out_stride, &out.images.data[i * out_stride]);
    }
    out.labels = ds.labels;
    out.class_count = ds.class_count;
    return out;
}

LabeledDataset load_dataset(const DatasetOpts& o, uint64_t seed) {
    RngStream rng = RngStream(seed).split("dataset");
    if (o.name == "blobs") {
        return synthetic_blobs(o.blob_n, o.blob_k, o.blob_dim, o.blob_sep, rng);
    }
    if (o.name == "digits2") {
        // the test split draws from an independent stream
        RngStream gen = rng.split(o.split == "train" ? "digits-train" : "digits-test");
        LabeledDataset ds = synthetic_two_digits(o.per_class_cap, gen);
        return resize_all(ds, 32);
    }
    if (o.name == "mnist" || o.name == "mnist2") {
        const fs::path root = fs::path(resolve_data_dir(o)) / "mnist";
        const fs::path images = root / (o.split + "-images");
        const fs::path labels = root / (o.split + "-labels");
        LabeledDataset ds = load_idx(images, labels);
        if (o.name == "mnist2") {
            const int classes[2] = {0, 1};
            ds = subset_by_classes(ds, classes, o.per_class_cap, rng);
        }
        return resize_all(ds, 32);
    }
    throw std::invalid_argument("unknown dataset '" + o.name + "'");
}

ArchitectureSpec make_spec(const ModelOpts& o, const LabeledDataset& ds) {
    ArchitectureSpec spec;
    if (o.family == "conv") {
        spec.family = Family::conv_paper;
        spec.input_shape = {ds.images.dim(1), ds.images.dim(2), ds.images.dim(3)};
        spec.num_blocks = o.blocks ? o.blocks : 3;
        spec.latent_dim = o.latent ? o.latent : 256;
    } else {
        spec.family = Family::mlp_toy;
        spec.input_shape = {ds.images.numel() / ds.images.dim(0)};
        spec.num_blocks = o.blocks ? o.blocks : 2;
        spec.latent_dim = o.latent ? o.latent : 2;
    }
    spec.base_channels = o.base_channels;
    spec.negative_slope = static_cast<float>(o.neg_slope);
    return spec;
}

Tensor model_inputs(const ModelParams& m, const LabeledDataset& ds) {
    if (m.spec.family == Family::mlp_toy)
        return ds.images.reshaped({ds.images.dim(0), ds.images.numel() / ds.images.dim(0)});
    return ds.images;
}

Tensor64 encode_all(const ModelParams& m, const LabeledDataset& ds) {
    const Tensor z = encode(m, model_inputs(m, ds));
    return tensor_cast<double>(z);
}

void manifest_dataset(KvFile& kv, const DatasetOpts& d) {
    kv.put("dataset", d.name);
    kv.put("data_dir", resolve_data_dir(d));
    kv.put("split", d.split);
    kv.put("per_class_cap", d.per_class_cap);
    if (d.name == "blobs") {
        kv.put("blob_k", d.blob_k);
        kv.put("blob_dim", d.blob_dim);
        kv.put("blob_sep", d.blob_sep);
        kv.put("blob_n", d.blob_n);
    }
}

void manifest_spec(KvFile& kv, const ArchitectureSpec& spec) {
    kv.put("family", spec.family == Family::conv_paper ? "conv_paper" : "mlp_toy");
    std::string shape;
    for (size_t e : spec.input_shape) shape += (shape.empty() ? "" : "x") + std::to_string(e);
    kv.put("input_shape", shape);
    kv.put("base_channels", spec.base_channels);
    kv.put("num_blocks", spec.num_blocks);
    kv.put("latent_dim", spec.latent_dim);
    kv.put("negative_slope", static_cast<double>(spec.negative_slope));
}

void manifest_common(KvFile& kv, const CommonOpts& c, const char* command) {
    kv.put("manifest_version", 1);
    kv.put("command", std::string(command));
    kv.put("seed", c.seed);
    kv.put("deterministic", c.deterministic);
    kv.put("out_dir", c.out_dir);
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::acai: return "acai";
        case Variant::mcdc: return "mcdc";
    }
    return "?";
}

// ---------------------------------------------------------------------
// train
// ---------------------------------------------------------------------

struct TrainOpts {
    CommonOpts common;
    DatasetOpts dataset;
    ModelOpts model;
    std::string variant; // required via flag or config
    double lambda = 0.5;
    double gamma = 0.2;
    size_t epochs = 10;
    size_t batch = 64;
    size_t inner_steps = 1;
    double lr = 1e-4;
};

int cmd_train(const TrainOpts& o) {
    const std::string started = timestamp_utc();
    Variant variant;
    if (o.variant == "baseline") variant = Variant::baseline;
    else if (o.variant == "acai") variant = Variant::acai;
    else if (o.variant == "mcdc") variant = Variant::mcdc;
    else throw std::invalid_argument("unknown variant '" + o.variant + "'");

    const LabeledDataset ds = load_dataset(o.dataset, o.common.seed);
    const ArchitectureSpec spec = make_spec(o.model, ds);

    RngStream init_rng = RngStream(o.common.seed).split("init");
    Trainer trainer(build_model(spec, init_rng), static_cast<float>(o.lr));

    TrainConfig cfg;
    cfg.variant = variant;
    cfg.lambda = static_cast<float>(o.lambda);
    cfg.gamma = static_cast<float>(o.gamma);
    cfg.batch_size = o.batch;
    cfg.epochs = o.epochs;
    cfg.inner_steps = o.inner_steps;
    cfg.lr = static_cast<float>(o.lr);
    cfg.seed = o.common.seed;

    fs::create_directories(o.common.out_dir);
    const fs::path csv_path = fs::path(o.common.out_dir) / "metrics.csv";
    std::ofstream csv(csv_path);
    csv << "epoch,recon,adversarial,mix_consistency,total,discriminator\n";

    const Tensor inputs = model_inputs(trainer.model, ds);
    train(trainer, inputs, cfg, [&](size_t epoch, const LossBreakdown& lb) {
        csv << epoch << "," << fmt(lb.recon) << "," << fmt(lb.adversarial) << ","
            << fmt(lb.mix_consistency) << "," << fmt(lb.total_autoencoder) << ","
            << fmt(lb.discriminator) << "\n";
        std::cerr << "epoch " << epoch << " recon=" << fmt(lb.recon)
                  << " total=" << fmt(lb.total_autoencoder) << "\n";
    });
    csv.close();

    const fs::path ckpt_path = fs::path(o.common.out_dir) / "checkpoint.mcdc";
    save_checkpoint(trainer.model, ckpt_path);

    KvFile kv;
    manifest_common(kv, o.common, "train");
    kv.put("variant", std::string(variant_name(variant)));
    kv.put("lambda", o.lambda);
    kv.put("gamma", o.gamma);
    kv.put("alpha_rule", std::string("uniform_half"));
    kv.put("batch_size", o.batch);
    kv.put("epochs", o.epochs);
    kv.put("inner_steps", o.inner_steps);
    kv.put("lr", o.lr);
    manifest_dataset(kv, o.dataset);
    manifest_spec(kv, spec);
    kv.put("checkpoint", ckpt_path.string());
    kv.put("metrics_csv", csv_path.string());
    kv.put("started_at", started);
    kv.put("finished_at", timestamp_utc());
    kv.write(fs::path(o.common.out_dir) / "manifest.txt");
    return 0;
}

// ---------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------

struct EvalOpts {
    CommonOpts common;
    DatasetOpts dataset;
    std::string checkpoint;
    size_t k = 0; // 0 = dataset class count
    size_t restarts = 1000;
    size_t max_iter = 300;
    double whiten_eps = 1e-8;
    size_t whiten_keep = 0; // 0 = all dimensions
};

int cmd_eval(const EvalOpts& o) {
    const std::string started = timestamp_utc();
    const ModelParams model = load_checkpoint(o.checkpoint);
    const LabeledDataset ds = load_dataset(o.dataset, o.common.seed);

    Tensor64 latents = encode_all(model, ds);
    const PcaBasis basis = pca_fit(latents);
    Tensor64 whitened = pca_whiten(latents, basis, o.whiten_eps);
    if (o.whiten_keep != 0 && o.whiten_keep < whitened.dim(1)) {
        Tensor64 cut({whitened.dim(0), o.whiten_keep});
        for (size_t i = 0; i < cut.dim(0); ++i)
            for (size_t j = 0; j < o.whiten_keep; ++j) cut.at2(i, j) = whitened.at2(i, j);
        whitened = std::move(cut);
    }

    const size_t k = o.k != 0 ? o.k : static_cast<size_t>(ds.class_count);
    RngStream rng = RngStream(o.common.seed).split("kmeans");
    const ClusterResult clusters = kmeans(whitened, k, o.restarts, o.max_iter, rng);
    const ClusterMetrics cm = evaluate_clustering(ds.labels, clusters.assignments, clusters.inertia);

    std::cout << "acc=" << fmt(cm.acc) << " nmi=" << fmt(cm.nmi) << " inertia=" << fmt(cm.inertia)
              << "\n";

    fs::create_directories(o.common.out_dir);
    KvFile metrics;
    metrics.put("acc", cm.acc);
    metrics.put("nmi", cm.nmi);
    metrics.put("mutual_information", cm.mutual_information);
    metrics.put("entropy_y", cm.entropy_y);
    metrics.put("entropy_c", cm.entropy_c);
    metrics.put("inertia", cm.inertia);
    metrics.put("k", k);
    metrics.put("kmeans_restarts", o.restarts);
    metrics.write(fs::path(o.common.out_dir) / "eval_metrics.txt");

    KvFile kv;
    manifest_common(kv, o.common, "eval");
    kv.put("checkpoint", o.checkpoint);
    kv.put("k", k);
    kv.put("kmeans_restarts", o.restarts);
    kv.put("kmeans_max_iter", o.max_iter);
    kv.put("whiten_eps", o.whiten_eps);
    kv.put("whiten_keep", o.whiten_keep);
    manifest_dataset(kv, o.dataset);
    manifest_spec(kv, model.spec);
    kv.put("eval_metrics", (fs::path(o.common.out_dir) / "eval_metrics.txt").string());
    kv.put("started_at", started);
    kv.put("finished_at", timestamp_utc());
    kv.write(fs::path(o.common.out_dir) / "manifest.txt");
    return 0;
}

// ---------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------

struct AnalyzeOpts {
    CommonOpts common;
    DatasetOpts dataset;
    std::string checkpoint;
    size_t cutoff = 40;
};

int cmd_analyze(const AnalyzeOpts& o) {
    const std::string started = timestamp_utc();
    const ModelParams model = load_checkpoint(o.checkpoint);
    const LabeledDataset ds = load_dataset(o.dataset, o.common.seed);

    const Tensor64 latents = encode_all(model, ds);
    if (o.cutoff > latents.dim(1))
        std::cerr << "warning: cutoff " << o.cutoff << " clamped to latent dimensionality "
                  << latents.dim(1) << "\n";
    const PcaProfile profile = class_pca_profile(latents, ds.labels, o.cutoff);

    fs::create_directories(o.common.out_dir);
    const fs::path profile_path = fs::path(o.common.out_dir) / "profile.csv";
    {
        std::ofstream os(profile_path);
        os << "component_index,mean_share,std_share\n";
        for (size_t r = 0; r < profile.cutoff; ++r)
            os << r << "," << fmt(profile.mean_share[r]) << "," << fmt(profile.std_share[r]) << "\n";
    }

    const Tensor64 proj = project_2d(latents);
    const fs::path proj_path = fs::path(o.common.out_dir) / "projection.csv";
    {
        std::ofstream os(proj_path);
        os << "x,y,label\n";
        for (size_t i = 0; i < proj.dim(0); ++i)
            os << fmt(proj.at2(i, 0)) << "," << fmt(proj.at2(i, 1)) << "," << ds.labels[i] << "\n";
    }

    KvFile kv;
    manifest_common(kv, o.common, "analyze");
    kv.put("checkpoint", o.checkpoint);
    kv.put("cutoff_requested", o.cutoff);
    kv.put("cutoff_effective", profile.cutoff);
    manifest_dataset(kv, o.dataset);
    manifest_spec(kv, model.spec);
    kv.put("profile_csv", profile_path.string());
    kv.put("projection_csv", proj_path.string());
    kv.put("started_at", started);
    kv.put("finished_at", timestamp_utc());
    kv.write(fs::path(o.common.out_dir) / "manifest.txt");
    return 0;
}

// ---------------------------------------------------------------------
// interpolate
// ---------------------------------------------------------------------

struct InterpolateOpts {
    CommonOpts common;
    DatasetOpts dataset;
    std::string checkpoint;
    size_t pairs = 16;
    size_t steps = 11;
    bool recon_check = false;
};

Tensor nth_image(const LabeledDataset& ds, size_t idx) {
    const size_t c = ds.images.dim(1), h = ds.images.dim(2), w = ds.images.dim(3);
    Tensor img({c, h, w});
    std::copy_n(&ds.images.data[idx * c * h * w], c * h * w, img.data.begin());
    return img;
}

int cmd_interpolate(const InterpolateOpts& o) {
    const std::string started = timestamp_utc();
    if (o.steps < 2) throw std::invalid_argument("--steps must be >= 2");
    const ModelParams model = load_checkpoint(o.checkpoint);
    const LabeledDataset ds = load_dataset(o.dataset, o.common.seed);
    if (ds.size() < 2) throw std::invalid_argument("interpolate: need at least 2 samples");

    RngStream rng = RngStream(o.common.seed).split("pairs");
    std::vector<std::pair<Tensor, Tensor>> pairs;
    pairs.reserve(o.pairs);
    for (size_t p = 0; p < o.pairs; ++p) {
        const size_t i = rng.uniform_index(ds.size());
        size_t j = rng.uniform_index(ds.size());
        while (j == i) j = rng.uniform_index(ds.size());
        pairs.emplace_back(nth_image(ds, i), nth_image(ds, j));
    }

    std::vector<double> alphas(o.steps);
    for (size_t s = 0; s < o.steps; ++s)
        alphas[s] = static_cast<double>(s) / static_cast<double>(o.steps - 1);

    const InterpolationGrid grid = interpolation_grid(model, pairs, alphas);
    fs::create_directories(o.common.out_dir);
    const fs::path grid_path = fs::path(o.common.out_dir) / "grid.pgm";
    write_pgm_grid(grid, grid_path);

    const double side = mixing_side_score(model, pairs, 0.25);
    std::cout << "side_score_alpha_0.25=" << fmt(side) << "\n";

    fs::path recon_path;
    if (o.recon_check) {
        // single-column grid of plain reconstructions of each pair's first image
        const InterpolationGrid recon = interpolation_grid(model, pairs, {0.0});
        recon_path = fs::path(o.common.out_dir) / "recon_check.pgm";
        write_pgm_grid(recon, recon_path);
    }

    KvFile kv;
    manifest_common(kv, o.common, "interpolate");
    kv.put("checkpoint", o.checkpoint);
    kv.put("pairs", o.pairs);
    kv.put("steps", o.steps);
    kv.put("side_score_alpha_0.25", side);
    manifest_dataset(kv, o.dataset);
    manifest_spec(kv, model.spec);
    kv.put("grid_pgm", grid_path.string());
    if (o.recon_check) kv.put("recon_check_pgm", recon_path.string());
    kv.put("started_at", started);
    kv.put("finished_at", timestamp_utc());
    kv.write(fs::path(o.common.out_dir) / "manifest.txt");
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Autoencoder training with mixing-consistency and adversarial regularization, "
                 "plus the clustering evaluation and latent-geometry pipeline"};
    app.require_subcommand(1);

    TrainOpts train_o;
    auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint + metrics CSV");
    add_common(train_cmd, train_o.common);
    add_dataset(train_cmd, train_o.dataset);
    add_model(train_cmd, train_o.model);
    train_cmd->add_option("--variant", train_o.variant, "baseline, acai, or mcdc")
        ->check(CLI::IsMember({"baseline", "acai", "mcdc"}));
    train_cmd->add_option("--lambda", train_o.lambda, "Adversarial weight")->capture_default_str();
    train_cmd->add_option("--gamma", train_o.gamma, "Discriminator blend coefficient")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_o.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_o.batch, "Batch size")->capture_default_str();
    train_cmd->add_option("--inner-steps", train_o.inner_steps, "Inner steps per iteration")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_o.lr, "Adam learning rate")->capture_default_str();

    EvalOpts eval_o;
    auto* eval_cmd = app.add_subcommand("eval", "Whitened k-means clustering metrics for a checkpoint");
    add_common(eval_cmd, eval_o.common);
    add_dataset(eval_cmd, eval_o.dataset);
    eval_cmd->add_option("--checkpoint", eval_o.checkpoint, "Model checkpoint");
    eval_cmd->add_option("--k", eval_o.k, "Cluster count (0 = dataset class count)")
        ->capture_default_str();
    eval_cmd->add_option("--kmeans-restarts", eval_o.restarts, "k-means restarts")
        ->capture_default_str();
    eval_cmd->add_option("--kmeans-max-iter", eval_o.max_iter, "k-means iteration cap")
        ->capture_default_str();
    eval_cmd->add_option("--whiten-eps", eval_o.whiten_eps, "Whitening epsilon")->capture_default_str();
    eval_cmd->add_option("--whiten-keep", eval_o.whiten_keep,
                         "Keep only the top components after whitening (0 = all)")
        ->capture_default_str();

    AnalyzeOpts analyze_o;
    auto* analyze_cmd =
        app.add_subcommand("analyze", "Per-class PCA variance profile and 2-D projection");
    add_common(analyze_cmd, analyze_o.common);
    add_dataset(analyze_cmd, analyze_o.dataset);
    analyze_cmd->add_option("--checkpoint", analyze_o.checkpoint, "Model checkpoint");
    analyze_cmd->add_option("--cutoff", analyze_o.cutoff, "Top components retained")
        ->capture_default_str();

    InterpolateOpts interp_o;
    auto* interp_cmd = app.add_subcommand("interpolate", "Latent interpolation grid (PGM)");
    add_common(interp_cmd, interp_o.common);
    add_dataset(interp_cmd, interp_o.dataset);
    interp_cmd->add_option("--checkpoint", interp_o.checkpoint, "Model checkpoint");
    interp_cmd->add_option("--pairs", interp_o.pairs, "Number of sampled pairs")->capture_default_str();
    interp_cmd->add_option("--steps", interp_o.steps, "Alpha steps over [0,1]")->capture_default_str();
    interp_cmd->add_flag("--recon-check", interp_o.recon_check,
                         "Also write a plain-reconstruction column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            if (!train_o.common.config_path.empty())
                apply_config_file(train_cmd, train_o.common.config_path);
            require_option(train_cmd, "--variant", train_o.variant);
            require_option(train_cmd, "--dataset", train_o.dataset.name);
            return cmd_train(train_o);
        }
        if (eval_cmd->parsed()) {
            if (!eval_o.common.config_path.empty())
                apply_config_file(eval_cmd, eval_o.common.config_path);
            require_option(eval_cmd, "--checkpoint", eval_o.checkpoint);
            require_option(eval_cmd, "--dataset", eval_o.dataset.name);
            return cmd_eval(eval_o);
        }
        if (analyze_cmd->parsed()) {
            if (!analyze_o.common.config_path.empty())
                apply_config_file(analyze_cmd, analyze_o.common.config_path);
            require_option(analyze_cmd, "--checkpoint", analyze_o.checkpoint);
            require_option(analyze_cmd, "--dataset", analyze_o.dataset.name);
            // the profile differs between splits, so the split must be explicit
            if (analyze_cmd->get_option("--split")->count() == 0)
                throw std::invalid_argument("analyze requires an explicit --split");
            return cmd_analyze(analyze_o);
        }
        if (interp_cmd->parsed()) {
            if (!interp_o.common.config_path.empty())
                apply_config_file(interp_cmd, interp_o.common.config_path);
            require_option(interp_cmd, "--checkpoint", interp_o.checkpoint);
            require_option(interp_cmd, "--dataset", interp_o.dataset.name);
            return cmd_interpolate(interp_o);
        }
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ConsistencyError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const SpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace mcdc
