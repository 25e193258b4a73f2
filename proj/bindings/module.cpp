#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>
#include <vector>

#include "mcdc/analysis.hpp"
#include "mcdc/checkpoint.hpp"
#include "mcdc/cluster.hpp"
#include "mcdc/data.hpp"
#include "mcdc/model.hpp"
#include "mcdc/train.hpp"

namespace py = pybind11;
using namespace mcdc;

namespace {

template <typename T>
TensorT<T> tensor_from(const py::array_t<T, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<size_t> shape(static_cast<size_t>(arr.ndim()));
    for (size_t i = 0; i < shape.size(); ++i)
        shape[i] = static_cast<size_t>(arr.shape(static_cast<py::ssize_t>(i)));
    TensorT<T> t(shape);
    std::copy_n(arr.data(), static_cast<size_t>(arr.size()), t.data.begin());
    return t;
}

template <typename T>
py::array_t<T> array_from(const TensorT<T>& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<T> arr(shape);
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

using ArrayF = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;

Family family_from_name(const std::string& name) {
    if (name == "conv" || name == "conv_paper") return Family::conv_paper;
    if (name == "mlp" || name == "mlp_toy") return Family::mlp_toy;
    throw std::invalid_argument("unknown family '" + name + "' (want conv or mlp)");
}

Variant variant_from_name(const std::string& name) {
    if (name == "baseline") return Variant::baseline;
    if (name == "acai") return Variant::acai;
    if (name == "mcdc") return Variant::mcdc;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

py::dict breakdown_to_dict(const LossBreakdown& lb) {
    py::dict d;
    d["recon"] = lb.recon;
    d["adversarial"] = lb.adversarial;
    d["mix_consistency"] = lb.mix_consistency;
    d["total"] = lb.total_autoencoder;
    d["discriminator"] = lb.discriminator;
    return d;
}

std::vector<std::pair<Tensor, Tensor>> pairs_from(const std::vector<std::pair<ArrayF, ArrayF>>& in) {
    std::vector<std::pair<Tensor, Tensor>> out;
    out.reserve(in.size());
    for (const auto& [a, b] : in) out.emplace_back(tensor_from<float>(a), tensor_from<float>(b));
    return out;
}

TrainConfig config_from(const std::string& variant, double lam, double gamma, size_t batch_size,
                        size_t epochs, size_t inner_steps, double lr, uint64_t seed) {
    TrainConfig cfg;
    cfg.variant = variant_from_name(variant);
    cfg.lambda = static_cast<float>(lam);
    cfg.gamma = static_cast<float>(gamma);
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.inner_steps = inner_steps;
    cfg.lr = static_cast<float>(lr);
    cfg.seed = seed;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_mcdc, m) {
    m.doc() = "Mixing-consistent autoencoder training with the clustering evaluation pipeline";

    py::class_<ArchitectureSpec>(m, "ArchitectureSpec")
        .def(py::init([](const std::string& family, std::vector<size_t> input_shape,
                         size_t base_channels, size_t num_blocks, size_t latent_dim,
                         double negative_slope) {
                 ArchitectureSpec s;
                 s.family = family_from_name(family);
                 s.input_shape = std::move(input_shape);
                 s.base_channels = base_channels;
                 s.num_blocks = num_blocks;
                 s.latent_dim = latent_dim;
                 s.negative_slope = static_cast<float>(negative_slope);
                 return s;
             }),
             py::arg("family"), py::arg("input_shape"), py::arg("base_channels") = 16,
             py::arg("num_blocks") = 3, py::arg("latent_dim") = 256,
             py::arg("negative_slope") = 0.2)
        .def_property_readonly("family",
                               [](const ArchitectureSpec& s) {
                                   return s.family == Family::conv_paper ? "conv_paper" : "mlp_toy";
                               })
        .def_readonly("input_shape", &ArchitectureSpec::input_shape)
        .def_readonly("base_channels", &ArchitectureSpec::base_channels)
        .def_readonly("num_blocks", &ArchitectureSpec::num_blocks)
        .def_readonly("latent_dim", &ArchitectureSpec::latent_dim)
        .def_readonly("negative_slope", &ArchitectureSpec::negative_slope);

    py::class_<ModelParams>(m, "Model")
        .def_readonly("spec", &ModelParams::spec)
        .def_property_readonly(
            "encoder_parameter_count",
            [](const ModelParams& mp) { return parameter_count(mp.encoder_layers); })
        .def_property_readonly("discriminator_parameter_count", [](const ModelParams& mp) {
            return parameter_count(mp.discriminator_layers);
        });

    m.def("he_init_std", &he_init_std, py::arg("negative_slope"), py::arg("fan_in"));

    m.def(
        "build_model",
        [](const ArchitectureSpec& spec, uint64_t seed) {
            RngStream rng = RngStream(seed).split("init");
            return build_model(spec, rng);
        },
        py::arg("spec"), py::arg("seed") = 0);

    m.def(
        "encode",
        [](const ModelParams& mp, const ArrayF& x) {
            return array_from(encode(mp, tensor_from<float>(x)));
        },
        py::arg("model"), py::arg("x"));
    m.def(
        "decode",
        [](const ModelParams& mp, const ArrayF& z) {
            return array_from(decode(mp, tensor_from<float>(z)));
        },
        py::arg("model"), py::arg("z"));
    m.def(
        "discriminate",
        [](const ModelParams& mp, const ArrayF& xhat) {
            return discriminate(mp, tensor_from<float>(xhat));
        },
        py::arg("model"), py::arg("xhat"));
    m.def(
        "mix_latents",
        [](const ArrayF& zi, const ArrayF& zj, double alpha) {
            return array_from(mix_latents(tensor_from<float>(zi), tensor_from<float>(zj),
                                          static_cast<float>(alpha)));
        },
        py::arg("z_i"), py::arg("z_j"), py::arg("alpha"));

    m.def(
        "save_checkpoint",
        [](const ModelParams& mp, const std::string& path) { save_checkpoint(mp, path); },
        py::arg("model"), py::arg("path"));
    m.def(
        "load_checkpoint", [](const std::string& path) { return load_checkpoint(path); },
        py::arg("path"));

    py::class_<Trainer>(m, "Trainer")
        .def(py::init([](const ModelParams& mp, double lr) {
                 return Trainer(mp, static_cast<float>(lr));
             }),
             py::arg("model"), py::arg("lr") = 1e-4)
        .def_property_readonly("model", [](const Trainer& t) { return t.model; })
        .def(
            "step",
            [](Trainer& t, const ArrayF& batch, const std::string& variant, double lam,
               double gamma, double lr, uint64_t seed) {
                const TrainConfig cfg = config_from(variant, lam, gamma, 64, 1, 1, lr, seed);
                RngStream rng(seed);
                return breakdown_to_dict(train_step(t, tensor_from<float>(batch), cfg, rng));
            },
            py::arg("batch"), py::arg("variant") = "mcdc", py::arg("lam") = 0.5,
            py::arg("gamma") = 0.2, py::arg("lr") = 1e-4, py::arg("seed") = 0)
        .def(
            "train",
            [](Trainer& t, const ArrayF& images, const std::string& variant, size_t epochs,
               size_t batch_size, double lam, double gamma, size_t inner_steps, double lr,
               uint64_t seed) {
                const TrainConfig cfg =
                    config_from(variant, lam, gamma, batch_size, epochs, inner_steps, lr, seed);
                py::list history;
                for (const auto& lb : train(t, tensor_from<float>(images), cfg))
                    history.append(breakdown_to_dict(lb));
                return history;
            },
            py::arg("images"), py::arg("variant") = "mcdc", py::arg("epochs") = 1,
            py::arg("batch_size") = 64, py::arg("lam") = 0.5, py::arg("gamma") = 0.2,
            py::arg("inner_steps") = 1, py::arg("lr") = 1e-4, py::arg("seed") = 0);

    py::class_<PcaBasis>(m, "PcaBasis")
        .def_property_readonly("mean", [](const PcaBasis& b) { return b.mean; })
        .def_property_readonly("components",
                               [](const PcaBasis& b) { return array_from(b.components); })
        .def_property_readonly("eigenvalues", [](const PcaBasis& b) { return b.eigenvalues; });

    m.def("pca_fit", [](const ArrayD& X) { return pca_fit(tensor_from<double>(X)); }, py::arg("X"));
    m.def(
        "pca_whiten",
        [](const ArrayD& X, const PcaBasis& basis, double eps) {
            return array_from(pca_whiten(tensor_from<double>(X), basis, eps));
        },
        py::arg("X"), py::arg("basis"), py::arg("eps") = 1e-8);

    m.def(
        "kmeans",
        [](const ArrayD& X, size_t k, size_t n_init, size_t max_iter, uint64_t seed) {
            RngStream rng = RngStream(seed).split("kmeans");
            const ClusterResult r = kmeans(tensor_from<double>(X), k, n_init, max_iter, rng);
            py::dict d;
            d["assignments"] = r.assignments;
            d["centroids"] = array_from(r.centroids);
            d["inertia"] = r.inertia;
            d["restarts_run"] = r.restarts_run;
            return d;
        },
        py::arg("X"), py::arg("k"), py::arg("n_init") = 1000, py::arg("max_iter") = 300,
        py::arg("seed") = 0);

    m.def(
        "hungarian_accuracy",
        [](const std::vector<int>& y, const std::vector<int>& c) {
            return hungarian_accuracy(y, c);
        },
        py::arg("y"), py::arg("c"));
    m.def(
        "nmi",
        [](const std::vector<int>& y, const std::vector<int>& c) {
            const NmiResult r = nmi(y, c);
            py::dict d;
            d["nmi"] = r.nmi;
            d["mutual_information"] = r.mutual_information;
            d["entropy_y"] = r.entropy_y;
            d["entropy_c"] = r.entropy_c;
            return d;
        },
        py::arg("y"), py::arg("c"));

    m.def(
        "class_pca_profile",
        [](const ArrayD& Z, const std::vector<int>& labels, size_t cutoff) {
            const PcaProfile p = class_pca_profile(tensor_from<double>(Z), labels, cutoff);
            py::dict d;
            d["cutoff"] = p.cutoff;
            d["mean_share"] = p.mean_share;
            d["std_share"] = p.std_share;
            d["classes_used"] = p.classes_used;
            return d;
        },
        py::arg("Z"), py::arg("labels"), py::arg("cutoff") = 40);
    m.def(
        "project_2d",
        [](const ArrayD& Z) { return array_from(project_2d(tensor_from<double>(Z))); },
        py::arg("Z"));

    m.def(
        "interpolation_grid",
        [](const ModelParams& mp, const std::vector<std::pair<ArrayF, ArrayF>>& pairs,
           const std::vector<double>& alphas) {
            return array_from(interpolation_grid(mp, pairs_from(pairs), alphas).images);
        },
        py::arg("model"), py::arg("pairs"), py::arg("alphas"));
    m.def(
        "mixing_side_score",
        [](const ModelParams& mp, const std::vector<std::pair<ArrayF, ArrayF>>& pairs,
           double alpha) { return mixing_side_score(mp, pairs_from(pairs), alpha); },
        py::arg("model"), py::arg("pairs"), py::arg("alpha"));

    m.def(
        "load_idx",
        [](const std::string& images, const std::string& labels) {
            const LabeledDataset ds = load_idx(images, labels);
            return py::make_tuple(array_from(ds.images), ds.labels, ds.class_count);
        },
        py::arg("images_path"), py::arg("labels_path"));
    m.def(
        "save_idx",
        [](const ArrayF& images, const std::vector<int>& labels, const std::string& images_path,
           const std::string& labels_path) {
            LabeledDataset ds;
            ds.images = tensor_from<float>(images);
            ds.labels = labels;
            ds.class_count =
                labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
            save_idx(ds, images_path, labels_path);
        },
        py::arg("images"), py::arg("labels"), py::arg("images_path"), py::arg("labels_path"));
    m.def(
        "bilinear_resize",
        [](const ArrayF& img, size_t out_h, size_t out_w) {
            return array_from(bilinear_resize(tensor_from<float>(img), out_h, out_w));
        },
        py::arg("img"), py::arg("out_h"), py::arg("out_w"));
    m.def(
        "subset_by_classes",
        [](const ArrayF& images, const std::vector<int>& labels, const std::vector<int>& classes,
           size_t per_class_cap, uint64_t seed) {
            LabeledDataset ds;
            ds.images = tensor_from<float>(images);
            ds.labels = labels;
            ds.class_count =
                labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
            RngStream rng(seed);
            const LabeledDataset sub = subset_by_classes(ds, classes, per_class_cap, rng);
            return py::make_tuple(array_from(sub.images), sub.labels, sub.class_count);
        },
        py::arg("images"), py::arg("labels"), py::arg("classes"), py::arg("per_class_cap"),
        py::arg("seed") = 0);
    m.def(
        "synthetic_blobs",
        [](size_t n_per_class, size_t k, size_t dim, double separation, uint64_t seed) {
            RngStream rng(seed);
            const LabeledDataset ds = synthetic_blobs(n_per_class, k, dim, separation, rng);
            return py::make_tuple(array_from(ds.images), ds.labels, ds.class_count);
        },
        py::arg("n_per_class"), py::arg("k"), py::arg("dim"), py::arg("separation"),
        py::arg("seed") = 0);
    m.def(
        "synthetic_two_digits",
        [](size_t n_per_class, uint64_t seed) {
            RngStream rng(seed);
            const LabeledDataset ds = synthetic_two_digits(n_per_class, rng);
            return py::make_tuple(array_from(ds.images), ds.labels, ds.class_count);
        },
        py::arg("n_per_class"), py::arg("seed") = 0);
}
