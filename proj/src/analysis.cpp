#include "mcdc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "mcdc/errors.hpp"
#include "mcdc/train.hpp"

namespace mcdc {

PcaProfile class_pca_profile(const Tensor64& Z, std::span<const int> labels, size_t cutoff) {
    if (Z.rank() != 2) throw ShapeError("class_pca_profile: expected [N,D]");
    if (labels.size() != Z.dim(0))
        throw ShapeError("class_pca_profile: label count does not match rows");
    const size_t d = Z.dim(1);
    const size_t eff_cutoff = std::min(cutoff, d);
    if (eff_cutoff == 0) throw std::invalid_argument("class_pca_profile: cutoff must be >= 1");

    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    PcaProfile profile;
    profile.cutoff = eff_cutoff;
    std::vector<std::vector<double>> shares;
    for (const auto& [cls, rows] : by_class) {
        if (rows.size() < 2)
            throw std::invalid_argument("class_pca_profile: class " + std::to_string(cls) +
                                        " has fewer than 2 samples");
        Tensor64 sub({rows.size(), d});
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t j = 0; j < d; ++j) sub.at2(i, j) = Z.at2(rows[i], j);
        const PcaBasis basis = pca_fit(sub);
        double total = 0.0;
        for (size_t r = 0; r < eff_cutoff; ++r) total += basis.eigenvalues[r];
        if (total <= 0.0)
            throw std::invalid_argument("class_pca_profile: class " + std::to_string(cls) +
                                        " has zero variance");
        std::vector<double> share(eff_cutoff);
        for (size_t r = 0; r < eff_cutoff; ++r) share[r] = basis.eigenvalues[r] / total;
        shares.push_back(std::move(share));
        profile.classes_used.push_back(cls);
    }

    const double nc = static_cast<double>(shares.size());
    profile.mean_share.assign(eff_cutoff, 0.0);
    profile.std_share.assign(eff_cutoff, 0.0);
    for (const auto& s : shares)
        for (size_t r = 0; r < eff_cutoff; ++r) profile.mean_share[r] += s[r];
    for (double& v : profile.mean_share) v /= nc;
    for (const auto& s : shares)
        for (size_t r = 0; r < eff_cutoff; ++r) {
            const double dev = s[r] - profile.mean_share[r];
            profile.std_share[r] += dev * dev;
        }
    for (double& v : profile.std_share) v = std::sqrt(v / nc);
    return profile;
}

Tensor64 project_2d(const Tensor64& Z) {
    if (Z.rank() != 2 || Z.dim(1) < 2) throw ShapeError("project_2d: need [N,D] with D >= 2");
    const PcaBasis basis = pca_fit(Z);
    const size_t n = Z.dim(0), d = Z.dim(1);
    Tensor64 out({n, 2});
    for (size_t i = 0; i < n; ++i)
        for (size_t r = 0; r < 2; ++r) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j)
                acc += basis.components.at2(r, j) * (Z.at2(i, j) - basis.mean[j]);
            out.at2(i, r) = acc;
        }
    return out;
}

namespace {

// Shape a decoded row as [C,H,W] matching the reference image.
std::vector<size_t> image_dims(const Tensor& reference) {
    if (reference.rank() == 3) return reference.shape;
    if (reference.rank() == 1) return {1, 1, reference.dim(0)};
    throw ShapeError("interpolation pairs must be single images [C,H,W]");
}

Tensor as_batch_of_one(const Tensor& img) {
    std::vector<size_t> shape = {1};
    for (size_t e : img.shape) shape.push_back(e);
    return img.reshaped(shape);
}

} // namespace

InterpolationGrid interpolation_grid(const ModelParams& m,
                                     const std::vector<std::pair<Tensor, Tensor>>& pairs,
                                     const std::vector<double>& alphas) {
    if (pairs.empty()) throw std::invalid_argument("interpolation_grid: empty pair list");
    if (alphas.empty()) throw std::invalid_argument("interpolation_grid: empty alpha list");
    for (size_t s = 0; s < alphas.size(); ++s) {
        if (alphas[s] < 0.0 || alphas[s] > 1.0)
            throw std::invalid_argument("interpolation_grid: alphas must lie in [0,1]");
        if (s > 0 && alphas[s] < alphas[s - 1])
            throw std::invalid_argument("interpolation_grid: alphas must be ascending");
    }

    const std::vector<size_t> dims = image_dims(pairs.front().first);
    InterpolationGrid grid;
    grid.rows = pairs.size();
    grid.cols = alphas.size();
    grid.alphas = alphas;
    grid.images = Tensor({grid.rows, grid.cols, dims[0], dims[1], dims[2]});
    const size_t img_elems = dims[0] * dims[1] * dims[2];

    for (size_t r = 0; r < pairs.size(); ++r) {
        const Tensor z_i = encode(m, as_batch_of_one(pairs[r].first));
        const Tensor z_j = encode(m, as_batch_of_one(pairs[r].second));
        for (size_t s = 0; s < alphas.size(); ++s) {
            const Tensor z_mix = mix_latents(z_i, z_j, static_cast<float>(alphas[s]));
            const Tensor decoded = decode(m, z_mix);
            if (decoded.numel() != img_elems)
                throw ShapeError("interpolation_grid: decoded size does not match pair images");
            std::copy(decoded.data.begin(), decoded.data.end(),
                      grid.images.data.begin() + (r * grid.cols + s) * img_elems);
        }
    }
    return grid;
}

double mixing_side_score(const ModelParams& m, const std::vector<std::pair<Tensor, Tensor>>& pairs,
                         double alpha) {
    if (pairs.empty()) throw std::invalid_argument("mixing_side_score: empty pair list");
    if (alpha < 0.0 || alpha > 1.0 || alpha == 0.5)
        throw std::invalid_argument("mixing_side_score: alpha must lie in [0,1] and differ from 0.5");

    size_t hits = 0;
    for (const auto& [xi, xj] : pairs) {
        const Tensor z_i = encode(m, as_batch_of_one(xi));
        const Tensor z_j = encode(m, as_batch_of_one(xj));
        const Tensor decoded = decode(m, mix_latents(z_i, z_j, static_cast<float>(alpha)));
        const Tensor recon_i = decode(m, z_i);
        const Tensor recon_j = decode(m, z_j);
        const Tensor& target = alpha < 0.5 ? recon_i : recon_j;
        const Tensor& other = alpha < 0.5 ? recon_j : recon_i;
        const double to_target = mse_loss(decoded, target).first;
        const double to_other = mse_loss(decoded, other).first;
        if (to_target < to_other) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

void write_pgm_grid(const InterpolationGrid& grid, const std::filesystem::path& path) {
    if (grid.images.rank() != 5) throw ShapeError("write_pgm_grid: malformed grid");
    const size_t c = grid.images.dim(2), h = grid.images.dim(3), w = grid.images.dim(4);
    if (c != 1) throw FormatError("write_pgm_grid: PGM export requires single-channel images");

    const size_t out_h = grid.rows * h + (grid.rows - 1);
    const size_t out_w = grid.cols * w + (grid.cols - 1);
    std::vector<uint8_t> canvas(out_h * out_w, 128); // separators

    const size_t img_elems = h * w;
    for (size_t r = 0; r < grid.rows; ++r)
        for (size_t s = 0; s < grid.cols; ++s) {
            const float* src = &grid.images.data[(r * grid.cols + s) * img_elems];
            const size_t top = r * (h + 1), left = s * (w + 1);
            for (size_t i = 0; i < h; ++i)
                for (size_t j = 0; j < w; ++j) {
                    float v = src[i * w + j];
                    v = std::min(1.0f, std::max(0.0f, v));
                    canvas[(top + i) * out_w + left + j] =
                        static_cast<uint8_t>(std::lround(v * 255.0f));
                }
        }

    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("write_pgm_grid: cannot open '" + path.string() + "'");
    os << "P5\n" << out_w << " " << out_h << "\n255\n";
    os.write(reinterpret_cast<const char*>(canvas.data()), static_cast<std::streamsize>(canvas.size()));
    if (!os) throw FormatError("write_pgm_grid: write failure");
}

} // namespace mcdc
