#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "mcdc/cluster.hpp"
#include "mcdc/model.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

// Per-component explained-variance shares of class-local PCAs, averaged
// over classes. Each class's retained eigenvalues are normalized to sum to
// one before averaging, so classes of different scale are comparable.
struct PcaProfile {
    size_t cutoff = 0;                 // effective cutoff (clamped to D)
    std::vector<double> mean_share;    // [cutoff]
    std::vector<double> std_share;     // [cutoff], population std across classes
    std::vector<int> classes_used;
};

PcaProfile class_pca_profile(const Tensor64& Z, std::span<const int> labels, size_t cutoff);

// Coordinates of each row on the top-2 global PCA components.
Tensor64 project_2d(const Tensor64& Z);

struct InterpolationGrid {
    size_t rows = 0;              // pairs
    size_t cols = 0;              // alpha steps
    std::vector<double> alphas;   // ascending in [0,1]
    Tensor images;                // [rows, cols, C, H, W]
};

// grid[r][s] = decode(mix(encode(x_i), encode(x_j), alphas[s])). Decoded
// vectors are reshaped to the input pair's (C,H,W).
InterpolationGrid interpolation_grid(const ModelParams& m,
                                     const std::vector<std::pair<Tensor, Tensor>>& pairs,
                                     const std::vector<double>& alphas);

// Fraction of pairs whose decoded mix is closer (MSE) to the reconstruction
// of the mixing-rule target than to the reconstruction of the other input.
double mixing_side_score(const ModelParams& m, const std::vector<std::pair<Tensor, Tensor>>& pairs,
                         double alpha);

// Binary PGM ("P5") export: grid tiled row-major with 1-pixel separators at
// gray 128; data range [0,1] maps linearly to 8-bit.
void write_pgm_grid(const InterpolationGrid& grid, const std::filesystem::path& path);

} // namespace mcdc
