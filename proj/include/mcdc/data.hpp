#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mcdc/rng.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

struct LabeledDataset {
    Tensor images;           // [N,C,H,W], values in [0,1]
    std::vector<int> labels; // [N], ids in [0, class_count)
    int class_count = 0;

    size_t size() const { return labels.size(); }
};

// IDX parsing (big-endian headers; magic 0x00000803 for images, 0x00000801
// for labels). Pixel bytes are scaled by 1/255.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// Inverse of load_idx; byte-for-byte with the files it parsed.
void save_idx(const LabeledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

// Bilinear resampling with half-pixel centers (align_corners=false).
Tensor bilinear_resize(const Tensor& img, size_t out_h, size_t out_w);

// Keeps only the listed classes (relabeled densely in the given order), at
// most per_class_cap samples each, in seeded-shuffled order.
LabeledDataset subset_by_classes(const LabeledDataset& ds, std::span<const int> classes,
                                 size_t per_class_cap, RngStream& rng);

// k unit-variance isotropic Gaussian clusters with means `separation` apart
// (a line for dim==1, a circle in the first two axes otherwise), affinely
// squashed into [0,1]. Images come out as [N,1,1,dim].
LabeledDataset synthetic_blobs(size_t n_per_class, size_t k, size_t dim, double separation,
                               RngStream& rng);

// Procedural two-class handwritten-digit stand-in: jittered rings (class 0)
// and strokes (class 1) at 28x28. Used where real MNIST files are absent.
LabeledDataset synthetic_two_digits(size_t n_per_class, RngStream& rng);

} // namespace mcdc
