#include "mcdc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcdc/errors.hpp"

namespace mcdc {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_u32_be(std::istream& is, const std::string& file, std::streamoff offset) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw FormatError(file + ": truncated header at offset " + std::to_string(offset));
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_u32_be(std::ostream& os, uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError("cannot open image file '" + images_path.string() + "'");
    const std::string img_name = images_path.filename().string();
    const uint32_t img_magic = read_u32_be(imgs, img_name, 0);
    if (img_magic != kImageMagic)
        throw FormatError(img_name + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", img_magic);
            return std::string(buf);
        }() + " at offset 0 (want 0x00000803)");
    const uint32_t count = read_u32_be(imgs, img_name, 4);
    const uint32_t rows = read_u32_be(imgs, img_name, 8);
    const uint32_t cols = read_u32_be(imgs, img_name, 12);

    std::vector<unsigned char> pixels(static_cast<size_t>(count) * rows * cols);
    if (!imgs.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
        throw FormatError(img_name + ": truncated pixel payload (want " +
                          std::to_string(pixels.size()) + " bytes)");

    std::ifstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw FormatError("cannot open label file '" + labels_path.string() + "'");
    const std::string lbl_name = labels_path.filename().string();
    const uint32_t lbl_magic = read_u32_be(lbls, lbl_name, 0);
    if (lbl_magic != kLabelMagic)
        throw FormatError(lbl_name + ": bad magic at offset 0 (want 0x00000801)");
    const uint32_t lbl_count = read_u32_be(lbls, lbl_name, 4);
    if (lbl_count != count)
        throw ConsistencyError("image count " + std::to_string(count) + " != label count " +
                               std::to_string(lbl_count));
    std::vector<unsigned char> raw_labels(lbl_count);
    if (!lbls.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(lbl_count)))
        throw FormatError(lbl_name + ": truncated label payload");

    LabeledDataset ds;
    ds.images = Tensor({count, 1, rows, cols});
    for (size_t i = 0; i < pixels.size(); ++i)
        ds.images.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    const int max_label = ds.labels.empty() ? -1 : *std::max_element(ds.labels.begin(), ds.labels.end());
    ds.class_count = max_label + 1;
    return ds;
}

void save_idx(const LabeledDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
    if (ds.images.rank() != 4 || ds.images.dim(1) != 1)
        throw ShapeError("save_idx: expected single-channel [N,1,H,W] images");
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError("cannot open '" + images_path.string() + "' for writing");
    write_u32_be(imgs, kImageMagic);
    write_u32_be(imgs, static_cast<uint32_t>(ds.images.dim(0)));
    write_u32_be(imgs, static_cast<uint32_t>(ds.images.dim(2)));
    write_u32_be(imgs, static_cast<uint32_t>(ds.images.dim(3)));
    std::vector<unsigned char> pixels(ds.images.numel());
    for (size_t i = 0; i < pixels.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, ds.images.data[i]));
        pixels[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    imgs.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));

    std::ofstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw FormatError("cannot open '" + labels_path.string() + "' for writing");
    write_u32_be(lbls, kLabelMagic);
    write_u32_be(lbls, static_cast<uint32_t>(ds.labels.size()));
    for (int l : ds.labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        lbls.write(reinterpret_cast<const char*>(&b), 1);
    }
}

Tensor bilinear_resize(const Tensor& img, size_t out_h, size_t out_w) {
    if (img.rank() != 3) throw ShapeError("bilinear_resize: expected [C,H,W]");
    if (out_h == 0 || out_w == 0)
        throw std::invalid_argument("bilinear_resize: output extents must be >= 1");
    const size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (out_h == h && out_w == w) return img;

    Tensor out({c, out_h, out_w});
    const double scale_y = static_cast<double>(h) / static_cast<double>(out_h);
    const double scale_x = static_cast<double>(w) / static_cast<double>(out_w);
    for (size_t oy = 0; oy < out_h; ++oy) {
        const double sy = (static_cast<double>(oy) + 0.5) * scale_y - 0.5;
        const double fy = sy - std::floor(sy);
        const ptrdiff_t y0 = static_cast<ptrdiff_t>(std::floor(sy));
        const size_t y0c = static_cast<size_t>(std::clamp<ptrdiff_t>(y0, 0, static_cast<ptrdiff_t>(h) - 1));
        const size_t y1c = static_cast<size_t>(std::clamp<ptrdiff_t>(y0 + 1, 0, static_cast<ptrdiff_t>(h) - 1));
        for (size_t ox = 0; ox < out_w; ++ox) {
            const double sx = (static_cast<double>(ox) + 0.5) * scale_x - 0.5;
            const double fx = sx - std::floor(sx);
            const ptrdiff_t x0 = static_cast<ptrdiff_t>(std::floor(sx));
            const size_t x0c = static_cast<size_t>(std::clamp<ptrdiff_t>(x0, 0, static_cast<ptrdiff_t>(w) - 1));
            const size_t x1c = static_cast<size_t>(std::clamp<ptrdiff_t>(x0 + 1, 0, static_cast<ptrdiff_t>(w) - 1));
            for (size_t ch = 0; ch < c; ++ch) {
                const float* plane = &img.data[ch * h * w];
                const double v = (1.0 - fy) * ((1.0 - fx) * plane[y0c * w + x0c] +
                                               fx * plane[y0c * w + x1c]) +
                                 fy * ((1.0 - fx) * plane[y1c * w + x0c] +
                                       fx * plane[y1c * w + x1c]);
                out.data[(ch * out_h + oy) * out_w + ox] = static_cast<float>(v);
            }
        }
    }
    return out;
}

LabeledDataset subset_by_classes(const LabeledDataset& ds, std::span<const int> classes,
                                 size_t per_class_cap, RngStream& rng) {
    if (classes.empty()) throw std::invalid_argument("subset_by_classes: empty class list");

    std::vector<size_t> selected;
    std::vector<int> new_labels;
    for (size_t ci = 0; ci < classes.size(); ++ci) {
        std::vector<size_t> members;
        for (size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == classes[ci]) members.push_back(i);
        if (members.empty())
            throw std::invalid_argument("subset_by_classes: class " + std::to_string(classes[ci]) +
                                        " not present in dataset");
        for (size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.uniform_index(i)]);
        const size_t take = std::min(per_class_cap, members.size());
        for (size_t i = 0; i < take; ++i) {
            selected.push_back(members[i]);
            new_labels.push_back(static_cast<int>(ci));
        }
    }
    // seeded shuffle of the combined order
    for (size_t i = selected.size(); i > 1; --i) {
        const size_t j = rng.uniform_index(i);
        std::swap(selected[i - 1], selected[j]);
        std::swap(new_labels[i - 1], new_labels[j]);
    }

    LabeledDataset out;
    std::vector<size_t> shape = ds.images.shape;
    shape[0] = selected.size();
    out.images = Tensor(shape);
    const size_t stride = ds.images.numel() / ds.images.dim(0);
    for (size_t i = 0; i < selected.size(); ++i)
        std::copy_n(&ds.images.data[selected[i] * stride], stride, &out.images.data[i * stride]);
    out.labels = std::move(new_labels);
    out.class_count = static_cast<int>(classes.size());
    return out;
}

LabeledDataset synthetic_blobs(size_t n_per_class, size_t k, size_t dim, double separation,
                               RngStream& rng) {
    if (k < 1 || dim < 1) throw std::invalid_argument("synthetic_blobs: k and dim must be >= 1");

    std::vector<std::vector<double>> means(k, std::vector<double>(dim, 0.0));
    if (k > 1) {
        if (dim == 1) {
            for (size_t c = 0; c < k; ++c) means[c][0] = separation * static_cast<double>(c);
        } else {
            // circle in the first two axes; adjacent chord length == separation
            const double radius = separation / (2.0 * std::sin(3.14159265358979323846 / static_cast<double>(k)));
            for (size_t c = 0; c < k; ++c) {
                const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(c) / static_cast<double>(k);
                means[c][0] = radius * std::cos(angle);
                means[c][1] = radius * std::sin(angle);
            }
        }
    }

    const size_t n = n_per_class * k;
    LabeledDataset ds;
    ds.images = Tensor({n, 1, 1, dim});
    ds.labels.resize(n);
    ds.class_count = static_cast<int>(k);
    std::vector<double> raw(n * dim);
    for (size_t c = 0; c < k; ++c)
        for (size_t s = 0; s < n_per_class; ++s) {
            const size_t row = c * n_per_class + s;
            ds.labels[row] = static_cast<int>(c);
            for (size_t j = 0; j < dim; ++j) raw[row * dim + j] = means[c][j] + rng.normal();
        }

    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;
    for (size_t i = 0; i < raw.size(); ++i)
        ds.images.data[i] = static_cast<float>((raw[i] - mn) / span);
    return ds;
}

LabeledDataset synthetic_two_digits(size_t n_per_class, RngStream& rng) {
    constexpr size_t kSide = 28;
    const size_t n = 2 * n_per_class;
    LabeledDataset ds;
    ds.images = Tensor({n, 1, kSide, kSide});
    ds.labels.resize(n);
    ds.class_count = 2;

    auto jitter = [&rng](double lo, double hi) { return lo + (hi - lo) * rng.next_double(); };

    for (size_t idx = 0; idx < n; ++idx) {
        const int cls = idx < n_per_class ? 0 : 1;
        ds.labels[idx] = cls;
        float* img = &ds.images.data[idx * kSide * kSide];

        // stroke darkness varies per image, as in real handwriting
        const double intensity = jitter(0.55, 1.0);
        if (cls == 0) {
            // jittered ellipse ring
            const double cx = 13.5 + jitter(-2.0, 2.0);
            const double cy = 13.5 + jitter(-2.0, 2.0);
            const double rx = jitter(4.5, 8.5);
            const double ry = jitter(6.0, 10.5);
            const double rot = jitter(-0.35, 0.35);
            const double sigma = jitter(0.10, 0.22);
            const double cr = std::cos(rot), sr = std::sin(rot);
            for (size_t y = 0; y < kSide; ++y)
                for (size_t x = 0; x < kSide; ++x) {
                    const double dx = static_cast<double>(x) - cx;
                    const double dy = static_cast<double>(y) - cy;
                    const double u = (cr * dx + sr * dy) / rx;
                    const double v = (-sr * dx + cr * dy) / ry;
                    const double r = std::sqrt(u * u + v * v);
                    const double d = (r - 1.0) / sigma;
                    img[y * kSide + x] = static_cast<float>(intensity * std::exp(-0.5 * d * d));
                }
        } else {
            // jittered near-vertical stroke
            const double x_base = 13.5 + jitter(-3.0, 3.0);
            const double slant = jitter(-0.3, 0.3);
            const double y_top = jitter(3.5, 8.0);
            const double y_bot = jitter(20.0, 24.5);
            const double thickness = jitter(0.9, 2.2);
            for (size_t y = 0; y < kSide; ++y)
                for (size_t x = 0; x < kSide; ++x) {
                    double value = 0.0;
                    const double fy = static_cast<double>(y);
                    if (fy >= y_top - 1.0 && fy <= y_bot + 1.0) {
                        const double cx_here = x_base + slant * (fy - 13.5);
                        const double d = (static_cast<double>(x) - cx_here) / thickness;
                        double fade = 1.0;
                        if (fy < y_top) fade = 1.0 - (y_top - fy);
                        if (fy > y_bot) fade = 1.0 - (fy - y_bot);
                        value = fade * std::exp(-0.5 * d * d);
                    }
                    img[y * kSide + x] = static_cast<float>(intensity * std::max(0.0, value));
                }
        }
    }
    return ds;
}

} // namespace mcdc
