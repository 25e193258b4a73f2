#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mcdc/errors.hpp"

namespace mcdc {

// Dense row-major tensor. Value-semantic; safe to copy between threads.
// float is the training precision, double the gradient-check precision.
template <typename T>
struct TensorT {
    std::vector<size_t> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<size_t> shape_in, T fill = T(0))
        : shape(std::move(shape_in)), data(numel_of(shape), fill) {}

    TensorT(std::vector<size_t> shape_in, std::vector<T> values)
        : shape(std::move(shape_in)), data(std::move(values)) {
        if (numel_of(shape) != data.size())
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string());
    }

    static TensorT zeros_like(const TensorT& other) { return TensorT(other.shape); }

    static size_t numel_of(const std::vector<size_t>& s) {
        size_t n = 1;
        for (size_t e : s) n *= e;
        return s.empty() ? 0 : n;
    }

    size_t numel() const { return data.size(); }
    size_t rank() const { return shape.size(); }
    size_t dim(size_t i) const { return shape[i]; }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    // 2-D access [rows, cols]
    T& at2(size_t i, size_t j) { return data[i * shape[1] + j]; }
    T at2(size_t i, size_t j) const { return data[i * shape[1] + j]; }

    // 4-D access [n, c, h, w]
    T& at4(size_t n, size_t c, size_t h, size_t w) {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    T at4(size_t n, size_t c, size_t h, size_t w) const {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    TensorT reshaped(std::vector<size_t> new_shape) const {
        if (numel_of(new_shape) != data.size())
            throw ShapeError("reshape to incompatible extent count");
        TensorT out;
        out.shape = std::move(new_shape);
        out.data = data;
        return out;
    }

    std::string shape_string() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << "]";
        return os.str();
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
}

template <typename To, typename From>
TensorT<To> tensor_cast(const TensorT<From>& src) {
    TensorT<To> out;
    out.shape = src.shape;
    out.data.resize(src.data.size());
    for (size_t i = 0; i < src.data.size(); ++i) out.data[i] = static_cast<To>(src.data[i]);
    return out;
}

} // namespace mcdc
