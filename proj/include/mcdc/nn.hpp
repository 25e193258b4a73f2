#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mcdc/errors.hpp"
#include "mcdc/rng.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

enum class LayerKind { dense, conv3x3, avgpool2x2, upsample_nn2x, leaky_relu };

// One layer of the paper architecture. Parameter-free kinds carry empty
// weights/bias. `reshape_to` (dense only) reinterprets the [N, Dout] output
// as [N, c, h, w]; the decoder uses it to re-enter convolutional space.
template <typename T>
struct LayerParamsT {
    LayerKind kind = LayerKind::dense;
    TensorT<T> weights; // dense [Din, Dout]; conv3x3 [Cout, Cin, 3, 3]
    TensorT<T> bias;    // dense [Dout]; conv3x3 [Cout]
    size_t fan_in = 0;
    T negative_slope = T(0);              // leaky_relu only
    std::array<size_t, 3> reshape_to{0, 0, 0};

    bool has_params() const { return kind == LayerKind::dense || kind == LayerKind::conv3x3; }
};

using LayerParams = LayerParamsT<float>;

// Initialization std from the paper: sqrt(2 / ((1 + a^2) * fan_in)).
inline double he_init_std(double negative_slope, size_t fan_in) {
    if (fan_in == 0) throw std::invalid_argument("he_init_std: fan_in must be >= 1");
    if (negative_slope < 0) throw std::invalid_argument("he_init_std: negative_slope must be >= 0");
    return std::sqrt(2.0 / ((1.0 + negative_slope * negative_slope) * static_cast<double>(fan_in)));
}

namespace detail {

template <typename T>
TensorT<T> flatten_rows(const TensorT<T>& x) {
    if (x.rank() == 2) return x;
    if (x.rank() < 2) throw ShapeError("expected batched tensor, got rank " + std::to_string(x.rank()));
    size_t cols = 1;
    for (size_t i = 1; i < x.rank(); ++i) cols *= x.dim(i);
    return x.reshaped({x.dim(0), cols});
}

} // namespace detail

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> dense_forward(const TensorT<T>& x_in, const LayerParamsT<T>& layer) {
    TensorT<T> x = detail::flatten_rows(x_in);
    const size_t n = x.dim(0), din = x.dim(1);
    if (layer.weights.rank() != 2 || layer.weights.dim(0) != din)
        throw ShapeError("dense_forward: input width " + std::to_string(din) +
                         " does not match weights " + layer.weights.shape_string());
    const size_t dout = layer.weights.dim(1);
    TensorT<T> y({n, dout});
    for (size_t i = 0; i < n; ++i) {
        T* yrow = &y.data[i * dout];
        for (size_t j = 0; j < dout; ++j) yrow[j] = layer.bias.data[j];
        const T* xrow = &x.data[i * din];
        for (size_t k = 0; k < din; ++k) {
            const T a = xrow[k];
            const T* wrow = &layer.weights.data[k * dout];
            for (size_t j = 0; j < dout; ++j) yrow[j] += a * wrow[j];
        }
    }
    if (layer.reshape_to[0] != 0)
        return y.reshaped({n, layer.reshape_to[0], layer.reshape_to[1], layer.reshape_to[2]});
    return y;
}

template <typename T>
TensorT<T> conv3x3_forward(const TensorT<T>& x, const LayerParamsT<T>& layer) {
    if (x.rank() != 4) throw ShapeError("conv3x3_forward: expected [N,C,H,W]");
    const size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto& wt = layer.weights;
    if (wt.rank() != 4 || wt.dim(2) != 3 || wt.dim(3) != 3)
        throw ShapeError("conv3x3_forward: weights must be [Cout,Cin,3,3]");
    if (wt.dim(1) != cin)
        throw ShapeError("conv3x3_forward: input channels " + std::to_string(cin) +
                         " vs weight channels " + std::to_string(wt.dim(1)));
    const size_t cout = wt.dim(0);
    TensorT<T> y({n, cout, h, w});
    for (size_t b = 0; b < n; ++b)
        for (size_t co = 0; co < cout; ++co) {
            T* yplane = &y.data[((b * cout + co) * h) * w];
            const T bias = layer.bias.data[co];
            for (size_t i = 0; i < h * w; ++i) yplane[i] = bias;
            for (size_t ci = 0; ci < cin; ++ci) {
                const T* xplane = &x.data[((b * cin + ci) * h) * w];
                for (size_t kh = 0; kh < 3; ++kh)
                    for (size_t kw = 0; kw < 3; ++kw) {
                        const T wv = wt.data[(((co * cin + ci) * 3) + kh) * 3 + kw];
                        const ptrdiff_t dh = static_cast<ptrdiff_t>(kh) - 1;
                        const ptrdiff_t dw = static_cast<ptrdiff_t>(kw) - 1;
                        const size_t r0 = dh < 0 ? 1 : 0, r1 = dh > 0 ? h - 1 : h;
                        const size_t c0 = dw < 0 ? 1 : 0, c1 = dw > 0 ? w - 1 : w;
                        for (size_t r = r0; r < r1; ++r) {
                            const T* xrow = xplane + (r + dh) * w + dw;
                            T* yrow = yplane + r * w;
                            for (size_t c = c0; c < c1; ++c) yrow[c] += wv * xrow[c];
                        }
                    }
            }
        }
    return y;
}

template <typename T>
TensorT<T> avgpool2x2_forward(const TensorT<T>& x) {
    if (x.rank() != 4) throw ShapeError("avgpool2x2_forward: expected [N,C,H,W]");
    const size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("avgpool2x2_forward: odd spatial extent " + x.shape_string());
    TensorT<T> y({n, c, h / 2, w / 2});
    for (size_t b = 0; b < n; ++b)
        for (size_t ch = 0; ch < c; ++ch)
            for (size_t i = 0; i < h / 2; ++i)
                for (size_t j = 0; j < w / 2; ++j) {
                    const T sum = x.at4(b, ch, 2 * i, 2 * j) + x.at4(b, ch, 2 * i, 2 * j + 1) +
                                  x.at4(b, ch, 2 * i + 1, 2 * j) + x.at4(b, ch, 2 * i + 1, 2 * j + 1);
                    y.at4(b, ch, i, j) = sum * T(0.25);
                }
    return y;
}

template <typename T>
TensorT<T> upsample_nn2x_forward(const TensorT<T>& x) {
    if (x.rank() != 4) throw ShapeError("upsample_nn2x_forward: expected [N,C,H,W]");
    const size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    TensorT<T> y({n, c, 2 * h, 2 * w});
    for (size_t b = 0; b < n; ++b)
        for (size_t ch = 0; ch < c; ++ch)
            for (size_t i = 0; i < h; ++i)
                for (size_t j = 0; j < w; ++j) {
                    const T v = x.at4(b, ch, i, j);
                    y.at4(b, ch, 2 * i, 2 * j) = v;
                    y.at4(b, ch, 2 * i, 2 * j + 1) = v;
                    y.at4(b, ch, 2 * i + 1, 2 * j) = v;
                    y.at4(b, ch, 2 * i + 1, 2 * j + 1) = v;
                }
    return y;
}

template <typename T>
TensorT<T> leaky_relu_forward(const TensorT<T>& x, T negative_slope) {
    TensorT<T> y = x;
    for (T& v : y.data)
        if (v < T(0)) v *= negative_slope;
    return y;
}

// Mean-squared error over all elements; gradient w.r.t. pred.
template <typename T>
std::pair<double, TensorT<T>> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
    require_same_shape(pred, target, "mse_loss");
    const size_t n = pred.numel();
    TensorT<T> grad(pred.shape);
    double acc = 0.0;
    const T scale = T(2) / static_cast<T>(n);
    for (size_t i = 0; i < n; ++i) {
        const T d = pred.data[i] - target.data[i];
        acc += static_cast<double>(d) * static_cast<double>(d);
        grad.data[i] = scale * d;
    }
    return {acc / static_cast<double>(n), std::move(grad)};
}

// ---------------------------------------------------------------------------
// Backward passes (exact analytic gradients of the forwards above)
// ---------------------------------------------------------------------------

template <typename T>
struct LayerGradsT {
    TensorT<T> input;   // dL/dx, shaped like the forward input
    TensorT<T> weights; // dL/dW (empty for parameter-free kinds)
    TensorT<T> bias;    // dL/db
};

template <typename T>
LayerGradsT<T> dense_backward(const TensorT<T>& upstream_in, const TensorT<T>& x_in,
                              const LayerParamsT<T>& layer) {
    TensorT<T> x = detail::flatten_rows(x_in);
    TensorT<T> upstream = detail::flatten_rows(upstream_in);
    const size_t n = x.dim(0), din = x.dim(1), dout = layer.weights.dim(1);
    if (upstream.dim(0) != n || upstream.dim(1) != dout)
        throw ShapeError("dense_backward: upstream shape mismatch");
    LayerGradsT<T> g;
    g.weights = TensorT<T>(layer.weights.shape);
    g.bias = TensorT<T>(layer.bias.shape);
    TensorT<T> dx({n, din});
    for (size_t i = 0; i < n; ++i) {
        const T* urow = &upstream.data[i * dout];
        const T* xrow = &x.data[i * din];
        for (size_t j = 0; j < dout; ++j) g.bias.data[j] += urow[j];
        for (size_t k = 0; k < din; ++k) {
            const T* wrow = &layer.weights.data[k * dout];
            T* gwrow = &g.weights.data[k * dout];
            const T xv = xrow[k];
            T acc = T(0);
            for (size_t j = 0; j < dout; ++j) {
                gwrow[j] += xv * urow[j];
                acc += urow[j] * wrow[j];
            }
            dx.data[i * din + k] = acc;
        }
    }
    g.input = dx.reshaped(x_in.shape);
    return g;
}

template <typename T>
LayerGradsT<T> conv3x3_backward(const TensorT<T>& upstream, const TensorT<T>& x,
                                const LayerParamsT<T>& layer) {
    const size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const size_t cout = layer.weights.dim(0);
    if (upstream.rank() != 4 || upstream.dim(0) != n || upstream.dim(1) != cout ||
        upstream.dim(2) != h || upstream.dim(3) != w)
        throw ShapeError("conv3x3_backward: upstream shape mismatch");
    LayerGradsT<T> g;
    g.input = TensorT<T>(x.shape);
    g.weights = TensorT<T>(layer.weights.shape);
    g.bias = TensorT<T>(layer.bias.shape);
    for (size_t b = 0; b < n; ++b)
        for (size_t co = 0; co < cout; ++co) {
            const T* uplane = &upstream.data[((b * cout + co) * h) * w];
            double bias_acc = 0.0;
            for (size_t i = 0; i < h * w; ++i) bias_acc += static_cast<double>(uplane[i]);
            g.bias.data[co] += static_cast<T>(bias_acc);
            for (size_t ci = 0; ci < cin; ++ci) {
                const T* xplane = &x.data[((b * cin + ci) * h) * w];
                T* gxplane = &g.input.data[((b * cin + ci) * h) * w];
                for (size_t kh = 0; kh < 3; ++kh)
                    for (size_t kw = 0; kw < 3; ++kw) {
                        const size_t widx = (((co * cin + ci) * 3) + kh) * 3 + kw;
                        const T wv = layer.weights.data[widx];
                        const ptrdiff_t dh = static_cast<ptrdiff_t>(kh) - 1;
                        const ptrdiff_t dw = static_cast<ptrdiff_t>(kw) - 1;
                        const size_t r0 = dh < 0 ? 1 : 0, r1 = dh > 0 ? h - 1 : h;
                        const size_t c0 = dw < 0 ? 1 : 0, c1 = dw > 0 ? w - 1 : w;
                        T wgrad = T(0);
                        for (size_t r = r0; r < r1; ++r) {
                            const T* urow = uplane + r * w;
                            const T* xrow = xplane + (r + dh) * w + dw;
                            T* gxrow = gxplane + (r + dh) * w + dw;
                            for (size_t c = c0; c < c1; ++c) {
                                wgrad += urow[c] * xrow[c];
                                gxrow[c] += wv * urow[c];
                            }
                        }
                        g.weights.data[widx] += wgrad;
                    }
            }
        }
    return g;
}

template <typename T>
TensorT<T> avgpool2x2_backward(const TensorT<T>& upstream, const std::vector<size_t>& input_shape) {
    TensorT<T> dx(input_shape);
    const size_t n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    if (upstream.dim(2) != h / 2 || upstream.dim(3) != w / 2)
        throw ShapeError("avgpool2x2_backward: upstream shape mismatch");
    for (size_t b = 0; b < n; ++b)
        for (size_t ch = 0; ch < c; ++ch)
            for (size_t i = 0; i < h / 2; ++i)
                for (size_t j = 0; j < w / 2; ++j) {
                    const T v = upstream.at4(b, ch, i, j) * T(0.25);
                    dx.at4(b, ch, 2 * i, 2 * j) = v;
                    dx.at4(b, ch, 2 * i, 2 * j + 1) = v;
                    dx.at4(b, ch, 2 * i + 1, 2 * j) = v;
                    dx.at4(b, ch, 2 * i + 1, 2 * j + 1) = v;
                }
    return dx;
}

template <typename T>
TensorT<T> upsample_nn2x_backward(const TensorT<T>& upstream, const std::vector<size_t>& input_shape) {
    TensorT<T> dx(input_shape);
    const size_t n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    if (upstream.dim(2) != 2 * h || upstream.dim(3) != 2 * w)
        throw ShapeError("upsample_nn2x_backward: upstream shape mismatch");
    for (size_t b = 0; b < n; ++b)
        for (size_t ch = 0; ch < c; ++ch)
            for (size_t i = 0; i < h; ++i)
                for (size_t j = 0; j < w; ++j)
                    dx.at4(b, ch, i, j) = upstream.at4(b, ch, 2 * i, 2 * j) +
                                          upstream.at4(b, ch, 2 * i, 2 * j + 1) +
                                          upstream.at4(b, ch, 2 * i + 1, 2 * j) +
                                          upstream.at4(b, ch, 2 * i + 1, 2 * j + 1);
    return dx;
}

template <typename T>
TensorT<T> leaky_relu_backward(const TensorT<T>& upstream, const TensorT<T>& x, T negative_slope) {
    require_same_shape(upstream, x, "leaky_relu_backward");
    TensorT<T> dx = upstream;
    for (size_t i = 0; i < x.numel(); ++i)
        if (x.data[i] < T(0)) dx.data[i] *= negative_slope;
    return dx;
}

// ---------------------------------------------------------------------------
// Layer-stack runner with cached activations
// ---------------------------------------------------------------------------

template <typename T>
struct ForwardCacheT {
    std::vector<TensorT<T>> layer_inputs; // input seen by each layer, in order
};

using ForwardCache = ForwardCacheT<float>;

template <typename T>
TensorT<T> stack_forward(const std::vector<LayerParamsT<T>>& layers, TensorT<T> x,
                         ForwardCacheT<T>* cache = nullptr) {
    if (cache) {
        cache->layer_inputs.clear();
        cache->layer_inputs.reserve(layers.size());
    }
    for (const auto& layer : layers) {
        if (cache) cache->layer_inputs.push_back(x);
        switch (layer.kind) {
            case LayerKind::dense: x = dense_forward(x, layer); break;
            case LayerKind::conv3x3: x = conv3x3_forward(x, layer); break;
            case LayerKind::avgpool2x2: x = avgpool2x2_forward(x); break;
            case LayerKind::upsample_nn2x: x = upsample_nn2x_forward(x); break;
            case LayerKind::leaky_relu: x = leaky_relu_forward(x, layer.negative_slope); break;
        }
    }
    return x;
}

template <typename T>
struct StackGradsT {
    std::vector<TensorT<T>> weights, bias; // aligned with the layer list

    void add(const StackGradsT& other) {
        for (size_t i = 0; i < weights.size(); ++i) {
            for (size_t j = 0; j < weights[i].numel(); ++j) weights[i].data[j] += other.weights[i].data[j];
            for (size_t j = 0; j < bias[i].numel(); ++j) bias[i].data[j] += other.bias[i].data[j];
        }
    }
};

using StackGrads = StackGradsT<float>;

template <typename T>
StackGradsT<T> zero_grads(const std::vector<LayerParamsT<T>>& layers) {
    StackGradsT<T> g;
    g.weights.reserve(layers.size());
    g.bias.reserve(layers.size());
    for (const auto& layer : layers) {
        g.weights.emplace_back(layer.weights.shape.empty() ? TensorT<T>() : TensorT<T>(layer.weights.shape));
        g.bias.emplace_back(layer.bias.shape.empty() ? TensorT<T>() : TensorT<T>(layer.bias.shape));
    }
    return g;
}

// Backpropagates `upstream` through the stack. Parameter gradients are
// accumulated into *grads when given; pass nullptr to treat the stack's
// parameters as frozen (only the input gradient is produced).
template <typename T>
TensorT<T> stack_backward(const std::vector<LayerParamsT<T>>& layers, const ForwardCacheT<T>& cache,
                          TensorT<T> upstream, StackGradsT<T>* grads = nullptr) {
    if (cache.layer_inputs.size() != layers.size())
        throw StateError("stack_backward: cache does not match layer stack (" +
                         std::to_string(cache.layer_inputs.size()) + " cached inputs for " +
                         std::to_string(layers.size()) + " layers)");
    for (size_t idx = layers.size(); idx-- > 0;) {
        const auto& layer = layers[idx];
        const auto& x_in = cache.layer_inputs[idx];
        switch (layer.kind) {
            case LayerKind::dense: {
                auto g = dense_backward(upstream, x_in, layer);
                if (grads) {
                    for (size_t j = 0; j < g.weights.numel(); ++j) grads->weights[idx].data[j] += g.weights.data[j];
                    for (size_t j = 0; j < g.bias.numel(); ++j) grads->bias[idx].data[j] += g.bias.data[j];
                }
                upstream = std::move(g.input);
                break;
            }
            case LayerKind::conv3x3: {
                auto g = conv3x3_backward(upstream, x_in, layer);
                if (grads) {
                    for (size_t j = 0; j < g.weights.numel(); ++j) grads->weights[idx].data[j] += g.weights.data[j];
                    for (size_t j = 0; j < g.bias.numel(); ++j) grads->bias[idx].data[j] += g.bias.data[j];
                }
                upstream = std::move(g.input);
                break;
            }
            case LayerKind::avgpool2x2:
                upstream = avgpool2x2_backward(upstream, x_in.shape);
                break;
            case LayerKind::upsample_nn2x:
                upstream = upsample_nn2x_backward(upstream, x_in.shape);
                break;
            case LayerKind::leaky_relu:
                upstream = leaky_relu_backward(upstream, x_in, layer.negative_slope);
                break;
        }
    }
    return upstream;
}

} // namespace mcdc
