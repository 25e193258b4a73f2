#pragma once

#include <cmath>
#include <cstdint>

#include "mcdc/errors.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

// Bias-corrected Adam. Moments are zero-initialized and belong to exactly
// one parameter tensor.
template <typename T>
struct AdamStateT {
    TensorT<T> first_moment;
    TensorT<T> second_moment;
    uint64_t step_count = 0;
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);

    static AdamStateT for_param(const TensorT<T>& param, T lr) {
        AdamStateT s;
        s.first_moment = TensorT<T>::zeros_like(param);
        s.second_moment = TensorT<T>::zeros_like(param);
        s.lr = lr;
        return s;
    }
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(TensorT<T>& param, const TensorT<T>& grad, AdamStateT<T>& state) {
    require_same_shape(param, grad, "adam_step");
    require_same_shape(param, state.first_moment, "adam_step (state)");
    state.step_count += 1;
    const T b1 = state.beta1, b2 = state.beta2;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1), static_cast<double>(state.step_count)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2), static_cast<double>(state.step_count)));
    for (size_t i = 0; i < param.numel(); ++i) {
        T& m = state.first_moment.data[i];
        T& v = state.second_moment.data[i];
        const T g = grad.data[i];
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g * g;
        const T mhat = m / bc1;
        const T vhat = v / bc2;
        param.data[i] -= state.lr * mhat / (static_cast<T>(std::sqrt(static_cast<double>(vhat))) + state.epsilon);
    }
}

} // namespace mcdc
