#pragma once

#include <cmath>
#include <cstdint>

#include "lem/matrix.hpp"

namespace lem {

enum class OptimizerKind { Sgd, Adam };

// Adam moment buffers; G is a tensor aggregate (LemGrads / LstmGrads).
template <class G>
struct AdamState {
    G m;
    G v;
    std::int64_t t = 0;
};

template <class P, class G>
inline void sgd_step(P& params, const G& grads, double lr) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    require(ps.size() == gs.size(), "sgd_step: layout mismatch");
    for (std::size_t k = 0; k < ps.size(); ++k) {
        require(ps[k].size == gs[k].size, "sgd_step: shape mismatch");
        for (std::size_t i = 0; i < ps[k].size; ++i) ps[k].data[i] -= lr * gs[k].data[i];
    }
}

template <class P, class G>
inline void adam_step(P& params, AdamState<G>& state, const G& grads, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto ms = state.m.tensors();
    auto vs = state.v.tensors();
    require(ps.size() == gs.size(), "adam_step: layout mismatch");
    for (std::size_t k = 0; k < ps.size(); ++k) {
        for (std::size_t i = 0; i < ps[k].size; ++i) {
            const double g = gs[k].data[i];
            double& m = ms[k].data[i];
            double& v = vs[k].data[i];
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            ps[k].data[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
        }
    }
}

// Global-norm clipping; returns the pre-clip norm.
template <class G>
inline double clip_global_norm(G& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& t : grads.tensors())
        for (std::size_t i = 0; i < t.size; ++i) sq += t.data[i] * t.data[i];
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& t : grads.tensors())
            for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= scale;
    }
    return norm;
}

}  // namespace lem
