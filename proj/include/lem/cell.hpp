#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lem/activations.hpp"
#include "lem/matrix.hpp"
#include "lem/rng.hpp"

namespace lem {

struct TensorRef {
    const char* name;
    double* data;
    std::size_t size;
};

struct ConstTensorRef {
    const char* name;
    const double* data;
    std::size_t size;
};

// Hidden state pair: z carries the fast dynamics, y the slow ones.
struct LemState {
    Vector z;
    Vector y;

    LemState() = default;
    explicit LemState(std::size_t d) : z(d, 0.0), y(d, 0.0) {}
};

// All weights of the recurrent cell plus the linear readout and the global
// step size delta_t (a hyperparameter, not trained).
//
// The cell computes, per step, with u the input and (z,y) the previous state:
//   dt_gate      = delta_t * sigma_hat(W1 y + V1 u + b1)
//   dt_bar_gate  = delta_t * sigma_hat(W2 y + V2 u + b2)
//   z'           = (1 - dt_gate) . z + dt_gate . tanh(Wz y + Vz u + bz)
//   y'           = (1 - dt_bar_gate) . y + dt_bar_gate . tanh(Wy z' + Vy u + by)
//   output       = Wout y'
// The y-update reads the freshly computed z' (implicit-explicit structure).
struct LemParams {
    std::size_t d = 0;  // hidden units
    std::size_t m = 0;  // input features
    std::size_t o = 0;  // output dim
    double delta_t = 1.0;

    Matrix w1, w2, wz, wy;  // d x d
    Matrix v1, v2, vz, vy;  // d x m
    Vector b1, b2, bz, by;  // d
    Matrix wout;            // o x d

    std::vector<TensorRef> tensors() {
        return {
            {"w1", w1.data.data(), w1.size()}, {"w2", w2.data.data(), w2.size()},
            {"wz", wz.data.data(), wz.size()}, {"wy", wy.data.data(), wy.size()},
            {"v1", v1.data.data(), v1.size()}, {"v2", v2.data.data(), v2.size()},
            {"vz", vz.data.data(), vz.size()}, {"vy", vy.data.data(), vy.size()},
            {"b1", b1.data(), b1.size()},      {"b2", b2.data(), b2.size()},
            {"bz", bz.data(), bz.size()},      {"by", by.data(), by.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }

    std::vector<ConstTensorRef> tensors() const {
        return {
            {"w1", w1.data.data(), w1.size()}, {"w2", w2.data.data(), w2.size()},
            {"wz", wz.data.data(), wz.size()}, {"wy", wy.data.data(), wy.size()},
            {"v1", v1.data.data(), v1.size()}, {"v2", v2.data.data(), v2.size()},
            {"vz", vz.data.data(), vz.size()}, {"vy", vy.data.data(), vy.size()},
            {"b1", b1.data(), b1.size()},      {"b2", b2.data(), b2.size()},
            {"bz", bz.data(), bz.size()},      {"by", by.data(), by.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& t : tensors()) n += t.size;
        return n;
    }
};

// Everything the backward pass and the step Jacobian need about one step.
struct StepCache {
    Vector pre_gate_z;   // W1 y + V1 u + b1
    Vector pre_gate_y;   // W2 y + V2 u + b2
    Vector pre_cand_z;   // Wz y + Vz u + bz
    Vector pre_cand_y;   // Wy z' + Vy u + by   (uses the new z)
    Vector gate_dt;      // delta_t * sigma_hat(pre_gate_z)
    Vector gate_dt_bar;  // delta_t * sigma_hat(pre_gate_y)
    Vector u;
    LemState prev_state;
    LemState next_state;
};

// Non-owning view over one sequence stored row-major as [steps][features].
struct SequenceView {
    const double* data = nullptr;
    std::size_t steps = 0;
    std::size_t features = 0;

    const double* step(std::size_t t) const { return data + t * features; }
};

inline std::size_t lem_param_count(std::size_t d, std::size_t m, std::size_t o) {
    require(d >= 1 && m >= 1 && o >= 1, "lem_param_count: dims must be >= 1");
    return 4 * (d * d + d * m + d) + o * d;
}

// All weights and biases i.i.d. uniform on [-1/sqrt(d), 1/sqrt(d)), drawn in
// tensor declaration order so a seed pins the whole model.
inline LemParams init_lem_params(std::size_t d, std::size_t m, std::size_t o, double delta_t,
                                 std::uint64_t seed) {
    require(d >= 1 && m >= 1 && o >= 1, "init_lem_params: dims must be >= 1");
    require(delta_t > 0.0, "init_lem_params: delta_t must be positive");
    LemParams p;
    p.d = d;
    p.m = m;
    p.o = o;
    p.delta_t = delta_t;
    p.w1 = Matrix(d, d);
    p.w2 = Matrix(d, d);
    p.wz = Matrix(d, d);
    p.wy = Matrix(d, d);
    p.v1 = Matrix(d, m);
    p.v2 = Matrix(d, m);
    p.vz = Matrix(d, m);
    p.vy = Matrix(d, m);
    p.b1 = Vector(d, 0.0);
    p.b2 = Vector(d, 0.0);
    p.bz = Vector(d, 0.0);
    p.by = Vector(d, 0.0);
    p.wout = Matrix(o, d);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Rng rng(seed);
    for (auto& t : p.tensors())
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-bound, bound);
    return p;
}

inline LemParams zero_lem_params(std::size_t d, std::size_t m, std::size_t o, double delta_t) {
    LemParams p = init_lem_params(d, m, o, delta_t, 0);
    for (auto& t : p.tensors())
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = 0.0;
    return p;
}

namespace detail {

inline void affine(const Matrix& w, const Vector& y, const Matrix& v, const double* u,
                   const Vector& b, Vector& out) {
    const std::size_t d = w.rows;
    const std::size_t m = v.cols;
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        const double* wr = w.data.data() + i * w.cols;
        for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * y[j];
        const double* vr = v.data.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) s += vr[j] * u[j];
        out[i] = s;
    }
}

}  // namespace detail

// One cell update; fills `cache` completely (including prev/next state).
inline void forward_step_into(const LemParams& p, const LemState& state, const double* u,
                              StepCache& cache) {
    const std::size_t d = p.d;
    cache.prev_state = state;
    cache.u.assign(u, u + p.m);
    for (std::size_t j = 0; j < p.m; ++j)
        require(std::isfinite(u[j]), "forward_step: nonfinite input");

    cache.pre_gate_z.resize(d);
    cache.pre_gate_y.resize(d);
    cache.pre_cand_z.resize(d);
    cache.pre_cand_y.resize(d);
    cache.gate_dt.resize(d);
    cache.gate_dt_bar.resize(d);
    cache.next_state.z.resize(d);
    cache.next_state.y.resize(d);

    detail::affine(p.w1, state.y, p.v1, u, p.b1, cache.pre_gate_z);
    detail::affine(p.w2, state.y, p.v2, u, p.b2, cache.pre_gate_y);
    detail::affine(p.wz, state.y, p.vz, u, p.bz, cache.pre_cand_z);

    for (std::size_t i = 0; i < d; ++i) {
        const double g = p.delta_t * sigma_hat(cache.pre_gate_z[i]);
        cache.gate_dt[i] = g;
        cache.next_state.z[i] =
            (1.0 - g) * state.z[i] + g * tanh_act(cache.pre_cand_z[i]);
    }
    // y reads the new z
    detail::affine(p.wy, cache.next_state.z, p.vy, u, p.by, cache.pre_cand_y);
    for (std::size_t i = 0; i < d; ++i) {
        const double g = p.delta_t * sigma_hat(cache.pre_gate_y[i]);
        cache.gate_dt_bar[i] = g;
        cache.next_state.y[i] =
            (1.0 - g) * state.y[i] + g * tanh_act(cache.pre_cand_y[i]);
    }
}

inline std::pair<LemState, StepCache> forward_step(const LemParams& p, const LemState& state,
                                                   const Vector& u) {
    require(u.size() == p.m, "forward_step: input size mismatch");
    StepCache cache;
    forward_step_into(p, state, u.data(), cache);
    return {cache.next_state, std::move(cache)};
}

struct ForwardResult {
    std::vector<Vector> outputs;  // Wout y_n, one per step
    std::vector<StepCache> caches;
};

inline ForwardResult forward_sequence(const LemParams& p, const SequenceView& seq,
                                      const LemState& init) {
    require(seq.steps >= 1, "forward_sequence: empty input");
    require(seq.features == p.m, "forward_sequence: feature dim mismatch");
    ForwardResult r;
    r.outputs.resize(seq.steps);
    r.caches.resize(seq.steps);
    const LemState* state = &init;
    for (std::size_t t = 0; t < seq.steps; ++t) {
        forward_step_into(p, *state, seq.step(t), r.caches[t]);
        state = &r.caches[t].next_state;
        r.outputs[t] = matvec(p.wout, state->y);
    }
    return r;
}

inline ForwardResult forward_sequence(const LemParams& p, const std::vector<Vector>& inputs,
                                      const LemState& init) {
    require(!inputs.empty(), "forward_sequence: empty input");
    std::vector<double> flat;
    flat.reserve(inputs.size() * p.m);
    for (const auto& u : inputs) {
        require(u.size() == p.m, "forward_sequence: feature dim mismatch");
        flat.insert(flat.end(), u.begin(), u.end());
    }
    return forward_sequence(p, SequenceView{flat.data(), inputs.size(), p.m}, init);
}

}  // namespace lem
