#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lem/activations.hpp"
#include "lem/cell.hpp"
#include "lem/matrix.hpp"
#include "lem/rng.hpp"

namespace lem {

struct LstmState {
    Vector h;  // hidden state
    Vector c;  // cell state

    LstmState() = default;
    explicit LstmState(std::size_t d) : h(d, 0.0), c(d, 0.0) {}
};

// Standard LSTM with sigmoid gates and tanh cell nonlinearity:
//   f = sig(Wf h + Vf u + bf),  i = sig(Wi h + Vi u + bi),  o = sig(Wo h + Vo u + bo)
//   c' = f . c + i . tanh(W h + V u + b)
//   h' = o . tanh(c')
// Parameter count matches the LEM cell for equal (d, m, o).
struct LstmParams {
    std::size_t d = 0;
    std::size_t m = 0;
    std::size_t o = 0;

    Matrix w, wf, wi, wo;  // d x d
    Matrix v, vf, vi, vo;  // d x m
    Vector b, bf, bi, bo;  // d
    Matrix wout;           // o x d

    std::vector<TensorRef> tensors() {
        return {
            {"w", w.data.data(), w.size()},    {"wf", wf.data.data(), wf.size()},
            {"wi", wi.data.data(), wi.size()}, {"wo", wo.data.data(), wo.size()},
            {"v", v.data.data(), v.size()},    {"vf", vf.data.data(), vf.size()},
            {"vi", vi.data.data(), vi.size()}, {"vo", vo.data.data(), vo.size()},
            {"b", b.data(), b.size()},         {"bf", bf.data(), bf.size()},
            {"bi", bi.data(), bi.size()},      {"bo", bo.data(), bo.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }

    std::vector<ConstTensorRef> tensors() const {
        return {
            {"w", w.data.data(), w.size()},    {"wf", wf.data.data(), wf.size()},
            {"wi", wi.data.data(), wi.size()}, {"wo", wo.data.data(), wo.size()},
            {"v", v.data.data(), v.size()},    {"vf", vf.data.data(), vf.size()},
            {"vi", vi.data.data(), vi.size()}, {"vo", vo.data.data(), vo.size()},
            {"b", b.data(), b.size()},         {"bf", bf.data(), bf.size()},
            {"bi", bi.data(), bi.size()},      {"bo", bo.data(), bo.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }
};

struct LstmStepCache {
    Vector pre_f, pre_i, pre_o, pre_g;  // gate and candidate pre-activations
    Vector u;
    LstmState prev_state;
    LstmState next_state;
};

inline std::size_t lstm_param_count(std::size_t d, std::size_t m, std::size_t o) {
    require(d >= 1 && m >= 1 && o >= 1, "lstm_param_count: dims must be >= 1");
    return 4 * (d * d + d * m + d) + o * d;
}

inline LstmParams init_lstm_params(std::size_t d, std::size_t m, std::size_t o,
                                   std::uint64_t seed) {
    require(d >= 1 && m >= 1 && o >= 1, "init_lstm_params: dims must be >= 1");
    LstmParams p;
    p.d = d;
    p.m = m;
    p.o = o;
    p.w = Matrix(d, d);
    p.wf = Matrix(d, d);
    p.wi = Matrix(d, d);
    p.wo = Matrix(d, d);
    p.v = Matrix(d, m);
    p.vf = Matrix(d, m);
    p.vi = Matrix(d, m);
    p.vo = Matrix(d, m);
    p.b = Vector(d, 0.0);
    p.bf = Vector(d, 0.0);
    p.bi = Vector(d, 0.0);
    p.bo = Vector(d, 0.0);
    p.wout = Matrix(o, d);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Rng rng(seed);
    for (auto& t : p.tensors())
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-bound, bound);
    return p;
}

inline void lstm_forward_step_into(const LstmParams& p, const LstmState& state, const double* u,
                                   LstmStepCache& cache) {
    const std::size_t d = p.d;
    cache.prev_state = state;
    cache.u.assign(u, u + p.m);
    for (std::size_t j = 0; j < p.m; ++j)
        require(std::isfinite(u[j]), "lstm_forward_step: nonfinite input");

    cache.pre_f.resize(d);
    cache.pre_i.resize(d);
    cache.pre_o.resize(d);
    cache.pre_g.resize(d);
    cache.next_state.c.resize(d);
    cache.next_state.h.resize(d);

    detail::affine(p.wf, state.h, p.vf, u, p.bf, cache.pre_f);
    detail::affine(p.wi, state.h, p.vi, u, p.bi, cache.pre_i);
    detail::affine(p.wo, state.h, p.vo, u, p.bo, cache.pre_o);
    detail::affine(p.w, state.h, p.v, u, p.b, cache.pre_g);

    for (std::size_t i = 0; i < d; ++i) {
        const double f = sigma_hat(cache.pre_f[i]);
        const double in = sigma_hat(cache.pre_i[i]);
        const double c_new = f * state.c[i] + in * tanh_act(cache.pre_g[i]);
        cache.next_state.c[i] = c_new;
        cache.next_state.h[i] = sigma_hat(cache.pre_o[i]) * tanh_act(c_new);
    }
}

inline std::pair<LstmState, LstmStepCache> lstm_forward_step(const LstmParams& p,
                                                             const LstmState& state,
                                                             const Vector& u) {
    require(u.size() == p.m, "lstm_forward_step: input size mismatch");
    LstmStepCache cache;
    lstm_forward_step_into(p, state, u.data(), cache);
    return {cache.next_state, std::move(cache)};
}

struct LstmForwardResult {
    std::vector<Vector> outputs;
    std::vector<LstmStepCache> caches;
};

inline LstmForwardResult lstm_forward_sequence(const LstmParams& p, const SequenceView& seq,
                                               const LstmState& init) {
    require(seq.steps >= 1, "lstm_forward_sequence: empty input");
    require(seq.features == p.m, "lstm_forward_sequence: feature dim mismatch");
    LstmForwardResult r;
    r.outputs.resize(seq.steps);
    r.caches.resize(seq.steps);
    const LstmState* state = &init;
    for (std::size_t t = 0; t < seq.steps; ++t) {
        lstm_forward_step_into(p, *state, seq.step(t), r.caches[t]);
        state = &r.caches[t].next_state;
        r.outputs[t] = matvec(p.wout, state->h);
    }
    return r;
}

inline LstmForwardResult lstm_forward_sequence(const LstmParams& p,
                                               const std::vector<Vector>& inputs,
                                               const LstmState& init) {
    require(!inputs.empty(), "lstm_forward_sequence: empty input");
    std::vector<double> flat;
    flat.reserve(inputs.size() * p.m);
    for (const auto& u : inputs) {
        require(u.size() == p.m, "lstm_forward_sequence: feature dim mismatch");
        flat.insert(flat.end(), u.begin(), u.end());
    }
    return lstm_forward_sequence(p, SequenceView{flat.data(), inputs.size(), p.m}, init);
}

struct LstmGrads {
    Matrix w, wf, wi, wo;
    Matrix v, vf, vi, vo;
    Vector b, bf, bi, bo;
    Matrix wout;

    std::vector<TensorRef> tensors() {
        return {
            {"w", w.data.data(), w.size()},    {"wf", wf.data.data(), wf.size()},
            {"wi", wi.data.data(), wi.size()}, {"wo", wo.data.data(), wo.size()},
            {"v", v.data.data(), v.size()},    {"vf", vf.data.data(), vf.size()},
            {"vi", vi.data.data(), vi.size()}, {"vo", vo.data.data(), vo.size()},
            {"b", b.data(), b.size()},         {"bf", bf.data(), bf.size()},
            {"bi", bi.data(), bi.size()},      {"bo", bo.data(), bo.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }

    std::vector<ConstTensorRef> tensors() const {
        return {
            {"w", w.data.data(), w.size()},    {"wf", wf.data.data(), wf.size()},
            {"wi", wi.data.data(), wi.size()}, {"wo", wo.data.data(), wo.size()},
            {"v", v.data.data(), v.size()},    {"vf", vf.data.data(), vf.size()},
            {"vi", vi.data.data(), vi.size()}, {"vo", vo.data.data(), vo.size()},
            {"b", b.data(), b.size()},         {"bf", bf.data(), bf.size()},
            {"bi", bi.data(), bi.size()},      {"bo", bo.data(), bo.size()},
            {"wout", wout.data.data(), wout.size()},
        };
    }
};

inline LstmGrads zeros_like(const LstmParams& p) {
    LstmGrads g;
    g.w = Matrix(p.d, p.d);
    g.wf = Matrix(p.d, p.d);
    g.wi = Matrix(p.d, p.d);
    g.wo = Matrix(p.d, p.d);
    g.v = Matrix(p.d, p.m);
    g.vf = Matrix(p.d, p.m);
    g.vi = Matrix(p.d, p.m);
    g.vo = Matrix(p.d, p.m);
    g.b = Vector(p.d, 0.0);
    g.bf = Vector(p.d, 0.0);
    g.bi = Vector(p.d, 0.0);
    g.bo = Vector(p.d, 0.0);
    g.wout = Matrix(p.o, p.d);
    return g;
}

inline LstmGrads lstm_backward(const LstmParams& p, const std::vector<LstmStepCache>& caches,
                               const std::vector<Vector>& output_grads) {
    require(caches.size() == output_grads.size(), "lstm_backward: cache/grad length mismatch");
    require(!caches.empty(), "lstm_backward: empty sequence");
    const std::size_t d = p.d;

    LstmGrads g = zeros_like(p);
    Vector gh(d, 0.0), gc(d, 0.0);
    Vector gf(d), gi(d), go(d), gg(d);

    for (std::size_t n = caches.size(); n-- > 0;) {
        const LstmStepCache& c = caches[n];
        const Vector& og = output_grads[n];
        require(og.size() == p.o, "lstm_backward: output grad size mismatch");

        add_outer(g.wout, og, c.next_state.h);
        matvec_transpose_add(p.wout, og, gh);

        for (std::size_t i = 0; i < d; ++i) {
            const double tanh_c = tanh_act(c.next_state.c[i]);
            const double o_gate = sigma_hat(c.pre_o[i]);
            go[i] = gh[i] * tanh_c * sigma_hat_prime(c.pre_o[i]);
            const double gc_total = gh[i] * o_gate * (1.0 - tanh_c * tanh_c) + gc[i];

            const double cand = tanh_act(c.pre_g[i]);
            gf[i] = gc_total * c.prev_state.c[i] * sigma_hat_prime(c.pre_f[i]);
            gi[i] = gc_total * cand * sigma_hat_prime(c.pre_i[i]);
            gg[i] = gc_total * sigma_hat(c.pre_i[i]) * (1.0 - cand * cand);
            gc[i] = gc_total * sigma_hat(c.pre_f[i]);
        }

        gh.assign(d, 0.0);
        axpy(1.0, gf, g.bf);
        add_outer(g.wf, gf, c.prev_state.h);
        add_outer(g.vf, gf, c.u);
        matvec_transpose_add(p.wf, gf, gh);

        axpy(1.0, gi, g.bi);
        add_outer(g.wi, gi, c.prev_state.h);
        add_outer(g.vi, gi, c.u);
        matvec_transpose_add(p.wi, gi, gh);

        axpy(1.0, go, g.bo);
        add_outer(g.wo, go, c.prev_state.h);
        add_outer(g.vo, go, c.u);
        matvec_transpose_add(p.wo, go, gh);

        axpy(1.0, gg, g.b);
        add_outer(g.w, gg, c.prev_state.h);
        add_outer(g.v, gg, c.u);
        matvec_transpose_add(p.w, gg, gh);
    }
    return g;
}

template <class LossFn>
inline LstmGrads lstm_finite_difference_gradient(LstmParams params, LossFn&& loss_of_params,
                                                 double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("lstm_finite_difference_gradient: epsilon must be > 0");
    LstmGrads g = zeros_like(params);
    auto param_tensors = params.tensors();
    auto grad_tensors = g.tensors();
    for (std::size_t t = 0; t < param_tensors.size(); ++t) {
        for (std::size_t i = 0; i < param_tensors[t].size; ++i) {
            double& theta = param_tensors[t].data[i];
            const double saved = theta;
            const double eps = epsilon * std::max(1.0, std::fabs(saved));
            theta = saved + eps;
            const double up = loss_of_params(params);
            theta = saved - eps;
            const double down = loss_of_params(params);
            theta = saved;
            grad_tensors[t].data[i] = (up - down) / (2.0 * eps);
        }
    }
    return g;
}

// Builds an LEM/LSTM pair that traces the same trajectory (h = y, c = z):
// the LEM runs with delta_t = 1, its y-gate saturated to 1 and identity slow
// candidate (wy = I, vy = 0, by = 0), while the LSTM uses input gate = LEM's
// z-gate, forget gate = 1 - input gate (via sign flip of the gate weights),
// and output gate saturated to 1. saturation_tol controls how far from 1 the
// saturated sigmoids may sit.
inline std::pair<LemParams, LstmParams> construct_equivalent_pair(std::size_t d, std::size_t m,
                                                                  std::uint64_t seed,
                                                                  double saturation_tol) {
    require(saturation_tol > 0.0, "construct_equivalent_pair: saturation_tol must be > 0");
    const double b_sat = saturation_bias(saturation_tol);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Rng rng(seed);

    // shared free blocks
    const Matrix w_gate = rng.uniform_matrix(d, d, -bound, bound);
    const Matrix v_gate = rng.uniform_matrix(d, m, -bound, bound);
    const Vector b_gate = rng.uniform_vector(d, -bound, bound);
    const Matrix w_cand = rng.uniform_matrix(d, d, -bound, bound);
    const Matrix v_cand = rng.uniform_matrix(d, m, -bound, bound);
    const Vector b_cand = rng.uniform_vector(d, -bound, bound);
    const Matrix w_read = rng.uniform_matrix(d, d, -bound, bound);

    LemParams lem = zero_lem_params(d, m, d, /*delta_t=*/1.0);
    lem.w1 = w_gate;
    lem.v1 = v_gate;
    lem.b1 = b_gate;
    lem.b2 = Vector(d, b_sat);  // y-gate ~ 1
    lem.wz = w_cand;
    lem.vz = v_cand;
    lem.bz = b_cand;
    lem.wy = Matrix::identity(d);  // y' = tanh(z')
    lem.wout = w_read;

    LstmParams lstm = init_lstm_params(d, m, d, seed);
    for (auto& t : lstm.tensors())
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = 0.0;
    lstm.wi = w_gate;
    lstm.vi = v_gate;
    lstm.bi = b_gate;
    // forget = 1 - input, from sigma_hat(-x) = 1 - sigma_hat(x)
    lstm.wf = w_gate;
    lstm.vf = v_gate;
    for (auto& x : lstm.wf.data) x = -x;
    for (auto& x : lstm.vf.data) x = -x;
    lstm.bf = b_gate;
    for (auto& x : lstm.bf) x = -x;
    lstm.w = w_cand;
    lstm.v = v_cand;
    lstm.b = b_cand;
    lstm.bo = Vector(d, b_sat);  // output gate ~ 1
    lstm.wout = w_read;

    return {std::move(lem), std::move(lstm)};
}

}  // namespace lem
