#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "lem/cell.hpp"
#include "lem/loss.hpp"
#include "lem/matrix.hpp"

namespace lem {

// Gradient holder mirroring LemParams tensor-for-tensor.
struct LemGrads {
    Matrix w1, w2, wz, wy;
    Matrix v1, v2, vz, vy;
    Vector b1, b2, bz, by;
    Matrix wout;

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
};

inline LemGrads zeros_like(const LemParams& p) {
    LemGrads g;
    g.w1 = Matrix(p.d, p.d);
    g.w2 = Matrix(p.d, p.d);
    g.wz = Matrix(p.d, p.d);
    g.wy = Matrix(p.d, p.d);
    g.v1 = Matrix(p.d, p.m);
    g.v2 = Matrix(p.d, p.m);
    g.vz = Matrix(p.d, p.m);
    g.vy = Matrix(p.d, p.m);
    g.b1 = Vector(p.d, 0.0);
    g.b2 = Vector(p.d, 0.0);
    g.bz = Vector(p.d, 0.0);
    g.by = Vector(p.d, 0.0);
    g.wout = Matrix(p.o, p.d);
    return g;
}

// y += a * x over matched tensor lists.
template <class Tensors>
inline void tensors_axpy(double a, const Tensors& x, Tensors& y) {
    auto xs = x.tensors();
    auto ys = y.tensors();
    require(xs.size() == ys.size(), "tensors_axpy: layout mismatch");
    for (std::size_t t = 0; t < xs.size(); ++t) {
        require(xs[t].size == ys[t].size, "tensors_axpy: shape mismatch");
        for (std::size_t i = 0; i < xs[t].size; ++i) ys[t].data[i] += a * xs[t].data[i];
    }
}

template <class Tensors>
inline void tensors_scale(Tensors& x, double a) {
    for (auto& t : x.tensors())
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= a;
}

template <class Tensors>
inline double tensors_max_abs(const Tensors& x, bool include_readout = true) {
    double best = 0.0;
    for (const auto& t : x.tensors()) {
        if (!include_readout && std::string_view(t.name) == "wout") continue;
        for (std::size_t i = 0; i < t.size; ++i)
            best = std::max(best, std::fabs(t.data[i]));
    }
    return best;
}

// Exact reverse-mode gradients of sum_n <output_grads[n], output_n> treated
// as the upstream signal, i.e. plain BPTT with the caller's loss already
// differentiated through the readout. Accounts for y_n reading the new z_n.
inline LemGrads backward(const LemParams& p, const std::vector<StepCache>& caches,
                         const std::vector<Vector>& output_grads) {
    require(caches.size() == output_grads.size(), "backward: cache/grad length mismatch");
    require(!caches.empty(), "backward: empty sequence");
    const std::size_t d = p.d;

    LemGrads g = zeros_like(p);
    Vector gz(d, 0.0), gy(d, 0.0);
    Vector gate_grad_z(d), gate_grad_y(d), cand_grad_z(d), cand_grad_y(d);

    for (std::size_t n = caches.size(); n-- > 0;) {
        const StepCache& c = caches[n];
        const Vector& og = output_grads[n];
        require(og.size() == p.o, "backward: output grad size mismatch");

        // readout: out = wout * y_n
        add_outer(g.wout, og, c.next_state.y);
        matvec_transpose_add(p.wout, og, gy);

        // y_n = (1 - gb) . y_prev + gb . tanh(pre_cand_y), gb = dt * sigma_hat(pre_gate_y)
        for (std::size_t i = 0; i < d; ++i) {
            const double gyi = gy[i];
            const double tanh_d = tanh_act(c.pre_cand_y[i]);
            gate_grad_y[i] = gyi * p.delta_t * sigma_hat_prime(c.pre_gate_y[i]) *
                             (tanh_d - c.prev_state.y[i]);
            cand_grad_y[i] = gyi * c.gate_dt_bar[i] * (1.0 - tanh_d * tanh_d);
            gy[i] = gyi * (1.0 - c.gate_dt_bar[i]);
        }
        // pre_cand_y = wy z_n + vy u + by
        axpy(1.0, cand_grad_y, g.by);
        add_outer(g.wy, cand_grad_y, c.next_state.z);
        add_outer(g.vy, cand_grad_y, c.u);
        matvec_transpose_add(p.wy, cand_grad_y, gz);

        // z_n = (1 - ga) . z_prev + ga . tanh(pre_cand_z), ga = dt * sigma_hat(pre_gate_z)
        for (std::size_t i = 0; i < d; ++i) {
            const double gzi = gz[i];
            const double tanh_c = tanh_act(c.pre_cand_z[i]);
            gate_grad_z[i] = gzi * p.delta_t * sigma_hat_prime(c.pre_gate_z[i]) *
                             (tanh_c - c.prev_state.z[i]);
            cand_grad_z[i] = gzi * c.gate_dt[i] * (1.0 - tanh_c * tanh_c);
            gz[i] = gzi * (1.0 - c.gate_dt[i]);
        }
        // pre_gate_z = w1 y_prev + v1 u + b1, etc.
        axpy(1.0, gate_grad_z, g.b1);
        add_outer(g.w1, gate_grad_z, c.prev_state.y);
        add_outer(g.v1, gate_grad_z, c.u);
        matvec_transpose_add(p.w1, gate_grad_z, gy);

        axpy(1.0, gate_grad_y, g.b2);
        add_outer(g.w2, gate_grad_y, c.prev_state.y);
        add_outer(g.v2, gate_grad_y, c.u);
        matvec_transpose_add(p.w2, gate_grad_y, gy);

        axpy(1.0, cand_grad_z, g.bz);
        add_outer(g.wz, cand_grad_z, c.prev_state.y);
        add_outer(g.vz, cand_grad_z, c.u);
        matvec_transpose_add(p.wz, cand_grad_z, gy);
    }
    return g;
}

// Central finite differences over every scalar parameter, epsilon scaled per
// parameter. Re-runs the supplied loss functional twice per scalar; this is
// the independent oracle the analytic path is checked against.
template <class LossFn>
inline LemGrads finite_difference_gradient(LemParams params, LossFn&& loss_of_params,
                                           double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_gradient: epsilon must be > 0");
    LemGrads g = zeros_like(params);
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

inline LemGrads finite_difference_gradient(const LemParams& params,
                                           const std::vector<Vector>& inputs,
                                           const SeqTarget& target, double epsilon) {
    return finite_difference_gradient(
        params,
        [&](const LemParams& q) {
            auto fwd = forward_sequence(q, inputs, LemState(q.d));
            return sequence_loss(fwd.outputs, target).loss;
        },
        epsilon);
}

// --- One-step state Jacobian -------------------------------------------------
//
// With the concatenated state X = [z^1, y^1, ..., z^d, y^d], one step is
// X_l = X_{l-1} + dt*E*X_{l-1}-ish; concretely the Jacobian decomposes as
//   dX_l/dX_{l-1} = I + dt * E + dt^2 * F
// where E collects the first-order terms and F the terms induced by the
// y-update reading the freshly computed z. Entries are the exact derivatives
// of the step map, so products of these match finite differences.

struct JacobianParts {
    Matrix e;  // 2d x 2d
    Matrix f;  // 2d x 2d
};

inline JacobianParts jacobian_parts(const LemParams& p, const StepCache& c) {
    const std::size_t d = p.d;
    JacobianParts parts{Matrix(2 * d, 2 * d), Matrix(2 * d, 2 * d)};
    Matrix& e = parts.e;
    Matrix& f = parts.f;

    // per-unit activation values at this step
    Vector s_a(d), s_a_prime(d), s_b(d), s_b_prime(d);
    Vector tanh_c(d), tanh_c_prime(d), tanh_d_prime(d), tanh_d(d);
    for (std::size_t i = 0; i < d; ++i) {
        s_a[i] = sigma_hat(c.pre_gate_z[i]);
        s_a_prime[i] = sigma_hat_prime(c.pre_gate_z[i]);
        s_b[i] = sigma_hat(c.pre_gate_y[i]);
        s_b_prime[i] = sigma_hat_prime(c.pre_gate_y[i]);
        tanh_c[i] = tanh_act(c.pre_cand_z[i]);
        tanh_c_prime[i] = 1.0 - tanh_c[i] * tanh_c[i];
        tanh_d[i] = tanh_act(c.pre_cand_y[i]);
        tanh_d_prime[i] = 1.0 - tanh_d[i] * tanh_d[i];
    }

    // dz_i/dy_j first-order block, reused by F below
    Matrix dz_dy(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            dz_dy(i, j) = p.w1(i, j) * s_a_prime[i] * (tanh_c[i] - c.prev_state.z[i]) +
                          p.wz(i, j) * s_a[i] * tanh_c_prime[i];

    for (std::size_t i = 0; i < d; ++i) {
        e(2 * i, 2 * i) = -s_a[i];
        e(2 * i + 1, 2 * i + 1) = -s_b[i];
        for (std::size_t j = 0; j < d; ++j) {
            e(2 * i, 2 * j + 1) = dz_dy(i, j);
            e(2 * i + 1, 2 * j) = p.wy(i, j) * s_b[i] * tanh_d_prime[i];
            e(2 * i + 1, 2 * j + 1) +=
                p.w2(i, j) * s_b_prime[i] * (tanh_d[i] - c.prev_state.y[i]);

            // second-order terms: y reads z_new = z_prev(1 - dt s_a) + ...
            f(2 * i + 1, 2 * j) = -p.wy(i, j) * s_b[i] * tanh_d_prime[i] * s_a[j];
            double acc = 0.0;
            for (std::size_t lam = 0; lam < d; ++lam) acc += p.wy(i, lam) * dz_dy(lam, j);
            f(2 * i + 1, 2 * j + 1) = s_b[i] * tanh_d_prime[i] * acc;
        }
    }
    return parts;
}

inline Matrix state_jacobian(const LemParams& p, const StepCache& c) {
    const JacobianParts parts = jacobian_parts(p, c);
    const std::size_t n = 2 * p.d;
    Matrix j = Matrix::identity(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s)
            j(r, s) += p.delta_t * parts.e(r, s) + p.delta_t * p.delta_t * parts.f(r, s);
    return j;
}

// --- Per-step gradient contributions ----------------------------------------
//
// Contribution of step k to the gradient of the step-n loss 0.5|y_n - target|^2
// with respect to the single slow-candidate weight wy(alpha, beta):
//   dE_n^{(k)}/d theta = dE_n/dX_n * prod_{l=k+1..n} dX_l/dX_{l-1} * d+X_k/d theta,
// where d+X_k/d theta has its only nonzero entry at the y^alpha slot, equal to
//   dt * sigma_hat(pre_gate_y^alpha_{k}) * tanh'(pre_cand_y^alpha_k) * z^beta_k.
// Returns all contributions k = 1..n (1-based) in one reverse scan.
inline Vector contribution_series(const LemParams& p, const std::vector<StepCache>& caches,
                                  const Vector& target_y, std::size_t n, std::size_t alpha,
                                  std::size_t beta) {
    require(n >= 1 && n <= caches.size(), "contribution_series: n out of range");
    require(alpha < p.d && beta < p.d, "contribution_series: entry out of range");
    require(target_y.size() == p.d, "contribution_series: target size mismatch");
    const std::size_t d = p.d;

    // dE_n/dX_n: zeros at z slots, (y_n - target) at y slots
    Vector row(2 * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        row[2 * i + 1] = caches[n - 1].next_state.y[i] - target_y[i];

    auto direct_entry = [&](std::size_t k) {
        const StepCache& c = caches[k - 1];
        return p.delta_t * sigma_hat(c.pre_gate_y[alpha]) *
               tanh_prime(c.pre_cand_y[alpha]) * c.next_state.z[beta];
    };

    Vector out(n, 0.0);
    out[n - 1] = row[2 * alpha + 1] * direct_entry(n);
    for (std::size_t l = n; l >= 2; --l) {
        row = vecmat(row, state_jacobian(p, caches[l - 1]));
        out[l - 2] = row[2 * alpha + 1] * direct_entry(l - 1);
    }
    return out;
}

inline double gradient_contribution(const LemParams& p, const std::vector<StepCache>& caches,
                                    const Vector& target_y, std::size_t n, std::size_t k,
                                    std::size_t alpha, std::size_t beta) {
    require(k >= 1 && k <= n, "gradient_contribution: need 1 <= k <= n");
    return contribution_series(p, caches, target_y, n, alpha, beta)[k - 1];
}

// --- Gradient bounds ---------------------------------------------------------

// eta: largest infinity norm among the four recurrent weight matrices.
inline double recurrent_eta(const LemParams& p) {
    return std::max(std::max(inf_norm(p.w1), inf_norm(p.w2)),
                    std::max(inf_norm(p.wz), inf_norm(p.wy)));
}

struct GradientBounds {
    double eta = 0.0;
    double small_dt = 0.0;       // (3 + sqrt(3) x_hat)(3 + 6 eta), valid for small dt
    double unconditional = 0.0;  // (3 + sqrt(3) x_hat)(1 + e^{1+3 eta}), any dt
};

inline GradientBounds prop2_bound(const LemParams& p, double x_hat) {
    GradientBounds b;
    b.eta = recurrent_eta(p);
    const double lead = 3.0 + std::sqrt(3.0) * x_hat;
    b.small_dt = lead * (3.0 + 6.0 * b.eta);
    b.unconditional = lead * (1.0 + std::exp(1.0 + 3.0 * b.eta));
    return b;
}

struct GradientReport {
    LemGrads grads;
    double empirical_max_abs = 0.0;  // over cell weights/biases (readout excluded)
    double eta = 0.0;
    double x_hat = 0.0;
    double bound_small_dt = 0.0;
    double bound_unconditional = 0.0;
    bool pass = false;
};

inline GradientReport make_gradient_report(const LemParams& p, LemGrads grads, double x_hat) {
    GradientReport r;
    r.empirical_max_abs = tensors_max_abs(grads, /*include_readout=*/false);
    const GradientBounds b = prop2_bound(p, x_hat);
    r.eta = b.eta;
    r.x_hat = x_hat;
    r.bound_small_dt = b.small_dt;
    r.bound_unconditional = b.unconditional;
    r.pass = r.empirical_max_abs <= r.bound_unconditional;
    r.grads = std::move(grads);
    return r;
}

}  // namespace lem
