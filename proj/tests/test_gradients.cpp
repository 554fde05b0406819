#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lem/analysis.hpp"
#include "lem/gradients.hpp"

using namespace lem;

namespace {

double max_rel_vs(const LemGrads& analytic, const LemGrads& oracle) {
    const double scale = std::max(tensors_max_abs(oracle), 1e-8);
    double worst = 0.0;
    auto at = analytic.tensors();
    auto ot = oracle.tensors();
    for (std::size_t t = 0; t < at.size(); ++t)
        for (std::size_t i = 0; i < at[t].size; ++i)
            worst = std::max(worst, std::fabs(at[t].data[i] - ot[t].data[i]) / scale);
    return worst;
}

}  // namespace

TEST_CASE("zero upstream gradients give zero parameter gradients") {
    LemParams p = init_lem_params(3, 2, 2, 0.5, 7);
    std::vector<Vector> inputs{{0.3, -0.2}, {0.5, 0.1}};
    auto fwd = forward_sequence(p, inputs, LemState(3));
    std::vector<Vector> og(2, Vector(2, 0.0));
    LemGrads g = backward(p, fwd.caches, og);
    for (const auto& t : g.tensors())
        for (std::size_t i = 0; i < t.size; ++i) CHECK(t.data[i] == 0.0);
}

TEST_CASE("one-step scalar model matches hand-derived gradients") {
    // d = m = o = 1, zero initial state. Closed forms:
    //   z1 = dt sig(A) tanh(C), A = v1 u + b1, C = vz u + bz
    //   y1 = dt sig(B) tanh(D), B = v2 u + b2, D = wy z1 + vy u + by
    //   loss = 0.5 (wout y1 - t)^2
    LemParams p = zero_lem_params(1, 1, 1, 0.7);
    p.v1(0, 0) = 0.4;
    p.b1[0] = -0.3;
    p.v2(0, 0) = -0.6;
    p.b2[0] = 0.2;
    p.vz(0, 0) = 0.8;
    p.bz[0] = 0.1;
    p.wy(0, 0) = 0.9;
    p.vy(0, 0) = -0.2;
    p.by[0] = 0.5;
    p.wout(0, 0) = 1.3;
    const double u = 0.6, target = 0.25, dt = p.delta_t;

    const double a_pre = p.v1(0, 0) * u + p.b1[0];
    const double b_pre = p.v2(0, 0) * u + p.b2[0];
    const double c_pre = p.vz(0, 0) * u + p.bz[0];
    const double z1 = dt * sigma_hat(a_pre) * std::tanh(c_pre);
    const double d_pre = p.wy(0, 0) * z1 + p.vy(0, 0) * u + p.by[0];
    const double y1 = dt * sigma_hat(b_pre) * std::tanh(d_pre);
    const double out = p.wout(0, 0) * y1;

    auto fwd = forward_sequence(p, std::vector<Vector>{{u}}, LemState(1));
    REQUIRE(fwd.outputs[0][0] == Catch::Approx(out).margin(1e-15));

    std::vector<Vector> og{{out - target}};
    LemGrads g = backward(p, fwd.caches, og);

    const double gy = (out - target) * p.wout(0, 0);
    const double gd = gy * dt * sigma_hat(b_pre) * tanh_prime(d_pre);
    const double gz = gd * p.wy(0, 0);
    const double gc = gz * dt * sigma_hat(a_pre) * tanh_prime(c_pre);

    CHECK(g.wout(0, 0) == Catch::Approx((out - target) * y1).margin(1e-9));
    CHECK(g.by[0] == Catch::Approx(gd).margin(1e-9));
    CHECK(g.vy(0, 0) == Catch::Approx(gd * u).margin(1e-9));
    CHECK(g.wy(0, 0) == Catch::Approx(gd * z1).margin(1e-9));
    CHECK(g.b2[0] == Catch::Approx(gy * dt * sigma_hat_prime(b_pre) * std::tanh(d_pre)).margin(1e-9));
    CHECK(g.bz[0] == Catch::Approx(gc).margin(1e-9));
    CHECK(g.vz(0, 0) == Catch::Approx(gc * u).margin(1e-9));
    CHECK(g.b1[0] ==
          Catch::Approx(gz * dt * sigma_hat_prime(a_pre) * std::tanh(c_pre)).margin(1e-9));
    // recurrent weights see the zero initial state
    CHECK(g.w1(0, 0) == 0.0);
    CHECK(g.wz(0, 0) == 0.0);
    CHECK(g.w2(0, 0) == 0.0);
}

TEST_CASE("backward agrees with the finite-difference oracle") {
    Rng rng(101);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t d = 2 + rng.index(5);
        const std::size_t m = 1 + rng.index(3);
        const std::size_t n_steps = 3 + rng.index(10);
        const bool classify = trial % 2 == 1;
        const std::size_t o = classify ? 3 : 2;
        LemParams p = init_lem_params(d, m, o, rng.uniform(0.2, 1.0), rng.next_u64());

        std::vector<Vector> inputs(n_steps);
        for (auto& v : inputs) v = rng.uniform_vector(m, -1.0, 1.0);
        SeqTarget target;
        if (classify) {
            target.kind = SeqTarget::Kind::ClassId;
            target.class_id = static_cast<int>(rng.index(o));
        } else {
            target.kind = SeqTarget::Kind::PerStep;
            target.step_values.resize(n_steps);
            for (auto& t : target.step_values) t = rng.uniform_vector(o, -1.0, 1.0);
        }

        auto fwd = forward_sequence(p, inputs, LemState(d));
        const LossResult lr = sequence_loss(fwd.outputs, target);
        const LemGrads analytic = backward(p, fwd.caches, lr.output_grads);
        const LemGrads oracle = finite_difference_gradient(p, inputs, target, 1e-6);
        CHECK(max_rel_vs(analytic, oracle) <= 1e-6);
    }
}

TEST_CASE("finite differences reject zero epsilon") {
    LemParams p = init_lem_params(2, 1, 1, 0.5, 3);
    SeqTarget t;
    t.final_value = {0.0};
    CHECK_THROWS_AS(finite_difference_gradient(p, std::vector<Vector>{{0.1}}, t, 0.0),
                    std::invalid_argument);
}

TEST_CASE("state jacobian matches finite differences") {
    Rng rng(55);
    const std::size_t d = 3, m = 2;
    LemParams p = init_lem_params(d, m, d, 0.6, rng.next_u64());
    // a nontrivial starting state
    LemState state(d);
    for (std::size_t i = 0; i < d; ++i) {
        state.z[i] = rng.uniform(-0.5, 0.5);
        state.y[i] = rng.uniform(-0.5, 0.5);
    }
    const Vector u = rng.uniform_vector(m, -1.0, 1.0);

    auto [next, cache] = forward_step(p, state, u);
    const Matrix jac = state_jacobian(p, cache);

    // perturb each interleaved state entry [z1, y1, z2, y2, ...]
    const double h = 1e-6;
    for (std::size_t col = 0; col < 2 * d; ++col) {
        LemState up = state, down = state;
        if (col % 2 == 0) {
            up.z[col / 2] += h;
            down.z[col / 2] -= h;
        } else {
            up.y[col / 2] += h;
            down.y[col / 2] -= h;
        }
        auto [su, cu] = forward_step(p, up, u);
        auto [sd, cd] = forward_step(p, down, u);
        for (std::size_t row = 0; row < 2 * d; ++row) {
            const double up_v = row % 2 == 0 ? su.z[row / 2] : su.y[row / 2];
            const double dn_v = row % 2 == 0 ? sd.z[row / 2] : sd.y[row / 2];
            const double fd = (up_v - dn_v) / (2 * h);
            CHECK(jac(row, col) == Catch::Approx(fd).margin(1e-6 * std::max(1.0, std::fabs(fd))));
        }
    }
}

TEST_CASE("jacobian part norms obey the eta bounds") {
    // ||E|| <= 1 + 3 eta and ||F|| <= eta + 3 eta^2 along short trajectories
    // with t_n <= 1 and dt <= 1/2
    Rng rng(66);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + rng.index(5);
        const double dt = rng.uniform(0.05, 0.5);
        LemParams p = init_lem_params(d, 2, d, dt, rng.next_u64());
        const double scale = rng.uniform(0.5, 2.0);
        for (auto& t : p.tensors())
            for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= scale;
        const double eta = recurrent_eta(p);

        LemState state(d);
        StepCache cache;
        Vector u(2);
        const auto n_steps = static_cast<std::size_t>(1.0 / dt);
        for (std::size_t n = 0; n < n_steps; ++n) {
            for (auto& x : u) x = rng.uniform(-1.0, 1.0);
            forward_step_into(p, state, u.data(), cache);
            state = cache.next_state;
            const JacobianParts parts = jacobian_parts(p, cache);
            CHECK(inf_norm(parts.e) <= 1.0 + 3.0 * eta + 1e-12);
            CHECK(inf_norm(parts.f) <= eta + 3.0 * eta * eta + 1e-12);
        }
    }
}

TEST_CASE("jacobian products match finite differences across steps") {
    Rng rng(77);
    const std::size_t d = 3, m = 2, n_steps = 5;
    LemParams p = init_lem_params(d, m, d, 0.4, rng.next_u64());
    std::vector<Vector> inputs(n_steps);
    for (auto& v : inputs) v = rng.uniform_vector(m, -1.0, 1.0);

    auto fwd = forward_sequence(p, inputs, LemState(d));
    // analytic product dX_n / dX_0
    Matrix prod = Matrix::identity(2 * d);
    for (std::size_t l = 0; l < n_steps; ++l) prod = matmul(state_jacobian(p, fwd.caches[l]), prod);

    const double h = 1e-6;
    for (std::size_t col = 0; col < 2 * d; ++col) {
        LemState up(d), down(d);
        if (col % 2 == 0) {
            up.z[col / 2] += h;
            down.z[col / 2] -= h;
        } else {
            up.y[col / 2] += h;
            down.y[col / 2] -= h;
        }
        auto fu = forward_sequence(p, inputs, up);
        auto fdn = forward_sequence(p, inputs, down);
        const LemState& su = fu.caches.back().next_state;
        const LemState& sd = fdn.caches.back().next_state;
        for (std::size_t row = 0; row < 2 * d; ++row) {
            const double up_v = row % 2 == 0 ? su.z[row / 2] : su.y[row / 2];
            const double dn_v = row % 2 == 0 ? sd.z[row / 2] : sd.y[row / 2];
            CHECK(prod(row, col) == Catch::Approx((up_v - dn_v) / (2 * h)).margin(1e-5));
        }
    }
}

TEST_CASE("per-step contributions sum to the full gradient entry") {
    Rng rng(88);
    const std::size_t d = 4, m = 2, n = 12;
    LemParams p = init_lem_params(d, m, d, 0.3, rng.next_u64());
    p.wout = Matrix::identity(d);
    std::vector<Vector> inputs(n);
    for (auto& v : inputs) v = rng.uniform_vector(m, -1.0, 1.0);
    const Vector target = rng.uniform_vector(d, -1.0, 1.0);

    auto fwd = forward_sequence(p, inputs, LemState(d));
    // loss at the last step only: 0.5 |y_n - target|^2 via identity readout
    std::vector<Vector> og(n, Vector(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) og[n - 1][i] = fwd.caches[n - 1].next_state.y[i] - target[i];
    LemGrads grads = backward(p, fwd.caches, og);

    for (auto [alpha, beta] :
         {std::pair<std::size_t, std::size_t>{0, 1}, {2, 3}, {3, 0}}) {
        const Vector series = contribution_series(p, fwd.caches, target, n, alpha, beta);
        double sum = 0.0;
        for (double c : series) sum += c;
        CHECK(sum == Catch::Approx(grads.wy(alpha, beta)).margin(1e-8));
    }
}

TEST_CASE("contribution magnitude obeys the per-step bound") {
    // |contribution| <= dt sqrt(3 k dt) (X + sqrt(3 n dt)) (1 + 2 (n-k)(1+3 eta) dt)
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 + rng.index(4);
        const double dt = rng.uniform(0.05, 0.5);
        const auto n = static_cast<std::size_t>(1.0 / dt);
        LemParams p = init_lem_params(d, 2, d, dt, rng.next_u64());
        std::vector<Vector> inputs(n);
        for (auto& v : inputs) v = rng.uniform_vector(2, -1.0, 1.0);
        const Vector target = rng.uniform_vector(d, -1.0, 1.0);
        const double x_hat = inf_norm(target);
        const double eta = recurrent_eta(p);

        auto fwd = forward_sequence(p, inputs, LemState(d));
        const Vector series =
            contribution_series(p, fwd.caches, target, n, rng.index(d), rng.index(d));
        for (std::size_t k = 1; k <= n; ++k) {
            const double bound = dt * std::sqrt(3.0 * k * dt) *
                                 (x_hat + std::sqrt(3.0 * n * dt)) *
                                 (1.0 + 2.0 * (n - k) * (1.0 + 3.0 * eta) * dt);
            CHECK(std::fabs(series[k - 1]) <= bound + 1e-12);
        }
    }
}

TEST_CASE("trivial contribution cases") {
    LemParams p = zero_lem_params(3, 2, 3, 0.5);
    std::vector<Vector> inputs(4, Vector{0.0, 0.0});
    auto fwd = forward_sequence(p, inputs, LemState(3));
    const Vector zero_target(3, 0.0);
    CHECK(gradient_contribution(p, fwd.caches, zero_target, 4, 4, 0, 0) == 0.0);
    CHECK_THROWS(gradient_contribution(p, fwd.caches, zero_target, 4, 5, 0, 0));
    CHECK_THROWS(gradient_contribution(p, fwd.caches, zero_target, 4, 0, 0, 0));
    CHECK_THROWS(contribution_series(p, fwd.caches, zero_target, 9, 0, 0));
}

TEST_CASE("gradient bound formulas") {
    LemParams p = zero_lem_params(2, 1, 1, 0.1);
    GradientBounds b0 = prop2_bound(p, 0.0);
    CHECK(b0.eta == 0.0);
    CHECK(b0.small_dt == Catch::Approx(9.0).margin(1e-12));
    CHECK(b0.unconditional == Catch::Approx(3.0 * (1.0 + std::exp(1.0))).margin(1e-12));

    // eta = 1, x_hat = 1: (3 + sqrt 3)(3 + 6) = 42.5884...
    p.w1 = Matrix::identity(2);
    GradientBounds b1 = prop2_bound(p, 1.0);
    CHECK(b1.eta == 1.0);
    CHECK(b1.small_dt == Catch::Approx((3.0 + std::sqrt(3.0)) * 9.0).margin(1e-12));

    // monotone in both arguments
    CHECK(prop2_bound(p, 2.0).small_dt > prop2_bound(p, 1.0).small_dt);
    p.w1(0, 1) = 5.0;
    CHECK(prop2_bound(p, 1.0).small_dt > b1.small_dt);
}

TEST_CASE("gradient report flags bound violations") {
    LemParams p = init_lem_params(3, 2, 3, 0.1, 1);
    p.wout = Matrix::identity(3);
    std::vector<Vector> inputs(10);
    Rng rng(5);
    for (auto& v : inputs) v = rng.uniform_vector(2, -1.0, 1.0);
    auto fwd = forward_sequence(p, inputs, LemState(3));
    std::vector<Vector> og(10, Vector(3, 0.0));
    for (std::size_t i = 0; i < 3; ++i) og[9][i] = 0.1 * (1 + static_cast<double>(i));
    GradientReport rep = make_gradient_report(p, backward(p, fwd.caches, og), 1.0);
    CHECK(rep.pass);
    CHECK(rep.empirical_max_abs > 0.0);
    CHECK(rep.empirical_max_abs <= rep.bound_unconditional);
    CHECK(rep.bound_small_dt <= rep.bound_unconditional);
}

TEST_CASE("backward validates lengths") {
    LemParams p = init_lem_params(2, 1, 1, 0.5, 1);
    auto fwd = forward_sequence(p, std::vector<Vector>{{0.1}, {0.2}}, LemState(2));
    std::vector<Vector> og(1, Vector(1, 0.0));
    CHECK_THROWS(backward(p, fwd.caches, og));
}
