#pragma once

#include <cstdint>

#include "lem/rk45.hpp"
#include "lem/rng.hpp"
#include "lem/tasks.hpp"

namespace lem {

// FitzHugh-Nagumo relaxation oscillator:
//   v' = v - v^3/3 - w + i_ext
//   w' = tau (v + a - b w)
struct FhnConfig {
    double tau = 0.02;
    double i_ext = 0.5;
    double a = 0.7;
    double b = 0.8;
    double t_end = 400.0;
    std::size_t n_points = 1000;
};

inline OdeRhs fhn_rhs(const FhnConfig& cfg) {
    return [cfg](double, const Vector& y, Vector& dydt) {
        const double v = y[0], w = y[1];
        dydt[0] = v - v * v * v / 3.0 - w + cfg.i_ext;
        dydt[1] = cfg.tau * (v + cfg.a - cfg.b * w);
    };
}

inline std::vector<double> fhn_sample_times(const FhnConfig& cfg) {
    std::vector<double> times(cfg.n_points);
    for (std::size_t j = 0; j < cfg.n_points; ++j)
        times[j] = cfg.t_end * static_cast<double>(j) / static_cast<double>(cfg.n_points - 1);
    return times;
}

// Integrates one trajectory from (v0, w0) = (c, 0) and samples it at
// n_points equispaced times.
inline OdeTrajectory fhn_trajectory(const FhnConfig& cfg, double c, double rel_tol = 1e-10,
                                    double abs_tol = 1e-10) {
    require(cfg.tau > 0.0, "fhn_trajectory: tau must be positive");
    require(cfg.n_points >= 2, "fhn_trajectory: need at least 2 points");
    return rk45_integrate(fhn_rhs(cfg), Vector{c, 0.0}, 0.0, cfg.t_end, rel_tol, abs_tol,
                          fhn_sample_times(cfg));
}

// Sequence-prediction data: per step the input is (t/t_end, c) and the target
// is the trajectory value (v, w) at that time. The initial amplitude c is
// drawn from U([-1, 1]) per sample.
inline SequenceBatch fhn_generate(const FhnConfig& cfg, std::size_t count, std::uint64_t seed) {
    require(count >= 1, "fhn_generate: need at least one sample");
    SequenceBatch batch;
    batch.count = count;
    batch.steps = cfg.n_points;
    batch.features = 2;
    batch.inputs.resize(count * cfg.n_points * 2);
    batch.target_kind = TargetKind::PerStep;
    batch.out_dim = 2;
    batch.targets.resize(count * cfg.n_points * 2);
    batch.task = "fhn";
    batch.seed = seed;

    for (std::size_t s = 0; s < count; ++s) {
        Rng rng(derive_seed(seed, s));
        const double c = rng.uniform(-1.0, 1.0);
        const OdeTrajectory traj = fhn_trajectory(cfg, c);
        double* in_row = batch.inputs.data() + s * cfg.n_points * 2;
        double* tg_row = batch.targets.data() + s * cfg.n_points * 2;
        for (std::size_t j = 0; j < cfg.n_points; ++j) {
            in_row[2 * j] = traj.times[j] / cfg.t_end;
            in_row[2 * j + 1] = c;
            tg_row[2 * j] = traj.states[j][0];
            tg_row[2 * j + 1] = traj.states[j][1];
        }
    }
    return batch;
}

}  // namespace lem
