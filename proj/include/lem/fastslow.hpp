#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lem/errors.hpp"
#include "lem/matrix.hpp"

namespace lem {

// Fast-slow prototype system
//   phi' = (f(psi) - phi) / tau      (fast, relaxes onto f(psi))
//   psi' = g(phi, psi)               (slow)
// with 0 < tau << 1 the scale-separation parameter.
struct FastSlowSystem {
    std::function<Vector(const Vector&)> f;
    std::function<Vector(const Vector&, const Vector&)> g;
    double tau = 1e-2;
};

struct FastSlowTrajectory {
    std::vector<double> times;
    std::vector<Vector> phi;
    std::vector<Vector> psi;
    std::size_t macro_steps = 0;
    std::size_t micro_steps_total = 0;
    std::size_t rhs_evals = 0;  // f and g evaluations combined
};

namespace detail {
inline void check_finite_state(const Vector& phi, const Vector& psi, const char* who) {
    for (double x : phi)
        if (!std::isfinite(x) || std::fabs(x) > 1e12)
            throw DivergenceError(std::string(who) + ": fast state diverged");
    for (double x : psi)
        if (!std::isfinite(x) || std::fabs(x) > 1e12)
            throw DivergenceError(std::string(who) + ": slow state diverged");
}
}  // namespace detail

// Two-level multiscale solver. Each macro step first relaxes the fast
// variable with K micro iterations
//   phi <- (1 - micro_dt) phi + micro_dt f(psi),
// equivalent in closed form to phi_n = w phi_{n-1} + (1 - w) f(psi_{n-1})
// with w = (1 - micro_dt)^K, and then advances the slow variable
//   psi <- psi + macro_dt g(phi_new, psi).
// Neither the step sizes nor K depend on the system's tau, so the total work
// is independent of the scale separation.
inline FastSlowTrajectory hmm_solve(const FastSlowSystem& sys, const Vector& psi0,
                                    const Vector& phi0, double macro_dt, double micro_dt,
                                    std::size_t relax_steps, std::size_t n_macro_steps) {
    require(macro_dt > 0.0 && macro_dt < 1.0, "hmm_solve: macro_dt must lie in (0,1)");
    require(micro_dt > 0.0 && micro_dt < 1.0, "hmm_solve: micro_dt must lie in (0,1)");
    require(relax_steps >= 1 && n_macro_steps >= 1, "hmm_solve: K and N must be >= 1");

    FastSlowTrajectory traj;
    traj.times.reserve(n_macro_steps + 1);
    traj.phi.reserve(n_macro_steps + 1);
    traj.psi.reserve(n_macro_steps + 1);

    Vector phi = phi0, psi = psi0;
    traj.times.push_back(0.0);
    traj.phi.push_back(phi);
    traj.psi.push_back(psi);

    for (std::size_t n = 1; n <= n_macro_steps; ++n) {
        const Vector target = sys.f(psi);
        traj.rhs_evals++;
        for (std::size_t k = 0; k < relax_steps; ++k) {
            for (std::size_t i = 0; i < phi.size(); ++i)
                phi[i] = (1.0 - micro_dt) * phi[i] + micro_dt * target[i];
            traj.micro_steps_total++;
        }
        const Vector slope = sys.g(phi, psi);
        traj.rhs_evals++;
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] += macro_dt * slope[i];
        traj.macro_steps++;
        detail::check_finite_state(phi, psi, "hmm_solve");

        traj.times.push_back(static_cast<double>(n) * macro_dt);
        traj.phi.push_back(phi);
        traj.psi.push_back(psi);
    }
    return traj;
}

enum class ReferenceScheme { Euler, Rk4 };

// Brute-force reference: integrates the full stiff system at a fine step.
// Explicit Euler needs dt_fine <~ 2 tau for stability, so the step count
// scales like 1/tau -- that is the cost the multiscale solver avoids.
inline FastSlowTrajectory reference_stiff_solve(const FastSlowSystem& sys, const Vector& psi0,
                                                const Vector& phi0, double t_end, double dt_fine,
                                                ReferenceScheme scheme = ReferenceScheme::Euler) {
    require(dt_fine > 0.0, "reference_stiff_solve: dt_fine must be positive");
    require(t_end > 0.0, "reference_stiff_solve: t_end must be positive");

    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt_fine - 1e-12));
    FastSlowTrajectory traj;
    Vector phi = phi0, psi = psi0;
    traj.times.push_back(0.0);
    traj.phi.push_back(phi);
    traj.psi.push_back(psi);

    const std::size_t dim = phi.size();
    auto rhs = [&](const Vector& ph, const Vector& ps, Vector& dph, Vector& dps) {
        const Vector fv = sys.f(ps);
        const Vector gv = sys.g(ph, ps);
        traj.rhs_evals += 2;
        for (std::size_t i = 0; i < dim; ++i) dph[i] = (fv[i] - ph[i]) / sys.tau;
        dps = gv;
    };

    Vector dph(dim), dps(dim);
    Vector p2(dim), s2(dim), k1p(dim), k1s(dim), k2p(dim), k2s(dim), k3p(dim), k3s(dim),
        k4p(dim), k4s(dim);
    double t = 0.0;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const double h = std::min(dt_fine, t_end - t);
        if (scheme == ReferenceScheme::Euler) {
            rhs(phi, psi, dph, dps);
            for (std::size_t i = 0; i < dim; ++i) {
                phi[i] += h * dph[i];
                psi[i] += h * dps[i];
            }
        } else {
            rhs(phi, psi, k1p, k1s);
            for (std::size_t i = 0; i < dim; ++i) {
                p2[i] = phi[i] + 0.5 * h * k1p[i];
                s2[i] = psi[i] + 0.5 * h * k1s[i];
            }
            rhs(p2, s2, k2p, k2s);
            for (std::size_t i = 0; i < dim; ++i) {
                p2[i] = phi[i] + 0.5 * h * k2p[i];
                s2[i] = psi[i] + 0.5 * h * k2s[i];
            }
            rhs(p2, s2, k3p, k3s);
            for (std::size_t i = 0; i < dim; ++i) {
                p2[i] = phi[i] + h * k3p[i];
                s2[i] = psi[i] + h * k3s[i];
            }
            rhs(p2, s2, k4p, k4s);
            for (std::size_t i = 0; i < dim; ++i) {
                phi[i] += h / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i]);
                psi[i] += h / 6.0 * (k1s[i] + 2 * k2s[i] + 2 * k3s[i] + k4s[i]);
            }
        }
        t += h;
        traj.macro_steps++;
        for (double x : phi)
            if (!std::isfinite(x) || std::fabs(x) > 1e12)
                throw DivergenceError(
                    "reference_stiff_solve: unstable; decrease dt_fine (need dt_fine <= tau/2)");
        for (double x : psi)
            if (!std::isfinite(x) || std::fabs(x) > 1e12)
                throw DivergenceError(
                    "reference_stiff_solve: unstable; decrease dt_fine (need dt_fine <= tau/2)");
    }
    traj.times.push_back(t);
    traj.phi.push_back(phi);
    traj.psi.push_back(psi);
    return traj;
}

struct CostRow {
    double tau = 0.0;
    double hmm_error = 0.0;
    std::size_t hmm_evals = 0;       // f/g evaluations of the multiscale solver
    std::size_t reference_steps = 0;
    std::size_t reference_evals = 0;
};

// For each tau, runs the multiscale solver with FIXED settings and the
// explicit reference at dt_fine = tau/2, and compares slow-variable accuracy
// at t_end. The multiscale cost stays flat while the reference cost grows
// like 1/tau.
inline std::vector<CostRow> cost_comparison(
    std::function<FastSlowSystem(double)> make_system, const Vector& psi0, const Vector& phi0,
    const std::vector<double>& taus, double t_end, double target_accuracy, double macro_dt = 0.05,
    double micro_dt = 0.5, std::size_t relax_steps = 20) {
    require(!taus.empty(), "cost_comparison: need at least one tau");
    require(target_accuracy > 0.0, "cost_comparison: target accuracy must be positive");

    std::vector<CostRow> rows;
    const auto n_macro = static_cast<std::size_t>(std::llround(t_end / macro_dt));
    for (double tau : taus) {
        require(tau > 0.0 && tau < 1.0, "cost_comparison: tau must lie in (0,1)");
        const FastSlowSystem sys = make_system(tau);

        const FastSlowTrajectory ref =
            reference_stiff_solve(sys, psi0, phi0, t_end, tau / 2.0);
        const FastSlowTrajectory hmm =
            hmm_solve(sys, psi0, phi0, macro_dt, micro_dt, relax_steps, n_macro);

        double err = 0.0;
        for (std::size_t i = 0; i < psi0.size(); ++i)
            err = std::max(err, std::fabs(hmm.psi.back()[i] - ref.psi.back()[i]));

        if (err > target_accuracy)
            throw BudgetError("cost_comparison: multiscale solver missed target accuracy " +
                              std::to_string(target_accuracy) + " at tau = " + std::to_string(tau) +
                              " (error " + std::to_string(err) + ")");

        rows.push_back({tau, err, hmm.rhs_evals, ref.macro_steps, ref.rhs_evals});
    }
    return rows;
}

}  // namespace lem
