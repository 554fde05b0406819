#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lem/errors.hpp"
#include "lem/matrix.hpp"

namespace lem {

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::size_t steps_taken = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evals = 0;
};

// Dormand-Prince 5(4) embedded pair with standard step control: error per
// step against atol + rtol*|y|, safety factor 0.9, exponent 1/5, FSAL reuse.
// Steps land exactly on each requested sample time.
inline OdeTrajectory rk45_integrate(const OdeRhs& rhs, const Vector& y0, double t0, double t1,
                                    double rel_tol, double abs_tol,
                                    const std::vector<double>& sample_times) {
    require(rel_tol > 0.0 && abs_tol > 0.0, "rk45_integrate: tolerances must be positive");
    require(t1 > t0, "rk45_integrate: need t1 > t0");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        require(sample_times[i] >= t0 && sample_times[i] <= t1,
                "rk45_integrate: sample time outside span");
        if (i > 0) require(sample_times[i] > sample_times[i - 1],
                           "rk45_integrate: sample times must increase");
    }

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                            e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    const std::size_t dim = y0.size();
    const double span = t1 - t0;
    const double h_min = 1e-12 * span;

    OdeTrajectory traj;
    Vector y = y0;
    double t = t0;
    Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vector stage(dim), y_new(dim);

    rhs(t, y, k1);
    traj.rhs_evals++;
    double h = span / 100.0;

    std::size_t next_sample = 0;
    auto record_if_sampled = [&](double time, const Vector& state) {
        while (next_sample < sample_times.size() &&
               std::fabs(sample_times[next_sample] - time) <= 1e-14 * std::max(1.0, std::fabs(time))) {
            traj.times.push_back(sample_times[next_sample]);
            traj.states.push_back(state);
            next_sample++;
        }
    };
    record_if_sampled(t, y);

    while (t1 - t > 1e-13 * std::max(1.0, std::fabs(t1))) {
        h = std::min(h, t1 - t);
        // land on the next sample time
        if (next_sample < sample_times.size() && t + h > sample_times[next_sample])
            h = sample_times[next_sample] - t;
        if (h < h_min)
            throw StiffnessError("rk45_integrate: step size underflow at t = " + std::to_string(t));

        for (std::size_t i = 0; i < dim; ++i) stage[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, stage, k2);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, stage, k3);
        for (std::size_t i = 0; i < dim; ++i)
            stage[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, stage, k4);
        for (std::size_t i = 0; i < dim; ++i)
            stage[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, stage, k5);
        for (std::size_t i = 0; i < dim; ++i)
            stage[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, stage, k6);
        for (std::size_t i = 0; i < dim; ++i)
            y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, y_new, k7);
        traj.rhs_evals += 6;

        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
            err = std::max(err, std::fabs(ei) / scale);
        }

        if (err <= 1.0) {
            t += h;
            y = y_new;
            k1 = k7;  // FSAL
            traj.steps_taken++;
            record_if_sampled(t, y);
        } else {
            traj.steps_rejected++;
        }
        const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(factor, 0.2, 5.0);
    }
    if (next_sample < sample_times.size())
        throw std::runtime_error("rk45_integrate: did not reach all sample times");
    return traj;
}

// Classic RK4 at (nominally) fixed step; shortens individual steps so that it
// lands exactly on every requested sample time. The reference everything
// adaptive is checked against.
inline OdeTrajectory rk4_fixed(const OdeRhs& rhs, const Vector& y0, double t0, double t1,
                               double dt, const std::vector<double>& sample_times) {
    require(dt > 0.0, "rk4_fixed: dt must be positive");
    const std::size_t dim = y0.size();
    OdeTrajectory traj;
    Vector y = y0;
    Vector k1(dim), k2(dim), k3(dim), k4(dim), stage(dim);

    std::size_t next_sample = 0;
    auto record_if_sampled = [&](double time, const Vector& state) {
        while (next_sample < sample_times.size() &&
               std::fabs(sample_times[next_sample] - time) <=
                   1e-12 * std::max(1.0, std::fabs(time))) {
            traj.times.push_back(sample_times[next_sample]);
            traj.states.push_back(state);
            next_sample++;
        }
    };
    record_if_sampled(t0, y);

    double t = t0;
    while (t1 - t > 1e-13 * std::max(1.0, std::fabs(t1))) {
        double h = std::min(dt, t1 - t);
        if (next_sample < sample_times.size() && t + h > sample_times[next_sample])
            h = sample_times[next_sample] - t;
        rhs(t, y, k1);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = y[i] + 0.5 * h * k1[i];
        rhs(t + 0.5 * h, stage, k2);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = y[i] + 0.5 * h * k2[i];
        rhs(t + 0.5 * h, stage, k3);
        for (std::size_t i = 0; i < dim; ++i) stage[i] = y[i] + h * k3[i];
        rhs(t + h, stage, k4);
        for (std::size_t i = 0; i < dim; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
        traj.steps_taken++;
        traj.rhs_evals += 4;
        record_if_sampled(t, y);
    }
    if (next_sample < sample_times.size())
        throw std::runtime_error("rk4_fixed: did not reach all sample times");
    return traj;
}

}  // namespace lem
