#pragma once

#include <cmath>
#include <stdexcept>

namespace lem {

// sigma(u) = tanh(u)
inline double tanh_act(double x) { return std::tanh(x); }

inline double tanh_prime(double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

// sigma_hat(u) = 0.5 (1 + tanh(u/2)), the logistic sigmoid in tanh form.
// Computed exactly in this form so the inverse below is its bitwise partner.
inline double sigma_hat(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

inline double sigma_hat_prime(double x) {
    const double t = std::tanh(0.5 * x);
    return 0.25 * (1.0 - t * t);
}

// b with sigma_hat(b) = tau, i.e. b = 2 artanh(2 tau - 1).
inline double sigma_hat_inverse(double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::domain_error("sigma_hat_inverse: tau must lie in (0,1)");
    return 2.0 * std::atanh(2.0 * tau - 1.0);
}

// Bias saturating the sigmoid to within delta of 1: |1 - sigma_hat(b)| <= delta.
inline double saturation_bias(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("saturation_bias: delta must lie in (0,1)");
    return sigma_hat_inverse(1.0 - delta);
}

}  // namespace lem
