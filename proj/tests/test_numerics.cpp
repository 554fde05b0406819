#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lem/activations.hpp"
#include "lem/matrix.hpp"
#include "lem/powerlaw.hpp"
#include "lem/rng.hpp"

using namespace lem;

TEST_CASE("sigma_hat basics") {
    CHECK(sigma_hat(0.0) == 0.5);
    CHECK(sigma_hat(5.0) > 0.5);
    CHECK(sigma_hat(5.0) < 1.0);
    CHECK(sigma_hat(-5.0) > 0.0);

    // sigmoid symmetry
    for (double x : {0.01, 0.5, 1.7, 4.0, 12.0, 28.0})
        CHECK(std::fabs(sigma_hat(-x) - (1.0 - sigma_hat(x))) <= 1e-15);
}

TEST_CASE("sigma_hat_inverse closed form") {
    // 2 artanh(2*0.25 - 1) = ln(1/3)
    const double b = sigma_hat_inverse(0.25);
    CHECK(b == Catch::Approx(-1.0986122886681098).margin(1e-12));
    CHECK(std::fabs(sigma_hat(b) - 0.25) <= 1e-12);

    CHECK(sigma_hat_inverse(0.5) == 0.0);
    CHECK_THROWS_AS(sigma_hat_inverse(0.0), std::domain_error);
    CHECK_THROWS_AS(sigma_hat_inverse(1.0), std::domain_error);
    CHECK_THROWS_AS(sigma_hat_inverse(-0.25), std::domain_error);
}

TEST_CASE("saturation bias") {
    const double b = saturation_bias(1e-9);
    CHECK(std::fabs(1.0 - sigma_hat(b)) <= 1e-9);
    CHECK(b > 0.0);
    CHECK_THROWS_AS(saturation_bias(0.0), std::domain_error);
}

TEST_CASE("sigma_hat strictly increasing and invertible") {
    double prev = sigma_hat(-30.0);
    for (double x = -29.75; x <= 30.0; x += 0.25) {
        const double v = sigma_hat(x);
        CHECK(v > prev);
        prev = v;
    }
    // Round trip in x-space. Beyond x ~ 10 the sigmoid's double representation
    // near 1 cannot resolve x to this accuracy, so the x-space check stops
    // there and the value-space check below covers the rest.
    for (double x = -30.0; x <= 9.5; x += 0.125)
        CHECK(std::fabs(sigma_hat_inverse(sigma_hat(x)) - x) <= 1e-12);
    // Round trip in value space over the whole range.
    for (double x = -30.0; x <= 30.0; x += 0.125) {
        const double tau = sigma_hat(x);
        CHECK(std::fabs(sigma_hat(sigma_hat_inverse(tau)) - tau) <= 1e-15);
    }
}

TEST_CASE("derivatives match finite differences") {
    for (double x : {-3.0, -0.2, 0.0, 0.7, 2.5}) {
        const double h = 1e-6;
        CHECK(sigma_hat_prime(x) ==
              Catch::Approx((sigma_hat(x + h) - sigma_hat(x - h)) / (2 * h)).margin(1e-9));
        CHECK(tanh_prime(x) ==
              Catch::Approx((tanh_act(x + h) - tanh_act(x - h)) / (2 * h)).margin(1e-9));
    }
}

TEST_CASE("matrix and vector operations") {
    Matrix id = Matrix::identity(3);
    Vector x{1.5, -2.0, 0.25};
    CHECK(matvec(id, x) == x);

    Matrix a(2, 2);
    a(0, 0) = 1;
    a(0, 1) = -2;
    a(1, 0) = 0;
    a(1, 1) = 3;
    CHECK(inf_norm(a) == 3.0);  // row abs sums: 3, 3
    CHECK(one_norm(a) == 5.0);  // col abs sums: 1, 5

    Vector zeros(3, 0.0);
    CHECK(hadamard(x, zeros) == zeros);

    CHECK_THROWS_AS(matvec(a, x), std::invalid_argument);

    // A += g v^T
    Matrix acc(2, 3);
    add_outer(acc, Vector{1.0, 2.0}, Vector{3.0, 4.0, 5.0});
    CHECK(acc(0, 0) == 3.0);
    CHECK(acc(1, 2) == 10.0);

    // y += A^T x agrees with explicit transpose
    Vector y(2, 0.0);
    matvec_transpose_add(a, Vector{1.0, 2.0}, y);
    CHECK(y[0] == 1.0);   // 1*1 + 0*2
    CHECK(y[1] == 4.0);   // -2*1 + 3*2
}

TEST_CASE("infinity norm is submultiplicative on random pairs") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = rng.uniform_matrix(4, 4, -2.0, 2.0);
        Matrix b = rng.uniform_matrix(4, 4, -2.0, 2.0);
        CHECK(inf_norm(matmul(a, b)) <= inf_norm(a) * inf_norm(b) * (1 + 1e-12));
    }
}

TEST_CASE("seeded rng reproducibility and range") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng r(77);
    for (int i = 0; i < 1000; ++i) {
        const double v = r.uniform(-0.25, 0.5);
        CHECK(v >= -0.25);
        CHECK(v < 0.5);
    }
    CHECK_THROWS_AS(r.uniform(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("uniform sample mean obeys the law of large numbers") {
    Rng r(2024);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += r.next_unit();
    CHECK(std::fabs(sum / n - 0.5) <= 0.01);
}

TEST_CASE("derive_seed decorrelates streams") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

namespace {

// inverse-CDF sampler for density ~ a^(-gamma) on [lo, hi]
std::vector<double> power_law_samples(double gamma, double lo, double hi, std::size_t n,
                                      std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& a : out) {
        const double u = rng.next_unit();
        if (gamma == 1.0) {
            a = lo * std::pow(hi / lo, u);
        } else {
            const double p = 1.0 - gamma;
            a = std::pow(std::pow(lo, p) + u * (std::pow(hi, p) - std::pow(lo, p)), 1.0 / p);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("power-law fit recovers planted exponents") {
    CHECK(fit_power_law(power_law_samples(0.5, 1e-4, 1.0, 100000, 42)).exponent ==
          Catch::Approx(0.5).margin(0.05));
    CHECK(fit_power_law(power_law_samples(1.0, 1e-4, 1.0, 100000, 43)).exponent ==
          Catch::Approx(1.0).margin(0.05));

    // uniform samples: flat density, exponent ~ 0
    Rng rng(44);
    std::vector<double> flat(100000);
    for (auto& x : flat) x = rng.uniform(0.5, 1.5);
    CHECK(fit_power_law(flat).exponent == Catch::Approx(0.0).margin(0.05));
}

TEST_CASE("power-law fit degenerate inputs") {
    std::vector<double> same(100, 0.25);
    CHECK_THROWS(fit_power_law(same));
    CHECK_THROWS(fit_power_law(std::vector<double>{1.0}));
    CHECK_THROWS(fit_power_law(std::vector<double>{1.0, -2.0, 3.0}));
}

TEST_CASE("least squares slope") {
    std::vector<double> xs{0, 1, 2, 3}, ys{1, 3, 5, 7};
    CHECK(least_squares_slope(xs, ys) == Catch::Approx(2.0).margin(1e-12));
}
