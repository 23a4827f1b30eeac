#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "sunflower/errors.hpp"
#include "sunflower/frac_core.hpp"

using namespace sunflower;

namespace {

// Direct transcription of the three-case weight, evaluated in long double.
long double ref_weight(long j, long n, long double q) {
    if (j == 0) return std::pow((long double)n, q + 1) - (n - q) * std::pow((long double)(n + 1), q);
    if (j == n + 1) return 1.0L;
    return std::pow((long double)(n - j + 2), q + 1) + std::pow((long double)(n - j), q + 1) -
           2.0L * std::pow((long double)(n - j + 1), q + 1);
}

}  // namespace

TEST_CASE("gamma matches high precision values") {
    CHECK(gamma_fn(1.85) == doctest::Approx(0.94561117640619545926).epsilon(1e-14));
    CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
}

TEST_CASE("gamma recurrence on a grid") {
    for (int i = 1; i <= 30; ++i) {
        const double x = 0.1 * i;
        CAPTURE(x);
        CHECK(std::abs(gamma_fn(x + 1.0) - x * gamma_fn(x)) <= 1e-13 * gamma_fn(x + 1.0));
    }
}

TEST_CASE("gamma rejects non-positive arguments") {
    CHECK_THROWS_AS(gamma_fn(0.0), DomainError);
    CHECK_THROWS_AS(gamma_fn(-1.5), DomainError);
}

TEST_CASE("fractional order bounds") {
    CHECK_NOTHROW(FractionalOrder(1.0));
    CHECK(FractionalOrder(0.3).value() == 0.3);
    CHECK_THROWS_AS(FractionalOrder(0.0), DomainError);
    CHECK_THROWS_AS(FractionalOrder(1.2), DomainError);
    CHECK_THROWS_AS(FractionalOrder(std::nan("")), DomainError);
}

TEST_CASE("weights against frozen values") {
    CHECK(weight_a(2, 4, 0.3) == doctest::Approx(0.18282007083596885548).epsilon(1e-13));
    CHECK(weight_b(1, 3, 0.85) == doctest::Approx(9.8842252760398246889).epsilon(1e-13));
}

TEST_CASE("weights keep full precision at long lags") {
    CHECK(trapezoid_weight(1, 20001, 0.3) == doctest::Approx(0.00038047700143028675527).epsilon(1e-14));
    CHECK(trapezoid_weight(0, 20000, 0.3) == doctest::Approx(0.0001902407200533522003).epsilon(1e-14));
    CHECK(trapezoid_weight(5, 100000, 1.7) == doctest::Approx(14514.448041784028121).epsilon(1e-14));
    CHECK(trapezoid_weight(0, 100000, 1.7) == doctest::Approx(7257.4610980420655899).epsilon(1e-14));
    CHECK(trapezoid_weight(3, 12, 0.85) == doctest::Approx(1.1134051375271510184).epsilon(1e-14));
    CHECK(trapezoid_weight(0, 9, 0.85) == doctest::Approx(0.55948913200677390809).epsilon(1e-14));
    CHECK(trapezoid_weight(0, 7, 0.85) == doctest::Approx(0.57930271312527520952).epsilon(1e-14));
}

TEST_CASE("weights against the closed form") {
    for (double alpha : {0.1, 0.3, 0.5, 0.85, 1.0}) {
        for (long n = 0; n < 40; ++n) {
            for (long j = 0; j <= n + 1; ++j) {
                CAPTURE(alpha);
                CAPTURE(n);
                CAPTURE(j);
                const auto ea = (double)ref_weight(j, n, alpha);
                const auto eb = (double)ref_weight(j, n, 2.0L * alpha);
                CHECK(weight_a(j, n, alpha) == doctest::Approx(ea).epsilon(1e-12));
                CHECK(weight_b(j, n, alpha) == doctest::Approx(eb).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("last weight is one and all weights are positive") {
    for (double alpha : {0.05, 0.3, 0.4, 0.85, 1.0}) {
        for (std::size_t n = 0; n < 200; ++n) {
            CHECK(weight_a(n + 1, n, alpha) == 1.0);
            CHECK(weight_b(n + 1, n, alpha) == 1.0);
            for (std::size_t j = 0; j <= n; ++j) {
                CHECK(weight_a(j, n, alpha) > 0.0);
            }
        }
    }
}

TEST_CASE("product trapezoid integrates constants and lines exactly") {
    // sum_j a_j = (alpha+1)(n+1)^alpha ; sum_j j a_j = (n+1)^(alpha+1)
    for (double q : {0.3, 0.6, 0.85, 1.7}) {
        for (std::size_t n : {0u, 1u, 5u, 64u, 999u}) {
            const auto table = QuadWeightTable::build(q, n);
            REQUIRE(table.weights.size() == n + 2);
            double s0 = 0.0, s1 = 0.0;
            for (std::size_t j = 0; j < table.weights.size(); ++j) {
                s0 += table.weights[j];
                s1 += static_cast<double>(j) * table.weights[j];
            }
            const double np1 = static_cast<double>(n + 1);
            CHECK(s0 == doctest::Approx((q + 1.0) * std::pow(np1, q)).epsilon(1e-11));
            CHECK(s1 == doctest::Approx(std::pow(np1, q + 1.0)).epsilon(1e-11));
        }
    }
}

TEST_CASE("convolution cache agrees with direct weights") {
    const ConvolutionWeights cw(0.85, 300);
    for (std::size_t n = 0; n < 300; n += 7) {
        for (std::size_t j = 0; j <= n + 1; ++j) {
            CHECK(cw(j, n) == doctest::Approx(trapezoid_weight(j, n, 0.85)).epsilon(1e-13));
        }
    }
    CHECK(cw.first(10) == doctest::Approx(trapezoid_weight(0, 10, 0.85)).epsilon(1e-14));
}

TEST_CASE("weight index out of range") {
    CHECK_THROWS_AS(trapezoid_weight(7, 5, 0.3), IndexError);
    CHECK_THROWS_AS(weight_a(3, 1, 0.3), IndexError);
}

TEST_CASE("complex power frozen value") {
    const auto w = complex_power({0.0425373, 3.65101}, 0.3);
    CHECK(w.real() == doctest::Approx(1.3163873607058683482).epsilon(1e-13));
    CHECK(w.imag() == doctest::Approx(0.66494778014673833579).epsilon(1e-13));
}

TEST_CASE("complex power branch and modulus") {
    using cd = std::complex<double>;
    const auto r = complex_power(cd(-4.0, 0.0), 0.5);
    CHECK(std::abs(r.real()) < 1e-15);
    CHECK(r.imag() == doctest::Approx(2.0));

    for (cd z : {cd(1.0, 2.0), cd(-3.0, 0.5), cd(-3.0, -0.5), cd(0.2, -7.0)}) {
        for (double p : {0.3, 0.6, 0.85, 1.7}) {
            const auto w = complex_power(z, p);
            CHECK(std::abs(w) == doctest::Approx(std::pow(std::abs(z), p)).epsilon(1e-13));
            CHECK(std::arg(w) == doctest::Approx(std::remainder(p * std::arg(z), 2 * std::numbers::pi)).epsilon(1e-12));
            // conjugate symmetry away from the cut
            const auto wc = complex_power(std::conj(z), p);
            CHECK(std::abs(wc - std::conj(w)) < 1e-13 * std::abs(w));
        }
        const auto prod = complex_power(z, 0.3) * complex_power(z, 0.3);
        CHECK(std::abs(prod - complex_power(z, 0.6)) < 1e-13 * std::abs(prod));
    }
}

TEST_CASE("complex power at zero") {
    CHECK(complex_power({0.0, 0.0}, 0.5) == std::complex<double>(0.0, 0.0));
    CHECK_THROWS_AS(complex_power({0.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS(complex_power({0.0, 0.0}, -0.3), DomainError);
}
