#include "sunflower/frac_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sunflower/errors.hpp"

namespace sunflower {
namespace {

// base^p for base >= 0, with 0^p = 0 (p > 0 throughout).
double pow_nonneg(double base, double p) {
    if (base <= 0.0) return 0.0;
    return std::exp(p * std::log(base));
}

constexpr double kSeriesFrom = 8.0;

// (s+1)^p - 2 s^p + (s-1)^p = 2 s^p sum_{k even >= 2} C(p,k) s^-k, for s >= kSeriesFrom.
double second_difference_series(double s, double p) {
    const double inv = 1.0 / s;
    double c = 1.0, term_pow = 1.0, sum = 0.0;
    for (int k = 1; k <= 60; ++k) {
        c *= (p - k + 1) / k;
        term_pow *= inv;
        if (k % 2 == 1) continue;
        const double term = c * term_pow;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return 2.0 * pow_nonneg(s, p) * sum;
}

// n^{q+1} - (n-q)(n+1)^q = n^{q+1} sum_{k >= 2} (q C(q,k-1) - C(q,k)) n^-k, for n >= kSeriesFrom.
double first_weight_series(double n, double q) {
    const double inv = 1.0 / n;
    double prev = q, c = q * (q - 1) / 2.0, term_pow = inv * inv, sum = 0.0;
    for (int k = 2; k <= 60; ++k) {
        const double term = (q * prev - c) * term_pow;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        prev = c;
        c *= (q - k) / (k + 1);
        term_pow *= inv;
    }
    return pow_nonneg(n, q + 1.0) * sum;
}

void check_order(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw DomainError("fractional order must lie in (0, 1], got " + std::to_string(alpha));
    }
}

}  // namespace

FractionalOrder::FractionalOrder(double alpha) : alpha_(alpha) { check_order(alpha); }

double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("gamma_fn requires a positive finite argument, got " + std::to_string(x));
    }
    return std::tgamma(x);
}

std::complex<double> complex_power(std::complex<double> z, double p) {
    if (z == std::complex<double>(0.0, 0.0)) {
        if (p <= 0.0) throw DomainError("complex_power: zero base with non-positive exponent");
        return {0.0, 0.0};
    }
    // std::arg returns values in [-pi, pi]; -pi only occurs for a negative zero imaginary part.
    double arg = std::arg(z);
    if (arg == -std::numbers::pi) arg = std::numbers::pi;
    const double log_mod = std::log(std::abs(z));
    return std::polar(std::exp(p * log_mod), p * arg);
}

double trapezoid_weight(std::size_t j, std::size_t n, double order) {
    if (j > n + 1) {
        throw IndexError("weight index j=" + std::to_string(j) + " out of range for n=" + std::to_string(n));
    }
    if (!(order > 0.0) || !std::isfinite(order)) throw DomainError("weight order must be positive");
    const double p = order + 1.0;
    const auto nd = static_cast<double>(n);
    if (j == n + 1) return 1.0;
    if (j == 0) {
        if (nd >= kSeriesFrom) return first_weight_series(nd, order);
        return pow_nonneg(nd, p) - (nd - order) * pow_nonneg(nd + 1.0, order);
    }
    const auto lag = static_cast<double>(n - j);
    if (lag + 1.0 >= kSeriesFrom) return second_difference_series(lag + 1.0, p);
    return pow_nonneg(lag + 2.0, p) + pow_nonneg(lag, p) - 2.0 * pow_nonneg(lag + 1.0, p);
}

double weight_a(std::size_t j, std::size_t n, double alpha) {
    check_order(alpha);
    return trapezoid_weight(j, n, alpha);
}

double weight_b(std::size_t j, std::size_t n, double alpha) {
    check_order(alpha);
    return trapezoid_weight(j, n, 2.0 * alpha);
}

QuadWeightTable QuadWeightTable::build(double order, std::size_t n) {
    QuadWeightTable table{order, n, {}};
    table.weights.reserve(n + 2);
    for (std::size_t j = 0; j <= n + 1; ++j) table.weights.push_back(trapezoid_weight(j, n, order));
    return table;
}

ConvolutionWeights::ConvolutionWeights(double order, std::size_t steps) : order_(order) {
    if (!(order > 0.0) || !std::isfinite(order)) throw DomainError("weight order must be positive");
    first_.resize(steps);
    interior_.resize(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        first_[n] = trapezoid_weight(0, n, order);
        // lag = n - j with j = n, i.e. a weight that exists once n >= 1; computed for every lag anyway.
        interior_[n] = trapezoid_weight(1, n + 1, order);
    }
}

double ConvolutionWeights::operator()(std::size_t j, std::size_t n) const {
    if (j > n + 1) throw IndexError("weight index out of range");
    if (j == n + 1) return 1.0;
    if (j == 0) return first(n);
    return interior(n - j);
}

}  // namespace sunflower
