#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sunflower {

/// Fractional order alpha in (0, 1].
class FractionalOrder {
public:
    explicit FractionalOrder(double alpha);
    double value() const noexcept { return alpha_; }

private:
    double alpha_;
};

/// Euler gamma function for x > 0.
double gamma_fn(double x);

/// Principal-branch power exp(p * (ln|z| + i Arg z)).
std::complex<double> complex_power(std::complex<double> z, double p);

/// Product-trapezoid weight a_{j,n+1} for the order-alpha integral.
double weight_a(std::size_t j, std::size_t n, double alpha);

/// Same as weight_a with exponent parameter 2*alpha.
double weight_b(std::size_t j, std::size_t n, double alpha);

/// Generic three-case weight for an arbitrary order parameter.
double trapezoid_weight(std::size_t j, std::size_t n, double order);

/// All weights w_{j,n+1}, j = 0..n+1, for one step index n.
struct QuadWeightTable {
    double order = 0.0;
    std::size_t n = 0;
    std::vector<double> weights;

    static QuadWeightTable build(double order, std::size_t n);
};

/// Weights for every step up to a fixed count, stored in O(N).
///
/// The interior weights depend only on n - j, so one sequence serves all
/// steps; the j = 0 weight depends on n and is kept separately.
class ConvolutionWeights {
public:
    ConvolutionWeights(double order, std::size_t steps);

    double order() const noexcept { return order_; }
    std::size_t steps() const noexcept { return first_.size(); }

    /// w_{0,n+1}
    double first(std::size_t n) const { return first_.at(n); }
    /// w_{j,n+1} for 1 <= j <= n, indexed by lag = n - j.
    double interior(std::size_t lag) const { return interior_.at(lag); }
    const std::vector<double>& interior_table() const noexcept { return interior_; }

    double operator()(std::size_t j, std::size_t n) const;

private:
    double order_;
    std::vector<double> first_;
    std::vector<double> interior_;
};

}  // namespace sunflower
