#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace sunflower {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (x <= 0 for gamma, alpha outside (0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// Structurally invalid argument (empty selection, series too short, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Not enough maxima / neighbor pairs for a reportable diagnostic.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Bisection bracket whose predicate has the same value at both ends.
class BracketError : public Error {
public:
    using Error::Error;
};

/// g(tau) - tau touches zero without changing sign.
class DegenerateCaseError : public Error {
public:
    DegenerateCaseError(const std::string& what, double tau) : Error(what), tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, std::complex<double> last) : Error(what), last_(last) {}
    std::complex<double> last_iterate() const noexcept { return last_; }

private:
    std::complex<double> last_;
};

}  // namespace sunflower
