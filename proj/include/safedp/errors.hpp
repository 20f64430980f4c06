#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safedp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The chain restricted to the taboo set has a recurrent class.
class NotTransient : public Error {
public:
    NotTransient(const std::string& what, double spectral_radius)
        : Error(what), spectral_radius_(spectral_radius) {}
    double spectral_radius() const noexcept { return spectral_radius_; }

private:
    double spectral_radius_;
};

/// An iterative method ran out of iterations; carries the last iterate.
class MaxIterExceeded : public Error {
public:
    MaxIterExceeded(const std::string& what, Eigen::VectorXd last, std::size_t iterations)
        : Error(what), last_(std::move(last)), iterations_(iterations) {}
    const Eigen::VectorXd& last_iterate() const noexcept { return last_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    Eigen::VectorXd last_;
    std::size_t iterations_;
};

/// Bellman iterates grew past the divergence bound (no transient policy).
class Diverging : public Error {
public:
    using Error::Error;
};

class Infeasible : public Error {
public:
    using Error::Error;
};

class CapExceeded : public Error {
public:
    using Error::Error;
};

class Unbounded : public Error {
public:
    using Error::Error;
};

/// Phase one of the simplex method could not drive the artificials to zero.
class LpInfeasible : public Error {
public:
    using Error::Error;
};

class NumericalInstability : public Error {
public:
    using Error::Error;
};

class PathExplosion : public Error {
public:
    using Error::Error;
};

} // namespace safedp
