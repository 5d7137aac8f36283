#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dpdd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments, shape mismatches, unknown names.
class InputError : public Error {
public:
    using Error::Error;
};

/// Requested feature exists in principle but not for this configuration.
class UnsupportedError : public InputError {
public:
    using InputError::InputError;
};

/// Data that cannot support the requested estimate (zero Gram, vanishing weights, ...).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// Diffusion-map bandwidth that collapses the Markov matrix.
class BandwidthError : public DegenerateDataError {
public:
    using DegenerateDataError::DegenerateDataError;
};

/// Failure inside a numerical kernel (eigensolver, unstable stepping).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A simulated path left the finite numbers.
class SimulationDivergedError : public Error {
public:
    SimulationDivergedError(std::size_t step, const std::string& what)
        : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace dpdd
