#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace logspect {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter (probability outside [0,1], n < 1, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Matrix or vector dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value violates a domain invariant (negative weight, asymmetric input).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Eigendecomposition or other dense linear algebra failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Solver produced a non-finite iterate.
class DivergenceError : public NumericalError {
public:
    DivergenceError(std::size_t iteration,
                    std::vector<std::pair<double, double>> residual_trace)
        : NumericalError("solver diverged at iteration " + std::to_string(iteration)),
          iteration_(iteration),
          trace_(std::move(residual_trace)) {}

    std::size_t iteration() const noexcept { return iteration_; }
    const std::vector<std::pair<double, double>>& residual_trace() const noexcept {
        return trace_;
    }

private:
    std::size_t iteration_;
    std::vector<std::pair<double, double>> trace_;
};

/// The requested rSpecT radius lies below the smallest feasible radius.
class InfeasibleError : public Error {
public:
    InfeasibleError(double delta, double delta_min, bool rank_certified)
        : Error("rSpecT infeasible: delta=" + std::to_string(delta) +
                " < delta_min=" + std::to_string(delta_min) +
                (rank_certified ? " (A_n B has full column rank)" : "")),
          delta_(delta),
          delta_min_(delta_min),
          rank_certified_(rank_certified) {}

    double delta() const noexcept { return delta_; }
    double delta_min() const noexcept { return delta_min_; }
    bool rank_certified() const noexcept { return rank_certified_; }

private:
    double delta_;
    double delta_min_;
    bool rank_certified_;
};

}  // namespace logspect
