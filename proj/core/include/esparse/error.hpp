#pragma once

#include <stdexcept>
#include <string>

namespace esparse {

// Base of every error the library raises. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, schema mismatch, invalid parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NonFiniteColumn : public Error {
public:
    explicit NonFiniteColumn(const std::string& term)
        : Error("non-finite values while evaluating " + term), term_(term) {}

    [[nodiscard]] const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

class DivergedTrajectory : public Error {
public:
    DivergedTrajectory(std::size_t step, double value)
        : Error("trajectory diverged at step " + std::to_string(step) +
                " (|state| = " + std::to_string(value) + ")"),
          step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ZeroSignalPower : public Error {
public:
    ZeroSignalPower() : Error("signal power is zero; SNR-scaled noise is undefined") {}
};

class ZeroSignalNorm : public Error {
public:
    ZeroSignalNorm() : Error("measured signal has zero norm on the validation segment") {}
};

// Identification failures (exit code 3 in the CLI).
class IdentificationError : public Error {
public:
    using Error::Error;
};

class EmptyLibrary : public IdentificationError {
public:
    explicit EmptyLibrary(const std::string& detail)
        : IdentificationError("library is empty after column filtering: " + detail) {}
};

class AllModelsEmpty : public IdentificationError {
public:
    AllModelsEmpty()
        : IdentificationError("every hyperparameter grid point shrank to an empty support") {}
};

}  // namespace esparse
