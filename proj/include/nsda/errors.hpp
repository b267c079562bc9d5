#pragma once

#include <stdexcept>
#include <string>

namespace nsda {

/// Base of every error raised by the library. `kind()` is a short stable tag
/// used as the machine-parseable prefix on CLI error lines.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

class IngestionError : public Error {
public:
    explicit IngestionError(const std::string& what) : Error("ingestion", what) {}
};

/// Inverse transform met a coefficient array that is not conjugate symmetric.
class SymmetryError : public Error {
public:
    explicit SymmetryError(const std::string& what) : Error("symmetry", what) {}
};

/// No J satisfies the stability mode conditions on the grid's mode set.
class InfeasibleSymbolError : public Error {
public:
    explicit InfeasibleSymbolError(const std::string& what) : Error("infeasible-symbol", what) {}
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double achieved_residual, int cycles)
        : Error("non-convergence", what), residual_(achieved_residual), cycles_(cycles) {}
    double achieved_residual() const noexcept { return residual_; }
    int cycles() const noexcept { return cycles_; }

private:
    double residual_;
    int cycles_;
};

}  // namespace nsda
