#pragma once

#include <stdexcept>
#include <string>

namespace dtrti {

/// Invalid argument outside a function's mathematical domain (bad probability, df, ...).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A series or iteration failed to converge within its documented budget.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Sample has zero spread or too few points to estimate a density.
class DegenerateSampleError : public std::runtime_error {
public:
    explicit DegenerateSampleError(const std::string& what) : std::runtime_error(what) {}
};

/// Sample too small for the requested interval construction.
class InsufficientSampleError : public std::runtime_error {
public:
    explicit InsufficientSampleError(const std::string& what) : std::runtime_error(what) {}
};

/// Design matrix is rank deficient (collinear columns).
class SingularDesignError : public std::runtime_error {
public:
    explicit SingularDesignError(const std::string& what) : std::runtime_error(what) {}
};

/// A required covariate/action pattern is absent from the data.
class MissingPatternError : public std::runtime_error {
public:
    explicit MissingPatternError(const std::string& what) : std::runtime_error(what) {}
};

/// A (s1,a1) cell lacks the data a pipeline step needs.
class InsufficientCellError : public std::runtime_error {
public:
    InsufficientCellError(int s1, int a1, const std::string& what)
        : std::runtime_error("cell (s1=" + std::to_string(s1) + ",a1=" + std::to_string(a1) + "): " + what),
          s1_(s1), a1_(a1) {}
    int s1() const { return s1_; }
    int a1() const { return a1_; }

private:
    int s1_, a1_;
};

/// An operation was called on an object that does not satisfy its contract
/// (e.g. sandwich variance on an unweighted fit).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

} // namespace dtrti
