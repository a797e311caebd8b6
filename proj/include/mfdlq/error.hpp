#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfdlq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed problem or solution document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A required field is absent from a document.
class MissingFieldError : public ParseError {
public:
    explicit MissingFieldError(const std::string& field)
        : ParseError("missing required field '" + field + "'"), field_(field) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A matrix or vector does not have the shape implied by n, r, N.
class DimensionError : public Error {
public:
    DimensionError(const std::string& field, std::size_t expected_rows, std::size_t expected_cols,
                   std::size_t rows, std::size_t cols, const std::string& where = {})
        : Error((where.empty() ? std::string() : where + ": ") + "dimension mismatch in '" +
                field + "': expected " + std::to_string(expected_rows) +
                "x" + std::to_string(expected_cols) + ", got " + std::to_string(rows) + "x" +
                std::to_string(cols)),
          field_(field) {}
    explicit DimensionError(const std::string& message) : Error(message) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// solve_classical was handed a problem with nonzero mean-field matrices.
class NonZeroMeanField : public Error {
public:
    using Error::Error;
};

/// A Riccati denominator failed its Cholesky factorization.
class SingularDenominator : public Error {
public:
    SingularDenominator(const std::string& which, std::size_t stage)
        : Error(which + " denominator at stage " + std::to_string(stage) +
                " is not positive definite"),
          stage_(stage) {}
    [[nodiscard]] std::size_t stage() const noexcept { return stage_; }

private:
    std::size_t stage_;
};

class StageOutOfRange : public Error {
public:
    using Error::Error;
};

/// Scenario tree would exceed the decision-dimension cap.
class TreeTooLarge : public Error {
public:
    TreeTooLarge(std::size_t required, std::size_t allowed)
        : Error("scenario tree decision dimension " + std::to_string(required) +
                " exceeds limit " + std::to_string(allowed)),
          required_(required),
          allowed_(allowed) {}
    [[nodiscard]] std::size_t required() const noexcept { return required_; }
    [[nodiscard]] std::size_t allowed() const noexcept { return allowed_; }

private:
    std::size_t required_;
    std::size_t allowed_;
};

/// The exact tree only exists for finite-support (Rademacher) noise.
class WrongNoiseKind : public Error {
public:
    using Error::Error;
};

class SingularHessian : public Error {
public:
    using Error::Error;
};

}  // namespace mfdlq
