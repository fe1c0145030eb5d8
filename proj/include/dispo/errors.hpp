#pragma once

#include <stdexcept>
#include <string>

namespace dispo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (pool, plan, registry, run log, plot data).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Pool content violates an invariant (duplicate id, wrong structure).
class PoolError : public Error {
public:
    using Error::Error;
};

/// Bad configuration: invalid parameters, missing credentials, unresolvable paths.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Requested data is absent (unknown cell, empty store).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical precondition failure (degenerate PCA input, zero weight, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

/// Provider could not be reached or returned a transport-level failure.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
    [[nodiscard]] bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A provider response that does not satisfy the selection contract.
class SelectionError : public Error {
public:
    enum class Kind { no_answer_block, unmatched_reference, count_mismatch, duplicate_id, out_of_pool_id };

    SelectionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

    /// Provider text the error was raised for, when available.
    [[nodiscard]] const std::string& raw_payload() const noexcept { return raw_payload_; }
    void set_raw_payload(std::string raw) { raw_payload_ = std::move(raw); }

private:
    Kind kind_;
    std::string raw_payload_;
};

}  // namespace dispo
