#pragma once

#include <stdexcept>
#include <string>

namespace tlf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension or length mismatch between tensors/sequences.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Invalid user-supplied configuration value.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// CSV ingestion failure. The kind distinguishes the failure mode.
class CsvError : public Error {
public:
    enum class Kind { missing_file, malformed_header, malformed_row, duplicate_timestamp };

    CsvError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
    Kind kind;
};

/// Scaler fitting failure (degenerate feature, empty slice, bad range).
class ScalerError : public Error {
public:
    explicit ScalerError(const std::string& msg) : Error(msg) {}
};

/// Chronological split produced an empty partition or got bad fractions.
class SplitError : public Error {
public:
    explicit SplitError(const std::string& msg) : Error(msg) {}
};

/// Checkpoint persistence failure.
class CheckpointError : public Error {
public:
    enum class Kind { io, corrupt, bad_version };

    CheckpointError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
    Kind kind;
};

/// Training loss became NaN/Inf.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

/// API contract violation (e.g. backward called with a stale cache).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

}  // namespace tlf
