#pragma once

#include <stdexcept>
#include <string>

namespace phmkit {

/// Base class for all phmkit faults. The `category()` string is stable and
/// machine-checkable; the what() message carries context for humans.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}
    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// Malformed input schema (missing CSV column, bad config key, ...).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error("schema", msg) {}
};

/// Structurally inconsistent data (duplicate timestamps, gaps, shape mismatch).
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg) : Error("integrity", msg) {}
};

/// Invalid operation parameters detected before any computation runs.
class SpecError : public Error {
public:
    explicit SpecError(const std::string& msg) : Error("spec", msg) {}
};

/// A fit was attempted on data not tagged as the training partition, or a
/// run record shows fitted state derived from non-training data. This is a
/// hard fault, never a warning.
class LeakageFault : public Error {
public:
    explicit LeakageFault(const std::string& msg) : Error("leakage", msg) {}
};

/// Cache-level I/O and locking problems.
class CacheError : public Error {
public:
    explicit CacheError(const std::string& msg) : Error("cache", msg) {}
};

/// Everything that goes wrong while orchestrating a run (stage context is
/// prepended by the runner).
class RunError : public Error {
public:
    explicit RunError(const std::string& msg) : Error("run", msg) {}
};

} // namespace phmkit
