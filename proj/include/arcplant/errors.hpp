#pragma once

#include <stdexcept>
#include <string>

namespace arcplant {

/// Base of every error raised by the toolkit. The CLI maps each subclass to a
/// stable process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration, detected before any computation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A request outside the physical domain of the model (e.g. an arc length the
/// supply cannot sustain).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (CSV ingestion, identification records).
class DataError : public Error {
public:
    using Error::Error;
};

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kConfig = 2;
inline constexpr int kDomain = 3;
inline constexpr int kData = 4;
}  // namespace exit_code

}  // namespace arcplant
