#pragma once

#include <stdexcept>
#include <string>

namespace srnr {

/// Failure categories; the CLI maps them onto exit codes 2, 3 and 4.
enum class ErrorKind { config, data, runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Input data that violates a format or content contract.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Throws the concrete subclass matching kind.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
    switch (kind) {
        case ErrorKind::config: throw ConfigError(what);
        case ErrorKind::data: throw DataError(what);
        default: throw Error(ErrorKind::runtime, what);
    }
}

}  // namespace srnr
