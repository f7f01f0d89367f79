#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace pnn {

namespace detail {

template <class... Parts>
std::string msg(Parts&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    return os.str();
}

}  // namespace detail

/// Base of all errors thrown by the library. `kind()` is a stable
/// machine-readable tag; the CLI prints it in its error line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Shape mismatch between numeric operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

/// Violation of an on-disk format (magic numbers, truncation, bad fields).
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error("format", what) {}
};

/// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

/// Invalid configuration: flags, architecture strings, schedules.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace pnn
