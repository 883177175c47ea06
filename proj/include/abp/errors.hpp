#ifndef ABP_ERRORS_HPP
#define ABP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace abp {

// Shape or argument contract violated by a caller.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file, container, or manifest.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Referenced data is missing or inconsistent.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Computation left the finite regime (divergence, singular pivot).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad command line.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace abp

#endif
