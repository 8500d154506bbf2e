#pragma once

#include <stdexcept>

namespace neggen {

// Error categories map onto the CLI exit-code contract:
// usage -> 2, validation/parse -> 3, backend -> 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace neggen
