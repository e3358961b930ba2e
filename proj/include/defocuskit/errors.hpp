#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace dk {

// Numerical breakdown (non-finite objective, divergent iteration).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File / stream failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Guide-star estimation could not produce a result (e.g. flat sharpness curve).
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics (PSF truncation, grid-search extrapolation) are routed
// through a process-wide handler so tests and tools can capture them.
// The default handler prints "defocuskit: warning: <msg>" to stderr.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void emit_warning(const std::string& message);

}  // namespace dk
