#pragma once

#include <functional>
#include <string>

namespace mtx {

// Non-fatal data-quality complaints (clamped boxes, truncated inputs, ...)
// land here. Default handler writes "[warn] ..." to stderr; tests swap in a
// collector, tools can silence it.
using WarningHandler = std::function<void(const std::string&)>;

void log_warning(const std::string& msg);
// Returns the previous handler. Pass nullptr to restore the default.
WarningHandler set_warning_handler(WarningHandler h);

}  // namespace mtx
