#include "defocuskit/errors.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace dk {

namespace {
std::mutex g_handler_mutex;
WarningHandler g_handler;
}  // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(g_handler_mutex);
    g_handler = std::move(handler);
}

void emit_warning(const std::string& message) {
    WarningHandler handler;
    {
        std::lock_guard<std::mutex> lock(g_handler_mutex);
        handler = g_handler;
    }
    if (handler) {
        handler(message);
    } else {
        std::cerr << "defocuskit: warning: " << message << "\n";
    }
}

}  // namespace dk
