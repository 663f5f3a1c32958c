// Minimal stderr logging controlled by the FOGMARKET_LOG environment
// variable: error (default), info, or debug.
#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace fogmarket {

enum class log_level { error = 0, info = 1, debug = 2 };

inline log_level current_log_level() {
    static const log_level lvl = [] {
        const char* env = std::getenv("FOGMARKET_LOG");
        if (!env) return log_level::error;
        const std::string v(env);
        if (v == "debug") return log_level::debug;
        if (v == "info") return log_level::info;
        return log_level::error;
    }();
    return lvl;
}

inline void log_at(log_level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(current_log_level()))
        std::cerr << "[fogmarket] " << msg << "\n";
}

inline void log_error(const std::string& msg) { log_at(log_level::error, msg); }
inline void log_info(const std::string& msg) { log_at(log_level::info, msg); }
inline void log_debug(const std::string& msg) { log_at(log_level::debug, msg); }

}  // namespace fogmarket
