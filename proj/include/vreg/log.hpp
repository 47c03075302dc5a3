#pragma once
// Minimal stderr logger. Level comes from the VREG_LOG environment
// variable: debug | info | warn | error (default warn).

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace vreg::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

inline Level threshold() {
    static Level lvl = [] {
        const char* e = std::getenv("VREG_LOG");
        std::string s = e ? e : "warn";
        if (s == "debug") return Level::debug;
        if (s == "info") return Level::info;
        if (s == "error") return Level::error;
        return Level::warn;
    }();
    return lvl;
}

template <typename... Args>
inline void emit(Level lvl, const char* tag, Args&&... args) {
    if (lvl < threshold()) return;
    std::ostringstream os;
    os << "[vreg " << tag << "] ";
    (os << ... << args);
    std::cerr << os.str() << "\n";
}

template <typename... Args>
void debug(Args&&... a) { emit(Level::debug, "debug", std::forward<Args>(a)...); }
template <typename... Args>
void info(Args&&... a) { emit(Level::info, "info", std::forward<Args>(a)...); }
template <typename... Args>
void warn(Args&&... a) { emit(Level::warn, "warn", std::forward<Args>(a)...); }
template <typename... Args>
void error(Args&&... a) { emit(Level::error, "error", std::forward<Args>(a)...); }

}  // namespace vreg::log
