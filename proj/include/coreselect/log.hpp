#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace coreselect::log {

enum class Level { quiet = 0, normal = 1, verbose = 2 };

inline Level& level() {
    static Level current = Level::normal;
    return current;
}

inline void write(const char* tag, const std::string& msg) {
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::cerr << tag << msg << '\n';
}

inline void info(const std::string& msg) {
    if (level() >= Level::normal) write("", msg);
}
inline void debug(const std::string& msg) {
    if (level() >= Level::verbose) write("debug: ", msg);
}
// Warnings are shown unless --quiet.
inline void warn(const std::string& msg) {
    if (level() >= Level::normal) write("warning: ", msg);
}

}  // namespace coreselect::log
