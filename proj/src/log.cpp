#include "simplab/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace simplab {

namespace {

std::mutex sink_mutex;

WarningSink& sink() {
    static WarningSink s = [](std::string_view m) { std::clog << "warning: " << m << '\n'; };
    return s;
}

} // namespace

void log_warning(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex);
    return std::exchange(sink(), std::move(s));
}

} // namespace simplab
