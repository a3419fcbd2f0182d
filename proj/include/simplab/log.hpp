#pragma once

#include <functional>
#include <string_view>

namespace simplab {

using WarningSink = std::function<void(std::string_view)>;

// Emits a one-line warning. The default sink writes "warning: ..." to std::clog.
void log_warning(std::string_view message);

// Replaces the sink and returns the previous one. An empty sink discards.
WarningSink set_warning_sink(WarningSink sink);

} // namespace simplab
