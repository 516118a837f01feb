#pragma once

#include <functional>
#include <string>

namespace specwalk {

using WarningSink = std::function<void(const std::string&)>;

// Replaces the warning sink (default: stderr). Passing nullptr silences warnings.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace specwalk
