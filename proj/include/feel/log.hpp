#pragma once

#include <string>
#include <vector>

namespace feel::log {

// Warnings go to stderr unless silenced; the last few are kept so callers
// (and tests) can inspect what was reported.
void warn(const std::string& message);
void set_quiet(bool quiet);
std::vector<std::string> recent_warnings();
void clear_warnings();

}  // namespace feel::log
