#include "feel/log.hpp"

#include <deque>
#include <iostream>
#include <mutex>

namespace feel::log {
namespace {

constexpr std::size_t kKeep = 256;

std::mutex g_mutex;
bool g_quiet = false;
std::deque<std::string> g_recent;

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (!g_quiet) std::cerr << "warning: " << message << '\n';
  g_recent.push_back(message);
  if (g_recent.size() > kKeep) g_recent.pop_front();
}

void set_quiet(bool quiet) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_quiet = quiet;
}

std::vector<std::string> recent_warnings() {
  std::lock_guard<std::mutex> lock(g_mutex);
  return {g_recent.begin(), g_recent.end()};
}

void clear_warnings() {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_recent.clear();
}

}  // namespace feel::log
