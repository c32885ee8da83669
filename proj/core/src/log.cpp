#include "mtx/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace mtx {

namespace {
std::mutex g_mutex;
WarningHandler g_handler;
}  // namespace

void log_warning(const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_handler)
    g_handler(msg);
  else
    std::cerr << "[warn] " << msg << '\n';
}

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard<std::mutex> lock(g_mutex);
  return std::exchange(g_handler, std::move(h));
}

}  // namespace mtx
