#pragma once

#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cspeed {

// Bad pipeline wiring: dimension mismatches, buffer-assumption violations,
// unusable parameter combinations.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Physically out-of-range values (sound speed bounds, positions outside the
// room, absorption outside (0,1]).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// File and stream failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat_msg(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  return os.str();
}

inline void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[cspeed] warning: %s\n", msg.c_str());
}

// Runs fn(i) for i in [0, n). Each index must write only its own slots so the
// result is identical for any worker count. threads == 0 picks the hardware
// concurrency, threads == 1 stays on the calling thread.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (workers > n) workers = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cspeed
