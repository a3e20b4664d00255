#include "depthforge/parallel.hpp"

#include "depthforge/error.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace depthforge {

void set_thread_count(int n) {
  if (n < 1) throw ParameterError("thread count must be at least 1");
  omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

int resolve_thread_count(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("DEPTHFORGE_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError(std::string("DEPTHFORGE_THREADS is not a positive integer: ") + env);
    }
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace depthforge
