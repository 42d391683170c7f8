#include "latentw/parallel.hpp"

#include <cstdlib>
#include <string>

namespace latentw {

unsigned default_threads() {
  if (const char* env = std::getenv("LATENTW_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace latentw
