#include "latentw/exchangeable.hpp"

namespace latentw {

double exchangeable_weight(const OrbitIndex& index, std::span<const std::uint64_t> counts, std::uint64_t n) {
  if (n == 0) throw Error("EmptySample", "exchangeable weight of an empty sample");
  std::uint64_t mass = 0;
  for (const auto& cls : index.classes()) {
    std::uint64_t m = counts[cls.members.front()];
    for (std::size_t x : cls.members) m = std::min(m, counts[x]);
    mass += cls.size * m;
  }
  return static_cast<double>(mass) / static_cast<double>(n);
}

}  // namespace latentw
