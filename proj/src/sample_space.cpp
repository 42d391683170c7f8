#include "latentw/sample_space.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <unordered_map>
#include <utility>

namespace latentw {

namespace {

constexpr std::string_view kSymbols = "0123456789abcdefghijklmnopqrstuvwxyz";

int symbol_value(char c) {
  const auto pos = kSymbols.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

SampleSpace::SampleSpace(int k, int d, std::size_t max_outcomes) : k_(k), d_(d), size_(1) {
  if (k < 2) throw Error("InvalidSpace", "alphabet size k must be at least 2");
  if (d < 2) throw Error("InvalidSpace", "dimension d must be at least 2");
  stride_.assign(static_cast<std::size_t>(d), 1);
  for (int i = 0; i < d; ++i) {
    if (size_ > max_outcomes / static_cast<std::size_t>(k)) {
      throw Error("SpaceTooLarge", "k^d = " + std::to_string(k) + "^" + std::to_string(d) +
                                       " exceeds the limit of " + std::to_string(max_outcomes) + " outcomes");
    }
    size_ *= static_cast<std::size_t>(k);
  }
  for (int i = d - 2; i >= 0; --i) {
    stride_[static_cast<std::size_t>(i)] = stride_[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(k);
  }
}

std::size_t SampleSpace::encode(std::span<const int> symbols) const {
  if (symbols.size() != static_cast<std::size_t>(d_)) {
    throw Error("InvalidOutcome", "outcome has " + std::to_string(symbols.size()) + " symbols, expected " +
                                      std::to_string(d_));
  }
  std::size_t index = 0;
  for (int s : symbols) {
    if (s < 0 || s >= k_) throw Error("InvalidOutcome", "symbol " + std::to_string(s) + " outside alphabet");
    index = index * static_cast<std::size_t>(k_) + static_cast<std::size_t>(s);
  }
  return index;
}

std::vector<int> SampleSpace::decode(std::size_t index) const {
  std::vector<int> out(static_cast<std::size_t>(d_));
  for (int i = d_ - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(k_));
    index /= static_cast<std::size_t>(k_);
  }
  return out;
}

std::string SampleSpace::label(std::size_t index) const {
  if (k_ > static_cast<int>(kSymbols.size())) throw Error("InvalidSpace", "labels support k <= 36");
  std::string out(static_cast<std::size_t>(d_), '0');
  for (int i = 0; i < d_; ++i) out[static_cast<std::size_t>(i)] = kSymbols[static_cast<std::size_t>(symbol(index, i))];
  return out;
}

std::size_t SampleSpace::parse_label(std::string_view text) const {
  if (text.size() != static_cast<std::size_t>(d_)) {
    throw Error("InvalidOutcome", "outcome '" + std::string(text) + "' has wrong length for d=" + std::to_string(d_));
  }
  std::vector<int> symbols;
  symbols.reserve(text.size());
  for (char c : text) {
    const int v = symbol_value(c);
    if (v < 0 || v >= k_) throw Error("InvalidOutcome", "outcome '" + std::string(text) + "' has a symbol outside the alphabet");
    symbols.push_back(v);
  }
  return encode(symbols);
}

OrbitIndex::OrbitIndex(const SampleSpace& space) : space_(space), class_of_(space.size()) {
  // Sorted tuples are themselves outcomes, and lexicographic enumeration
  // visits them in representative order, so ids come out sorted.
  std::unordered_map<std::size_t, std::size_t> id_of_sorted;
  std::vector<int> symbols;
  for (std::size_t x = 0; x < space.size(); ++x) {
    symbols = space.decode(x);
    if (std::is_sorted(symbols.begin(), symbols.end())) {
      id_of_sorted.emplace(x, classes_.size());
      classes_.push_back(OrbitClass{symbols, 0, {}});
    }
  }
  for (std::size_t x = 0; x < space.size(); ++x) {
    symbols = space.decode(x);
    std::sort(symbols.begin(), symbols.end());
    const std::size_t id = id_of_sorted.at(space.encode(symbols));
    class_of_[x] = id;
    classes_[id].members.push_back(x);
  }
  for (auto& c : classes_) c.size = c.members.size();
}

OrbitIndex build_orbit_index(const SampleSpace& space, std::size_t max_outcomes) {
  if (space.size() > max_outcomes) {
    throw Error("SpaceTooLarge", "sample space has " + std::to_string(space.size()) + " outcomes, limit is " +
                                     std::to_string(max_outcomes));
  }
  return OrbitIndex(space);
}

const OrbitIndex& orbits(const SampleSpace& space) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<const OrbitIndex>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{space.k(), space.d()}];
  if (!slot) slot = std::make_unique<const OrbitIndex>(space);
  return *slot;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    result = result / i * (n - r + i) + result % i * (n - r + i) / i;
  }
  return result;
}

CountVector::CountVector(SampleSpace space, std::vector<std::uint64_t> counts)
    : space_(space), counts_(std::move(counts)) {
  if (counts_.size() != space_.size()) {
    throw Error("InvalidCounts", "count vector length does not match the sample space");
  }
  for (auto c : counts_) n_ += c;
}

}  // namespace latentw
