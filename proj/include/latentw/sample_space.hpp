#ifndef LATENTW_SAMPLE_SPACE_HPP
#define LATENTW_SAMPLE_SPACE_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "latentw/error.hpp"

namespace latentw {

using Rational = boost::multiprecision::cpp_rational;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;
using VectorXq = Vector<Rational>;

inline constexpr std::size_t kDefaultMaxOutcomes = std::size_t{1} << 24;

/// Finite product space X^d with X = {0, ..., k-1}. Outcomes are numbered in
/// lexicographic order of their symbol tuples, first coordinate most
/// significant.
class SampleSpace {
 public:
  SampleSpace(int k, int d, std::size_t max_outcomes = kDefaultMaxOutcomes);

  int k() const noexcept { return k_; }
  int d() const noexcept { return d_; }
  std::size_t size() const noexcept { return size_; }

  std::size_t encode(std::span<const int> symbols) const;
  std::vector<int> decode(std::size_t index) const;

  /// Symbol at coordinate `position` (0-based) of outcome `index`.
  int symbol(std::size_t index, int position) const noexcept {
    return static_cast<int>((index / stride_[static_cast<std::size_t>(position)]) %
                            static_cast<std::size_t>(k_));
  }

  /// One character per coordinate, digits then lowercase letters (k <= 36).
  std::string label(std::size_t index) const;
  std::size_t parse_label(std::string_view label) const;

  friend bool operator==(const SampleSpace& a, const SampleSpace& b) noexcept {
    return a.k_ == b.k_ && a.d_ == b.d_;
  }

 private:
  int k_;
  int d_;
  std::size_t size_;
  std::vector<std::size_t> stride_;
};

struct OrbitClass {
  std::vector<int> representative;  // sorted symbol multiset
  std::size_t size = 0;             // |z| = d! / (c_1! ... c_k!)
  std::vector<std::size_t> members; // ascending outcome indices
};

/// Partition of a sample space into permutation-equivalence classes.
/// Class ids follow the lexicographic order of the sorted representatives.
class OrbitIndex {
 public:
  explicit OrbitIndex(const SampleSpace& space);

  const SampleSpace& space() const noexcept { return space_; }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  std::size_t class_of(std::size_t outcome) const noexcept { return class_of_[outcome]; }
  const std::vector<std::size_t>& class_ids() const noexcept { return class_of_; }
  const std::vector<OrbitClass>& classes() const noexcept { return classes_; }
  const OrbitClass& operator[](std::size_t id) const noexcept { return classes_[id]; }

 private:
  SampleSpace space_;
  std::vector<std::size_t> class_of_;
  std::vector<OrbitClass> classes_;
};

OrbitIndex build_orbit_index(const SampleSpace& space,
                             std::size_t max_outcomes = kDefaultMaxOutcomes);

/// Shared, lazily built index for `space`; thread-safe.
const OrbitIndex& orbits(const SampleSpace& space);

/// binomial(n, r) in 64-bit arithmetic.
std::uint64_t binomial(std::uint64_t n, std::uint64_t r);

namespace detail {

template <class Scalar>
Scalar sum_tolerance() {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return Scalar(1e-12);
  } else {
    return Scalar(0);
  }
}

template <class Scalar>
Scalar abs(const Scalar& x) {
  return x < Scalar(0) ? Scalar(-x) : x;
}

}  // namespace detail

struct Unchecked {};
inline constexpr Unchecked unchecked{};

/// Probability vector over a SampleSpace, in double or exact rational form.
template <class Scalar>
class Distribution {
 public:
  using scalar_type = Scalar;

  Distribution(SampleSpace space, Vector<Scalar> p) : space_(space), p_(std::move(p)) {
    if (static_cast<std::size_t>(p_.size()) != space_.size()) {
      throw Error("InvalidDistribution", "probability vector length does not match the sample space");
    }
    Scalar total(0);
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
      if (p_[i] < Scalar(0)) {
        throw Error("InvalidDistribution", "negative probability at outcome " + space_.label(static_cast<std::size_t>(i)));
      }
      total += p_[i];
    }
    if (detail::abs(Scalar(total - Scalar(1))) > detail::sum_tolerance<Scalar>()) {
      throw Error("InvalidDistribution", "probabilities do not sum to one");
    }
  }

  /// Skips validation; for values derived from an already valid distribution.
  Distribution(SampleSpace space, Vector<Scalar> p, Unchecked) : space_(space), p_(std::move(p)) {}

  static Distribution point_mass(const SampleSpace& space, std::size_t outcome) {
    Vector<Scalar> p = Vector<Scalar>::Zero(static_cast<Eigen::Index>(space.size()));
    p[static_cast<Eigen::Index>(outcome)] = Scalar(1);
    return Distribution(space, std::move(p), unchecked);
  }

  static Distribution uniform(const SampleSpace& space) {
    Vector<Scalar> p = Vector<Scalar>::Constant(static_cast<Eigen::Index>(space.size()),
                                                Scalar(1) / Scalar(static_cast<long long>(space.size())));
    return Distribution(space, std::move(p), unchecked);
  }

  static Distribution uniform_on(const SampleSpace& space, std::span<const std::size_t> support) {
    if (support.empty()) throw Error("InvalidDistribution", "empty support");
    Vector<Scalar> p = Vector<Scalar>::Zero(static_cast<Eigen::Index>(space.size()));
    const Scalar mass = Scalar(1) / Scalar(static_cast<long long>(support.size()));
    for (auto x : support) p[static_cast<Eigen::Index>(x)] = mass;
    return Distribution(space, std::move(p), unchecked);
  }

  const SampleSpace& space() const noexcept { return space_; }
  const Vector<Scalar>& probabilities() const noexcept { return p_; }
  std::size_t size() const noexcept { return space_.size(); }
  const Scalar& operator()(std::size_t outcome) const { return p_[static_cast<Eigen::Index>(outcome)]; }

  template <class To>
  Distribution<To> cast() const {
    Vector<To> out(p_.size());
    for (Eigen::Index i = 0; i < p_.size(); ++i) out[i] = static_cast<To>(p_[i]);
    return Distribution<To>(space_, std::move(out), unchecked);
  }

 private:
  SampleSpace space_;
  Vector<Scalar> p_;
};

/// Observed multinomial counts over a SampleSpace.
class CountVector {
 public:
  CountVector(SampleSpace space, std::vector<std::uint64_t> counts);

  const SampleSpace& space() const noexcept { return space_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t operator[](std::size_t outcome) const noexcept { return counts_[outcome]; }
  std::uint64_t n() const noexcept { return n_; }

 private:
  SampleSpace space_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_ = 0;
};

template <class Scalar = double>
Distribution<Scalar> empirical_distribution(const CountVector& c) {
  if (c.n() == 0) throw Error("EmptySample", "empirical distribution of an empty sample");
  Vector<Scalar> p(static_cast<Eigen::Index>(c.space().size()));
  const Scalar n(static_cast<long long>(c.n()));
  for (std::size_t x = 0; x < c.space().size(); ++x) {
    p[static_cast<Eigen::Index>(x)] = Scalar(static_cast<long long>(c[x])) / n;
  }
  return Distribution<Scalar>(c.space(), std::move(p), unchecked);
}

}  // namespace latentw

#endif  // LATENTW_SAMPLE_SPACE_HPP
