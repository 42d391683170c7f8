#ifndef LATENTW_EXCHANGEABLE_HPP
#define LATENTW_EXCHANGEABLE_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <type_traits>
#include <vector>

#include "latentw/sample_space.hpp"

namespace latentw {

namespace detail {

/// Argmin membership: relative slack in floating point, exact for rationals.
template <class Scalar>
bool attains_min(const Scalar& value, const Scalar& minimum) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return value <= minimum * (1 + 1e-9) + 1e-15;
  } else {
    return value == minimum;
  }
}

template <class Scalar>
Scalar purity_tolerance() {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return Scalar(1e-9);
  } else {
    return Scalar(0);
  }
}

}  // namespace detail

/// m_z = min over the class of p, one entry per orbit class.
template <class Scalar>
Vector<Scalar> class_minima(const Distribution<Scalar>& p) {
  const OrbitIndex& index = orbits(p.space());
  Vector<Scalar> minima(static_cast<Eigen::Index>(index.num_classes()));
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    const auto& members = index[z].members;
    Scalar m = p(members.front());
    for (std::size_t x : members) m = std::min<Scalar>(m, p(x));
    minima[static_cast<Eigen::Index>(z)] = m;
  }
  return minima;
}

/// Exchangeable weight: sum over classes of |z| * min_{x in z} p(x).
template <class Scalar>
Scalar exchangeable_weight(const Distribution<Scalar>& p) {
  const OrbitIndex& index = orbits(p.space());
  const Vector<Scalar> minima = class_minima(p);
  Scalar lambda(0);
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    lambda += Scalar(static_cast<long long>(index[z].size)) * minima[static_cast<Eigen::Index>(z)];
  }
  return lambda;
}

/// Same quantity computed from raw counts: (sum |z| * min count) / n.
/// Integer accumulation keeps it exact up to the final division.
double exchangeable_weight(const OrbitIndex& index, std::span<const std::uint64_t> counts, std::uint64_t n);

template <class Scalar>
struct ExchangeableDecomposition {
  Scalar lambda;
  std::optional<Distribution<Scalar>> q;  // present iff lambda > 0
  std::optional<Distribution<Scalar>> r;  // present iff lambda < 1
  Vector<Scalar> per_class_min;
  std::vector<std::vector<std::size_t>> argmin_sets;
};

/// Splits p = lambda * q + (1 - lambda) * r with q the unique exchangeable
/// component and r a residual carrying no exchangeable mass.
template <class Scalar>
ExchangeableDecomposition<Scalar> decompose(const Distribution<Scalar>& p) {
  const OrbitIndex& index = orbits(p.space());
  const auto n = static_cast<Eigen::Index>(p.size());

  ExchangeableDecomposition<Scalar> out{Scalar(0), std::nullopt, std::nullopt, class_minima(p), {}};
  out.argmin_sets.resize(index.num_classes());
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    const Scalar& m = out.per_class_min[static_cast<Eigen::Index>(z)];
    out.lambda += Scalar(static_cast<long long>(index[z].size)) * m;
    for (std::size_t x : index[z].members) {
      if (detail::attains_min(p(x), m)) out.argmin_sets[z].push_back(x);
    }
  }

  // r(x) = (p(x) - m_[x]) / (1 - lambda) keeps r exactly zero on argmins.
  if (out.lambda > Scalar(0)) {
    Vector<Scalar> q(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      q[x] = out.per_class_min[static_cast<Eigen::Index>(index.class_of(static_cast<std::size_t>(x)))] / out.lambda;
    }
    out.q.emplace(p.space(), std::move(q), unchecked);
  }
  if (out.lambda < Scalar(1)) {
    const Scalar rest = Scalar(1) - out.lambda;
    Vector<Scalar> r(n);
    for (Eigen::Index x = 0; x < n; ++x) {
      const Scalar& m = out.per_class_min[static_cast<Eigen::Index>(index.class_of(static_cast<std::size_t>(x)))];
      r[x] = (p.probabilities()[x] - m) / rest;
    }
    out.r.emplace(p.space(), std::move(r), unchecked);
  }
  return out;
}

/// Largest within-class spread max - min of p; zero iff p is exchangeable.
template <class Scalar>
Scalar exchangeability_defect(const Distribution<Scalar>& p) {
  const OrbitIndex& index = orbits(p.space());
  Scalar worst(0);
  for (const auto& cls : index.classes()) {
    const auto [lo, hi] = std::minmax_element(cls.members.begin(), cls.members.end(),
                                              [&](std::size_t a, std::size_t b) { return p(a) < p(b); });
    worst = std::max<Scalar>(worst, Scalar(p(*hi) - p(*lo)));
  }
  return worst;
}

template <class Scalar>
bool is_exchangeable(const Distribution<Scalar>& p, const Scalar& tolerance = detail::purity_tolerance<Scalar>()) {
  return exchangeability_defect(p) <= tolerance;
}

/// beta * q + (1 - beta) * r for exchangeable q and a residual r with zero
/// exchangeable weight; the result has exchangeable weight exactly beta.
template <class Scalar>
Distribution<Scalar> synthesize_mixture(const Distribution<Scalar>& q, const Distribution<Scalar>& r,
                                        const Scalar& beta) {
  if (!(q.space() == r.space())) throw Error("SpaceMismatch", "q and r live on different sample spaces");
  if (beta < Scalar(0) || beta > Scalar(1)) throw Error("InvalidWeight", "beta must lie in [0, 1]");
  if (!is_exchangeable(q)) throw Error("NotExchangeable", "q is not exchangeable");
  if (exchangeable_weight(r) > detail::purity_tolerance<Scalar>()) {
    throw Error("ResidualNotPure", "r has positive exchangeable weight");
  }
  Vector<Scalar> mix = beta * q.probabilities() + (Scalar(1) - beta) * r.probabilities();
  return Distribution<Scalar>(q.space(), std::move(mix), unchecked);
}

/// Marginal law of the coordinates `positions` (0-based, distinct, at least two).
template <class Scalar>
Distribution<Scalar> marginal(const Distribution<Scalar>& p, std::span<const int> positions) {
  const SampleSpace& space = p.space();
  if (positions.empty()) throw Error("EmptyIndexSet", "marginal needs at least one coordinate");
  std::vector<int> sorted(positions.begin(), positions.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 0 ||
      sorted.back() >= space.d()) {
    throw Error("InvalidIndexSet", "coordinates must be distinct and within 1..d");
  }
  if (positions.size() < 2) throw Error("InvalidIndexSet", "a marginal sample space needs at least two coordinates");

  const SampleSpace target(space.k(), static_cast<int>(positions.size()));
  Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(target.size()));
  for (std::size_t x = 0; x < space.size(); ++x) {
    std::size_t y = 0;
    for (int pos : positions) y = y * static_cast<std::size_t>(space.k()) + static_cast<std::size_t>(space.symbol(x, pos));
    out[static_cast<Eigen::Index>(y)] += p(x);
  }
  return Distribution<Scalar>(target, std::move(out), unchecked);
}

/// Exchangeable weight of the marginal on `positions`; never below that of p.
template <class Scalar>
Scalar marginal_weight_bound(const Distribution<Scalar>& p, std::span<const int> positions) {
  if (positions.empty()) throw Error("EmptyIndexSet", "marginal bound needs a non-empty index set");
  if (positions.size() == 1) {
    const int pos = positions.front();
    if (pos < 0 || pos >= p.space().d()) throw Error("InvalidIndexSet", "coordinate outside 1..d");
    return Scalar(1);  // every law on a single coordinate is exchangeable
  }
  return exchangeable_weight(marginal(p, positions));
}

/// Push-forward of p under the coordinatewise relabeling `relabel`
/// (relabel[a] is the new symbol for symbol a). The target alphabet has
/// max(relabel)+1 symbols, widened to 2 when every symbol collapses.
template <class Scalar>
Distribution<Scalar> lump(const Distribution<Scalar>& p, std::span<const int> relabel) {
  const SampleSpace& space = p.space();
  if (relabel.size() != static_cast<std::size_t>(space.k())) {
    throw Error("InvalidLumping", "lumping map must assign a target to every symbol");
  }
  if (*std::min_element(relabel.begin(), relabel.end()) < 0) {
    throw Error("InvalidLumping", "lumping targets must be non-negative");
  }
  const int k_target = std::max(2, *std::max_element(relabel.begin(), relabel.end()) + 1);
  const SampleSpace target(k_target, space.d());
  Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(target.size()));
  for (std::size_t x = 0; x < space.size(); ++x) {
    std::size_t y = 0;
    for (int i = 0; i < space.d(); ++i) {
      y = y * static_cast<std::size_t>(k_target) + static_cast<std::size_t>(relabel[static_cast<std::size_t>(space.symbol(x, i))]);
    }
    out[static_cast<Eigen::Index>(y)] += p(x);
  }
  return Distribution<Scalar>(target, std::move(out), unchecked);
}

template <class Scalar>
Scalar lumping_weight_bound(const Distribution<Scalar>& p, std::span<const int> relabel) {
  return exchangeable_weight(lump(p, relabel));
}

template <class Scalar>
Scalar tv_distance(const Distribution<Scalar>& a, const Distribution<Scalar>& b) {
  if (!(a.space() == b.space())) throw Error("SpaceMismatch", "distributions live on different sample spaces");
  Scalar total(0);
  for (std::size_t x = 0; x < a.size(); ++x) total += detail::abs(Scalar(a(x) - b(x)));
  return total / Scalar(2);
}

template <class Scalar>
struct TvProjection {
  Scalar distance;
  Distribution<Scalar> nearest;
};

/// Total-variation distance from p to the exchangeable class, with a closest
/// exchangeable law.
///
/// The problem min 1/2 sum_x |p(x) - q_[x]| s.t. sum_z |z| q_z = 1, q >= 0 is
/// separable: in the mass u_z = |z| q_z, class z contributes a convex
/// piecewise-linear cost whose slope on the j-th segment (between the j-th and
/// (j+1)-th smallest member probabilities) is (2j - |z|) / |z|. Pouring unit
/// mass into segments in order of increasing slope is an optimal basis walk
/// of the LP, and stays exact in rational arithmetic.
template <class Scalar>
TvProjection<Scalar> tv_distance_to_exchangeable(const Distribution<Scalar>& p) {
  const OrbitIndex& index = orbits(p.space());

  struct Segment {
    Scalar slope;
    std::size_t cls;
    std::size_t step;
    Scalar start;     // q_z level where the segment begins
    Scalar capacity;  // mass available; negative marks the unbounded last segment
  };
  std::vector<Segment> segments;
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    const auto& members = index[z].members;
    const auto s = static_cast<long long>(members.size());
    std::vector<Scalar> levels;
    levels.reserve(members.size());
    for (std::size_t x : members) levels.push_back(p(x));
    std::sort(levels.begin(), levels.end());
    Scalar prev(0);
    for (long long j = 0; j <= s; ++j) {
      const Scalar slope = Scalar(2 * j - s) / Scalar(s);
      if (j < s) {
        const Scalar& next = levels[static_cast<std::size_t>(j)];
        if (next > prev) segments.push_back({slope, z, static_cast<std::size_t>(j), prev, Scalar(s) * (next - prev)});
        prev = next;
      } else {
        segments.push_back({slope, z, static_cast<std::size_t>(j), prev, Scalar(-1)});
      }
    }
  }
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    return std::tie(a.slope, a.cls, a.step) < std::tie(b.slope, b.cls, b.step);
  });

  Vector<Scalar> level = Vector<Scalar>::Zero(static_cast<Eigen::Index>(index.num_classes()));
  Scalar remaining(1);
  for (const auto& seg : segments) {
    if (!(remaining > Scalar(0))) break;
    const Scalar size(static_cast<long long>(index[seg.cls].size));
    const bool bounded = !(seg.capacity < Scalar(0));
    const Scalar take = bounded ? std::min<Scalar>(seg.capacity, remaining) : remaining;
    level[static_cast<Eigen::Index>(seg.cls)] = seg.start + take / size;
    remaining -= take;
  }

  Vector<Scalar> q(static_cast<Eigen::Index>(p.size()));
  for (std::size_t x = 0; x < p.size(); ++x) {
    q[static_cast<Eigen::Index>(x)] = level[static_cast<Eigen::Index>(index.class_of(x))];
  }
  Distribution<Scalar> nearest(p.space(), std::move(q), unchecked);
  Scalar distance = tv_distance(p, nearest);
  return {std::move(distance), std::move(nearest)};
}

}  // namespace latentw

#endif  // LATENTW_EXCHANGEABLE_HPP
