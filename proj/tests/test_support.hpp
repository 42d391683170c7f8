// Shared generators and independent oracles for the test suites.
#ifndef LATENTW_TEST_SUPPORT_HPP
#define LATENTW_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "latentw/rng.hpp"
#include "latentw/sample_space.hpp"

namespace latentw::testing {

/// Flat Dirichlet draw over the space.
inline Distribution<double> dirichlet(const SampleSpace& space, Xoshiro256& rng, double alpha = 1.0) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  VectorXd p(static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = gamma(rng);
  p /= p.sum();
  return Distribution<double>(space, p);
}

/// Dirichlet draw with roughly `zero_fraction` of the outcomes forced to 0.
inline Distribution<double> sparse_dirichlet(const SampleSpace& space, Xoshiro256& rng, double zero_fraction) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  VectorXd p(static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.uniform() < zero_fraction ? 0.0 : gamma(rng);
  if (p.sum() == 0.0) p[0] = 1.0;
  p /= p.sum();
  return Distribution<double>(space, p);
}

/// Brute-force min over the exchangeable simplex of 1/2 sum |p - q|: every
/// mass split u_z in multiples of 1/resolution, then compass refinement
/// around the best grid point. Independent of the segment-greedy solver.
inline double tv_to_exchangeable_grid(const Distribution<double>& p, int resolution) {
  // Orbit membership recomputed here from sorted tuples rather than taken
  // from the library index.
  const SampleSpace& space = p.space();
  std::vector<std::vector<int>> reps;
  std::vector<std::size_t> cls(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) {
    auto t = space.decode(x);
    std::sort(t.begin(), t.end());
    auto it = std::find(reps.begin(), reps.end(), t);
    if (it == reps.end()) {
      reps.push_back(t);
      cls[x] = reps.size() - 1;
    } else {
      cls[x] = static_cast<std::size_t>(it - reps.begin());
    }
  }
  const std::size_t n_classes = reps.size();
  std::vector<double> size(n_classes, 0.0);
  for (std::size_t x = 0; x < space.size(); ++x) size[cls[x]] += 1.0;

  auto cost = [&](const std::vector<double>& u) {
    double total = 0.0;
    for (std::size_t x = 0; x < space.size(); ++x) total += std::abs(p(x) - u[cls[x]] / size[cls[x]]);
    return 0.5 * total;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_u;
  std::vector<int> units(n_classes, 0);
  std::function<void(std::size_t, int)> visit = [&](std::size_t z, int left) {
    if (z + 1 == n_classes) {
      units[z] = left;
      std::vector<double> u(n_classes);
      for (std::size_t i = 0; i < n_classes; ++i) u[i] = static_cast<double>(units[i]) / resolution;
      const double c = cost(u);
      if (c < best) {
        best = c;
        best_u = u;
      }
      return;
    }
    for (int a = 0; a <= left; ++a) {
      units[z] = a;
      visit(z + 1, left - a);
    }
  };
  visit(0, resolution);

  // Move mass between pairs of classes with shrinking steps.
  for (double step = 1.0 / resolution; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t a = 0; a < n_classes; ++a) {
        for (std::size_t b = 0; b < n_classes; ++b) {
          if (a == b || best_u[b] < step) continue;
          auto u = best_u;
          u[a] += step;
          u[b] -= step;
          const double c = cost(u);
          if (c < best - 1e-15) {
            best = c;
            best_u = u;
            improved = true;
          }
        }
      }
    }
  }
  return best;
}


/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// One-sample KS statistic against N(0, sd^2).
inline double ks_distance_to_normal(std::vector<double> a, double sd) {
  std::sort(a.begin(), a.end());
  double d = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-a[i] / (sd * std::sqrt(2.0)));
    d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - cdf)});
  }
  return d;
}

/// Asymptotic Kolmogorov tail probability P(D_n > d).
inline double kolmogorov_p_value(double d, double n_effective) {
  const double root = std::sqrt(n_effective);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double sample_variance(const std::vector<double>& v) {
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return ss / static_cast<double>(v.size() - 1);
}

/// Variance of sum_x w(x) * phat(x) for one multinomial observation:
/// sum w^2 p - (sum w p)^2. With w = |[x]| on each class's unique argmin this
/// is the limiting variance of the plug-in weight, derived independently of
/// the class-sum formula.
inline double multinomial_linear_variance(const std::vector<double>& w, const std::vector<double>& p) {
  double first = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    first += w[i] * p[i];
    second += w[i] * w[i] * p[i];
  }
  return second - first * first;
}

}  // namespace latentw::testing

#endif  // LATENTW_TEST_SUPPORT_HPP
