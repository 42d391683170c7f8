#include "latentw/general_weight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/QR>

#include "latentw/parallel.hpp"
#include "latentw/rng.hpp"

namespace latentw {

namespace {

using Direction = Eigen::VectorXd;

/// Stick-breaking map from [0,1]^(k-1) onto the probability simplex.
void stick_break(std::span<const double> theta, std::span<double> mu) {
  double remaining = 1.0;
  for (std::size_t a = 0; a < theta.size(); ++a) {
    mu[a] = remaining * theta[a];
    remaining *= 1.0 - theta[a];
  }
  mu[theta.size()] = remaining;
}

std::vector<Direction> axis_directions(int dim, bool diagonals) {
  std::vector<Direction> dirs;
  for (int i = 0; i < dim; ++i) {
    for (double sign : {1.0, -1.0}) {
      Direction v = Direction::Zero(dim);
      v[i] = sign;
      dirs.push_back(v);
    }
  }
  if (diagonals) {
    for (int i = 0; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) {
        for (double si : {1.0, -1.0}) {
          for (double sj : {1.0, -1.0}) {
            Direction v = Direction::Zero(dim);
            v[i] = si * M_SQRT1_2;
            v[j] = sj * M_SQRT1_2;
            dirs.push_back(v);
          }
        }
      }
    }
  }
  return dirs;
}

std::vector<Direction> rotated_directions(int dim, Xoshiro256& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  std::vector<Direction> dirs;
  for (int j = 0; j < dim; ++j) {
    dirs.push_back(basis.col(j));
    dirs.push_back(-basis.col(j));
  }
  return dirs;
}

class Refiner {
 public:
  Refiner(const Distribution<double>& p, const ProductClassSpec& spec, const OptimizerOptions& opts)
      : p_(p), spec_(spec), opts_(opts), dim_(parameter_count(spec, p.space())) {}

  double value(std::span<const double> theta) const {
    return supmin_objective(p_, model_distribution(spec_, p_.space(), theta));
  }

  /// Opportunistic compass search; returns false if the iteration cap hit.
  bool poll(std::vector<double>& x, double& fx, const std::vector<Direction>& dirs, double step,
            int& iterations) const {
    std::vector<double> y(x.size());
    while (step >= opts_.min_step) {
      if (++iterations > opts_.max_iterations) return false;
      bool improved = false;
      for (const auto& dir : dirs) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          y[i] = std::clamp(x[i] + step * dir[static_cast<Eigen::Index>(i)], 0.0, 1.0);
        }
        if (y == x) continue;
        const double fy = value(y);
        if (fy > fx) {
          x = y;
          fx = fy;
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    return true;
  }

  MultistartEntry refine(std::vector<double> start, double start_value, std::uint64_t stream,
                         bool& converged) const {
    MultistartEntry entry{start, start_value, {}, 0.0};
    std::vector<double> x = std::move(start);
    double fx = start_value;
    const double spacing = opts_.initial_step > 0.0 ? opts_.initial_step : 1.0 / std::max(2, opts_.grid_points - 1);
    int iterations = 0;
    converged = poll(x, fx, axis_directions(dim_, dim_ <= 6), spacing, iterations);

    // Axis-aligned patterns can stall on ridges of the min-of-ratios surface;
    // re-poll along random orthonormal frames until none of them helps.
    Xoshiro256 rng(stream_seed(opts_.seed, stream));
    int quiet_rounds = 0;
    while (converged && quiet_rounds < 4) {
      const double before = fx;
      converged = poll(x, fx, rotated_directions(dim_, rng), std::max(1e-3, opts_.min_step), iterations);
      quiet_rounds = fx > before ? 0 : quiet_rounds + 1;
    }
    entry.end = std::move(x);
    entry.value = fx;
    return entry;
  }

 private:
  const Distribution<double>& p_;
  const ProductClassSpec& spec_;
  const OptimizerOptions& opts_;
  int dim_;
};

}  // namespace

int parameter_count(const ProductClassSpec& spec, const SampleSpace& space) {
  return std::visit(
      [&](const auto& variant) -> int {
        using T = std::decay_t<decltype(variant)>;
        if constexpr (std::is_same_v<T, product_class::Singleton>) {
          return 0;
        } else if constexpr (std::is_same_v<T, product_class::Iid>) {
          return space.k() - 1;
        } else {
          return space.d() * (space.k() - 1);
        }
      },
      spec);
}

Distribution<double> model_distribution(const ProductClassSpec& spec, const SampleSpace& space,
                                        std::span<const double> theta) {
  if (const auto* singleton = std::get_if<product_class::Singleton>(&spec)) return singleton->q0;
  const auto dim = static_cast<std::size_t>(parameter_count(spec, space));
  if (theta.size() != dim) throw Error("InvalidParameters", "parameter vector has the wrong length");

  const auto k = static_cast<std::size_t>(space.k());
  const auto d = static_cast<std::size_t>(space.d());
  const bool shared = std::holds_alternative<product_class::Iid>(spec);
  std::vector<double> mu(d * k);
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t block = shared ? 0 : i;
    stick_break(theta.subspan(block * (k - 1), k - 1), std::span(mu).subspan(i * k, k));
  }
  VectorXd q(static_cast<Eigen::Index>(space.size()));
  for (std::size_t x = 0; x < space.size(); ++x) {
    double prob = 1.0;
    for (std::size_t i = 0; i < d; ++i) prob *= mu[i * k + static_cast<std::size_t>(space.symbol(x, static_cast<int>(i)))];
    q[static_cast<Eigen::Index>(x)] = prob;
  }
  return Distribution<double>(space, std::move(q), unchecked);
}

double supmin_objective(const Distribution<double>& p, const Distribution<double>& q) {
  return singleton_weight(p, q);
}

SupMinResult class_weight(const Distribution<double>& p, const ProductClassSpec& spec, const OptimizerOptions& opts) {
  const SampleSpace& space = p.space();
  if (const auto* singleton = std::get_if<product_class::Singleton>(&spec)) {
    if (!(singleton->q0.space() == space)) throw Error("SpaceMismatch", "q0 and p live on different sample spaces");
    const double lambda = std::min(1.0, singleton_weight(p, singleton->q0));
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < space.size(); ++x) margin = std::min(margin, p(x) - lambda * singleton->q0(x));
    return SupMinResult{lambda, singleton->q0, margin, {}, true, {}};
  }

  const int dim = parameter_count(spec, space);
  if (dim > opts.max_parameters) {
    throw Error("DimensionTooLarge", "model class has " + std::to_string(dim) + " parameters, limit is " +
                                         std::to_string(opts.max_parameters));
  }
  if (opts.grid_points < 2) throw Error("InvalidOptions", "grid needs at least two points per parameter");

  // Candidate starts: the full grid when affordable, otherwise seeded
  // uniform draws from the parameter cube.
  const auto per_axis = static_cast<std::size_t>(opts.grid_points);
  double total = std::pow(static_cast<double>(per_axis), dim);
  const bool full_grid = total <= static_cast<double>(opts.max_grid_evaluations);
  const std::size_t candidates = full_grid ? static_cast<std::size_t>(total) : opts.max_grid_evaluations;

  Refiner refiner(p, spec, opts);
  auto candidate = [&](std::size_t c) {
    std::vector<double> theta(static_cast<std::size_t>(dim));
    if (full_grid) {
      for (int i = dim - 1; i >= 0; --i) {
        theta[static_cast<std::size_t>(i)] = static_cast<double>(c % per_axis) / static_cast<double>(per_axis - 1);
        c /= per_axis;
      }
    } else {
      Xoshiro256 rng(stream_seed(opts.seed, c));
      for (auto& t : theta) t = rng.uniform();
    }
    return theta;
  };

  std::vector<double> values(candidates);
  parallel_for(candidates, opts.threads, [&](std::size_t c) { values[c] = refiner.value(candidate(c)); });

  // Best values first; among equal values the earliest (lexicographically
  // smallest) grid point wins.
  std::vector<std::size_t> order(candidates);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opts.starts)), candidates);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] != values[b] ? values[a] > values[b] : a < b; });

  std::vector<MultistartEntry> log(keep);
  std::vector<char> converged(keep, 1);
  parallel_for(keep, opts.threads, [&](std::size_t s) {
    bool ok = true;
    log[s] = refiner.refine(candidate(order[s]), values[order[s]], s, ok);
    converged[s] = ok ? 1 : 0;
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < keep; ++s) {
    if (log[s].value > log[best].value ||
        (log[s].value == log[best].value && log[s].end < log[best].end)) {
      best = s;
    }
  }

  SupMinResult result{std::min(1.0, log[best].value), model_distribution(spec, space, log[best].end), 0.0,
                      std::move(log), std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; }),
                      {}};
  result.parameters = result.multistart_log[best].end;
  result.certificate_margin = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < space.size(); ++x) {
    result.certificate_margin = std::min(result.certificate_margin, p(x) - result.lambda * result.argmax_q(x));
  }
  return result;
}

}  // namespace latentw
