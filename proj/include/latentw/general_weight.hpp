#ifndef LATENTW_GENERAL_WEIGHT_HPP
#define LATENTW_GENERAL_WEIGHT_HPP

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "latentw/sample_space.hpp"

namespace latentw {

/// min_w p(w) / q0(w) with every division by zero (0/0 included) read as
/// +infinity; the largest lambda with p >= lambda * q0.
template <class Scalar>
Scalar singleton_weight(const Distribution<Scalar>& p, const Distribution<Scalar>& q0) {
  if (!(p.space() == q0.space())) throw Error("SpaceMismatch", "p and q0 live on different sample spaces");
  bool finite = false;
  Scalar best(0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (!(q0(x) > Scalar(0))) continue;
    const Scalar ratio = p(x) / q0(x);
    if (!finite || ratio < best) best = ratio;
    finite = true;
  }
  if (!finite) {
    if constexpr (std::numeric_limits<Scalar>::has_infinity) return std::numeric_limits<Scalar>::infinity();
    throw Error("InvalidDistribution", "q0 has no positive mass");
  }
  return best;
}

namespace product_class {
struct Singleton {
  Distribution<double> q0;
};
/// Common marginal on every coordinate: mu (x) ... (x) mu.
struct Iid {};
/// Independent, possibly different marginals mu_1 (x) ... (x) mu_d.
struct Product {};
}  // namespace product_class

using ProductClassSpec = std::variant<product_class::Singleton, product_class::Iid, product_class::Product>;

struct OptimizerOptions {
  int grid_points = 33;          // per parameter
  int starts = 8;                // best grid points refined locally
  double tolerance = 1e-4;
  double initial_step = 0.0;     // 0: one grid spacing
  double min_step = 1e-7;
  int max_parameters = 16;
  std::size_t max_grid_evaluations = std::size_t{1} << 20;  // larger grids fall back to seeded random starts
  int max_iterations = 200000;
  std::uint64_t seed = 0x5eedULL;
  unsigned threads = 0;
};

struct MultistartEntry {
  std::vector<double> start;
  double start_value = 0.0;
  std::vector<double> end;
  double value = 0.0;
};

struct SupMinResult {
  double lambda = 0.0;
  Distribution<double> argmax_q;
  double certificate_margin = 0.0;  // min_w p(w) - lambda * q(w)
  std::vector<MultistartEntry> multistart_log;
  bool converged = true;
  std::vector<double> parameters;
};

/// Number of free parameters of the model class on `space`.
int parameter_count(const ProductClassSpec& spec, const SampleSpace& space);

/// Model distribution for parameters in the unit cube; each block of k-1
/// coordinates is mapped onto a marginal by stick breaking.
Distribution<double> model_distribution(const ProductClassSpec& spec, const SampleSpace& space,
                                        std::span<const double> theta);

/// g(Q) = min_w p(w)/Q(w) with the +infinity convention for Q(w) = 0.
double supmin_objective(const Distribution<double>& p, const Distribution<double>& q);

/// Latent weight sup_Q min_w p(w)/Q(w) of a model class: coarse grid, then
/// compass search from the best grid points. Any one maximizer is returned.
SupMinResult class_weight(const Distribution<double>& p, const ProductClassSpec& spec,
                          const OptimizerOptions& opts = {});

}  // namespace latentw

#endif  // LATENTW_GENERAL_WEIGHT_HPP
