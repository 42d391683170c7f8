#ifndef LATENTW_INFERENCE_HPP
#define LATENTW_INFERENCE_HPP

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "latentw/rng.hpp"
#include "latentw/sample_space.hpp"

namespace latentw {

enum class Regularity { unique_argmin, tied_argmin };

std::string_view to_string(Regularity r) noexcept;

struct BootstrapOptions {
  std::size_t n_boot = 1000;
  std::uint64_t resample_size = 0;  // 0: full size n
  bool subsample = false;           // n0 = ceil(2 sqrt(n)); overrides resample_size
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
};

struct WeightEstimate {
  double lambda_hat = 0.0;        // plug-in weight of the empirical measure
  double lambda_corrected = 0.0;  // clamp(2 lambda_hat - mean(lambda*), 0, 1)
  double se_boot = 0.0;           // sample sd of the lambda* replicates
  double bias_boot = 0.0;         // mean(lambda*) - lambda_hat
  std::uint64_t n = 0;
  std::size_t n_boot = 0;
  std::uint64_t resample_size = 0;
  std::uint64_t seed = 0;
  Regularity regularity_flag = Regularity::unique_argmin;
};

/// Resample size actually used for `opts` with a sample of size n.
std::uint64_t effective_resample_size(std::uint64_t n, const BootstrapOptions& opts);

/// Multinomial(n, probs) via sequential conditional binomials: cost grows
/// with the number of cells, not with n.
void sample_multinomial(std::uint64_t n, std::span<const double> probs, Xoshiro256& rng,
                        std::span<std::uint64_t> out);

/// Exchangeable weights lambda* of `opts.n_boot` multinomial resamples of the
/// counts; replicate b uses RNG stream b of `opts.seed`.
std::vector<double> bootstrap_weights(const CountVector& c, const BootstrapOptions& opts);

/// sqrt(n0) * (lambda* - lambda_hat) replicates: the full bootstrap when
/// n0 = n, the subsample bootstrap when n0 = ceil(2 sqrt(n)).
std::vector<double> bootstrap_distribution(const CountVector& c, const BootstrapOptions& opts);

/// Plug-in estimate with bootstrap bias correction and standard error.
WeightEstimate estimate(const CountVector& c, const BootstrapOptions& opts = {});

/// Unique vs tied class minima of the empirical measure: a class is tied when
/// at least two members share its (positive) minimal count.
Regularity empirical_regularity(const CountVector& c);

/// Covariance of the Gaussian limit restricted to the argmin outcomes.
struct LimitLawSpec {
  std::vector<std::size_t> coordinates;          // retained outcomes, grouped by class
  std::vector<std::size_t> class_of_coordinate;  // orbit id per retained outcome
  std::vector<double> class_weight;              // |z| per orbit id
  std::vector<double> class_min;                 // m_z per orbit id
  Eigen::MatrixXd covariance;                    // m(1-m) diagonal, -m_x m_y elsewhere
};

LimitLawSpec limit_law_spec(const Distribution<double>& p);

/// V(Z) = sum |z|^2 m_z(1-m_z) - sum_{z != z'} |z||z'| m_z m_z'. Classes whose
/// minimum is zero contribute a degenerate coordinate and may be tied; any
/// other tie throws TiedArgmin.
double asymptotic_variance(const Distribution<double>& p);

/// Draws of sum_z |z| min_{x in C_z} Z_x with Z ~ N(0, covariance).
std::vector<double> limit_law_sample(const Distribution<double>& p, std::size_t n_draws,
                                     std::uint64_t seed = kDefaultSeed, unsigned threads = 0);

struct SizeHeuristicRow {
  std::uint64_t n = 0;
  double mean_bias = 0.0;  // mean(lambda_hat) - 1
  double sd = 0.0;
};

/// Worst-case test source: uniform on the non-constant outcomes.
Distribution<double> worst_case_source(const SampleSpace& space);

/// Simulated bias and sd of the plug-in estimator under the worst-case source
/// for each candidate sample size.
std::vector<SizeHeuristicRow> sample_size_heuristic(const SampleSpace& space, std::span<const std::uint64_t> sizes,
                                                    std::size_t reps, std::uint64_t seed = kDefaultSeed,
                                                    unsigned threads = 0);

/// Plug-in weights of `reps` samples of size n drawn from p; rep r uses RNG
/// stream r of `seed`.
std::vector<double> simulate_plugin(const Distribution<double>& p, std::uint64_t n, std::size_t reps,
                                    std::uint64_t seed = kDefaultSeed, unsigned threads = 0);

double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);

}  // namespace latentw

#endif  // LATENTW_INFERENCE_HPP
