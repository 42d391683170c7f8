#include "latentw/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "latentw/exchangeable.hpp"
#include "latentw/parallel.hpp"

namespace latentw {

namespace {

constexpr std::size_t kDrawsPerStream = 4096;

}  // namespace

std::string_view to_string(Regularity r) noexcept {
  return r == Regularity::unique_argmin ? "unique_argmin" : "tied_argmin";
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::uint64_t effective_resample_size(std::uint64_t n, const BootstrapOptions& opts) {
  if (opts.subsample) return static_cast<std::uint64_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(n))));
  return opts.resample_size == 0 ? n : opts.resample_size;
}

void sample_multinomial(std::uint64_t n, std::span<const double> probs, Xoshiro256& rng,
                        std::span<std::uint64_t> out) {
  std::uint64_t left = n;
  double mass = 1.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (left == 0 || i + 1 == probs.size()) {
      out[i] = i + 1 == probs.size() ? left : 0;
      left -= out[i];
      continue;
    }
    const double p = mass > 0.0 ? std::clamp(probs[i] / mass, 0.0, 1.0) : 0.0;
    std::uint64_t draw = 0;
    if (p >= 1.0) {
      draw = left;
    } else if (p > 0.0) {
      std::binomial_distribution<long long> binom(static_cast<long long>(left), p);
      draw = static_cast<std::uint64_t>(binom(rng));
    }
    out[i] = draw;
    left -= draw;
    mass -= probs[i];
  }
}

std::vector<double> bootstrap_weights(const CountVector& c, const BootstrapOptions& opts) {
  if (c.n() == 0) throw Error("EmptySample", "bootstrap of an empty sample");
  const std::uint64_t n0 = effective_resample_size(c.n(), opts);
  if (n0 == 0) throw Error("InvalidOptions", "resample size must be positive");
  const OrbitIndex& index = orbits(c.space());
  std::vector<double> probs(c.space().size());
  for (std::size_t x = 0; x < probs.size(); ++x) probs[x] = static_cast<double>(c[x]) / static_cast<double>(c.n());

  std::vector<double> out(opts.n_boot);
  parallel_for(opts.n_boot, opts.threads, [&](std::size_t b) {
    Xoshiro256 rng(stream_seed(opts.seed, b));
    std::vector<std::uint64_t> draw(probs.size());
    sample_multinomial(n0, probs, rng, draw);
    out[b] = exchangeable_weight(index, draw, n0);
  });
  return out;
}

std::vector<double> bootstrap_distribution(const CountVector& c, const BootstrapOptions& opts) {
  const double lambda_hat = exchangeable_weight(orbits(c.space()), c.counts(), c.n());
  const double scale = std::sqrt(static_cast<double>(effective_resample_size(c.n(), opts)));
  std::vector<double> out = bootstrap_weights(c, opts);
  for (double& v : out) v = scale * (v - lambda_hat);
  return out;
}

Regularity empirical_regularity(const CountVector& c) {
  // Counts are integers, so the half-count tolerance on probabilities
  // reduces to exact equality of counts.
  const OrbitIndex& index = orbits(c.space());
  for (const auto& cls : index.classes()) {
    std::uint64_t m = c[cls.members.front()];
    for (std::size_t x : cls.members) m = std::min(m, c[x]);
    if (m == 0) continue;
    const auto ties = std::count_if(cls.members.begin(), cls.members.end(), [&](std::size_t x) { return c[x] == m; });
    if (ties > 1) return Regularity::tied_argmin;
  }
  return Regularity::unique_argmin;
}

WeightEstimate estimate(const CountVector& c, const BootstrapOptions& opts) {
  if (c.n() == 0) throw Error("EmptySample", "estimate from an empty sample");
  if (opts.n_boot < 2) throw Error("InvalidOptions", "at least two bootstrap resamples are required");
  WeightEstimate est;
  est.n = c.n();
  est.n_boot = opts.n_boot;
  est.resample_size = effective_resample_size(c.n(), opts);
  est.seed = opts.seed;
  est.lambda_hat = exchangeable_weight(orbits(c.space()), c.counts(), c.n());
  const std::vector<double> replicates = bootstrap_weights(c, opts);
  const double boot_mean = mean(replicates);
  est.bias_boot = boot_mean - est.lambda_hat;
  est.lambda_corrected = std::clamp(2.0 * est.lambda_hat - boot_mean, 0.0, 1.0);
  est.se_boot = sample_sd(replicates);
  est.regularity_flag = empirical_regularity(c);
  return est;
}

LimitLawSpec limit_law_spec(const Distribution<double>& p) {
  const OrbitIndex& index = orbits(p.space());
  const auto dec = decompose(p);
  LimitLawSpec spec;
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    spec.class_weight.push_back(static_cast<double>(index[z].size));
    spec.class_min.push_back(dec.per_class_min[static_cast<Eigen::Index>(z)]);
    for (std::size_t x : dec.argmin_sets[z]) {
      spec.coordinates.push_back(x);
      spec.class_of_coordinate.push_back(z);
    }
  }
  const auto dim = static_cast<Eigen::Index>(spec.coordinates.size());
  spec.covariance.resize(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    const double ma = spec.class_min[spec.class_of_coordinate[static_cast<std::size_t>(a)]];
    for (Eigen::Index b = 0; b < dim; ++b) {
      const double mb = spec.class_min[spec.class_of_coordinate[static_cast<std::size_t>(b)]];
      spec.covariance(a, b) = a == b ? ma * (1.0 - ma) : -ma * mb;
    }
  }
  return spec;
}

double asymptotic_variance(const Distribution<double>& p) {
  const OrbitIndex& index = orbits(p.space());
  const auto dec = decompose(p);
  double diagonal = 0.0;
  double weighted_mass = 0.0;
  double cross_square = 0.0;
  for (std::size_t z = 0; z < index.num_classes(); ++z) {
    const double m = dec.per_class_min[static_cast<Eigen::Index>(z)];
    if (dec.argmin_sets[z].size() > 1 && m > 0.0) {
      throw Error("TiedArgmin", "class " + p.space().label(index[z].members.front()) +
                                    " attains its minimum more than once; use limit_law_sample");
    }
    const double size = static_cast<double>(index[z].size);
    diagonal += size * size * m * (1.0 - m);
    weighted_mass += size * m;
    cross_square += size * size * m * m;
  }
  // sum over ordered pairs z != z' of |z||z'| m_z m_z' = (sum |z| m_z)^2 - sum |z|^2 m_z^2
  return diagonal - (weighted_mass * weighted_mass - cross_square);
}

std::vector<double> limit_law_sample(const Distribution<double>& p, std::size_t n_draws, std::uint64_t seed,
                                     unsigned threads) {
  if (n_draws == 0) return {};
  const LimitLawSpec spec = limit_law_spec(p);
  const auto dim = spec.covariance.rows();
  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(dim, dim);
  if (dim > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.covariance);
    const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor = eig.eigenvectors() * roots.asDiagonal();
  }

  std::vector<double> out(n_draws);
  const std::size_t chunks = (n_draws + kDrawsPerStream - 1) / kDrawsPerStream;
  const std::size_t n_classes = spec.class_weight.size();
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    Xoshiro256 rng(stream_seed(seed, chunk));
    std::normal_distribution<double> normal;
    Eigen::VectorXd g(dim);
    std::vector<double> minima(n_classes);
    std::vector<char> seen(n_classes);
    const std::size_t end = std::min(n_draws, (chunk + 1) * kDrawsPerStream);
    for (std::size_t i = chunk * kDrawsPerStream; i < end; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) g[j] = normal(rng);
      const Eigen::VectorXd z = factor * g;
      std::fill(seen.begin(), seen.end(), 0);
      for (Eigen::Index j = 0; j < dim; ++j) {
        const std::size_t cls = spec.class_of_coordinate[static_cast<std::size_t>(j)];
        minima[cls] = seen[cls] ? std::min(minima[cls], z[j]) : z[j];
        seen[cls] = 1;
      }
      double value = 0.0;
      for (std::size_t cls = 0; cls < n_classes; ++cls) {
        if (seen[cls]) value += spec.class_weight[cls] * minima[cls];
      }
      out[i] = value;
    }
  });
  return out;
}

Distribution<double> worst_case_source(const SampleSpace& space) {
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < space.size(); ++x) {
    bool constant = true;
    for (int i = 1; i < space.d(); ++i) constant = constant && space.symbol(x, i) == space.symbol(x, 0);
    if (!constant) support.push_back(x);
  }
  return Distribution<double>::uniform_on(space, support);
}

std::vector<double> simulate_plugin(const Distribution<double>& p, std::uint64_t n, std::size_t reps,
                                    std::uint64_t seed, unsigned threads) {
  if (n == 0) throw Error("EmptySample", "sample size must be positive");
  const OrbitIndex& index = orbits(p.space());
  const std::vector<double> probs(p.probabilities().data(), p.probabilities().data() + p.probabilities().size());
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    Xoshiro256 rng(stream_seed(seed, r));
    std::vector<std::uint64_t> draw(probs.size());
    sample_multinomial(n, probs, rng, draw);
    out[r] = exchangeable_weight(index, draw, n);
  });
  return out;
}

std::vector<SizeHeuristicRow> sample_size_heuristic(const SampleSpace& space, std::span<const std::uint64_t> sizes,
                                                    std::size_t reps, std::uint64_t seed, unsigned threads) {
  if (reps < 2) throw Error("InvalidOptions", "at least two repetitions are required");
  const Distribution<double> source = worst_case_source(space);
  std::vector<SizeHeuristicRow> rows;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw Error("InvalidOptions", "candidate sample sizes must be positive");
    const auto weights = simulate_plugin(source, sizes[i], reps, stream_seed(seed, i), threads);
    rows.push_back({sizes[i], mean(weights) - 1.0, sample_sd(weights)});
  }
  return rows;
}

}  // namespace latentw
