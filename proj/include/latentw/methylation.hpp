#ifndef LATENTW_METHYLATION_HPP
#define LATENTW_METHYLATION_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latentw/inference.hpp"
#include "latentw/sample_space.hpp"

namespace latentw::meth {

/// One epiread line: a read's first CpG ordinal and its per-CpG calls
/// (C methylated, T unmethylated, N ambiguous).
struct EpireadRecord {
  std::string chrom;
  std::uint64_t start_cpg = 0;
  std::string states;
};

/// Parses one whitespace-separated "chrom start states" line.
EpireadRecord parse_epiread_line(std::string_view line, std::size_t line_number);

/// Streams records from `in`, skipping blank lines. Throws ParseError with the
/// offending line number.
void for_each_epiread(std::istream& in, const std::function<void(const EpireadRecord&)>& fn);

std::vector<EpireadRecord> parse_epireads(std::istream& in);

struct TripletKey {
  std::string chrom;
  std::uint64_t index = 0;  // ordinal of the first CpG

  friend auto operator<=>(const TripletKey&, const TripletKey&) = default;
};

/// Configuration counts 000..111, first CpG most significant, 1 = methylated.
using TripletCounts = std::array<std::uint64_t, 8>;

/// Binary triplet sample space {0,1}^3.
const SampleSpace& triplet_space();

/// Accumulates 8-bin counters for every window of three consecutive CpG
/// ordinals fully covered by a read without an N in the window.
class TripletCounter {
 public:
  void add(const EpireadRecord& record);
  void add_stream(std::istream& in);

  std::uint64_t windows_counted() const noexcept { return windows_; }
  const std::map<TripletKey, TripletCounts>& counts() const noexcept { return counts_; }

  /// Triplets with at least `coverage_threshold` reads, sorted by key.
  std::vector<std::pair<TripletKey, CountVector>> well_covered(std::uint64_t coverage_threshold = 100) const;

 private:
  std::map<TripletKey, TripletCounts> counts_;
  std::uint64_t windows_ = 0;
};

std::vector<std::pair<TripletKey, CountVector>> extract_triplets(const std::vector<EpireadRecord>& records,
                                                                 std::uint64_t coverage_threshold = 100);

struct TripletRecord {
  std::string chrom;                       // 1
  std::uint64_t index = 0;                 // 2
  double tv_distance = 0.0;                // 3
  double lambda_corrected = 0.0;           // 4
  double sd = 0.0;                         // 5
  TripletCounts counts{};                  // 6-13
  std::array<double, 8> component{};       // 14-21, all zero when lambda_hat = 0
  double lambda_hat = 0.0;                 // not part of the 21 columns
  std::optional<std::string> error;        // row-level failure
};

struct ReportOptions {
  std::size_t n_boot = 1000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
};

/// Seed of the bootstrap stream used for one triplet; depends only on the run
/// seed and the triplet's key.
std::uint64_t triplet_seed(std::uint64_t run_seed, const TripletKey& key);

/// Estimation for a single triplet.
TripletRecord triplet_row(const TripletKey& key, const CountVector& counts, const ReportOptions& opts);

/// Per-triplet decomposition, TV projection and bootstrap estimate, in key
/// order. Failures are recorded per row.
std::vector<TripletRecord> triplet_report(const std::vector<std::pair<TripletKey, CountVector>>& triplets,
                                          const ReportOptions& opts = {});

/// Header line naming the 21 report columns.
std::string report_header();
void write_report(std::ostream& out, const std::vector<TripletRecord>& rows);
std::string format_row(const TripletRecord& row);

/// Reads rows written by write_report (comment lines starting with '#' and
/// the header are skipped).
std::vector<TripletRecord> read_report(std::istream& in);

struct CorrelationReport {
  std::string group;
  double pearson_r = 0.0;
  double pearson_p = 1.0;
  double spearman_rho = 0.0;
  double spearman_p = 1.0;
  std::size_t count = 0;
};

/// Pearson r with the two-sided Wald t test and Spearman rho with the
/// analogous asymptotic test, per group key (groups reported in key order).
std::vector<CorrelationReport> correlate(std::span<const double> weights, std::span<const double> covariate,
                                         std::span<const std::string> groups);

/// Two-sided p-value of t = r sqrt((m-2)/(1-r^2)) on m-2 degrees of freedom.
double correlation_p_value(double r, std::size_t m);

/// Average ranks (1-based), ties sharing the mean rank.
std::vector<double> ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

/// Covariate TSV: chrom, index, value per line.
std::map<TripletKey, double> read_covariates(std::istream& in);

}  // namespace latentw::meth

#endif  // LATENTW_METHYLATION_HPP
