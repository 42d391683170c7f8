#include "latentw/methylation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "latentw/exchangeable.hpp"
#include "latentw/parallel.hpp"

namespace latentw::meth {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

bool parse_u64(std::string_view text, std::uint64_t& value) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_double(std::string_view text, double& value) {
  // std::from_chars for double is missing from older libstdc++.
  std::string buffer(text);
  char* end = nullptr;
  value = std::strtod(buffer.c_str(), &end);
  return !buffer.empty() && end == buffer.c_str() + buffer.size();
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string format_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", v);
  return buffer;
}

}  // namespace

EpireadRecord parse_epiread_line(std::string_view line, std::size_t line_number) {
  const auto fields = split_ws(line);
  if (fields.size() != 3) {
    throw ParseError(line_number, "expected 3 fields (chrom, start_cpg, states), found " + std::to_string(fields.size()));
  }
  EpireadRecord record;
  record.chrom = std::string(fields[0]);
  if (!parse_u64(fields[1], record.start_cpg)) {
    throw ParseError(line_number, "CpG index '" + std::string(fields[1]) + "' is not a non-negative integer");
  }
  record.states = std::string(fields[2]);
  for (char c : record.states) {
    if (c != 'C' && c != 'T' && c != 'N') {
      throw ParseError(line_number, std::string("methylation state '") + c + "' is not one of C, T, N");
    }
  }
  return record;
}

void for_each_epiread(std::istream& in, const std::function<void(const EpireadRecord&)>& fn) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(std::move(line));
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(parse_epiread_line(line, line_number));
  }
  if (in.bad()) throw io_error("read failure in epiread stream");
}

std::vector<EpireadRecord> parse_epireads(std::istream& in) {
  std::vector<EpireadRecord> out;
  for_each_epiread(in, [&](const EpireadRecord& r) { out.push_back(r); });
  return out;
}

const SampleSpace& triplet_space() {
  static const SampleSpace space(2, 3);
  return space;
}

void TripletCounter::add(const EpireadRecord& record) {
  const std::string& s = record.states;
  if (s.size() < 3) return;
  for (std::size_t j = 0; j + 2 < s.size(); ++j) {
    if (s[j] == 'N' || s[j + 1] == 'N' || s[j + 2] == 'N') continue;
    const std::size_t config = (s[j] == 'C' ? 4u : 0u) | (s[j + 1] == 'C' ? 2u : 0u) | (s[j + 2] == 'C' ? 1u : 0u);
    ++counts_[TripletKey{record.chrom, record.start_cpg + j}][config];
    ++windows_;
  }
}

void TripletCounter::add_stream(std::istream& in) {
  for_each_epiread(in, [this](const EpireadRecord& r) { add(r); });
}

std::vector<std::pair<TripletKey, CountVector>> TripletCounter::well_covered(std::uint64_t coverage_threshold) const {
  std::vector<std::pair<TripletKey, CountVector>> out;
  for (const auto& [key, bins] : counts_) {
    const std::uint64_t total = std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
    if (total == 0 || total < coverage_threshold) continue;
    out.emplace_back(key, CountVector(triplet_space(), std::vector<std::uint64_t>(bins.begin(), bins.end())));
  }
  return out;
}

std::vector<std::pair<TripletKey, CountVector>> extract_triplets(const std::vector<EpireadRecord>& records,
                                                                 std::uint64_t coverage_threshold) {
  TripletCounter counter;
  for (const auto& r : records) counter.add(r);
  return counter.well_covered(coverage_threshold);
}

std::uint64_t triplet_seed(std::uint64_t run_seed, const TripletKey& key) {
  return stream_seed(run_seed, hash_string(key.chrom) ^ (key.index * 0x9e3779b97f4a7c15ULL));
}

TripletRecord triplet_row(const TripletKey& key, const CountVector& counts, const ReportOptions& opts) {
  TripletRecord row;
  row.chrom = key.chrom;
  row.index = key.index;
  for (std::size_t x = 0; x < 8; ++x) row.counts[x] = counts[x];
  try {
    const auto p = empirical_distribution<double>(counts);
    const auto dec = decompose(p);
    row.tv_distance = tv_distance_to_exchangeable(p).distance;
    BootstrapOptions boot;
    boot.n_boot = opts.n_boot;
    boot.seed = triplet_seed(opts.seed, key);
    boot.threads = 1;
    const WeightEstimate est = estimate(counts, boot);
    row.lambda_hat = est.lambda_hat;
    row.lambda_corrected = est.lambda_corrected;
    row.sd = est.se_boot;
    if (dec.q) {
      for (std::size_t x = 0; x < 8; ++x) row.component[x] = (*dec.q)(x);
    }
  } catch (const Error& e) {
    row.error = e.code() + ": " + e.what();
  }
  return row;
}

std::vector<TripletRecord> triplet_report(const std::vector<std::pair<TripletKey, CountVector>>& triplets,
                                          const ReportOptions& opts) {
  std::vector<TripletRecord> rows(triplets.size());
  parallel_for(triplets.size(), opts.threads,
               [&](std::size_t i) { rows[i] = triplet_row(triplets[i].first, triplets[i].second, opts); });
  std::sort(rows.begin(), rows.end(), [](const TripletRecord& a, const TripletRecord& b) {
    return std::tie(a.chrom, a.index) < std::tie(b.chrom, b.index);
  });
  return rows;
}

std::string report_header() {
  std::string header = "chrom\tindex\ttv_distance\tlambda_corrected\tlambda_sd";
  for (const char* cfg : {"000", "001", "010", "011", "100", "101", "110", "111"}) header += std::string("\tn_") + cfg;
  for (const char* cfg : {"000", "001", "010", "011", "100", "101", "110", "111"}) header += std::string("\tq_") + cfg;
  return header;
}

std::string format_row(const TripletRecord& row) {
  std::string line = row.chrom + "\t" + std::to_string(row.index);
  auto number = [&](double v) { line += "\t" + (row.error ? std::string("NA") : format_number(v)); };
  number(row.tv_distance);
  number(row.lambda_corrected);
  number(row.sd);
  for (auto c : row.counts) line += "\t" + std::to_string(c);
  for (double q : row.component) number(q);
  return line;
}

void write_report(std::ostream& out, const std::vector<TripletRecord>& rows) {
  out << report_header() << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

std::vector<TripletRecord> read_report(std::istream& in) {
  std::vector<TripletRecord> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(std::move(line));
    if (line.empty() || line.front() == '#' || line.rfind("chrom\t", 0) == 0) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 21) {
      throw ParseError(line_number, "report rows need 21 columns, found " + std::to_string(fields.size()));
    }
    TripletRecord row;
    row.chrom = std::string(fields[0]);
    if (!parse_u64(fields[1], row.index)) throw ParseError(line_number, "bad triplet index");
    auto number = [&](std::size_t col, double& target) {
      if (fields[col] == "NA") {
        row.error = "NA";
        return;
      }
      if (!parse_double(fields[col], target)) throw ParseError(line_number, "column " + std::to_string(col + 1) + " is not numeric");
    };
    number(2, row.tv_distance);
    number(3, row.lambda_corrected);
    number(4, row.sd);
    for (std::size_t x = 0; x < 8; ++x) {
      if (!parse_u64(fields[5 + x], row.counts[x])) throw ParseError(line_number, "count column " + std::to_string(6 + x) + " is not an integer");
    }
    for (std::size_t x = 0; x < 8; ++x) number(13 + x, row.component[x]);
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw io_error("read failure in report stream");
  return rows;
}

std::map<TripletKey, double> read_covariates(std::istream& in) {
  std::map<TripletKey, double> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    line = strip_cr(std::move(line));
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_ws(line);
    if (fields.size() != 3) throw ParseError(line_number, "covariate rows need 3 fields (chrom, index, value)");
    TripletKey key{std::string(fields[0]), 0};
    double value = 0.0;
    if (!parse_u64(fields[1], key.index)) {
      if (line_number == 1) continue;  // header
      throw ParseError(line_number, "covariate index is not a non-negative integer");
    }
    if (!parse_double(fields[2], value)) throw ParseError(line_number, "covariate value is not numeric");
    out[key] = value;
  }
  return out;
}

std::vector<double> ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = rank;
    i = j + 1;
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error("DegenerateGroup", "correlation of a constant vector is undefined");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double correlation_p_value(double r, std::size_t m) {
  if (m < 3) throw Error("DegenerateGroup", "correlation test needs at least 3 observations");
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(m - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

std::vector<CorrelationReport> correlate(std::span<const double> weights, std::span<const double> covariate,
                                         std::span<const std::string> groups) {
  if (weights.size() != covariate.size() || weights.size() != groups.size()) {
    throw Error("InvalidInput", "weights, covariate and groups must have equal lengths");
  }
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);

  std::vector<CorrelationReport> out;
  for (const auto& [group, idx] : members) {
    if (idx.size() < 3) throw Error("DegenerateGroup", "group '" + group + "' has fewer than 3 observations");
    std::vector<double> w;
    std::vector<double> c;
    for (std::size_t i : idx) {
      w.push_back(weights[i]);
      c.push_back(covariate[i]);
    }
    CorrelationReport report;
    report.group = group;
    report.count = idx.size();
    try {
      report.pearson_r = pearson(w, c);
      report.spearman_rho = pearson(ranks(w), ranks(c));
    } catch (const Error& e) {
      throw Error(e.code(), "group '" + group + "': " + e.what());
    }
    report.pearson_p = correlation_p_value(report.pearson_r, report.count);
    report.spearman_p = correlation_p_value(report.spearman_rho, report.count);
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace latentw::meth
