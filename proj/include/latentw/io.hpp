#ifndef LATENTW_IO_HPP
#define LATENTW_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "latentw/sample_space.hpp"

namespace latentw::io {

/// Counts TSV: header with `outcome` and `count` columns, one row per listed
/// outcome (e.g. `011\t12`). Unlisted outcomes count 0; duplicate outcomes
/// are rejected. The alphabet size is `k` if given, otherwise the largest
/// symbol seen plus one (at least 2).
CountVector read_counts(std::istream& in, std::optional<int> k = std::nullopt);
CountVector read_counts_file(const std::string& path, std::optional<int> k = std::nullopt);

void write_counts(std::ostream& out, const CountVector& counts);

/// Distribution TSV with `outcome` and `probability` columns on a known space.
Distribution<double> read_distribution(std::istream& in, const SampleSpace& space);
Distribution<double> read_distribution_file(const std::string& path, const SampleSpace& space);

/// Lumping map TSV: `from` and `to` symbol columns, one row per source symbol.
std::vector<int> read_lumping_map(std::istream& in, int k);
std::vector<int> read_lumping_map_file(const std::string& path, int k);

/// Comma-separated list of positive integers, e.g. "1,2".
std::vector<std::uint64_t> parse_integer_list(const std::string& text);

}  // namespace latentw::io

#endif  // LATENTW_IO_HPP
