#include "latentw/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace latentw::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(field);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)
};

Table read_table(std::istream& in, const std::string& what) {
  Table table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      table.rows.emplace_back(line_number, std::move(fields));
    }
  }
  if (in.bad()) throw io_error("read failure in " + what);
  if (table.header.empty()) throw Error("InvalidInput", what + " is empty (a header line is required)");
  return table;
}

std::size_t column(const Table& table, const std::string& name, const std::string& what) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) throw Error("InvalidInput", what + " header lacks a '" + name + "' column");
  return static_cast<std::size_t>(it - table.header.begin());
}

const std::string& field(const std::pair<std::size_t, std::vector<std::string>>& row, std::size_t col) {
  if (col >= row.second.size()) throw ParseError(row.first, "missing column " + std::to_string(col + 1));
  return row.second[col];
}

int symbol_of(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  return -1;
}

std::uint64_t parse_count(const std::string& text, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "count '" + text + "' is not a non-negative integer");
  }
  return value;
}

double parse_probability(const std::string& text, std::size_t line) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } else {
      const std::string num = text.substr(0, slash);
      const std::string den = text.substr(slash + 1);
      std::size_t used_den = 0;
      const double a = std::stod(num, &used);
      const double b = std::stod(den, &used_den);
      if (used == num.size() && used_den == den.size() && b != 0.0) return a / b;
    }
  } catch (const std::exception&) {
  }
  throw ParseError(line, "probability '" + text + "' is not a number or fraction");
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return in;
}

}  // namespace

CountVector read_counts(std::istream& in, std::optional<int> k) {
  const Table table = read_table(in, "counts file");
  const std::size_t outcome_col = column(table, "outcome", "counts file");
  const std::size_t count_col = column(table, "count", "counts file");

  std::size_t d = 0;
  int max_symbol = 0;
  for (const auto& row : table.rows) {
    const std::string& label = field(row, outcome_col);
    if (d == 0) d = label.size();
    if (label.size() != d) throw ParseError(row.first, "outcome '" + label + "' differs in length from earlier rows");
    for (char c : label) {
      const int s = symbol_of(c);
      if (s < 0) throw ParseError(row.first, "outcome '" + label + "' contains an invalid symbol");
      max_symbol = std::max(max_symbol, s);
    }
  }
  if (d == 0) throw Error("InvalidInput", "counts file lists no outcomes");
  const SampleSpace space(k.value_or(std::max(2, max_symbol + 1)), static_cast<int>(d));

  std::vector<std::uint64_t> counts(space.size(), 0);
  std::vector<char> seen(space.size(), 0);
  for (const auto& row : table.rows) {
    std::size_t x = 0;
    try {
      x = space.parse_label(field(row, outcome_col));
    } catch (const Error& e) {
      throw ParseError(row.first, e.what());
    }
    if (seen[x]) throw Error("DuplicateOutcome", "line " + std::to_string(row.first) + ": outcome '" +
                                                     field(row, outcome_col) + "' listed twice");
    seen[x] = 1;
    counts[x] = parse_count(field(row, count_col), row.first);
  }
  return CountVector(space, std::move(counts));
}

CountVector read_counts_file(const std::string& path, std::optional<int> k) {
  auto in = open(path);
  return read_counts(in, k);
}

void write_counts(std::ostream& out, const CountVector& counts) {
  out << "outcome\tcount\n";
  for (std::size_t x = 0; x < counts.space().size(); ++x) {
    out << counts.space().label(x) << '\t' << counts[x] << '\n';
  }
}

Distribution<double> read_distribution(std::istream& in, const SampleSpace& space) {
  const Table table = read_table(in, "distribution file");
  const std::size_t outcome_col = column(table, "outcome", "distribution file");
  const std::size_t prob_col = column(table, "probability", "distribution file");
  VectorXd p = VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  std::vector<char> seen(space.size(), 0);
  for (const auto& row : table.rows) {
    std::size_t x = 0;
    try {
      x = space.parse_label(field(row, outcome_col));
    } catch (const Error& e) {
      throw ParseError(row.first, e.what());
    }
    if (seen[x]) throw Error("DuplicateOutcome", "line " + std::to_string(row.first) + ": outcome listed twice");
    seen[x] = 1;
    p[static_cast<Eigen::Index>(x)] = parse_probability(field(row, prob_col), row.first);
  }
  return Distribution<double>(space, std::move(p));
}

Distribution<double> read_distribution_file(const std::string& path, const SampleSpace& space) {
  auto in = open(path);
  return read_distribution(in, space);
}

std::vector<int> read_lumping_map(std::istream& in, int k) {
  const Table table = read_table(in, "lumping map");
  const std::size_t from_col = column(table, "from", "lumping map");
  const std::size_t to_col = column(table, "to", "lumping map");
  std::vector<int> relabel(static_cast<std::size_t>(k), -1);
  for (const auto& row : table.rows) {
    const std::string& from = field(row, from_col);
    const std::string& to = field(row, to_col);
    const int a = from.size() == 1 ? symbol_of(from[0]) : -1;
    const int b = to.size() == 1 ? symbol_of(to[0]) : -1;
    if (a < 0 || a >= k) throw ParseError(row.first, "source symbol '" + from + "' outside the alphabet");
    if (b < 0) throw ParseError(row.first, "target symbol '" + to + "' is not a single symbol");
    if (relabel[static_cast<std::size_t>(a)] >= 0) throw ParseError(row.first, "source symbol '" + from + "' mapped twice");
    relabel[static_cast<std::size_t>(a)] = b;
  }
  for (int a = 0; a < k; ++a) {
    if (relabel[static_cast<std::size_t>(a)] < 0) {
      throw Error("InvalidLumping", "lumping map does not cover symbol " + std::to_string(a));
    }
  }
  return relabel;
}

std::vector<int> read_lumping_map_file(const std::string& path, int k) {
  auto in = open(path);
  return read_lumping_map(in, k);
}

std::vector<std::uint64_t> parse_integer_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, comma - start);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error("InvalidInput", "'" + text + "' is not a comma-separated list of integers");
    }
    out.push_back(value);
    start = comma + 1;
  }
  return out;
}

}  // namespace latentw::io
