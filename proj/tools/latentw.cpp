// latentw: command-line front end for latent-weight computation, estimation
// and the per-triplet methylation report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latentw/error.hpp"
#include "latentw/exchangeable.hpp"
#include "latentw/general_weight.hpp"
#include "latentw/inference.hpp"
#include "latentw/io.hpp"
#include "latentw/methylation.hpp"
#include "latentw/parallel.hpp"
#include "latentw/rng.hpp"

using namespace latentw;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;

std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Run configuration as seen by the config hash. Threads and output paths
/// never enter it; input files enter by content so moving them is harmless.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) { entries_.push_back(key + "=" + value); }
  void set_file(const std::string& key, const std::string& path) {
    set(key, hex64(hash_string(slurp(path))));
  }

  std::string hash() const {
    std::uint64_t h = hash_string("latentw");
    for (const auto& e : entries_) h = hash_string(e + "\n", h);
    return hex64(h);
  }

 private:
  std::vector<std::string> entries_;
};

struct Globals {
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
  std::string format = "tsv";
  std::string out;
};

Globals g;
RunConfig config;

std::string meta_line() {
  return std::string("# latentw ") + LATENTW_VERSION + " seed=" + std::to_string(g.seed) + " config=" + config.hash() +
         "\n";
}

json meta_json() {
  return {{"version", LATENTW_VERSION}, {"seed", g.seed}, {"config", config.hash()}};
}

void emit(const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(g.out, std::ios::binary);
  if (!out) throw io_error("cannot write '" + g.out + "'");
  out << text;
  if (!out) throw io_error("write failed for '" + g.out + "'");
}

void emit_json(json body) {
  body["meta"] = meta_json();
  emit(body.dump(2) + "\n");
}

/// Scalar result in the requested format.
void emit_scalar(const std::string& name, const std::string& text, double value) {
  if (g.format == "json") {
    emit_json({{name, value}});
  } else {
    emit(meta_line() + text + "\n");
  }
}

struct CountsInput {
  std::string path;
  int k = 0;  // 0: inferred

  void attach(CLI::App* cmd) {
    cmd->add_option("--counts", path, "Counts TSV (columns outcome, count)")->required();
    cmd->add_option("--k", k, "Alphabet size (default: largest symbol + 1)")->check(CLI::NonNegativeNumber);
  }

  CountVector load() const {
    config.set_file("counts", path);
    config.set("k", std::to_string(k));
    return io::read_counts_file(path, k > 0 ? std::optional<int>(k) : std::nullopt);
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

template <class Scalar>
json probability_array(const Distribution<Scalar>& p) {
  json arr = json::array();
  for (std::size_t x = 0; x < p.space().size(); ++x) {
    if constexpr (std::is_same_v<Scalar, double>)
      arr.push_back(p(x));
    else
      arr.push_back(p(x).str());
  }
  return arr;
}

template <class Scalar>
json decomposition_json(const ExchangeableDecomposition<Scalar>& dec, const SampleSpace& space) {
  auto scalar = [](const Scalar& v) -> json {
    if constexpr (std::is_same_v<Scalar, double>)
      return v;
    else
      return v.str();
  };
  json outcomes = json::array();
  for (std::size_t x = 0; x < space.size(); ++x) outcomes.push_back(space.label(x));
  json minima = json::array();
  for (Eigen::Index z = 0; z < dec.per_class_min.size(); ++z) minima.push_back(scalar(dec.per_class_min[z]));
  json argmins = json::array();
  for (const auto& set : dec.argmin_sets) {
    json labels = json::array();
    for (std::size_t x : set) labels.push_back(space.label(x));
    argmins.push_back(labels);
  }
  return {{"lambda", scalar(dec.lambda)},
          {"outcomes", outcomes},
          {"q", dec.q ? probability_array(*dec.q) : json(nullptr)},
          {"r", dec.r ? probability_array(*dec.r) : json(nullptr)},
          {"per_class_min", minima},
          {"argmin_sets", argmins}};
}

std::string dataset_name(const std::string& path) { return std::filesystem::path(path).filename().string(); }

int report_error(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << "latentw: error: " << code << ": " << message << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent weights of categorical sources: exchangeable weight, bounds, estimation"};
  app.set_version_flag("--version", std::string("latentw ") + LATENTW_VERSION);
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads (default: LATENTW_THREADS or all cores)");
  app.add_option("--format", g.format, "Output format for scalar results")->check(CLI::IsMember({"tsv", "json"}));
  app.add_option("--out", g.out, "Output file (default: standard output)");
  app.fallthrough();

  // weight
  auto* weight = app.add_subcommand("weight", "Exchangeable weight of the empirical distribution");
  CountsInput weight_in;
  weight_in.attach(weight);
  bool exact = false;
  weight->add_flag("--exact", exact, "Exact rational arithmetic");

  // decompose
  auto* decompose_cmd = app.add_subcommand("decompose", "Exchangeable component and residual as JSON");
  CountsInput decompose_in;
  decompose_in.attach(decompose_cmd);
  decompose_cmd->add_flag("--exact", exact, "Exact rational arithmetic (fractions as strings)");

  // bound
  auto* bound = app.add_subcommand("bound", "Upper bounds via marginals or lumping");
  bound->require_subcommand(1);
  auto* bound_marginal = bound->add_subcommand("marginal", "Weight of a coordinate marginal");
  CountsInput marginal_in;
  marginal_in.attach(bound_marginal);
  std::string indices;
  bound_marginal->add_option("--indices", indices, "1-based coordinates, e.g. 1,2")->required();
  bound_marginal->add_flag("--exact", exact, "Exact rational arithmetic");
  auto* bound_lump = bound->add_subcommand("lump", "Weight after relabelling symbols");
  CountsInput lump_in;
  lump_in.attach(bound_lump);
  std::string map_path;
  bound_lump->add_option("--map", map_path, "Lumping TSV (columns from, to)")->required();
  bound_lump->add_flag("--exact", exact, "Exact rational arithmetic");

  // tv
  auto* tv = app.add_subcommand("tv", "Total variation distance to the exchangeable laws");
  CountsInput tv_in;
  tv_in.attach(tv);
  tv->add_flag("--exact", exact, "Exact rational arithmetic");

  // classweight
  auto* classweight = app.add_subcommand("classweight", "Latent weight for a singleton, iid or product class");
  CountsInput class_in;
  class_in.attach(classweight);
  std::string class_name;
  std::string q0_path;
  OptimizerOptions optimizer;
  classweight->add_option("--class", class_name, "Model class")
      ->required()
      ->check(CLI::IsMember({"singleton", "iid", "product"}));
  classweight->add_option("--q0", q0_path, "Reference law for --class singleton (columns outcome, probability)");
  classweight->add_option("--grid", optimizer.grid_points, "Grid points per parameter")->check(CLI::PositiveNumber);
  classweight->add_option("--tol", optimizer.tolerance, "Optimizer tolerance")->check(CLI::PositiveNumber);
  classweight->add_option("--starts", optimizer.starts, "Local refinements")->check(CLI::PositiveNumber);

  // estimate
  auto* estimate_cmd = app.add_subcommand("estimate", "Plug-in estimate with bootstrap bias correction");
  CountsInput estimate_in;
  estimate_in.attach(estimate_cmd);
  BootstrapOptions boot;
  estimate_cmd->add_option("--boot", boot.n_boot, "Bootstrap resamples")->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--resample-size", boot.resample_size, "Resample size (default: n)");
  estimate_cmd->add_flag("--subsample", boot.subsample, "Subsample bootstrap with n0 = ceil(2 sqrt(n))");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo studies");
  simulate->require_subcommand(1);
  auto* simulate_size = simulate->add_subcommand("size", "Bias of the plug-in under the worst-case source");
  int sim_k = 2;
  int sim_d = 3;
  std::string sizes_text = "100,1000,10000";
  std::size_t reps = 1000;
  simulate_size->add_option("--k", sim_k, "Alphabet size")->check(CLI::PositiveNumber);
  simulate_size->add_option("--d", sim_d, "Dimension")->check(CLI::PositiveNumber);
  simulate_size->add_option("--sizes", sizes_text, "Candidate sample sizes");
  simulate_size->add_option("--reps", reps, "Replicates per size");

  // meth
  auto* meth = app.add_subcommand("meth", "Methylation triplet pipeline");
  meth->require_subcommand(1);
  auto* triplets = meth->add_subcommand("triplets", "Per-triplet exchangeability report from epireads");
  std::string epireads;
  std::uint64_t min_coverage = 100;
  std::size_t meth_boot = 1000;
  triplets->add_option("--epireads", epireads, "Epiread files, comma separated")->required();
  triplets->add_option("--min-coverage", min_coverage, "Minimum reads per triplet");
  triplets->add_option("--boot", meth_boot, "Bootstrap resamples per triplet")->check(CLI::PositiveNumber);
  auto* correlate_cmd = meth->add_subcommand("correlate", "Correlate triplet weights with a covariate");
  std::string reports;
  std::string covariate_path;
  std::string group_by = "chrom";
  correlate_cmd->add_option("--report", reports, "Report files, comma separated")->required();
  correlate_cmd->add_option("--covariate", covariate_path, "Covariate TSV (chrom, index, value)")->required();
  correlate_cmd->add_option("--group-by", group_by, "Grouping key")->check(CLI::IsMember({"chrom", "dataset", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("UsageError", e.what(), kExitInvalid);
  }

  try {
    g.threads = resolve_threads(g.threads);
    config.set("seed", std::to_string(g.seed));
    config.set("format", g.format);
    config.set("exact", exact ? "1" : "0");

    if (*weight) {
      config.set("command", "weight");
      const auto counts = weight_in.load();
      if (exact) {
        const auto lambda = exchangeable_weight(empirical_distribution<Rational>(counts));
        emit_scalar("lambda", lambda.str(), static_cast<double>(lambda));
      } else {
        const double lambda = exchangeable_weight(empirical_distribution<double>(counts));
        emit_scalar("lambda", fmt(lambda), lambda);
      }
    } else if (*decompose_cmd) {
      config.set("command", "decompose");
      const auto counts = decompose_in.load();
      if (exact)
        emit_json(decomposition_json(decompose(empirical_distribution<Rational>(counts)), counts.space()));
      else
        emit_json(decomposition_json(decompose(empirical_distribution<double>(counts)), counts.space()));
    } else if (*bound_marginal) {
      config.set("command", "bound marginal");
      config.set("indices", indices);
      const auto counts = marginal_in.load();
      std::vector<int> positions;
      for (auto i : io::parse_integer_list(indices)) {
        if (i < 1) throw Error("InvalidIndexSet", "indices are 1-based");
        positions.push_back(static_cast<int>(i) - 1);
      }
      if (exact) {
        const auto b = marginal_weight_bound(empirical_distribution<Rational>(counts), positions);
        emit_scalar("bound", b.str(), static_cast<double>(b));
      } else {
        const double b = marginal_weight_bound(empirical_distribution<double>(counts), positions);
        emit_scalar("bound", fmt(b), b);
      }
    } else if (*bound_lump) {
      config.set("command", "bound lump");
      const auto counts = lump_in.load();
      config.set_file("map", map_path);
      const auto relabel = io::read_lumping_map_file(map_path, counts.space().k());
      if (exact) {
        const auto b = lumping_weight_bound(empirical_distribution<Rational>(counts), relabel);
        emit_scalar("bound", b.str(), static_cast<double>(b));
      } else {
        const double b = lumping_weight_bound(empirical_distribution<double>(counts), relabel);
        emit_scalar("bound", fmt(b), b);
      }
    } else if (*tv) {
      config.set("command", "tv");
      const auto counts = tv_in.load();
      if (exact) {
        const auto proj = tv_distance_to_exchangeable(empirical_distribution<Rational>(counts));
        if (g.format == "json")
          emit_json({{"distance", proj.distance.str()}, {"nearest", probability_array(proj.nearest)}});
        else
          emit(meta_line() + proj.distance.str() + "\n");
      } else {
        const auto proj = tv_distance_to_exchangeable(empirical_distribution<double>(counts));
        if (g.format == "json")
          emit_json({{"distance", proj.distance}, {"nearest", probability_array(proj.nearest)}});
        else
          emit(meta_line() + fmt(proj.distance) + "\n");
      }
    } else if (*classweight) {
      config.set("command", "classweight");
      config.set("class", class_name);
      config.set("grid", std::to_string(optimizer.grid_points));
      config.set("tol", fmt(optimizer.tolerance));
      config.set("starts", std::to_string(optimizer.starts));
      const auto counts = class_in.load();
      const auto p = empirical_distribution<double>(counts);
      ProductClassSpec spec = product_class::Product{};
      if (class_name == "singleton") {
        if (q0_path.empty()) throw Error("InvalidOptions", "--class singleton requires --q0");
        config.set_file("q0", q0_path);
        spec = product_class::Singleton{io::read_distribution_file(q0_path, counts.space())};
      } else if (class_name == "iid") {
        spec = product_class::Iid{};
      }
      optimizer.seed = g.seed;
      optimizer.threads = g.threads;
      const auto result = class_weight(p, spec, optimizer);
      if (g.format == "json") {
        json log = json::array();
        for (const auto& entry : result.multistart_log)
          log.push_back({{"start", entry.start}, {"start_value", entry.start_value}, {"end", entry.end},
                         {"value", entry.value}});
        emit_json({{"lambda", result.lambda},
                   {"argmax_q", probability_array(result.argmax_q)},
                   {"certificate_margin", result.certificate_margin},
                   {"converged", result.converged},
                   {"multistart_log", log}});
      } else {
        emit(meta_line() + fmt(result.lambda) + "\n");
      }
    } else if (*estimate_cmd) {
      config.set("command", "estimate");
      config.set("boot", std::to_string(boot.n_boot));
      config.set("resample_size", std::to_string(boot.resample_size));
      config.set("subsample", boot.subsample ? "1" : "0");
      const auto counts = estimate_in.load();
      boot.seed = g.seed;
      boot.threads = g.threads;
      const auto est = estimate(counts, boot);
      emit_json({{"lambda_hat", est.lambda_hat},
                 {"lambda_corrected", est.lambda_corrected},
                 {"se_boot", est.se_boot},
                 {"bias_boot", est.bias_boot},
                 {"n", est.n},
                 {"n_boot", est.n_boot},
                 {"resample_size", est.resample_size},
                 {"seed", est.seed},
                 {"regularity_flag", std::string(to_string(est.regularity_flag))}});
    } else if (*simulate_size) {
      config.set("command", "simulate size");
      config.set("k", std::to_string(sim_k));
      config.set("d", std::to_string(sim_d));
      config.set("sizes", sizes_text);
      config.set("reps", std::to_string(reps));
      const auto sizes = io::parse_integer_list(sizes_text);
      const auto rows = sample_size_heuristic(SampleSpace(sim_k, sim_d), sizes, reps, g.seed, g.threads);
      std::string text = meta_line() + "n\tmean_bias\tsd\n";
      for (const auto& row : rows) text += std::to_string(row.n) + "\t" + fmt(row.mean_bias) + "\t" + fmt(row.sd) + "\n";
      emit(text);
    } else if (*triplets) {
      config.set("command", "meth triplets");
      config.set("min_coverage", std::to_string(min_coverage));
      config.set("boot", std::to_string(meth_boot));
      meth::TripletCounter counter;
      for (const auto& path : split_list(epireads)) {
        config.set_file("epireads", path);
        std::ifstream in(path);
        if (!in) throw io_error("cannot open '" + path + "'");
        counter.add_stream(in);
      }
      meth::ReportOptions opts;
      opts.n_boot = meth_boot;
      opts.seed = g.seed;
      opts.threads = g.threads;
      const auto rows = meth::triplet_report(counter.well_covered(min_coverage), opts);
      std::ostringstream text;
      text << meta_line();
      meth::write_report(text, rows);
      emit(text.str());
      std::size_t failed = 0;
      for (const auto& row : rows) failed += row.error ? 1 : 0;
      if (failed > 0) std::cerr << "latentw: warning: " << failed << " triplet(s) failed; written as NA\n";
    } else if (*correlate_cmd) {
      config.set("command", "meth correlate");
      config.set("group_by", group_by);
      config.set_file("covariate", covariate_path);
      std::ifstream cov_in(covariate_path);
      if (!cov_in) throw io_error("cannot open '" + covariate_path + "'");
      const auto covariates = meth::read_covariates(cov_in);
      std::vector<double> weights;
      std::vector<double> values;
      std::vector<std::string> groups;
      for (const auto& path : split_list(reports)) {
        config.set_file("report", path);
        std::ifstream in(path);
        if (!in) throw io_error("cannot open '" + path + "'");
        for (const auto& row : meth::read_report(in)) {
          if (row.error) continue;
          const auto it = covariates.find({row.chrom, row.index});
          if (it == covariates.end()) continue;
          weights.push_back(row.lambda_corrected);
          values.push_back(it->second);
          groups.push_back(group_by == "chrom" ? row.chrom : group_by == "dataset" ? dataset_name(path) : "all");
        }
      }
      const auto results = meth::correlate(weights, values, groups);
      std::string text = meta_line() + "group\tcount\tpearson_r\tpearson_p\tspearman_rho\tspearman_p\n";
      for (const auto& r : results)
        text += r.group + "\t" + std::to_string(r.count) + "\t" + fmt(r.pearson_r) + "\t" + fmt(r.pearson_p) + "\t" +
                fmt(r.spearman_rho) + "\t" + fmt(r.spearman_p) + "\n";
      emit(text);
    }
  } catch (const Error& e) {
    return report_error(e.code(), e.what(), e.is_io() ? kExitIo : kExitInvalid);
  } catch (const std::bad_alloc&) {
    return report_error("OutOfMemory", "allocation failed", kExitInvalid);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), kExitInvalid);
  }
  return kExitOk;
}
