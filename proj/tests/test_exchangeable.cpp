#include <doctest.h>

#include <vector>

#include "latentw/exchangeable.hpp"
#include "test_support.hpp"

using namespace latentw;
using latentw::testing::dirichlet;
using latentw::testing::sparse_dirichlet;
using latentw::testing::tv_to_exchangeable_grid;

namespace {

const SampleSpace kBinary3(2, 3);
const SampleSpace kBinary2(2, 2);

/// P(101) = P(110) = P(111) = 1/3 on {0,1}^3.
template <class Scalar>
Distribution<Scalar> three_point() {
  const std::vector<std::size_t> support{kBinary3.parse_label("101"), kBinary3.parse_label("110"),
                                         kBinary3.parse_label("111")};
  return Distribution<Scalar>::uniform_on(kBinary3, support);
}

double max_abs_diff(const VectorXd& a, const VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("exchangeable weight of the three-point example is 1/3") {
  CHECK(exchangeable_weight(three_point<Rational>()) == Rational(1, 3));
  CHECK(exchangeable_weight(three_point<double>()) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("exchangeable weight on {0,1}^2 by hand") {
  const std::vector<std::size_t> swap{1, 2};
  CHECK(exchangeable_weight(Distribution<Rational>::uniform_on(kBinary2, swap)) == Rational(1));
  CHECK(exchangeable_weight(Distribution<Rational>::point_mass(kBinary2, 1)) == Rational(0));
  CHECK(exchangeable_weight(Distribution<Rational>::uniform(kBinary3)) == Rational(1));
}

TEST_CASE("decompose the three-point example") {
  const auto dec = decompose(three_point<Rational>());
  CHECK(dec.lambda == Rational(1, 3));
  REQUIRE(dec.q);
  REQUIRE(dec.r);
  for (std::size_t x = 0; x < 8; ++x) {
    CHECK((*dec.q)(x) == (x == 7 ? Rational(1) : Rational(0)));
    const bool in_r = x == kBinary3.parse_label("101") || x == kBinary3.parse_label("110");
    CHECK((*dec.r)(x) == (in_r ? Rational(1, 2) : Rational(0)));
  }
  CHECK(exchangeable_weight(*dec.r) == Rational(0));
  CHECK(dec.per_class_min.size() == 4);
  CHECK(dec.argmin_sets[2] == std::vector<std::size_t>{kBinary3.parse_label("011")});
  CHECK(dec.argmin_sets[1].size() == 3);
}

TEST_CASE("decompose edge cases") {
  SUBCASE("exchangeable input") {
    const auto p = Distribution<Rational>::uniform(kBinary3);
    const auto dec = decompose(p);
    CHECK(dec.lambda == Rational(1));
    REQUIRE(dec.q);
    CHECK(dec.q->probabilities() == p.probabilities());
    CHECK_FALSE(dec.r);
  }
  SUBCASE("no exchangeable mass") {
    const auto p = Distribution<Rational>::point_mass(kBinary2, 1);
    const auto dec = decompose(p);
    CHECK(dec.lambda == Rational(0));
    CHECK_FALSE(dec.q);
    REQUIRE(dec.r);
    CHECK(dec.r->probabilities() == p.probabilities());
  }
}

TEST_CASE("float argmin sets tolerate rounding ties") {
  VectorXd v(4);
  v << 0.25, 0.1, 0.1 * (1 + 1e-12), 0.55 - 0.1 * 1e-12;
  const auto dec = decompose(Distribution<double>(kBinary2, v));
  CHECK(dec.argmin_sets[1].size() == 2);
  v << 0.25, 0.1, 0.1 * (1 + 1e-6), 0.55 - 0.1 * 1e-6;
  CHECK(decompose(Distribution<double>(kBinary2, v)).argmin_sets[1].size() == 1);
}

TEST_CASE("synthesize_mixture hits the requested weight") {
  const auto q = Distribution<Rational>::uniform(kBinary3);
  const std::vector<std::size_t> support{kBinary3.parse_label("101"), kBinary3.parse_label("110")};
  const auto r = Distribution<Rational>::uniform_on(kBinary3, support);
  CHECK(exchangeable_weight(synthesize_mixture(q, r, Rational(7, 10))) == Rational(7, 10));
  CHECK(synthesize_mixture(q, r, Rational(1)).probabilities() == q.probabilities());
  CHECK(synthesize_mixture(q, r, Rational(0)).probabilities() == r.probabilities());

  const auto mix = synthesize_mixture(q.cast<double>(), r.cast<double>(), 0.7);
  CHECK(std::abs(exchangeable_weight(mix) - 0.7) <= 1e-10);

  try {
    synthesize_mixture(r, r, Rational(1, 2));
    FAIL("expected NotExchangeable");
  } catch (const Error& e) {
    CHECK(e.code() == "NotExchangeable");
  }
  try {
    synthesize_mixture(q, three_point<Rational>(), Rational(1, 2));
    FAIL("expected ResidualNotPure");
  } catch (const Error& e) {
    CHECK(e.code() == "ResidualNotPure");
  }
}

TEST_CASE("marginal bound") {
  const std::vector<int> first_two{0, 1};
  const std::vector<int> all{0, 1, 2};
  CHECK(marginal_weight_bound(three_point<Rational>(), std::span<const int>(first_two)) == Rational(2, 3));
  const auto m = marginal(three_point<Rational>(), std::span<const int>(first_two));
  CHECK(m(kBinary2.parse_label("10")) == Rational(1, 3));
  CHECK(m(kBinary2.parse_label("11")) == Rational(2, 3));
  CHECK(marginal_weight_bound(three_point<Rational>(), std::span<const int>(all)) == Rational(1, 3));
  CHECK(marginal_weight_bound(Distribution<Rational>::uniform(kBinary3), std::span<const int>(first_two)) == Rational(1));
  const std::vector<int> single{2};
  CHECK(marginal_weight_bound(three_point<Rational>(), std::span<const int>(single)) == Rational(1));

  const std::vector<int> none;
  try {
    marginal_weight_bound(three_point<Rational>(), std::span<const int>(none));
    FAIL("expected EmptyIndexSet");
  } catch (const Error& e) {
    CHECK(e.code() == "EmptyIndexSet");
  }
  const std::vector<int> repeated{1, 1};
  CHECK_THROWS_AS(marginal_weight_bound(three_point<Rational>(), std::span<const int>(repeated)), Error);
  const std::vector<int> out_of_range{0, 3};
  CHECK_THROWS_AS(marginal_weight_bound(three_point<Rational>(), std::span<const int>(out_of_range)), Error);
}

TEST_CASE("lumping bound") {
  const std::vector<int> identity{0, 1};
  CHECK(lumping_weight_bound(three_point<Rational>(), std::span<const int>(identity)) == Rational(1, 3));
  const std::vector<int> collapse{0, 0};
  CHECK(lumping_weight_bound(three_point<Rational>(), std::span<const int>(collapse)) == Rational(1));

  const SampleSpace ternary(3, 2);
  const auto p = Distribution<Rational>::point_mass(ternary, ternary.encode(std::vector<int>{1, 2}));
  const std::vector<int> merge{1, 0, 0};  // {1,2} -> A = 0, {0} -> B = 1
  CHECK(exchangeable_weight(p) == Rational(0));
  CHECK(lumping_weight_bound(p, std::span<const int>(merge)) == Rational(1));

  const std::vector<int> short_map{0};
  CHECK_THROWS_AS(lump(p, std::span<const int>(short_map)), Error);
}

TEST_CASE("TV distance to the exchangeable class") {
  SUBCASE("exchangeable input is its own projection") {
    const auto p = Distribution<Rational>::uniform(kBinary3);
    const auto tv = tv_distance_to_exchangeable(p);
    CHECK(tv.distance == Rational(0));
    CHECK(tv.nearest.probabilities() == p.probabilities());
  }
  SUBCASE("three-point example") {
    // Grid oracle (resolution 1/90, refined) frozen: 2/9.
    CHECK(tv_to_exchangeable_grid(three_point<double>(), 90) == doctest::Approx(2.0 / 9).epsilon(1e-9));
    const auto tv = tv_distance_to_exchangeable(three_point<Rational>());
    CHECK(tv.distance == Rational(2, 9));
    CHECK(is_exchangeable(tv.nearest));
    CHECK(tv_distance(three_point<Rational>(), tv.nearest) == Rational(2, 9));
  }
  SUBCASE("point mass on 01") {
    // Any exchangeable q leaves at least mass 1/2 off the outcome 01, so the
    // distance is 1/2; the grid oracle agrees.
    const auto p = Distribution<Rational>::point_mass(kBinary2, 1);
    CHECK(tv_to_exchangeable_grid(p.cast<double>(), 200) == doctest::Approx(0.5).epsilon(1e-9));
    const auto tv = tv_distance_to_exchangeable(p);
    CHECK(tv.distance == Rational(1, 2));
    CHECK(is_exchangeable(tv.nearest));
    const std::vector<std::size_t> swap{1, 2};
    CHECK(tv_distance(p, Distribution<Rational>::uniform_on(kBinary2, swap)) == Rational(1, 2));
  }
  SUBCASE("matches the grid oracle on random inputs") {
    Xoshiro256 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
      const auto p = trial % 2 == 0 ? dirichlet(kBinary3, rng) : sparse_dirichlet(kBinary3, rng, 0.4);
      const auto tv = tv_distance_to_exchangeable(p);
      const double oracle = tv_to_exchangeable_grid(p, 40);
      CHECK(tv.distance <= oracle + 1e-12);
      CHECK(tv.distance >= oracle - 1e-7);
      CHECK(std::abs(tv.nearest.probabilities().sum() - 1.0) < 1e-12);
      CHECK(exchangeability_defect(tv.nearest) == 0.0);
    }
  }
}

TEST_CASE("reconstruction and residual purity on random distributions") {
  Xoshiro256 rng(2024);
  const std::vector<SampleSpace> spaces{kBinary3, kBinary2, SampleSpace(3, 3), SampleSpace(4, 2), SampleSpace(2, 5)};
  for (int trial = 0; trial < 1000; ++trial) {
    const SampleSpace& space = spaces[static_cast<std::size_t>(trial) % spaces.size()];
    const auto p = trial % 3 == 0 ? sparse_dirichlet(space, rng, 0.3) : dirichlet(space, rng, 0.5);
    const auto dec = decompose(p);
    CHECK(dec.lambda >= 0.0);
    CHECK(dec.lambda <= 1.0 + 1e-12);
    const auto& index = orbits(space);
    double lam = 0.0;
    for (std::size_t z = 0; z < index.num_classes(); ++z) lam += static_cast<double>(index[z].size) * dec.per_class_min[static_cast<Eigen::Index>(z)];
    CHECK(std::abs(lam - dec.lambda) <= 1e-12);
    if (dec.q && dec.r) {
      const VectorXd rebuilt = dec.lambda * dec.q->probabilities() + (1 - dec.lambda) * dec.r->probabilities();
      CHECK(max_abs_diff(rebuilt, p.probabilities()) <= 1e-10);
      CHECK(exchangeability_defect(*dec.q) == 0.0);
      // TV identity ||p - q|| = (1 - lambda) ||r - q||
      CHECK(std::abs(tv_distance(p, *dec.q) - (1 - dec.lambda) * tv_distance(*dec.r, *dec.q)) <= 1e-12);
    }
    if (dec.r) CHECK(exchangeable_weight(*dec.r) <= 1e-9);
  }
}

TEST_CASE("exchangeable component is the only one dominated at weight lambda") {
  Xoshiro256 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = dirichlet(kBinary3, rng);
    const auto dec = decompose(p);
    REQUIRE(dec.q);
    const auto& index = orbits(kBinary3);
    // Move a little mass from class b to class a: the perturbed law can no
    // longer be dominated at weight lambda.
    const auto a = static_cast<std::size_t>(rng() % index.num_classes());
    auto b = static_cast<std::size_t>(rng() % index.num_classes());
    if (b == a) b = (a + 1) % index.num_classes();
    const double qb = (*dec.q)(index[b].members.front());
    if (qb <= 0.0) continue;
    const double delta = 0.5 * qb * static_cast<double>(index[b].size) * rng.uniform() + 1e-9;
    VectorXd s = dec.q->probabilities();
    for (std::size_t x : index[a].members) s[static_cast<Eigen::Index>(x)] += delta / static_cast<double>(index[a].size);
    for (std::size_t x : index[b].members) s[static_cast<Eigen::Index>(x)] -= delta / static_cast<double>(index[b].size);
    bool dominated = true;
    for (std::size_t x = 0; x < 8; ++x) dominated = dominated && p(x) >= dec.lambda * s[static_cast<Eigen::Index>(x)] - 1e-15;
    CHECK_FALSE(dominated);
  }
}

TEST_CASE("bounds never fall below the exchangeable weight") {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const SampleSpace space(2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 3));
    const auto p = trial % 2 ? dirichlet(space, rng, 0.3) : sparse_dirichlet(space, rng, 0.5);
    const double lambda = exchangeable_weight(p);
    std::vector<int> subset;
    for (int i = 0; i < space.d(); ++i) {
      if (rng() % 2) subset.push_back(i);
    }
    if (subset.empty()) subset.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(space.d())));
    CHECK(lambda <= marginal_weight_bound(p, std::span<const int>(subset)) + 1e-12);
    std::vector<int> relabel(static_cast<std::size_t>(space.k()));
    for (auto& t : relabel) t = static_cast<int>(rng() % static_cast<std::uint64_t>(space.k()));
    CHECK(lambda <= lumping_weight_bound(p, std::span<const int>(relabel)) + 1e-12);
  }
}

TEST_CASE("weight is one exactly when the law is constant on every class") {
  Xoshiro256 rng(17);
  const SampleSpace space(3, 2);
  const auto& index = orbits(space);
  for (int trial = 0; trial < 100; ++trial) {
    // random exchangeable law with rational class masses
    std::vector<long long> mass(index.num_classes());
    long long total = 0;
    for (std::size_t z = 0; z < mass.size(); ++z) {
      mass[z] = static_cast<long long>(rng() % 5) * static_cast<long long>(index[z].size);
      total += mass[z];
    }
    if (total == 0) continue;
    VectorXq p(static_cast<Eigen::Index>(space.size()));
    for (std::size_t x = 0; x < space.size(); ++x) {
      const auto z = index.class_of(x);
      p[static_cast<Eigen::Index>(x)] = Rational(mass[z], total * static_cast<long long>(index[z].size));
    }
    const Distribution<Rational> exch(space, p);
    CHECK(exchangeable_weight(exch) == Rational(1));
    CHECK(exchangeability_defect(exch) == Rational(0));

    // shift mass between two members of a non-singleton class
    const std::size_t z = 1 + static_cast<std::size_t>(rng() % 2) * 3;  // classes {01,10} or {12,21}
    const auto& members = index[z].members;
    const Rational eps(1, total * 10);
    if (p[static_cast<Eigen::Index>(members[1])] < eps) continue;
    VectorXq shifted = p;
    shifted[static_cast<Eigen::Index>(members[0])] += eps;
    shifted[static_cast<Eigen::Index>(members[1])] -= eps;
    const Distribution<Rational> perturbed(space, shifted);
    CHECK(exchangeable_weight(perturbed) < Rational(1));
    CHECK(exchangeability_defect(perturbed) > Rational(0));
  }
}

TEST_CASE("marginal of the component is the component of the marginal when the weights agree") {
  Xoshiro256 rng(31);
  const SampleSpace space(2, 3);
  const auto& index = orbits(space);
  const std::vector<int> first_two{0, 1};
  int probes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd q(8);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::vector<double> mass(index.num_classes());
    for (auto& m : mass) m = gamma(rng);
    double total = 0.0;
    for (double m : mass) total += m;
    for (std::size_t x = 0; x < 8; ++x) q[static_cast<Eigen::Index>(x)] = mass[index.class_of(x)] / total / static_cast<double>(index[index.class_of(x)].size);
    const Distribution<double> exch(space, q);
    // residual whose (1,2)-marginal is the point mass on 01 or 10
    const std::size_t r_outcome = space.parse_label(rng() % 2 ? "010" : "101");
    const auto r = Distribution<double>::point_mass(space, r_outcome);
    const double beta = 0.05 + 0.9 * rng.uniform();
    const auto p = synthesize_mixture(exch, r, beta);
    const auto pi = marginal(p, std::span<const int>(first_two));
    const double lambda = exchangeable_weight(p);
    const double lambda_i = exchangeable_weight(pi);
    if (std::abs(lambda - lambda_i) > 1e-12 || lambda <= 0.0) continue;
    ++probes;
    const auto dec = decompose(p);
    const auto dec_i = decompose(pi);
    REQUIRE(dec.q);
    REQUIRE(dec_i.q);
    const auto q_i = marginal(*dec.q, std::span<const int>(first_two));
    CHECK(max_abs_diff(q_i.probabilities(), dec_i.q->probabilities()) <= 1e-10);
  }
  CHECK(probes > 100);
}

TEST_CASE("float and rational modes agree") {
  Xoshiro256 rng(3);
  const SampleSpace space(3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<long long> counts(space.size());
    long long total = 0;
    for (auto& c : counts) {
      c = static_cast<long long>(rng() % 9);
      total += c;
    }
    VectorXq exact(static_cast<Eigen::Index>(space.size()));
    for (std::size_t x = 0; x < space.size(); ++x) exact[static_cast<Eigen::Index>(x)] = Rational(counts[x], total);
    const Distribution<Rational> p(space, exact);
    const auto pd = p.cast<double>();
    CHECK(std::abs(static_cast<double>(exchangeable_weight(p)) - exchangeable_weight(pd)) <= 1e-12);
    CHECK(std::abs(static_cast<double>(tv_distance_to_exchangeable(p).distance) -
                   tv_distance_to_exchangeable(pd).distance) <= 1e-12);
  }
}
