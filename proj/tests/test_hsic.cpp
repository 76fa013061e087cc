#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "tklab/hsic.hpp"
#include "tklab/kernel.hpp"
#include "tklab/tensor.hpp"

namespace {

using namespace tklab;
using namespace tktest;

SampleBlock two_bit_block() {
  return SampleBlock({{0.0, 1.0}, {0.0, 1.0}}, {1, 1});
}

std::vector<ContinuousKernel> deltas(int m) {
  return std::vector<ContinuousKernel>(static_cast<std::size_t>(m),
                                       ContinuousKernel::discrete_delta(1));
}

// Three-sum estimator written directly against the definition, evaluating
// the kernels pairwise from the raw rows (no shared Gram code).
double brute_vstat(const SampleBlock& s,
                   const std::vector<ContinuousKernel>& ks) {
  const long n = s.rows();
  const int M = s.group_count();
  const double dn = static_cast<double>(n);
  double term1 = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double prod = 1.0;
      for (int m = 0; m < M; ++m)
        prod *= ks[static_cast<std::size_t>(m)].eval(s.row(m, i), s.row(m, j));
      term1 += prod;
    }
  term1 /= dn * dn;
  double term2 = 1.0;
  for (int m = 0; m < M; ++m) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        acc += ks[static_cast<std::size_t>(m)].eval(s.row(m, i), s.row(m, j));
    term2 *= acc / (dn * dn);
  }
  double term3 = 0.0;
  for (long i = 0; i < n; ++i) {
    double prod = 1.0;
    for (int m = 0; m < M; ++m) {
      double acc = 0.0;
      for (long j = 0; j < n; ++j)
        acc += ks[static_cast<std::size_t>(m)].eval(s.row(m, i), s.row(m, j));
      prod *= acc / dn;
    }
    term3 += prod;
  }
  term3 *= 2.0 / dn;
  return term1 + term2 - term3;
}

SampleBlock random_block(std::mt19937_64& rng, long n, const std::vector<int>& widths) {
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::vector<std::vector<double>> groups;
  for (int w : widths) {
    std::vector<double> g(static_cast<std::size_t>(n * w));
    for (double& x : g) x = val(rng);
    groups.push_back(std::move(g));
  }
  return SampleBlock(std::move(groups), widths);
}

}  // namespace

TEST_SUITE("hsic") {

TEST_CASE("sample blocks validate their layout") {
  CHECK_THROWS_AS(SampleBlock({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(SampleBlock({{1.0}}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(SampleBlock({{1.0}}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(SampleBlock({{1.0, 2.0, 3.0}}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(SampleBlock({{1.0, 2.0}, {1.0}}, {1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      SampleBlock({{std::numeric_limits<double>::quiet_NaN()}}, {1}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      SampleBlock({{std::numeric_limits<double>::infinity()}}, {1}),
      std::invalid_argument);

  SampleBlock s({{1.0, 2.0, 3.0, 4.0}, {5.0, 6.0}}, {2, 1});
  CHECK(s.rows() == 2);
  CHECK(s.group_count() == 2);
  CHECK(s.width(0) == 2);
  CHECK(s.row(0, 1)[0] == 3.0);
  CHECK(s.row(1, 0)[0] == 5.0);
  CHECK_THROWS_AS(s.row(2, 0), std::out_of_range);
  CHECK_THROWS_AS(s.row(0, 2), std::out_of_range);
}

TEST_CASE("sample grams evaluate the kernel pairwise") {
  SampleBlock s({{0.0, 1.0, 3.0}}, {1});
  ContinuousKernel g = ContinuousKernel::gaussian(1.0, 1);
  std::vector<double> gram = sample_gram(s, 0, g);
  CHECK(gram[0] == 1.0);
  CHECK(gram[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(gram[2] == doctest::Approx(std::exp(-4.5)).epsilon(1e-14));
  CHECK(gram[1] == gram[3]);
  CHECK(gram[5] == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(sample_gram(s, 1, g), std::out_of_range);
  CHECK_THROWS_AS(sample_gram(s, 0, ContinuousKernel::gaussian(1.0, 2)),
                  std::invalid_argument);
}

TEST_CASE("the two-row delta example evaluates to one quarter") {
  // Identity Grams on two rows: (1/4)*2 + (2/4)^2 - (2/2)*(1/2) = 1/4.
  CHECK(dhsic_vstat(two_bit_block(), deltas(2)) == 0.25);
}

TEST_CASE("single-row samples carry no dependence signal") {
  SampleBlock s({{7.0}, {3.0}}, {1, 1});
  CHECK(dhsic_vstat(s, deltas(2)) == 0.0);
}

TEST_CASE("the estimator matches a brute-force three-sum oracle") {
  std::mt19937_64 rng(0x5EEDBEEF);
  for (int rep = 0; rep < 12; ++rep) {
    const long n = 5 + static_cast<long>(rng() % 26);
    const bool triple = rep % 2 == 1;
    std::vector<int> widths = triple ? std::vector<int>{1, 2, 1}
                                     : std::vector<int>{2, 1};
    SampleBlock s = random_block(rng, n, widths);
    std::vector<ContinuousKernel> ks;
    for (std::size_t m = 0; m < widths.size(); ++m)
      ks.push_back(m % 2 == 0
                       ? ContinuousKernel::gaussian(1.0 + 0.5 * static_cast<double>(m),
                                                    widths[m])
                       : ContinuousKernel::laplacian(1.5, widths[m]));
    CHECK(dhsic_vstat(s, ks) ==
          doctest::Approx(brute_vstat(s, ks)).epsilon(1e-12));
  }
}

TEST_CASE("two components reduce to the doubly centered trace formula") {
  std::mt19937_64 rng(0xFEED5EED);
  for (int rep = 0; rep < 10; ++rep) {
    const long n = 4 + static_cast<long>(rng() % 20);
    SampleBlock s = random_block(rng, n, {1, 1});
    std::vector<ContinuousKernel> ks = {ContinuousKernel::gaussian(0.8, 1),
                                        ContinuousKernel::laplacian(1.2, 1)};
    std::vector<double> K = sample_gram(s, 0, ks[0]);
    std::vector<double> L = sample_gram(s, 1, ks[1]);
    // (1/n^2) trace(K H L H) with H = I - J/n.
    auto center = [&](std::vector<double> g) {
      const double dn = static_cast<double>(n);
      std::vector<double> row(static_cast<std::size_t>(n), 0.0);
      double tot = 0.0;
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
          row[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i * n + j)] / dn;
          tot += g[static_cast<std::size_t>(i * n + j)];
        }
      tot /= dn * dn;
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
          g[static_cast<std::size_t>(i * n + j)] +=
              tot - row[static_cast<std::size_t>(i)] - row[static_cast<std::size_t>(j)];
      return g;
    };
    std::vector<double> Kc = center(K);
    std::vector<double> Lc = center(L);
    double tr = 0.0;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        tr += Kc[static_cast<std::size_t>(i * n + j)] *
              Lc[static_cast<std::size_t>(j * n + i)];
    tr /= static_cast<double>(n) * static_cast<double>(n);
    CHECK(dhsic_vstat(s, ks) == doctest::Approx(tr).epsilon(1e-10));
  }
}

TEST_CASE("the plug-in estimator equals the population value exactly") {
  std::mt19937_64 rng(0xABCD1234);
  for (int rep = 0; rep < 10; ++rep) {
    const bool triple = rep % 2 == 1;
    const std::vector<int> cats = triple ? std::vector<int>{2, 3, 2}
                                         : std::vector<int>{3, 2};
    const long n = 10 + static_cast<long>(rng() % 31);

    std::vector<std::vector<double>> groups(cats.size());
    std::vector<std::vector<long>> codes(cats.size());
    for (long i = 0; i < n; ++i)
      for (std::size_t m = 0; m < cats.size(); ++m) {
        const long c = static_cast<long>(rng() % static_cast<std::uint64_t>(cats[m]));
        codes[m].push_back(c);
        groups[m].push_back(static_cast<double>(c));
      }
    SampleBlock s(groups, std::vector<int>(cats.size(), 1));

    // Empirical joint as exact counts over the product space.
    SpaceShape shape(cats);
    std::vector<Scalar> mass(shape.total(), rq(0));
    for (long i = 0; i < n; ++i) {
      std::vector<int> idx;
      for (std::size_t m = 0; m < cats.size(); ++m)
        idx.push_back(static_cast<int>(codes[m][static_cast<std::size_t>(i)]));
      const std::size_t flat = shape.flatten(idx);
      mass[flat] = mass[flat] + rq(1, n);
    }
    JointDistribution emp{SignedMeasureTensor(shape, std::move(mass))};

    std::vector<KernelComponent> comps;
    for (int c : cats) comps.emplace_back(FiniteKernel::identity(c));
    const double pop =
        population_hsic(ProductKernelSpec(std::move(comps)), emp).to_double();
    const double vstat =
        dhsic_vstat(s, deltas(static_cast<int>(cats.size())));
    CHECK(vstat == doctest::Approx(pop).epsilon(1e-10));
  }
}

TEST_CASE("the population value is zero exactly on product joints") {
  ProductKernelSpec k({KernelComponent(FiniteKernel::identity(2)),
                       KernelComponent(FiniteKernel::identity(2))});
  JointDistribution indep{SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 6), rq(1, 3), rq(1, 6), rq(1, 3)})};
  CHECK(population_hsic(k, indep).is_zero());

  JointDistribution corr{SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 2), rq(0), rq(0), rq(1, 2)})};
  // Dependence tensor (1/4)(1,-1)(x)(1,-1): quad = (1/16)*2*2 = 1/4.
  CHECK(population_hsic(k, corr) == rq(1, 4));
}

TEST_CASE("the permutation test is deterministic and calibrated") {
  std::mt19937_64 rng(0x7E57);
  const long n = 40;
  std::vector<double> x(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (double& v : x) v = val(rng);
  std::vector<double> y = x;  // perfectly dependent
  SampleBlock dep({x, y}, {1, 1});
  std::vector<ContinuousKernel> ks = {ContinuousKernel::gaussian(0.7, 1),
                                      ContinuousKernel::gaussian(0.9, 1)};

  TestResult a = permutation_test(dep, ks, 199, 42);
  TestResult b = permutation_test(dep, ks, 199, 42);
  CHECK(a.statistic == b.statistic);
  CHECK(a.p_value == b.p_value);
  CHECK(a.permutations == 199);
  CHECK(a.seed == 42);
  REQUIRE(a.bandwidths.size() == 2);
  CHECK(a.bandwidths[0] == 0.7);
  CHECK(a.bandwidths[1] == 0.9);
  CHECK(a.p_value >= 1.0 / 200.0);
  CHECK(a.p_value <= 1.0);
  CHECK(a.p_value <= 0.05);  // identical columns are maximally dependent
  CHECK(a.statistic > 0.0);

  TestResult c = permutation_test(dep, ks, 199, 43);
  CHECK(c.statistic == a.statistic);  // observed part ignores the seed

  std::vector<double> z(static_cast<std::size_t>(n));
  for (double& v : z) v = val(rng);
  SampleBlock ind({x, z}, {1, 1});
  TestResult d = permutation_test(ind, ks, 199, 42);
  CHECK(d.p_value >= 1.0 / 200.0);
  CHECK(d.p_value <= 1.0);

  CHECK_THROWS_AS(permutation_test(SampleBlock({{1.0}, {1.0}}, {1, 1}), ks, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(permutation_test(dep, ks, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(
      permutation_test(dep, {ContinuousKernel::gaussian(1.0, 1)}, 10, 1),
      std::invalid_argument);
}

TEST_CASE("the median heuristic takes the lower median with a unit fallback") {
  SampleBlock s({{0.0, 1.0, 3.0}}, {1});
  CHECK(median_heuristic(s, 0) == 2.0);

  SampleBlock even({{0.0, 1.0, 2.0, 4.0}}, {1});
  CHECK(median_heuristic(even, 0) == 2.0);

  SampleBlock flat({{5.0, 5.0, 5.0}}, {1});
  CHECK(median_heuristic(flat, 0) == 1.0);

  SampleBlock wide({{0.0, 0.0, 3.0, 4.0}}, {2});
  CHECK(median_heuristic(wide, 0) == 5.0);

  CHECK_THROWS_AS(median_heuristic(SampleBlock({{1.0}}, {1}), 0),
                  std::invalid_argument);
}

TEST_CASE("the statistic is never meaningfully negative") {
  std::mt19937_64 rng(0xF0F0);
  for (int rep = 0; rep < 20; ++rep) {
    const long n = 3 + static_cast<long>(rng() % 18);
    SampleBlock s = random_block(rng, n, {1, 1});
    std::vector<ContinuousKernel> ks;
    switch (rep % 3) {
      case 0:
        ks = {ContinuousKernel::gaussian(0.5, 1),
              ContinuousKernel::laplacian(0.8, 1)};
        break;
      case 1:
        ks = {ContinuousKernel::constant(1), ContinuousKernel::gaussian(1.0, 1)};
        break;
      default:
        ks = {ContinuousKernel::discrete_delta(1),
              ContinuousKernel::laplacian(1.1, 1)};
        break;
    }
    CHECK(dhsic_vstat(s, ks) >= -1e-12);
  }
  // A constant component factor blinds the statistic entirely.
  SampleBlock s = random_block(rng, 9, {1, 1});
  std::vector<ContinuousKernel> blind = {ContinuousKernel::constant(1),
                                         ContinuousKernel::constant(1)};
  CHECK(dhsic_vstat(s, blind) == doctest::Approx(0.0).epsilon(1e-14));
}

}  // TEST_SUITE("hsic")
