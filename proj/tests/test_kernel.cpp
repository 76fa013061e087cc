#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tklab/kernel.hpp"

using namespace tklab;
using tktest::rq;

namespace {

ProductKernelSpec random_product(std::mt19937_64& rng, int max_order,
                                 int max_size, long strict_boost) {
  int order = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_order));
  std::vector<KernelComponent> comps;
  for (int m = 0; m < order; ++m) {
    int n = 2 + static_cast<int>(rng() % static_cast<unsigned>(max_size - 1));
    comps.emplace_back(tktest::random_psd_kernel(rng, n, strict_boost));
  }
  return ProductKernelSpec(std::move(comps));
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("finite kernel construction certifies positivity") {
  FiniteKernel id = FiniteKernel::identity(3);
  CHECK(id.size() == 3);
  CHECK(id.mode() == Num::rational);
  CHECK(id.psd().kind == PsdKind::strictly_positive);
  CHECK(id.g(0, 0) == rq(1));
  CHECK(id.g(0, 1) == rq(0));

  FiniteKernel ones = FiniteKernel::constant_one(3);
  CHECK(ones.psd().kind == PsdKind::semidefinite_singular);
  CHECK(ones.psd().rank == 1);

  FiniteKernel signed2 = FiniteKernel::two_delta_minus_one(2);
  CHECK(signed2.g(0, 0) == rq(1));
  CHECK(signed2.g(0, 1) == rq(-1));
  CHECK(signed2.psd().kind == PsdKind::semidefinite_singular);
}

TEST_CASE("non-PSD grams are rejected with a negative direction") {
  try {
    FiniteKernel::two_delta_minus_one(3);
    FAIL("2*delta-1 on three points is not PSD and must throw");
  } catch (const NotPsdError& e) {
    CHECK(e.certificate.kind == PsdKind::indefinite);
    REQUIRE(e.certificate.vector.has_value());
    REQUIRE(e.certificate.quad_value.has_value());
    // Recompute v^T G v against the rejected Gram: k(x,y) = 2[x==y]-1.
    const std::vector<Scalar>& v = *e.certificate.vector;
    Scalar quad = rq(0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        quad += v[static_cast<std::size_t>(i)] * (i == j ? rq(1) : rq(-1)) *
                v[static_cast<std::size_t>(j)];
    CHECK(quad == *e.certificate.quad_value);
    CHECK(quad < rq(0));
  }
  CHECK_THROWS_AS(FiniteKernel(2, {rq(1), rq(2), rq(2), rq(1)}), NotPsdError);
  CHECK_THROWS_AS(FiniteKernel(2, {rq(1), rq(2), rq(3), rq(1)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(FiniteKernel(2, {rq(1), rq(0), rq(0)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(FiniteKernel(0, {}), std::invalid_argument);
}

TEST_CASE("mode multiply applies the Gram along one axis") {
  FiniteKernel k(2, {rq(1), rq(2), rq(2), rq(5)});
  SignedMeasureTensor f(SpaceShape({2, 3}),
                        {rq(1), rq(0), rq(-1), rq(2), rq(1), rq(1, 2)});
  SignedMeasureTensor out = mode_multiply(k, f, 0);
  CHECK(out.shape() == f.shape());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      Scalar direct = rq(0);
      for (int v = 0; v < 2; ++v) {
        const std::array<int, 2> vj = {v, j};
        direct += k.g(i, v) * f.at(vj);
      }
      const std::array<int, 2> ij = {i, j};
      CHECK(out.at(ij) == direct);
    }
  CHECK_THROWS_AS(mode_multiply(k, f, 1), std::invalid_argument);
  CHECK_THROWS_AS(mode_multiply(k, f, 2), std::out_of_range);
}

TEST_CASE("quadratic form agrees with the materialized Kronecker Gram") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    ProductKernelSpec k = random_product(rng, 3, 4, rep % 2);
    if (k.finite_shape().total() > 64) continue;
    SignedMeasureTensor f = tktest::random_measure(rng, k.finite_shape());
    Scalar fast = quad_form(k, f);
    CHECK(fast == tktest::brute_quad(k, f));
    CHECK(fast >= rq(0));  // PSD components keep the form nonnegative
  }
}

TEST_CASE("quadratic form factorizes over product measures") {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 100; ++rep) {
    ProductKernelSpec k = random_product(rng, 3, 4, 0);
    std::vector<SignedMeasureTensor> factors;
    Scalar expect = rq(1);
    for (int m = 0; m < k.order(); ++m) {
      SignedMeasureTensor f =
          tktest::random_measure(rng, SpaceShape({k.finite(m).size()}));
      expect *= quad_form(k.finite(m), f);
      factors.push_back(std::move(f));
    }
    CHECK(quad_form(k, product_measure(factors)) == expect);
  }
}

TEST_CASE("quadratic form is homogeneous of degree two") {
  std::mt19937_64 rng(33);
  ProductKernelSpec k = random_product(rng, 2, 3, 1);
  SignedMeasureTensor f = tktest::random_measure(rng, k.finite_shape());
  Scalar base = quad_form(k, f);
  CHECK(quad_form(k, f.scaled(rq(-3, 2))) == base * rq(9, 4));
  CHECK(quad_form(k, f.scaled(rq(0))) == rq(0));
}

TEST_CASE("single-component form matches the one-factor product") {
  std::mt19937_64 rng(34);
  FiniteKernel k = tktest::random_psd_kernel(rng, 3, 1);
  SignedMeasureTensor f = tktest::random_measure(rng, SpaceShape({3}));
  CHECK(quad_form(k, f) ==
        quad_form(ProductKernelSpec({KernelComponent(k)}), f));
  SignedMeasureTensor wide = tktest::random_measure(rng, SpaceShape({2, 2}));
  CHECK_THROWS_AS(quad_form(k, wide), std::invalid_argument);
}

TEST_CASE("mmd2 separates distributions exactly") {
  FiniteKernel k2 = FiniteKernel::two_delta_minus_one(2);
  ProductKernelSpec spec({KernelComponent(k2)});
  JointDistribution delta0(
      SignedMeasureTensor(SpaceShape({2}), {rq(1), rq(0)}));
  JointDistribution uniform(
      SignedMeasureTensor(SpaceShape({2}), {rq(1, 2), rq(1, 2)}));
  CHECK(mmd2(spec, delta0, uniform) == rq(1));
  CHECK(mmd2(spec, uniform, delta0) == rq(1));
  CHECK(mmd2(spec, uniform, uniform) == rq(0));

  // The 2x2 signed product kernel cannot tell these two joints apart:
  // their difference is (1/4) * (1,-1) (x) (1,1), annihilated because the
  // second factor carries mass into the zero-energy direction.
  ProductKernelSpec prod({KernelComponent(k2), KernelComponent(k2)});
  JointDistribution pa(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 2), rq(1, 2), rq(0), rq(0)}));
  JointDistribution pb(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 4), rq(1, 4), rq(1, 4), rq(1, 4)}));
  CHECK(mmd2(prod, pa, pb) == rq(0));
  // The correlated/anticorrelated pair differs in an I-direction the same
  // kernel does separate.
  JointDistribution corr(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 2), rq(0), rq(0), rq(1, 2)}));
  JointDistribution anti(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(0), rq(1, 2), rq(1, 2), rq(0)}));
  CHECK(mmd2(prod, corr, anti) == rq(4));

  JointDistribution other(
      SignedMeasureTensor(SpaceShape({3}), {rq(1), rq(0), rq(0)}));
  CHECK_THROWS_AS(mmd2(spec, delta0, other), std::invalid_argument);
}

TEST_CASE("kronecker gram entries follow the product rule") {
  FiniteKernel a(2, {rq(1), rq(1, 2), rq(1, 2), rq(1)});
  FiniteKernel b = FiniteKernel::identity(3);
  ProductKernelSpec k({KernelComponent(a), KernelComponent(b)});
  std::vector<Scalar> g = kronecker_gram_entries(k);
  REQUIRE(g.size() == 36);
  SpaceShape s({2, 3});
  for (int i1 = 0; i1 < 2; ++i1)
    for (int j1 = 0; j1 < 3; ++j1)
      for (int i2 = 0; i2 < 2; ++i2)
        for (int j2 = 0; j2 < 3; ++j2) {
          const std::array<int, 2> r = {i1, j1}, c = {i2, j2};
          CHECK(g[s.flatten(r) * 6 + s.flatten(c)] ==
                a.g(i1, i2) * b.g(j1, j2));
        }
}

TEST_CASE("continuous kernel evaluation") {
  ContinuousKernel g = ContinuousKernel::gaussian(1.0, 1);
  const std::array<double, 1> x0 = {0.0}, x2 = {2.0};
  CHECK(g.eval(x0, x2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(g.eval(x0, x0) == 1.0);

  ContinuousKernel l = ContinuousKernel::laplacian(2.0, 1);
  CHECK(l.eval(x0, x2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  ContinuousKernel c = ContinuousKernel::constant(1);
  CHECK(c.eval(x0, x2) == 1.0);

  ContinuousKernel d = ContinuousKernel::discrete_delta(1);
  CHECK(d.eval(x0, x2) == 0.0);
  CHECK(d.eval(x2, x2) == 1.0);

  ContinuousKernel g2 = ContinuousKernel::gaussian(0.5, 2);
  const std::array<double, 2> p = {0.0, 0.0}, q = {1.0, 1.0};
  CHECK(g2.eval(p, q) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(g2.eval(x0, x2), std::invalid_argument);

  CHECK_THROWS_AS(ContinuousKernel::gaussian(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ContinuousKernel::laplacian(-1.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ContinuousKernel::gaussian(1.0, 0), std::invalid_argument);
}

TEST_CASE("translation-invariant metadata") {
  CHECK(ContinuousKernel::gaussian(1.0, 2).ti_meta()->spectral_support_full);
  CHECK(ContinuousKernel::laplacian(1.0, 1).ti_meta()->spectral_support_full);
  CHECK_FALSE(ContinuousKernel::constant(1).ti_meta()->spectral_support_full);
  CHECK_FALSE(ContinuousKernel::discrete_delta(1).ti_meta().has_value());
}

TEST_CASE("product spec bookkeeping") {
  CHECK_THROWS_AS(ProductKernelSpec({}), std::invalid_argument);

  ProductKernelSpec fin({KernelComponent(FiniteKernel::identity(2)),
                         KernelComponent(FiniteKernel::identity(3))});
  CHECK(fin.order() == 2);
  CHECK(fin.all_finite());
  CHECK_FALSE(fin.all_continuous());
  CHECK(fin.finite_shape() == SpaceShape({2, 3}));
  CHECK(fin.finite_mode() == Num::rational);

  ProductKernelSpec cont({KernelComponent(ContinuousKernel::gaussian(1.0, 1)),
                          KernelComponent(ContinuousKernel::constant(2))});
  CHECK(cont.all_continuous());
  CHECK_FALSE(cont.all_finite());
  CHECK_THROWS_AS(cont.finite_shape(), std::invalid_argument);
  CHECK_THROWS_AS(cont.finite(0), std::invalid_argument);

  ProductKernelSpec mixed({KernelComponent(FiniteKernel::identity(2)),
                           KernelComponent(ContinuousKernel::gaussian(1.0, 1))});
  CHECK_FALSE(mixed.all_finite());
  CHECK_FALSE(mixed.all_continuous());

  ProductKernelSpec modes(
      {KernelComponent(FiniteKernel::identity(2)),
       KernelComponent(FiniteKernel::identity(2, Num::real))});
  CHECK_THROWS_AS(modes.finite_mode(), std::invalid_argument);
}

}  // TEST_SUITE
