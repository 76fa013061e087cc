#include <doctest.h>

#include <array>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "tklab/tensor.hpp"

using namespace tklab;
using tktest::rq;

TEST_SUITE("tensor") {

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(SpaceShape({}), std::invalid_argument);
  CHECK_THROWS_AS(SpaceShape({2, 0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(SpaceShape({-1}), std::invalid_argument);
  SpaceShape s({2, 3, 4});
  CHECK(s.order() == 3);
  CHECK(s.total() == 24);
  CHECK(s.size(1) == 3);
}

TEST_CASE("flatten is row-major with the first coordinate slowest") {
  SpaceShape s({2, 3, 4});
  const std::array<int, 3> i100 = {1, 0, 0};
  const std::array<int, 3> i010 = {0, 1, 0};
  const std::array<int, 3> i001 = {0, 0, 1};
  CHECK(s.flatten(i100) == 12);
  CHECK(s.flatten(i010) == 4);
  CHECK(s.flatten(i001) == 1);
}

TEST_CASE("flatten and unflatten are inverse over whole spaces") {
  for (const SpaceShape& s :
       {SpaceShape({7}), SpaceShape({2, 3, 4}), SpaceShape({3, 1, 5, 2}),
        SpaceShape({2, 2, 2, 2, 2, 2}), SpaceShape({17, 3, 5})}) {
    for (std::size_t f = 0; f < s.total(); ++f) {
      std::vector<int> idx = s.unflatten(f);
      CHECK(idx.size() == static_cast<std::size_t>(s.order()));
      for (int m = 0; m < s.order(); ++m) {
        CHECK(idx[static_cast<std::size_t>(m)] >= 0);
        CHECK(idx[static_cast<std::size_t>(m)] < s.size(m));
      }
      CHECK(s.flatten(idx) == f);
    }
  }
}

TEST_CASE("flatten rejects out-of-range coordinates") {
  SpaceShape s({2, 3});
  const std::array<int, 2> bad1 = {2, 0};
  const std::array<int, 2> bad2 = {0, -1};
  const std::array<int, 1> bad3 = {0};
  CHECK_THROWS_AS(s.flatten(bad1), std::out_of_range);
  CHECK_THROWS_AS(s.flatten(bad2), std::out_of_range);
  CHECK_THROWS_AS(s.flatten(bad3), std::invalid_argument);
}

TEST_CASE("measure construction and coefficient access") {
  SignedMeasureTensor f(SpaceShape({2, 2}),
                        {rq(1), rq(-2), rq(3, 2), rq(0)});
  CHECK(f.mode() == Num::rational);
  CHECK(f.size() == 4);
  const std::array<int, 2> i10 = {1, 0};
  CHECK(f.at(i10) == rq(3, 2));
  CHECK(f.total_mass() == rq(1, 2));
  CHECK(f.l1_norm() == rq(9, 2));
  CHECK(f.linf_norm() == rq(2));
  CHECK_FALSE(f.is_zero());
  CHECK(SignedMeasureTensor(SpaceShape({3}), Num::rational).is_zero());
  CHECK_THROWS_AS(
      SignedMeasureTensor(SpaceShape({2, 2}), {rq(1), rq(2), rq(3)}),
      std::invalid_argument);
  CHECK_THROWS_AS(SignedMeasureTensor(SpaceShape({2}),
                                      {rq(1), Scalar::real(0.5)}),
                  std::invalid_argument);
}

TEST_CASE("marginal sums out every other axis") {
  std::mt19937_64 rng(11);
  SpaceShape s({3, 2, 4});
  SignedMeasureTensor f = tktest::random_measure(rng, s);
  for (int axis = 0; axis < 3; ++axis) {
    SignedMeasureTensor m = f.marginal(axis);
    CHECK(m.shape() == SpaceShape({s.size(axis)}));
    CHECK(m.total_mass() == f.total_mass());
    // Re-derive one entry by direct summation.
    Scalar direct = rq(0);
    for (std::size_t flat = 0; flat < s.total(); ++flat)
      if (s.unflatten(flat)[static_cast<std::size_t>(axis)] == 1)
        direct += f.flat(flat);
    const std::array<int, 1> one = {1};
    CHECK(m.at(one) == direct);
  }
  CHECK_THROWS_AS(f.marginal(3), std::out_of_range);
}

TEST_CASE("measure arithmetic") {
  std::mt19937_64 rng(12);
  SpaceShape s({2, 3});
  SignedMeasureTensor a = tktest::random_measure(rng, s);
  SignedMeasureTensor b = tktest::random_measure(rng, s);
  CHECK((a + b) - b == a);
  CHECK(a.scaled(rq(3)).total_mass() == a.total_mass() * rq(3));
  CHECK((a - a).is_zero());
  SignedMeasureTensor other(SpaceShape({3, 2}), Num::rational);
  CHECK_THROWS_AS(a + other, std::invalid_argument);
}

TEST_CASE("product measure multiplies factor entries") {
  SignedMeasureTensor f1(SpaceShape({2}), {rq(1), rq(-1)});
  SignedMeasureTensor f2(SpaceShape({3}), {rq(1, 2), rq(1, 3), rq(1, 6)});
  SignedMeasureTensor p = product_measure({f1, f2});
  CHECK(p.shape() == SpaceShape({2, 3}));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const std::array<int, 2> ij = {i, j};
      const std::array<int, 1> ii = {i}, jj = {j};
      CHECK(p.at(ij) == f1.at(ii) * f2.at(jj));
    }
  CHECK(p.total_mass() == f1.total_mass() * f2.total_mass());
  CHECK_THROWS_AS(product_measure({}), std::invalid_argument);
}

TEST_CASE("marginal of a product recovers the scaled factor") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<SignedMeasureTensor> fs;
    std::vector<Scalar> masses;
    std::uniform_int_distribution<int> nsz(1, 4);
    int order = 2 + static_cast<int>(rng() % 2);
    for (int m = 0; m < order; ++m) {
      SignedMeasureTensor f =
          tktest::random_measure(rng, SpaceShape({nsz(rng)}));
      masses.push_back(f.total_mass());
      fs.push_back(std::move(f));
    }
    SignedMeasureTensor p = product_measure(fs);
    for (int axis = 0; axis < order; ++axis) {
      Scalar other = rq(1);
      for (int m = 0; m < order; ++m)
        if (m != axis) other *= masses[static_cast<std::size_t>(m)];
      CHECK(p.marginal(axis) ==
            fs[static_cast<std::size_t>(axis)].scaled(other));
    }
  }
}

TEST_CASE("joint distribution enforces normalization and positivity") {
  CHECK_NOTHROW(JointDistribution(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 4), rq(1, 4), rq(1, 4), rq(1, 4)})));
  CHECK_THROWS_AS(JointDistribution(SignedMeasureTensor(
                      SpaceShape({2}), {rq(1, 2), rq(1, 3)})),
                  std::invalid_argument);
  CHECK_THROWS_AS(JointDistribution(SignedMeasureTensor(
                      SpaceShape({2}), {rq(3, 2), rq(-1, 2)})),
                  std::invalid_argument);
  // Float mode gets a 1e-12 mass tolerance.
  CHECK_NOTHROW(JointDistribution(SignedMeasureTensor(
      SpaceShape({2}), {Scalar::real(0.5 + 1e-13), Scalar::real(0.5)})));
  CHECK_THROWS_AS(JointDistribution(SignedMeasureTensor(
                      SpaceShape({2}),
                      {Scalar::real(0.5 + 1e-9), Scalar::real(0.5)})),
                  std::invalid_argument);
}

TEST_CASE("dependence tensor has exactly vanishing marginals") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 50; ++rep) {
    int order = 2 + static_cast<int>(rng() % 2);
    std::vector<int> sizes;
    for (int m = 0; m < order; ++m)
      sizes.push_back(2 + static_cast<int>(rng() % 3));
    JointDistribution p = tktest::random_joint(rng, SpaceShape(sizes));
    SignedMeasureTensor a = i_class_element(p);
    CHECK(a.shape() == p.shape());
    for (int axis = 0; axis < order; ++axis)
      CHECK(a.marginal(axis).is_zero());
    CHECK(a.total_mass() == rq(0));
  }
}

TEST_CASE("dependence tensor of the correlated two-point pair") {
  // P(0,0) = P(1,1) = 1/2: marginals are uniform, so A = P - U (x) U.
  JointDistribution p(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 2), rq(0), rq(0), rq(1, 2)}));
  SignedMeasureTensor a = i_class_element(p);
  const std::array<int, 2> d00 = {0, 0}, d01 = {0, 1};
  CHECK(a.at(d00) == rq(1, 4));
  CHECK(a.at(d01) == rq(-1, 4));
  CHECK_THROWS_AS(
      i_class_element(JointDistribution(
          SignedMeasureTensor(SpaceShape({4}), {rq(1), rq(0), rq(0), rq(0)}))),
      std::invalid_argument);
}

TEST_CASE("class membership: mass-zero and product classes") {
  SignedMeasureTensor zero_sum(SpaceShape({2, 2}),
                               {rq(1), rq(-1), rq(2), rq(-2)});
  CHECK(class_membership(zero_sum, MeasureClass::mb).member);
  CHECK(class_membership(zero_sum, MeasureClass::mb0).member);
  SignedMeasureTensor massy(SpaceShape({2, 2}), {rq(1), rq(0), rq(0), rq(0)});
  ClassCheck c = class_membership(massy, MeasureClass::mb0);
  CHECK_FALSE(c.member);
  CHECK(c.residuals.at(0).first == "mass");
  CHECK(c.residuals.at(0).second == rq(1));
}

TEST_CASE("class membership: factorizable mass-zero products") {
  // (1,-1) (x) (2,-2): rank one with every factor zero-sum.
  SignedMeasureTensor f1(SpaceShape({2}), {rq(1), rq(-1)});
  SignedMeasureTensor f2(SpaceShape({2}), {rq(2), rq(-2)});
  SignedMeasureTensor p = product_measure({f1, f2});
  CHECK(class_membership(p, MeasureClass::prod_mb0).member);

  // (1,-1) (x) (1,2) is rank one but its second factor carries mass 3, so it
  // misses the all-factors-zero-sum class with that exact residual.
  SignedMeasureTensor skew =
      product_measure({f1, SignedMeasureTensor(SpaceShape({2}), {rq(1), rq(2)})});
  ClassCheck c = class_membership(skew, MeasureClass::prod_mb0);
  CHECK_FALSE(c.member);
  bool saw = false;
  for (const auto& [name, value] : c.residuals)
    if (name == "factor-mass-2") {
      saw = true;
      CHECK(value == rq(3));
    }
  CHECK(saw);

  // Flip one entry: the array no longer factors at all.
  SignedMeasureTensor broken = p;
  broken.set_flat(0, rq(3));
  CHECK_FALSE(class_membership(broken, MeasureClass::prod_mb0).member);
}

TEST_CASE("class membership: vanishing marginals") {
  std::mt19937_64 rng(15);
  JointDistribution p = tktest::random_joint(rng, SpaceShape({3, 3}));
  SignedMeasureTensor a = i_class_element(p);
  ClassCheck ok = class_membership(a, MeasureClass::i_marginal);
  CHECK(ok.member);
  for (const auto& [name, value] : ok.residuals) CHECK(value == rq(0));
  SignedMeasureTensor off = a;
  off.set_flat(0, a.flat(0) + rq(1, 7));
  ClassCheck bad = class_membership(off, MeasureClass::i_marginal);
  CHECK_FALSE(bad.member);
  bool saw = false;
  for (const auto& [name, value] : bad.residuals)
    if (name == "marginal-linf") {
      saw = true;
      CHECK(value == rq(1, 7));
    }
  CHECK(saw);
}

// Counts zero-sum one-dimensional slices through the pivot of a rank <= 1
// tensor; the factor test below needs "how many factors are zero-sum".
static int zero_sum_factor_count(const SignedMeasureTensor& a) {
  std::size_t pivot = 0;
  Scalar best = Scalar::zero(a.mode());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (best < a.flat(i).abs()) {
      best = a.flat(i).abs();
      pivot = i;
    }
  std::vector<int> idx = a.shape().unflatten(pivot);
  int zero_sum = 0;
  for (int m = 0; m < a.shape().order(); ++m) {
    Scalar mass = Scalar::zero(a.mode());
    std::vector<int> probe = idx;
    for (int v = 0; v < a.shape().size(m); ++v) {
      probe[static_cast<std::size_t>(m)] = v;
      mass += a.at(probe);
    }
    if (mass.is_zero()) ++zero_sum;
  }
  return zero_sum;
}

TEST_CASE("factorizable dependence tensors need two zero-sum factors") {
  // A nonzero dependence tensor that factors as an outer product must have
  // at least two zero-sum factors: with fewer, every one-dimensional slice
  // value is pinned to a vanishing marginal, forcing the whole tensor to
  // zero. So any rank <= 1 dependence tensor with at most one zero-sum
  // factor must be exactly zero.
  std::mt19937_64 rng(16);
  for (const SpaceShape& shape : {SpaceShape({2, 2}), SpaceShape({2, 2, 2})}) {
    for (int rep = 0; rep < 150; ++rep) {
      JointDistribution p = tktest::random_joint(rng, shape);
      SignedMeasureTensor a = i_class_element(p);
      ClassCheck c = class_membership(a, MeasureClass::prod_mb0);
      bool rank_le_1 = false;
      for (const auto& [name, value] : c.residuals)
        if (name == "max-minor") rank_le_1 = value.is_zero();
      if (rank_le_1 && zero_sum_factor_count(a) <= 1) CHECK(a.is_zero());
      if (!a.is_zero() && c.member) {
        CHECK(rank_le_1);
        CHECK(zero_sum_factor_count(a) >= 2);
      }
    }
  }
}

TEST_CASE("a correlated pair factors into zero-sum factors while nonzero") {
  // The intersection of dependence tensors with factorizable mass-zero
  // products is NOT trivial: the correlated two-point pair produces
  // (1/2,-1/2) (x) (1/2,-1/2), nonzero yet a product of zero-sum factors.
  // This pins the class semantics: the membership probe must report it.
  JointDistribution p(SignedMeasureTensor(
      SpaceShape({2, 2}), {rq(1, 2), rq(0), rq(0), rq(1, 2)}));
  SignedMeasureTensor a = i_class_element(p);
  CHECK_FALSE(a.is_zero());
  CHECK(class_membership(a, MeasureClass::prod_mb0).member);
  CHECK(class_membership(a, MeasureClass::i_marginal).member);
  CHECK(zero_sum_factor_count(a) == 2);
}

}  // TEST_SUITE
