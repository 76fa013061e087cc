#pragma once

#include <random>
#include <vector>

#include "tklab/kernel.hpp"

namespace tktest {

using namespace tklab;

inline Scalar rq(long n, long d = 1) { return Scalar(rat(n, d)); }

// Uniform small rational with numerator in [-span, span] and denominator in
// [1, den].
inline Rational random_rational(std::mt19937_64& rng, long span = 3,
                                long den = 4) {
  std::uniform_int_distribution<long> num(-span, span);
  std::uniform_int_distribution<long> d(1, den);
  return rat(num(rng), d(rng));
}

// Random exactly-PSD Gram G = A^T A from small integer A; `boost` adds
// boost * I on top, making the matrix strictly positive definite.
inline std::vector<Scalar> random_psd_gram(std::mt19937_64& rng, int n,
                                           long boost = 0) {
  std::uniform_int_distribution<long> entry(-2, 2);
  std::vector<long> a(static_cast<std::size_t>(n) * n);
  for (long& x : a) x = entry(rng);
  std::vector<Scalar> g(static_cast<std::size_t>(n) * n, rq(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long s = 0;
      for (int k = 0; k < n; ++k)
        s += a[static_cast<std::size_t>(k) * n + i] *
             a[static_cast<std::size_t>(k) * n + j];
      if (i == j) s += boost;
      g[static_cast<std::size_t>(i) * n + j] = rq(s);
    }
  return g;
}

inline FiniteKernel random_psd_kernel(std::mt19937_64& rng, int n,
                                      long boost = 0) {
  return FiniteKernel(n, random_psd_gram(rng, n, boost));
}

// Random rational signed measure on `shape`.
inline SignedMeasureTensor random_measure(std::mt19937_64& rng,
                                          const SpaceShape& shape,
                                          long span = 3, long den = 4) {
  std::vector<Scalar> c;
  c.reserve(shape.total());
  for (std::size_t i = 0; i < shape.total(); ++i)
    c.push_back(Scalar(random_rational(rng, span, den)));
  return SignedMeasureTensor(shape, std::move(c));
}

// Random rational joint distribution: nonnegative integer weights
// normalized by their total.
inline JointDistribution random_joint(std::mt19937_64& rng,
                                      const SpaceShape& shape, long top = 6) {
  std::uniform_int_distribution<long> w(0, top);
  std::vector<long> raw(shape.total());
  long total = 0;
  for (long& x : raw) {
    x = w(rng);
    total += x;
  }
  if (total == 0) {
    raw[0] = 1;
    total = 1;
  }
  std::vector<Scalar> c;
  c.reserve(raw.size());
  for (long x : raw) c.push_back(rq(x, total));
  return JointDistribution(SignedMeasureTensor(shape, std::move(c)));
}

// Reference quadratic form through the fully materialized Kronecker Gram,
// kept deliberately naive as an oracle for the factor-by-factor path.
inline Scalar brute_quad(const ProductKernelSpec& k,
                         const SignedMeasureTensor& f) {
  const std::vector<Scalar> g = kronecker_gram_entries(k);
  const std::size_t n = f.size();
  Scalar acc = Scalar::zero(f.mode());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      acc += f.flat(i) * g[i * n + j] * f.flat(j);
  return acc;
}

}  // namespace tktest
