#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tklab/kernel.hpp"

namespace tklab {

// n rows of M fixed-width real vector groups (one group per component).
class SampleBlock {
 public:
  // groups[m] holds rows*widths[m] values, row-major. All groups must agree
  // on the row count and contain only finite values.
  SampleBlock(std::vector<std::vector<double>> groups, std::vector<int> widths);

  int group_count() const { return static_cast<int>(widths_.size()); }
  long rows() const { return rows_; }
  int width(int m) const { return widths_.at(static_cast<std::size_t>(m)); }
  std::span<const double> row(int m, long i) const;
  const std::vector<double>& group(int m) const {
    return groups_.at(static_cast<std::size_t>(m));
  }

 private:
  std::vector<std::vector<double>> groups_;
  std::vector<int> widths_;
  long rows_ = 0;
};

// n x n Gram of one component group under a continuous kernel.
std::vector<double> sample_gram(const SampleBlock& s, int group,
                                const ContinuousKernel& k);

// Squared population HSIC: the quadratic form of the dependence tensor
// P - (x)P_m. Exact in rational mode; zero iff the embeddings of P and of
// the product of its marginals coincide.
Scalar population_hsic(const ProductKernelSpec& k, const JointDistribution& p);

// Empirical V-statistic: the plug-in of the squared HSIC under the empirical
// distribution. With per-component Grams K_m:
//   (1/n^2) sum_{ij} prod_m K_m[i,j]
//   + prod_m ((1/n^2) sum_{ij} K_m[i,j])
//   - (2/n) sum_i prod_m ((1/n) sum_j K_m[i,j]).
double dhsic_vstat(const SampleBlock& s,
                   const std::vector<ContinuousKernel>& kernels);

struct TestResult {
  double statistic = 0.0;
  long permutations = 0;
  double p_value = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> bandwidths;
};

// Permutation test of joint independence: components 2..M are row-permuted
// independently per replicate, replicate r drawing from a generator seeded
// by (seed, r); p = (1 + #{replicate >= observed}) / (1 + permutations).
// Deterministic in (samples, kernels, permutations, seed).
TestResult permutation_test(const SampleBlock& s,
                            const std::vector<ContinuousKernel>& kernels,
                            long permutations, std::uint64_t seed);

// Lower median of the pairwise Euclidean distances of one group, falling
// back to 1.0 when the median vanishes.
double median_heuristic(const SampleBlock& s, int group);

}  // namespace tklab
