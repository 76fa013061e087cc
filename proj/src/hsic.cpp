#include "tklab/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tklab/parallel.hpp"
#include "tklab/tensor.hpp"

namespace tklab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic in-place Fisher-Yates; modulo draw keeps the stream fixed
// across standard libraries.
void shuffle_indices(std::vector<long>& idx, std::mt19937_64& eng) {
  for (long i = static_cast<long>(idx.size()) - 1; i > 0; --i) {
    const long j = static_cast<long>(eng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
}

struct GramStats {
  std::vector<double> gram;       // n x n
  std::vector<double> row_mean;   // n
  double total_mean = 0.0;
};

GramStats gram_stats(const SampleBlock& s, int group, const ContinuousKernel& k) {
  GramStats g;
  const long n = s.rows();
  g.gram = sample_gram(s, group, k);
  g.row_mean.assign(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = 0; j < n; ++j)
      acc += g.gram[static_cast<std::size_t>(i * n + j)];
    g.row_mean[static_cast<std::size_t>(i)] = acc / static_cast<double>(n);
    total += acc;
  }
  g.total_mean = total / (static_cast<double>(n) * static_cast<double>(n));
  return g;
}

// V-statistic from precomputed Grams; perms (if given) holds one row
// permutation per component, component 0 always the identity.
double vstat_from_grams(const std::vector<GramStats>& grams, long n,
                        const std::vector<std::vector<long>>* perms) {
  const std::size_t m_count = grams.size();
  double term1 = 0.0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      double prod = 1.0;
      for (std::size_t m = 0; m < m_count; ++m) {
        long pi = i, pj = j;
        if (perms != nullptr) {
          pi = (*perms)[m][static_cast<std::size_t>(i)];
          pj = (*perms)[m][static_cast<std::size_t>(j)];
        }
        prod *= grams[m].gram[static_cast<std::size_t>(pi * n + pj)];
      }
      term1 += prod;
    }
  }
  term1 /= static_cast<double>(n) * static_cast<double>(n);

  double term2 = 1.0;
  for (const GramStats& g : grams) term2 *= g.total_mean;

  double term3 = 0.0;
  for (long i = 0; i < n; ++i) {
    double prod = 1.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      long pi = i;
      if (perms != nullptr) pi = (*perms)[m][static_cast<std::size_t>(i)];
      prod *= grams[m].row_mean[static_cast<std::size_t>(pi)];
    }
    term3 += prod;
  }
  term3 *= 2.0 / static_cast<double>(n);

  return term1 + term2 - term3;
}

std::vector<GramStats> all_gram_stats(const SampleBlock& s,
                                      const std::vector<ContinuousKernel>& kernels) {
  if (static_cast<int>(kernels.size()) != s.group_count())
    throw std::invalid_argument("one kernel per sample group required");
  std::vector<GramStats> grams;
  grams.reserve(kernels.size());
  for (int m = 0; m < s.group_count(); ++m)
    grams.push_back(gram_stats(s, m, kernels[static_cast<std::size_t>(m)]));
  return grams;
}

}  // namespace

SampleBlock::SampleBlock(std::vector<std::vector<double>> groups,
                         std::vector<int> widths)
    : groups_(std::move(groups)), widths_(std::move(widths)) {
  if (groups_.empty() || groups_.size() != widths_.size())
    throw std::invalid_argument("sample block needs matching groups and widths");
  for (std::size_t m = 0; m < groups_.size(); ++m) {
    const int d = widths_[m];
    if (d <= 0) throw std::invalid_argument("group width must be positive");
    if (groups_[m].size() % static_cast<std::size_t>(d) != 0)
      throw std::invalid_argument("group data not a multiple of its width");
    const long r = static_cast<long>(groups_[m].size()) / d;
    if (m == 0)
      rows_ = r;
    else if (r != rows_)
      throw std::invalid_argument("groups disagree on row count");
    for (double v : groups_[m])
      if (!std::isfinite(v))
        throw std::invalid_argument("sample values must be finite");
  }
}

std::span<const double> SampleBlock::row(int m, long i) const {
  if (m < 0 || m >= group_count()) throw std::out_of_range("group index");
  if (i < 0 || i >= rows_) throw std::out_of_range("row index");
  const int d = widths_[static_cast<std::size_t>(m)];
  const double* base =
      groups_[static_cast<std::size_t>(m)].data() + static_cast<std::size_t>(i) * d;
  return {base, static_cast<std::size_t>(d)};
}

std::vector<double> sample_gram(const SampleBlock& s, int group,
                                const ContinuousKernel& k) {
  if (group < 0 || group >= s.group_count())
    throw std::out_of_range("group index");
  if (k.dim() != s.width(group))
    throw std::invalid_argument("kernel dimension does not match group width");
  const long n = s.rows();
  std::vector<double> gram(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j <= i; ++j) {
      const double v = k.eval(s.row(group, i), s.row(group, j));
      gram[static_cast<std::size_t>(i * n + j)] = v;
      gram[static_cast<std::size_t>(j * n + i)] = v;
    }
  }
  return gram;
}

Scalar population_hsic(const ProductKernelSpec& k, const JointDistribution& p) {
  return quad_form(k, i_class_element(p));
}

double dhsic_vstat(const SampleBlock& s,
                   const std::vector<ContinuousKernel>& kernels) {
  const long n = s.rows();
  if (n < 1) throw std::invalid_argument("need at least one sample row");
  if (n == 1) return 0.0;
  return vstat_from_grams(all_gram_stats(s, kernels), n, nullptr);
}

TestResult permutation_test(const SampleBlock& s,
                            const std::vector<ContinuousKernel>& kernels,
                            long permutations, std::uint64_t seed) {
  const long n = s.rows();
  if (n < 2) throw std::invalid_argument("permutation test needs at least two rows");
  if (permutations < 1)
    throw std::invalid_argument("at least one permutation replicate required");
  const std::vector<GramStats> grams = all_gram_stats(s, kernels);
  const std::size_t m_count = grams.size();

  TestResult result;
  result.statistic = vstat_from_grams(grams, n, nullptr);
  result.permutations = permutations;
  result.seed = seed;
  result.bandwidths.reserve(m_count);
  for (const ContinuousKernel& k : kernels)
    result.bandwidths.push_back(k.bandwidth());

  std::vector<double> replicate(static_cast<std::size_t>(permutations), 0.0);
  parallel_for(permutations, [&](long r) {
    std::mt19937_64 eng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<std::vector<long>> perms(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      perms[m].resize(static_cast<std::size_t>(n));
      std::iota(perms[m].begin(), perms[m].end(), 0L);
      if (m > 0) shuffle_indices(perms[m], eng);
    }
    replicate[static_cast<std::size_t>(r)] = vstat_from_grams(grams, n, &perms);
  });

  long at_least = 0;
  for (double v : replicate)
    if (v >= result.statistic) ++at_least;
  result.p_value = static_cast<double>(1 + at_least) /
                   static_cast<double>(1 + permutations);
  return result;
}

double median_heuristic(const SampleBlock& s, int group) {
  const long n = s.rows();
  if (n < 2) throw std::invalid_argument("median heuristic needs at least two rows");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (long i = 0; i < n; ++i) {
    const std::span<const double> a = s.row(group, i);
    for (long j = i + 1; j < n; ++j) {
      const std::span<const double> b = s.row(group, j);
      double sq = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        const double d = a[t] - b[t];
        sq += d * d;
      }
      dists.push_back(std::sqrt(sq));
    }
  }
  std::sort(dists.begin(), dists.end());
  const double med = dists[(dists.size() - 1) / 2];
  return med == 0.0 ? 1.0 : med;
}

}  // namespace tklab
