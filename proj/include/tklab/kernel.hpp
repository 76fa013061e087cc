#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tklab/exact.hpp"
#include "tklab/tensor.hpp"

namespace tklab {

struct NotPsdError : std::invalid_argument {
  NotPsdError(const std::string& msg, PsdCertificate c)
      : std::invalid_argument(msg), certificate(std::move(c)) {}
  PsdCertificate certificate;
};

// Kernel on one finite space, stored as its Gram matrix. Construction
// verifies symmetry and positive semidefiniteness and keeps the resulting
// certificate; a non-PSD Gram throws NotPsdError carrying the negative
// direction.
class FiniteKernel {
 public:
  FiniteKernel(int size, std::vector<Scalar> gram);

  static FiniteKernel identity(int n, Num mode = Num::rational);
  static FiniteKernel constant_one(int n, Num mode = Num::rational);
  // k(x, y) = 2*[x == y] - 1. PSD only for n <= 2.
  static FiniteKernel two_delta_minus_one(int n, Num mode = Num::rational);

  int size() const { return n_; }
  Num mode() const { return mode_; }
  const Scalar& g(int i, int j) const {
    return gram_[static_cast<std::size_t>(i) * n_ + j];
  }
  const std::vector<Scalar>& gram() const { return gram_; }
  const PsdCertificate& psd() const { return cert_; }

 private:
  int n_;
  Num mode_;
  std::vector<Scalar> gram_;
  PsdCertificate cert_;
};

enum class ContinuousFamily { gaussian, laplacian, constant, discrete_delta };

// Declared spectral metadata for the translation-invariant families: the
// classification of product kernels on R^d runs entirely off the
// full-support flag of each component's spectral measure.
struct TranslationInvariantMeta {
  ContinuousFamily family;
  bool spectral_support_full;
};

class ContinuousKernel {
 public:
  static ContinuousKernel gaussian(double bandwidth, int dim);
  static ContinuousKernel laplacian(double bandwidth, int dim);
  static ContinuousKernel constant(int dim);
  static ContinuousKernel discrete_delta(int dim);

  ContinuousFamily family() const { return family_; }
  double bandwidth() const { return bandwidth_; }
  int dim() const { return dim_; }

  double eval(std::span<const double> x, std::span<const double> y) const;

  // Present for the translation-invariant continuous families only; the
  // discrete-delta kernel is not continuous and has no spectral density.
  std::optional<TranslationInvariantMeta> ti_meta() const;

 private:
  ContinuousKernel(ContinuousFamily f, double bw, int dim)
      : family_(f), bandwidth_(bw), dim_(dim) {}
  ContinuousFamily family_;
  double bandwidth_;
  int dim_;
};

using KernelComponent = std::variant<FiniteKernel, ContinuousKernel>;

// Tensor product of component kernels, finite or continuous.
class ProductKernelSpec {
 public:
  explicit ProductKernelSpec(std::vector<KernelComponent> components);

  int order() const { return static_cast<int>(comps_.size()); }
  const KernelComponent& component(int m) const { return comps_.at(m); }
  bool all_finite() const;
  bool all_continuous() const;
  const FiniteKernel& finite(int m) const;
  const ContinuousKernel& continuous(int m) const;
  SpaceShape finite_shape() const;  // requires all_finite
  Num finite_mode() const;          // requires all_finite, modes must agree

 private:
  std::vector<KernelComponent> comps_;
};

// Applies the component Gram along one tensor axis.
SignedMeasureTensor mode_multiply(const FiniteKernel& g,
                                  const SignedMeasureTensor& f, int axis);

// vec(F)^T (G_1 (x) ... (x) G_M) vec(F), computed one factor at a time; the
// Kronecker product is never materialized. Exact in rational mode,
// nonnegative for PSD components.
Scalar quad_form(const ProductKernelSpec& k, const SignedMeasureTensor& f);

// Single-component view of the same quadratic form; f must be
// one-dimensional.
Scalar quad_form(const FiniteKernel& k, const SignedMeasureTensor& f);

// Squared maximum mean discrepancy between two distributions on the product
// space: the quadratic form evaluated at P - Q.
Scalar mmd2(const ProductKernelSpec& k, const JointDistribution& p,
            const JointDistribution& q);

// Explicit Kronecker Gram of an all-finite product, row-major over the
// flattened product space. Intended for cross-checks against the
// factor-by-factor path; cost grows with the full product size.
std::vector<Scalar> kronecker_gram_entries(const ProductKernelSpec& k);

}  // namespace tklab
