#include "tklab/kernel.hpp"

#include <cmath>

namespace tklab {

FiniteKernel::FiniteKernel(int size, std::vector<Scalar> gram)
    : n_(size), mode_(Num::rational), gram_(std::move(gram)) {
  if (n_ < 1) throw std::invalid_argument("kernel needs at least one point");
  if (gram_.size() != static_cast<std::size_t>(n_) * n_)
    throw std::invalid_argument("gram size does not match space size");
  mode_ = gram_.front().mode();
  cert_ = validate_psd(n_, gram_);
  if (cert_.kind == PsdKind::indefinite)
    throw NotPsdError("gram matrix is not positive semidefinite", cert_);
}

FiniteKernel FiniteKernel::identity(int n, Num mode) {
  std::vector<Scalar> g(static_cast<std::size_t>(n) * n, Scalar::zero(mode));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i) * n + i] = Scalar::one(mode);
  return FiniteKernel(n, std::move(g));
}

FiniteKernel FiniteKernel::constant_one(int n, Num mode) {
  std::vector<Scalar> g(static_cast<std::size_t>(n) * n, Scalar::one(mode));
  return FiniteKernel(n, std::move(g));
}

FiniteKernel FiniteKernel::two_delta_minus_one(int n, Num mode) {
  std::vector<Scalar> g(static_cast<std::size_t>(n) * n,
                        -Scalar::one(mode));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i) * n + i] = Scalar::one(mode);
  return FiniteKernel(n, std::move(g));
}

ContinuousKernel ContinuousKernel::gaussian(double bandwidth, int dim) {
  if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be > 0");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return ContinuousKernel(ContinuousFamily::gaussian, bandwidth, dim);
}

ContinuousKernel ContinuousKernel::laplacian(double bandwidth, int dim) {
  if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be > 0");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return ContinuousKernel(ContinuousFamily::laplacian, bandwidth, dim);
}

ContinuousKernel ContinuousKernel::constant(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return ContinuousKernel(ContinuousFamily::constant, 0.0, dim);
}

ContinuousKernel ContinuousKernel::discrete_delta(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return ContinuousKernel(ContinuousFamily::discrete_delta, 0.0, dim);
}

double ContinuousKernel::eval(std::span<const double> x,
                              std::span<const double> y) const {
  if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_)
    throw std::invalid_argument("point dimension mismatch");
  switch (family_) {
    case ContinuousFamily::gaussian: {
      double d2 = 0;
      for (int i = 0; i < dim_; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
      return std::exp(-d2 / (2 * bandwidth_ * bandwidth_));
    }
    case ContinuousFamily::laplacian: {
      double d1 = 0;
      for (int i = 0; i < dim_; ++i) d1 += std::abs(x[i] - y[i]);
      return std::exp(-d1 / bandwidth_);
    }
    case ContinuousFamily::constant:
      return 1.0;
    case ContinuousFamily::discrete_delta:
      for (int i = 0; i < dim_; ++i)
        if (x[i] != y[i]) return 0.0;
      return 1.0;
  }
  throw std::logic_error("unknown kernel family");
}

std::optional<TranslationInvariantMeta> ContinuousKernel::ti_meta() const {
  switch (family_) {
    case ContinuousFamily::gaussian:
      return TranslationInvariantMeta{family_, true};
    case ContinuousFamily::laplacian:
      return TranslationInvariantMeta{family_, true};
    case ContinuousFamily::constant:
      // Spectral measure is a point mass at the origin.
      return TranslationInvariantMeta{family_, false};
    case ContinuousFamily::discrete_delta:
      return std::nullopt;
  }
  return std::nullopt;
}

ProductKernelSpec::ProductKernelSpec(std::vector<KernelComponent> components)
    : comps_(std::move(components)) {
  if (comps_.empty()) throw std::invalid_argument("product needs a component");
}

bool ProductKernelSpec::all_finite() const {
  for (const auto& c : comps_)
    if (!std::holds_alternative<FiniteKernel>(c)) return false;
  return true;
}

bool ProductKernelSpec::all_continuous() const {
  for (const auto& c : comps_)
    if (!std::holds_alternative<ContinuousKernel>(c)) return false;
  return true;
}

const FiniteKernel& ProductKernelSpec::finite(int m) const {
  const auto* k = std::get_if<FiniteKernel>(&comps_.at(m));
  if (!k) throw std::invalid_argument("component is not a finite kernel");
  return *k;
}

const ContinuousKernel& ProductKernelSpec::continuous(int m) const {
  const auto* k = std::get_if<ContinuousKernel>(&comps_.at(m));
  if (!k) throw std::invalid_argument("component is not continuous");
  return *k;
}

SpaceShape ProductKernelSpec::finite_shape() const {
  std::vector<int> sizes;
  for (int m = 0; m < order(); ++m) sizes.push_back(finite(m).size());
  return SpaceShape(std::move(sizes));
}

Num ProductKernelSpec::finite_mode() const {
  Num mode = finite(0).mode();
  for (int m = 1; m < order(); ++m)
    if (finite(m).mode() != mode)
      throw ModeError("product components mix rational and float grams");
  return mode;
}

SignedMeasureTensor mode_multiply(const FiniteKernel& g,
                                  const SignedMeasureTensor& f, int axis) {
  const SpaceShape& shape = f.shape();
  if (axis < 0 || axis >= shape.order())
    throw std::out_of_range("axis out of range");
  if (g.size() != shape.size(axis))
    throw std::invalid_argument("kernel size does not match axis");
  if (g.mode() != f.mode()) throw ModeError("kernel/measure mode mismatch");

  std::size_t n = static_cast<std::size_t>(g.size());
  std::size_t stride = 1;
  for (int m = shape.order() - 1; m > axis; --m)
    stride *= static_cast<std::size_t>(shape.size(m));
  std::size_t block = stride * n;

  SignedMeasureTensor out(shape, f.mode());
  for (std::size_t base = 0; base < shape.total(); base += block) {
    for (std::size_t lo = 0; lo < stride; ++lo) {
      for (std::size_t i = 0; i < n; ++i) {
        Scalar acc = Scalar::zero(f.mode());
        for (std::size_t j = 0; j < n; ++j) {
          const Scalar& c = f.flat(base + j * stride + lo);
          if (!c.is_zero())
            acc += g.g(static_cast<int>(i), static_cast<int>(j)) * c;
        }
        out.set_flat(base + i * stride + lo, acc);
      }
    }
  }
  return out;
}

Scalar quad_form(const ProductKernelSpec& k, const SignedMeasureTensor& f) {
  if (!k.all_finite())
    throw std::invalid_argument("quadratic form needs finite components");
  if (!(k.finite_shape() == f.shape()))
    throw std::invalid_argument("kernel and measure shapes differ");
  SignedMeasureTensor y = f;
  for (int m = 0; m < k.order(); ++m) y = mode_multiply(k.finite(m), y, m);
  Scalar acc = Scalar::zero(f.mode());
  for (std::size_t i = 0; i < f.size(); ++i) acc += f.flat(i) * y.flat(i);
  return acc;
}

Scalar quad_form(const FiniteKernel& k, const SignedMeasureTensor& f) {
  if (f.shape().order() != 1)
    throw std::invalid_argument("expected a one-dimensional measure");
  SignedMeasureTensor y = mode_multiply(k, f, 0);
  Scalar acc = Scalar::zero(f.mode());
  for (std::size_t i = 0; i < f.size(); ++i) acc += f.flat(i) * y.flat(i);
  return acc;
}

Scalar mmd2(const ProductKernelSpec& k, const JointDistribution& p,
            const JointDistribution& q) {
  return quad_form(k, p.measure() - q.measure());
}

std::vector<Scalar> kronecker_gram_entries(const ProductKernelSpec& k) {
  if (!k.all_finite())
    throw std::invalid_argument("kronecker gram needs finite components");
  SpaceShape shape = k.finite_shape();
  Num mode = k.finite_mode();
  std::size_t n = shape.total();
  std::vector<Scalar> out(n * n, Scalar::zero(mode));
  for (std::size_t i = 0; i < n; ++i) {
    auto ii = shape.unflatten(i);
    for (std::size_t j = 0; j < n; ++j) {
      auto jj = shape.unflatten(j);
      Scalar v = Scalar::one(mode);
      for (int m = 0; m < k.order(); ++m) v *= k.finite(m).g(ii[m], jj[m]);
      out[i * n + j] = v;
    }
  }
  return out;
}

}  // namespace tklab
