#include "tklab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tklab {

namespace {

constexpr std::size_t kMaxTotal = std::size_t{1} << 48;

// Float-mode residuals count as zero below 1e-10 relative to the given
// scale (floored at 1); rational residuals must vanish exactly.
bool residual_zero(const Scalar& r, double scale) {
  if (r.mode() == Num::rational) return r.is_zero();
  return std::abs(r.to_double()) <= 1e-10 * std::max(1.0, scale);
}

}  // namespace

SpaceShape::SpaceShape(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("empty shape");
  total_ = 1;
  for (int n : sizes_) {
    if (n < 1) throw std::invalid_argument("shape entries must be >= 1");
    if (total_ > kMaxTotal / static_cast<std::size_t>(n))
      throw std::invalid_argument("shape too large to index");
    total_ *= static_cast<std::size_t>(n);
  }
}

std::size_t SpaceShape::flatten(std::span<const int> idx) const {
  if (idx.size() != sizes_.size())
    throw std::invalid_argument("index order mismatch");
  std::size_t flat = 0;
  for (std::size_t m = 0; m < sizes_.size(); ++m) {
    if (idx[m] < 0 || idx[m] >= sizes_[m])
      throw std::out_of_range("index out of range");
    flat = flat * static_cast<std::size_t>(sizes_[m]) +
           static_cast<std::size_t>(idx[m]);
  }
  return flat;
}

std::vector<int> SpaceShape::unflatten(std::size_t flat) const {
  if (flat >= total_) throw std::out_of_range("flat index out of range");
  std::vector<int> idx(sizes_.size());
  for (std::size_t m = sizes_.size(); m-- > 0;) {
    idx[m] = static_cast<int>(flat % static_cast<std::size_t>(sizes_[m]));
    flat /= static_cast<std::size_t>(sizes_[m]);
  }
  return idx;
}

SignedMeasureTensor::SignedMeasureTensor(SpaceShape shape, Num mode)
    : shape_(std::move(shape)),
      mode_(mode),
      c_(shape_.total(), Scalar::zero(mode)) {}

SignedMeasureTensor::SignedMeasureTensor(SpaceShape shape,
                                         std::vector<Scalar> coefficients)
    : shape_(std::move(shape)), mode_(Num::rational), c_(std::move(coefficients)) {
  if (c_.size() != shape_.total())
    throw std::invalid_argument("coefficient count does not match shape");
  mode_ = c_.front().mode();
  for (const Scalar& s : c_)
    if (s.mode() != mode_)
      throw ModeError("tensor coefficients mix rational and float values");
}

void SignedMeasureTensor::set_flat(std::size_t i, Scalar v) {
  if (v.mode() != mode_) throw ModeError("coefficient mode mismatch");
  c_.at(i) = std::move(v);
}

Scalar SignedMeasureTensor::total_mass() const {
  Scalar s = Scalar::zero(mode_);
  for (const Scalar& c : c_) s += c;
  return s;
}

bool SignedMeasureTensor::is_zero() const {
  return std::all_of(c_.begin(), c_.end(),
                     [](const Scalar& c) { return c.is_zero(); });
}

Scalar SignedMeasureTensor::linf_norm() const {
  Scalar best = Scalar::zero(mode_);
  for (const Scalar& c : c_) {
    Scalar a = c.abs();
    if (best < a) best = a;
  }
  return best;
}

Scalar SignedMeasureTensor::l1_norm() const {
  Scalar s = Scalar::zero(mode_);
  for (const Scalar& c : c_) s += c.abs();
  return s;
}

SignedMeasureTensor SignedMeasureTensor::marginal(int axis) const {
  if (axis < 0 || axis >= shape_.order())
    throw std::out_of_range("marginal axis out of range");
  std::size_t stride = 1;
  for (int m = shape_.order() - 1; m > axis; --m)
    stride *= static_cast<std::size_t>(shape_.size(m));
  SignedMeasureTensor out(SpaceShape({shape_.size(axis)}), mode_);
  std::vector<Scalar> acc(static_cast<std::size_t>(shape_.size(axis)),
                          Scalar::zero(mode_));
  for (std::size_t i = 0; i < c_.size(); ++i) {
    std::size_t coord = (i / stride) % static_cast<std::size_t>(shape_.size(axis));
    acc[coord] += c_[i];
  }
  for (std::size_t v = 0; v < acc.size(); ++v) out.set_flat(v, acc[v]);
  return out;
}

SignedMeasureTensor SignedMeasureTensor::scaled(const Scalar& c) const {
  SignedMeasureTensor out(shape_, mode_);
  for (std::size_t i = 0; i < c_.size(); ++i) out.set_flat(i, c_[i] * c);
  return out;
}

SignedMeasureTensor operator+(const SignedMeasureTensor& a,
                              const SignedMeasureTensor& b) {
  if (!(a.shape_ == b.shape_)) throw std::invalid_argument("shape mismatch");
  SignedMeasureTensor out(a.shape_, a.mode_);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    out.set_flat(i, a.c_[i] + b.c_[i]);
  return out;
}

SignedMeasureTensor operator-(const SignedMeasureTensor& a,
                              const SignedMeasureTensor& b) {
  if (!(a.shape_ == b.shape_)) throw std::invalid_argument("shape mismatch");
  SignedMeasureTensor out(a.shape_, a.mode_);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    out.set_flat(i, a.c_[i] - b.c_[i]);
  return out;
}

bool operator==(const SignedMeasureTensor& a, const SignedMeasureTensor& b) {
  if (!(a.shape_ == b.shape_) || a.mode_ != b.mode_) return false;
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    if (a.c_[i] != b.c_[i]) return false;
  return true;
}

SignedMeasureTensor product_measure(
    const std::vector<SignedMeasureTensor>& factors) {
  if (factors.empty()) throw std::invalid_argument("no factors");
  std::vector<int> sizes;
  Num mode = factors.front().mode();
  for (const auto& f : factors) {
    if (f.shape().order() != 1)
      throw std::invalid_argument("product factors must be one-dimensional");
    if (f.mode() != mode) throw ModeError("product factors mix modes");
    sizes.push_back(f.shape().size(0));
  }
  SpaceShape shape(sizes);
  SignedMeasureTensor out(shape, mode);
  for (std::size_t i = 0; i < shape.total(); ++i) {
    auto idx = shape.unflatten(i);
    Scalar v = Scalar::one(mode);
    for (std::size_t m = 0; m < factors.size(); ++m)
      v *= factors[m].flat(static_cast<std::size_t>(idx[m]));
    out.set_flat(i, v);
  }
  return out;
}

JointDistribution::JointDistribution(SignedMeasureTensor t) : t_(std::move(t)) {
  for (std::size_t i = 0; i < t_.size(); ++i)
    if (t_.flat(i).sign() < 0)
      throw std::invalid_argument("distribution has a negative coefficient");
  Scalar mass = t_.total_mass();
  if (t_.mode() == Num::rational) {
    if (mass != Scalar(Rational(1)))
      throw std::invalid_argument("distribution mass is not exactly 1");
  } else if (std::abs(mass.to_double() - 1.0) > 1e-12) {
    throw std::invalid_argument("distribution mass is not 1 within 1e-12");
  }
}

SignedMeasureTensor i_class_element(const JointDistribution& p) {
  const SignedMeasureTensor& t = p.measure();
  if (t.shape().order() < 2)
    throw std::invalid_argument("dependence part needs at least two factors");
  std::vector<SignedMeasureTensor> marginals;
  for (int m = 0; m < t.shape().order(); ++m)
    marginals.push_back(t.marginal(m));
  return t - product_measure(marginals);
}

namespace {

struct Rank1Result {
  bool rank_le_one = false;
  Scalar max_minor;
  std::vector<Scalar> factor_masses;  // raw pivot-slice sums, scale-free
};

// Rank <= 1 for every mode-m matricization, decided through 2x2 minors
// against the first row carrying a nonzero entry. On success extracts the
// pivot slices as factors and records their masses.
Rank1Result rank_one_probe(const SignedMeasureTensor& f) {
  Rank1Result res;
  res.max_minor = Scalar::zero(f.mode());
  const SpaceShape& shape = f.shape();
  double scale = f.linf_norm().to_double();
  double minor_scale = scale * scale;

  bool all_rank1 = true;
  for (int axis = 0; axis < shape.order() && all_rank1; ++axis) {
    std::size_t rows = static_cast<std::size_t>(shape.size(axis));
    std::size_t cols = shape.total() / rows;
    std::size_t stride = 1;
    for (int m = shape.order() - 1; m > axis; --m)
      stride *= static_cast<std::size_t>(shape.size(m));
    auto entry = [&](std::size_t r, std::size_t c) -> const Scalar& {
      std::size_t hi = c / stride, lo = c % stride;
      return f.flat((hi * rows + r) * stride + lo);
    };
    // First row with a nonzero entry, and a nonzero column within it.
    std::size_t r0 = rows, a0 = 0;
    for (std::size_t r = 0; r < rows && r0 == rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (!entry(r, c).is_zero()) {
          r0 = r;
          a0 = c;
          break;
        }
    if (r0 == rows) continue;  // zero tensor: rank 0
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == r0) continue;
      for (std::size_t c = 0; c < cols; ++c) {
        Scalar minor = entry(r0, a0) * entry(r, c) - entry(r0, c) * entry(r, a0);
        Scalar mag = minor.abs();
        if (res.max_minor < mag) res.max_minor = mag;
        if (!residual_zero(minor, minor_scale)) all_rank1 = false;
      }
      if (!all_rank1) break;
    }
  }
  res.rank_le_one = all_rank1;
  if (!all_rank1) return res;

  if (f.is_zero()) {
    // The zero measure is the empty product of zero-mass factors.
    for (int m = 0; m < shape.order(); ++m)
      res.factor_masses.push_back(Scalar::zero(f.mode()));
    return res;
  }

  // Pivot at the entry of largest magnitude; factor m is the pivot slice
  // along axis m. Factor masses are invariant under the scaling freedom.
  std::size_t pivot = 0;
  Scalar best = Scalar::zero(f.mode());
  for (std::size_t i = 0; i < f.size(); ++i) {
    Scalar a = f.flat(i).abs();
    if (best < a) {
      best = a;
      pivot = i;
    }
  }
  std::vector<int> pivot_idx = shape.unflatten(pivot);
  for (int m = 0; m < shape.order(); ++m) {
    Scalar sum = Scalar::zero(f.mode());
    std::vector<int> idx = pivot_idx;
    for (int v = 0; v < shape.size(m); ++v) {
      idx[m] = v;
      sum += f.at(idx);
    }
    res.factor_masses.push_back(sum);
  }
  return res;
}

}  // namespace

ClassCheck class_membership(const SignedMeasureTensor& f, MeasureClass cls) {
  ClassCheck out;
  double l1 = f.l1_norm().to_double();
  switch (cls) {
    case MeasureClass::mb:
      out.member = true;
      return out;
    case MeasureClass::mb0: {
      Scalar mass = f.total_mass();
      out.residuals.emplace_back("mass", mass.abs());
      out.member = residual_zero(mass, l1);
      return out;
    }
    case MeasureClass::i_marginal: {
      Scalar worst = Scalar::zero(f.mode());
      for (int m = 0; m < f.shape().order(); ++m) {
        Scalar linf = f.marginal(m).linf_norm();
        if (worst < linf) worst = linf;
      }
      out.residuals.emplace_back("marginal-linf", worst);
      out.member = residual_zero(worst, l1);
      return out;
    }
    case MeasureClass::prod_mb0: {
      Rank1Result r = rank_one_probe(f);
      out.residuals.emplace_back("max-minor", r.max_minor);
      bool sums_zero = true;
      for (std::size_t m = 0; m < r.factor_masses.size(); ++m) {
        out.residuals.emplace_back("factor-mass-" + std::to_string(m + 1),
                                   r.factor_masses[m].abs());
        if (!residual_zero(r.factor_masses[m], l1)) sums_zero = false;
      }
      out.member = r.rank_le_one && sums_zero;
      return out;
    }
  }
  throw std::logic_error("unknown measure class");
}

}  // namespace tklab
