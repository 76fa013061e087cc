#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tklab/scalar.hpp"

namespace tklab {

// Shape of a finite product space X_1 x ... x X_M. Every factor has at
// least one point. Linear indices are row-major with the first coordinate
// slowest; coordinates are 0-based internally and 1-based in reports.
class SpaceShape {
 public:
  explicit SpaceShape(std::vector<int> sizes);

  int order() const { return static_cast<int>(sizes_.size()); }
  int size(int axis) const { return sizes_.at(axis); }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t total() const { return total_; }

  std::size_t flatten(std::span<const int> idx) const;
  std::vector<int> unflatten(std::size_t flat) const;

  friend bool operator==(const SpaceShape& a, const SpaceShape& b) {
    return a.sizes_ == b.sizes_;
  }

 private:
  std::vector<int> sizes_;
  std::size_t total_;
};

// Dense signed measure on a finite product space. All coefficients share one
// arithmetic mode.
class SignedMeasureTensor {
 public:
  SignedMeasureTensor(SpaceShape shape, Num mode);
  SignedMeasureTensor(SpaceShape shape, std::vector<Scalar> coefficients);

  const SpaceShape& shape() const { return shape_; }
  Num mode() const { return mode_; }
  std::size_t size() const { return c_.size(); }

  const Scalar& flat(std::size_t i) const { return c_.at(i); }
  void set_flat(std::size_t i, Scalar v);
  const Scalar& at(std::span<const int> idx) const {
    return c_[shape_.flatten(idx)];
  }
  void set(std::span<const int> idx, Scalar v) {
    set_flat(shape_.flatten(idx), std::move(v));
  }
  const std::vector<Scalar>& coefficients() const { return c_; }

  Scalar total_mass() const;
  bool is_zero() const;
  Scalar linf_norm() const;
  Scalar l1_norm() const;

  // Sums out every axis except `axis`; the one-dimensional marginal.
  SignedMeasureTensor marginal(int axis) const;

  SignedMeasureTensor scaled(const Scalar& c) const;
  friend SignedMeasureTensor operator+(const SignedMeasureTensor& a,
                                       const SignedMeasureTensor& b);
  friend SignedMeasureTensor operator-(const SignedMeasureTensor& a,
                                       const SignedMeasureTensor& b);
  friend bool operator==(const SignedMeasureTensor& a,
                         const SignedMeasureTensor& b);

 private:
  SpaceShape shape_;
  Num mode_;
  std::vector<Scalar> c_;
};

// Outer product of one-dimensional factors: (f_1 x ... x f_M)(i_1..i_M) =
// prod_m f_m(i_m).
SignedMeasureTensor product_measure(
    const std::vector<SignedMeasureTensor>& factors);

// Probability distribution: nonnegative coefficients summing to one
// (exactly in rational mode, within 1e-12 in float mode).
class JointDistribution {
 public:
  explicit JointDistribution(SignedMeasureTensor t);
  const SignedMeasureTensor& measure() const { return t_; }
  const SpaceShape& shape() const { return t_.shape(); }
  Num mode() const { return t_.mode(); }

 private:
  SignedMeasureTensor t_;
};

// P - (x)_m P_m, the dependence part of a joint distribution. Requires
// order >= 2. Every one-dimensional marginal of the result is exactly zero.
SignedMeasureTensor i_class_element(const JointDistribution& p);

enum class MeasureClass {
  mb,           // any finite signed measure: no constraint
  mb0,          // total mass zero
  prod_mb0,     // outer product of factors that each have mass zero
  i_marginal,   // necessary test for P - (x)P_m form: all marginals zero
};

struct ClassCheck {
  bool member = false;
  // Named residual magnitudes backing the verdict (all zero on membership in
  // rational mode).
  std::vector<std::pair<std::string, Scalar>> residuals;
};

ClassCheck class_membership(const SignedMeasureTensor& f, MeasureClass cls);

}  // namespace tklab
