#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tklab/kernel.hpp"

namespace tklab {

// A candidate annihilating measure together with everything needed to check
// it independently: the exact quadratic-form value, a maximizing nonzero
// entry, and the residuals of its claimed measure-class membership.
struct WitnessReport {
  SignedMeasureTensor witness;
  std::string measure_class;  // "Mb" | "Mb0" | "[ProdMb]0" | "ProdMb0" | "I"
  std::string origin;         // "fixture" | "closed-form" | "construction" | "search"
  Scalar quad_value;
  bool nonzero = false;
  std::vector<int> nonzero_entry;  // 0-based multi-index of a max-|.| entry
  Scalar nonzero_magnitude;
  std::vector<std::pair<std::string, Scalar>> residuals;
  std::optional<JointDistribution> joint;  // the P behind an I-class witness
};

// Computes quadratic form, maximizing entry, and class residuals of
// `witness` against `k`.
WitnessReport make_witness_report(const ProductKernelSpec& k,
                                  SignedMeasureTensor witness,
                                  std::string measure_class, std::string origin,
                                  std::optional<JointDistribution> joint = std::nullopt);

struct Fixture {
  std::string name;
  ProductKernelSpec kernel;
  WitnessReport report;
};

// Canonical exact witnesses: "example1", "example2-w1", "example2-w2",
// "example3". Throws on unknown names.
Fixture fixture(const std::string& name);

// Two-parameter family of 2x2 joint distributions that factorize exactly:
// p11 = a(1-(a+b))/(a+b), p12 = b(1-(a+b))/(a+b), p21 = a, p22 = b.
JointDistribution factorizing_family(const Rational& a, const Rational& b);

// Six-parameter closed-form family of joints on the 2x2x2 cube whose
// dependence tensor P - (x)P_m is annihilated by the triple product of
// 2*delta-1 kernels. Parameters must lie in [0,1] and keep the closed-form
// denominator nonzero; the generated joint is validated entry by entry.
struct DependentJointOutcome {
  JointDistribution joint;
  WitnessReport report;  // class "I" against the triple 2*delta-1 kernel
};
DependentJointOutcome closed_form_dependent_joint(const std::array<Rational, 6>& z);

// Splits a zero-sum vector v into the normalized positive/negative parts
// (v+/s, v-/s) with s the shared total weight; both embed identically under
// any kernel annihilating v.
struct EmbeddingCollision {
  JointDistribution p;
  JointDistribution q;
};
EmbeddingCollision collision_from_null(const std::vector<Scalar>& v);

// Finds two distinct distributions with equal kernel embeddings, when the
// kernel is not characteristic; empty otherwise.
std::optional<EmbeddingCollision> find_embedding_collision(const FiniteKernel& k);

// Builds the dependent joint F = (P (x) delta_z (x) Q + P' (x) delta_zp (x) Q)/2
// from an embedding collision (P, P') in component 1 and two distinct points
// z != zp of component 2; `tails` fixes the distributions of components 3..M.
// The dependence tensor of F is annihilated by the product kernel exactly.
struct CollisionWitnessOutcome {
  JointDistribution joint;
  WitnessReport report;  // class "I"; nonzero == false flags a degenerate pair
};
CollisionWitnessOutcome dependence_witness_from_collision(
    const ProductKernelSpec& k, const EmbeddingCollision& c, int z, int zp,
    const std::vector<JointDistribution>& tails);

// Outcome of the numerical witness search: a verified exact witness, a
// certified impossibility (decided by the rule engine), or an honest
// "inconclusive" when the budget runs out.
struct SearchOutcome {
  enum class Status { witness_found, certified_impossible, inconclusive };
  Status status = Status::inconclusive;
  std::string rule;
  std::string note;
  std::optional<WitnessReport> witness;
  long evaluations = 0;
  int restarts = 0;
};

// Multi-start projected-gradient minimization of the dependence energy
// HSIC^2(P) over the probability simplex with an l1-separation penalty.
// Float candidates below threshold are rounded to small-denominator
// rationals and re-verified exactly; only exact successes are reported.
// Deterministic in (k, budget, seed, separation).
SearchOutcome search_I_witness(const ProductKernelSpec& k, long budget,
                               std::uint64_t seed, const Rational& separation);

// The search's smooth objective at a point p of the flattened simplex:
// value = HSIC^2 of p under k, gradient = its exact analytic derivative in
// the free coordinates (before simplex projection). Exposed so the
// derivative can be cross-checked against finite differences.
struct SearchObjective {
  double value = 0.0;
  std::vector<double> gradient;
};
SearchObjective search_objective(const ProductKernelSpec& k,
                                 const std::vector<double>& p);

struct VerifyOutcome {
  bool ok = false;
  std::vector<std::pair<std::string, Scalar>> residuals;
};

// Recomputes the quadratic form, the maximizing entry, and the class
// residuals of `w` from scratch in exact arithmetic.
VerifyOutcome verify_witness(const ProductKernelSpec& k, const WitnessReport& w);

}  // namespace tklab
