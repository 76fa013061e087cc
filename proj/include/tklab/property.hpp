#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tklab/kernel.hpp"

namespace tklab {

enum class Verdict { holds, fails, undecided };

enum class Provenance { exact_linear_algebra, theorem_inference, search };

// The five distinguishing properties of a product kernel, ordered from the
// strongest requirement to the weakest along the implication chain
// universal => characteristic => tensor-char => tensor0-char, with
// characteristic => I-char branching off.
enum class ProductProperty {
  universal,
  characteristic,
  tensor_char,
  tensor0_char,
  i_char,
};

inline constexpr std::array<ProductProperty, 5> kProductProperties = {
    ProductProperty::universal, ProductProperty::characteristic,
    ProductProperty::tensor_char, ProductProperty::tensor0_char,
    ProductProperty::i_char};

const char* property_name(ProductProperty p);
const char* verdict_name(Verdict v);
const char* provenance_name(Provenance p);

// One decided property with its machine-checkable backing. `rule` is the
// stable tag naming the decision rule (e.g. "ldlt-pd", "thm-4", "rem-4",
// "thm-2i", "thm-2ii", "eq-8", "rem-1iii", "thm-3", "vacuous",
// "open-cell").
struct Finding {
  Verdict verdict = Verdict::undecided;
  Provenance provenance = Provenance::theorem_inference;
  std::string rule;
  std::string note;
  std::optional<PsdCertificate> algebra;
  std::optional<SignedMeasureTensor> witness;
  std::optional<JointDistribution> witness_joint;
  std::string witness_class;
};

struct ComponentFindings {
  Finding characteristic;
  Finding universal;
};

struct ProductReport {
  std::vector<ComponentFindings> components;
  std::map<ProductProperty, Finding> product;
  std::vector<std::string> trace;
};

// Strict positive definiteness of the Gram; on failure the certificate is an
// explicit nonzero null vector.
Finding is_universal_finite(const FiniteKernel& k);

// Strict positive definiteness of B^T G B where the columns of B span the
// zero-sum vectors (e_i - e_n); on failure the certificate is a nonzero
// zero-sum vector with vanishing quadratic form.
Finding is_characteristic_finite(const FiniteKernel& k);

// Decides all five product properties for an all-finite product kernel via
// the component tests and the product rules, emitting certificates or
// constructed witnesses. The one genuinely rule-undecidable cell (three or
// more nondegenerate components, all characteristic, not all universal) is
// reported undecided and left to the witness search.
ProductReport decide_product_properties(const ProductKernelSpec& k);

// Classification of products of the declared translation-invariant
// continuous families through their spectral support flags.
ProductReport classify_translation_invariant(const ProductKernelSpec& k);

struct InconsistentFacts : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using FactSet = std::map<ProductProperty, Verdict>;

// Fixed-point propagation over the implication web: holds flows along the
// implications, fails flows against them. With `product_rules` the
// product-kernel equivalence edge tensor-char => universal is added. Throws
// InconsistentFacts when propagation forces both verdicts on one property.
FactSet apply_implication_closure(FactSet facts, bool product_rules = true);

}  // namespace tklab
