#include "tklab/property.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace tklab {
namespace {

Scalar scalar_one(Num mode) { return Scalar::one(mode); }

std::vector<Scalar> delta_vector(int n, Num mode) {
  std::vector<Scalar> v(static_cast<std::size_t>(n), Scalar::zero(mode));
  v[0] = scalar_one(mode);
  return v;
}

std::vector<Scalar> zero_sum_pair(int n, Num mode) {
  std::vector<Scalar> v(static_cast<std::size_t>(n), Scalar::zero(mode));
  v[0] = scalar_one(mode);
  v[1] = -scalar_one(mode);
  return v;
}

SignedMeasureTensor factor_tensor(int size, std::vector<Scalar> coeffs) {
  return SignedMeasureTensor(SpaceShape({size}), std::move(coeffs));
}

Scalar vector_mass(const std::vector<Scalar>& v, Num mode) {
  Scalar s = Scalar::zero(mode);
  for (const Scalar& x : v) s += x;
  return s;
}

// Assembles a product measure whose factor at slot m is `special[m]` when
// present and the first-point delta otherwise.
SignedMeasureTensor embed_factors(const ProductKernelSpec& spec,
                                  const std::map<int, std::vector<Scalar>>& special) {
  const Num mode = spec.finite_mode();
  std::vector<SignedMeasureTensor> factors;
  factors.reserve(static_cast<std::size_t>(spec.order()));
  for (int m = 0; m < spec.order(); ++m) {
    const int n = spec.finite(m).size();
    auto it = special.find(m);
    factors.push_back(factor_tensor(
        n, it != special.end() ? it->second : delta_vector(n, mode)));
  }
  return product_measure(factors);
}

std::string verdict_note(const std::vector<int>& where, const char* what) {
  std::ostringstream os;
  os << what;
  for (std::size_t i = 0; i < where.size(); ++i)
    os << (i == 0 ? " " : ", ") << (where[i] + 1);
  return os.str();
}

Finding make_rule_finding(Verdict verdict, std::string rule, std::string note) {
  Finding f;
  f.verdict = verdict;
  f.provenance = Provenance::theorem_inference;
  f.rule = std::move(rule);
  f.note = std::move(note);
  return f;
}

}  // namespace

const char* property_name(ProductProperty p) {
  switch (p) {
    case ProductProperty::universal: return "universal";
    case ProductProperty::characteristic: return "characteristic";
    case ProductProperty::tensor_char: return "tensor-char";
    case ProductProperty::tensor0_char: return "tensor0-char";
    case ProductProperty::i_char: return "I-char";
  }
  return "?";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::holds: return "Holds";
    case Verdict::fails: return "Fails";
    case Verdict::undecided: return "Undecided";
  }
  return "?";
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::exact_linear_algebra: return "exact-linear-algebra";
    case Provenance::theorem_inference: return "theorem-inference";
    case Provenance::search: return "search";
  }
  return "?";
}

Finding is_universal_finite(const FiniteKernel& k) {
  const PsdCertificate& cert = k.psd();
  Finding f;
  f.provenance = Provenance::exact_linear_algebra;
  f.rule = "ldlt-pd";
  f.algebra = cert;
  if (cert.kind == PsdKind::strictly_positive) {
    f.verdict = Verdict::holds;
    f.note = "Gram matrix is strictly positive definite";
  } else {
    f.verdict = Verdict::fails;
    f.note = "Gram matrix is singular; the attached null vector embeds to zero";
    f.witness = factor_tensor(k.size(), *cert.vector);
    f.witness_class = "Mb";
  }
  return f;
}

Finding is_characteristic_finite(const FiniteKernel& k) {
  const Num mode = k.mode();
  const int n = k.size();
  Finding f;
  f.provenance = Provenance::exact_linear_algebra;
  f.rule = "ldlt-pd";
  if (n == 1) {
    f.verdict = Verdict::holds;
    f.provenance = Provenance::theorem_inference;
    f.rule = "vacuous";
    f.note = "single-point space: the only zero-sum measure is zero";
    return f;
  }
  // Restriction of the Gram form to zero-sum vectors: columns e_i - e_{n-1}.
  const int r = n - 1;
  std::vector<Scalar> reduced(static_cast<std::size_t>(r) * r, Scalar::zero(mode));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      reduced[static_cast<std::size_t>(i) * r + j] =
          k.g(i, j) - k.g(i, n - 1) - k.g(n - 1, j) + k.g(n - 1, n - 1);
  PsdCertificate cert = validate_psd(r, reduced);
  f.algebra = cert;
  if (cert.kind == PsdKind::strictly_positive) {
    f.verdict = Verdict::holds;
    f.note = "Gram form is strictly positive definite on zero-sum vectors";
    return f;
  }
  f.verdict = Verdict::fails;
  f.note =
      "Gram form degenerates on zero-sum vectors; the attached zero-sum "
      "vector embeds to zero";
  const std::vector<Scalar>& w = *cert.vector;
  std::vector<Scalar> v(static_cast<std::size_t>(n), Scalar::zero(mode));
  Scalar tail = Scalar::zero(mode);
  for (int i = 0; i < r; ++i) {
    v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)];
    tail += w[static_cast<std::size_t>(i)];
  }
  v[static_cast<std::size_t>(n - 1)] = -tail;
  f.witness = factor_tensor(n, std::move(v));
  f.witness_class = "Mb0";
  return f;
}

ProductReport decide_product_properties(const ProductKernelSpec& spec) {
  if (!spec.all_finite())
    throw std::invalid_argument("product property decision requires finite components");
  const Num mode = spec.finite_mode();
  const int M = spec.order();

  ProductReport rep;
  std::vector<int> sizes(static_cast<std::size_t>(M));
  std::vector<int> big;       // components with at least two points
  std::vector<int> non_univ;  // all components failing universality
  std::vector<int> non_char;  // all components failing characteristicness
  bool g0_positive = true;    // every single-point component has positive Gram entry
  for (int m = 0; m < M; ++m) {
    const FiniteKernel& comp = spec.finite(m);
    sizes[static_cast<std::size_t>(m)] = comp.size();
    ComponentFindings cf;
    cf.characteristic = is_characteristic_finite(comp);
    cf.universal = is_universal_finite(comp);
    if (cf.universal.verdict == Verdict::holds &&
        cf.characteristic.verdict == Verdict::fails)
      throw std::logic_error("component certificates violate universal => characteristic");
    if (comp.size() >= 2)
      big.push_back(m);
    else if (cf.universal.verdict != Verdict::holds)
      g0_positive = false;
    if (cf.universal.verdict != Verdict::holds) non_univ.push_back(m);
    if (cf.characteristic.verdict != Verdict::holds) non_char.push_back(m);
    rep.components.push_back(std::move(cf));
  }
  const int big_count = static_cast<int>(big.size());
  const bool all_univ = non_univ.empty();
  const bool all_char = non_char.empty();

  auto char_null = [&](int m) -> std::vector<Scalar> {
    return rep.components[static_cast<std::size_t>(m)]
        .characteristic.witness->coefficients();
  };
  auto univ_null = [&](int m) -> std::vector<Scalar> {
    return rep.components[static_cast<std::size_t>(m)]
        .universal.witness->coefficients();
  };
  auto trace = [&](ProductProperty p, const Finding& f) {
    std::ostringstream os;
    os << property_name(p) << ": " << verdict_name(f.verdict) << " [" << f.rule
       << "] " << f.note;
    rep.trace.push_back(os.str());
  };

  // --- universal -----------------------------------------------------------
  {
    Finding f;
    if (all_univ) {
      f = make_rule_finding(Verdict::holds, "thm-4",
                            "every component Gram is strictly positive definite");
    } else {
      f.verdict = Verdict::fails;
      f.provenance = Provenance::exact_linear_algebra;
      f.rule = "thm-4";
      f.note = verdict_note(non_univ, "singular Gram in component");
      const int j = non_univ.front();
      f.witness = embed_factors(spec, {{j, univ_null(j)}});
      f.witness_class = "Mb";
    }
    trace(ProductProperty::universal, f);
    rep.product.emplace(ProductProperty::universal, std::move(f));
  }

  // --- characteristic and tensor-char --------------------------------------
  {
    Finding ch;
    Finding tc;
    if (big_count == 0) {
      ch = make_rule_finding(Verdict::holds, "vacuous",
                             "single-point space: the only zero-sum measure is zero");
      tc = ch;
    } else if (!g0_positive) {
      // Some single-point component has Gram entry zero, so the product
      // kernel vanishes identically and any nonzero zero-sum measure kills it.
      ch.verdict = Verdict::fails;
      ch.provenance = Provenance::exact_linear_algebra;
      ch.rule = "degenerate-zero";
      ch.note = "a single-point component has zero Gram entry, so the product kernel is identically zero";
      ch.witness = embed_factors(spec, {{big.front(), zero_sum_pair(sizes[static_cast<std::size_t>(big.front())], mode)}});
      ch.witness_class = "Mb0";
      tc = ch;
      tc.witness_class = "[ProdMb]0";
    } else if (big_count == 1) {
      // Every other coordinate is deterministic with positive weight, so the
      // product form restricted to zero-sum measures is the single
      // nondegenerate component's form up to a positive scalar.
      const int j = big.front();
      const Finding& comp = rep.components[static_cast<std::size_t>(j)].characteristic;
      if (comp.verdict == Verdict::holds) {
        std::ostringstream os;
        os << "reduces to component " << (j + 1)
           << ": all other coordinates are single points with positive Gram entry";
        ch = make_rule_finding(Verdict::holds, "factor-reduction", os.str());
        tc = ch;
      } else {
        ch.verdict = Verdict::fails;
        ch.provenance = Provenance::exact_linear_algebra;
        ch.rule = "factor-reduction";
        ch.note = verdict_note({j}, "non-characteristic component");
        ch.witness = embed_factors(spec, {{j, char_null(j)}});
        ch.witness_class = "Mb0";
        tc = ch;
        tc.witness_class = "[ProdMb]0";
      }
    } else if (all_univ) {
      ch = make_rule_finding(
          Verdict::holds, "rem-4",
          "for finite product kernels these properties coincide with "
          "universality, which holds");
      tc = ch;
    } else {
      ch.verdict = Verdict::fails;
      ch.provenance = Provenance::exact_linear_algebra;
      ch.rule = "rem-4";
      ch.note = verdict_note(non_univ, "coincides with universality, broken by component");
      const int j = non_univ.back();
      std::vector<Scalar> v = univ_null(j);
      std::map<int, std::vector<Scalar>> special{{j, v}};
      if (!vector_mass(v, mode).is_zero()) {
        // The annihilated vector carries mass; pairing it with a zero-sum
        // two-point difference in another nondegenerate slot restores total
        // mass zero without disturbing the vanishing quadratic form.
        for (int m : big)
          if (m != j) {
            special.emplace(m, zero_sum_pair(sizes[static_cast<std::size_t>(m)], mode));
            break;
          }
      }
      ch.witness = embed_factors(spec, special);
      ch.witness_class = "Mb0";
      tc = ch;
      tc.witness_class = "[ProdMb]0";
    }
    trace(ProductProperty::characteristic, ch);
    trace(ProductProperty::tensor_char, tc);
    rep.product.emplace(ProductProperty::characteristic, std::move(ch));
    rep.product.emplace(ProductProperty::tensor_char, std::move(tc));
  }

  // --- tensor0-char ---------------------------------------------------------
  {
    Finding f;
    if (big_count < M) {
      f = make_rule_finding(
          Verdict::holds, "vacuous",
          "a single-point component forces every product of zero-sum factors to vanish");
    } else if (all_char) {
      f = make_rule_finding(Verdict::holds, "rem-1iii",
                            "every component is characteristic");
    } else {
      f.verdict = Verdict::fails;
      f.provenance = Provenance::exact_linear_algebra;
      f.rule = "rem-1iii";
      f.note = verdict_note(non_char, "non-characteristic component");
      const int j = non_char.front();
      std::map<int, std::vector<Scalar>> special{{j, char_null(j)}};
      for (int m = 0; m < M; ++m)
        if (m != j)
          special.emplace(m, zero_sum_pair(sizes[static_cast<std::size_t>(m)], mode));
      f.witness = embed_factors(spec, special);
      f.witness_class = "ProdMb0";
    }
    trace(ProductProperty::tensor0_char, f);
    rep.product.emplace(ProductProperty::tensor0_char, std::move(f));
  }

  // --- I-char ----------------------------------------------------------------
  {
    Finding f;
    if (M == 1) {
      f = make_rule_finding(Verdict::holds, "vacuous",
                            "one component: every distribution equals its own marginal product");
    } else if (big_count <= 1) {
      f = make_rule_finding(
          Verdict::holds, "vacuous",
          "at most one nondegenerate coordinate: every joint distribution factorizes");
    } else if (!g0_positive) {
      // The kernel vanishes identically while genuinely dependent joints exist.
      f.verdict = Verdict::fails;
      f.provenance = Provenance::exact_linear_algebra;
      f.rule = "degenerate-zero";
      f.note = "a single-point component has zero Gram entry while dependent joints exist";
      const int j1 = big[0];
      const int j2 = big[1];
      const Scalar half = Scalar::one(mode) / (Scalar::one(mode) + Scalar::one(mode));
      SignedMeasureTensor p0 = embed_factors(spec, {});
      std::map<int, std::vector<Scalar>> second;
      for (int m : {j1, j2}) {
        std::vector<Scalar> e2(static_cast<std::size_t>(sizes[static_cast<std::size_t>(m)]),
                               Scalar::zero(mode));
        e2[1] = Scalar::one(mode);
        second.emplace(m, std::move(e2));
      }
      SignedMeasureTensor p1 = embed_factors(spec, second);
      JointDistribution joint((p0 + p1).scaled(half));
      f.witness = i_class_element(joint);
      f.witness_joint = joint;
      f.witness_class = "I";
    } else if (all_univ) {
      f = make_rule_finding(Verdict::holds, "eq-8",
                            "universal product kernels separate every joint from its marginal product");
    } else if (big_count == 2 &&
               rep.components[static_cast<std::size_t>(big[0])].characteristic.verdict ==
                   Verdict::holds &&
               rep.components[static_cast<std::size_t>(big[1])].characteristic.verdict ==
                   Verdict::holds) {
      f = make_rule_finding(Verdict::holds, "thm-2i",
                            "two nondegenerate coordinates with characteristic components");
    } else if (!all_char) {
      // A non-characteristic component admits two distinct distributions with
      // equal embeddings; correlating them with two points of another
      // coordinate produces a dependent joint invisible to the kernel.
      f.verdict = Verdict::fails;
      f.provenance = Provenance::exact_linear_algebra;
      f.rule = "thm-2ii";
      f.note = verdict_note(non_char, "embedding collision in non-characteristic component");
      const int j = non_char.front();
      int pair_slot = -1;
      for (int m : big)
        if (m != j) {
          pair_slot = m;
          break;
        }
      std::vector<Scalar> v = char_null(j);
      std::vector<Scalar> pos(v.size(), Scalar::zero(mode));
      std::vector<Scalar> neg(v.size(), Scalar::zero(mode));
      Scalar s = Scalar::zero(mode);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].sign() > 0) {
          pos[i] = v[i];
          s += v[i];
        } else if (v[i].sign() < 0) {
          neg[i] = -v[i];
        }
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        pos[i] = pos[i] / s;
        neg[i] = neg[i] / s;
      }
      const int n2 = sizes[static_cast<std::size_t>(pair_slot)];
      std::vector<Scalar> ez(static_cast<std::size_t>(n2), Scalar::zero(mode));
      std::vector<Scalar> ezp(static_cast<std::size_t>(n2), Scalar::zero(mode));
      ez[0] = Scalar::one(mode);
      ezp[1] = Scalar::one(mode);
      SignedMeasureTensor half_a =
          embed_factors(spec, {{j, pos}, {pair_slot, ez}});
      SignedMeasureTensor half_b =
          embed_factors(spec, {{j, neg}, {pair_slot, ezp}});
      const Scalar half = Scalar::one(mode) / (Scalar::one(mode) + Scalar::one(mode));
      JointDistribution joint((half_a + half_b).scaled(half));
      f.witness = i_class_element(joint);
      f.witness_joint = joint;
      f.witness_class = "I";
    } else {
      f = make_rule_finding(
          Verdict::undecided, "open-cell",
          "three or more nondegenerate characteristic components, not all "
          "universal: outside the decision rules, delegated to the witness search");
    }
    trace(ProductProperty::i_char, f);
    rep.product.emplace(ProductProperty::i_char, std::move(f));
  }

  // Internal consistency gate: the five verdicts must satisfy the
  // implication web (undecided entries are unconstrained). The product
  // equivalence tensor-char => universal needs two nondegenerate coordinates;
  // with fewer, a characteristic-but-not-universal factor legitimately keeps
  // tensor-char while losing universality.
  FactSet facts;
  for (const auto& [p, f] : rep.product)
    if (f.verdict != Verdict::undecided) facts.emplace(p, f.verdict);
  apply_implication_closure(facts, big_count >= 2);
  return rep;
}

ProductReport classify_translation_invariant(const ProductKernelSpec& spec) {
  if (!spec.all_continuous())
    throw std::invalid_argument(
        "translation-invariant classification requires continuous components");
  const int M = spec.order();
  ProductReport rep;
  std::vector<int> lacking;
  for (int m = 0; m < M; ++m) {
    const ContinuousKernel& comp = spec.continuous(m);
    auto meta = comp.ti_meta();
    if (!meta) {
      std::ostringstream os;
      os << "component " << (m + 1)
         << " carries no translation-invariant classification metadata";
      throw std::invalid_argument(os.str());
    }
    ComponentFindings cf;
    if (meta->spectral_support_full) {
      cf.universal = make_rule_finding(Verdict::holds, "thm-3",
                                       "spectral support is the whole frequency space");
      cf.characteristic = cf.universal;
    } else {
      cf.universal = make_rule_finding(Verdict::fails, "thm-3",
                                       "spectral support omits an open set");
      cf.characteristic = cf.universal;
      lacking.push_back(m);
    }
    rep.components.push_back(std::move(cf));
  }
  const bool all_full = lacking.empty();
  auto put = [&](ProductProperty p, Finding f) {
    std::ostringstream os;
    os << property_name(p) << ": " << verdict_name(f.verdict) << " [" << f.rule
       << "] " << f.note;
    rep.trace.push_back(os.str());
    rep.product.emplace(p, std::move(f));
  };
  if (all_full) {
    Finding base = make_rule_finding(
        Verdict::holds, "thm-3", "the product spectral measure has full support");
    put(ProductProperty::universal, base);
    put(ProductProperty::characteristic, base);
    put(ProductProperty::tensor_char, base);
    put(ProductProperty::tensor0_char,
        make_rule_finding(Verdict::holds, "rem-1iii",
                          "every component is characteristic"));
    put(ProductProperty::i_char,
        M == 1 ? make_rule_finding(Verdict::holds, "vacuous",
                                   "one component: every distribution equals "
                                   "its own marginal product")
               : make_rule_finding(Verdict::holds, "eq-8",
                                   "universal product kernels separate every "
                                   "joint from its marginal product"));
    return rep;
  }
  Finding base = make_rule_finding(
      Verdict::fails, "thm-3",
      verdict_note(lacking, "spectral support gap in component"));
  put(ProductProperty::universal, base);
  put(ProductProperty::characteristic, base);
  put(ProductProperty::tensor_char, base);
  put(ProductProperty::tensor0_char,
      make_rule_finding(Verdict::fails, "rem-1iii",
                        verdict_note(lacking, "non-characteristic component")));
  if (M == 1) {
    put(ProductProperty::i_char,
        make_rule_finding(Verdict::holds, "vacuous",
                          "one component: every distribution equals its own "
                          "marginal product"));
  } else {
    put(ProductProperty::i_char,
        make_rule_finding(
            Verdict::fails, "thm-2ii",
            "a non-characteristic component admits an embedding collision; "
            "correlating it with two points of another coordinate gives a "
            "dependent joint invisible to the kernel"));
  }
  return rep;
}

FactSet apply_implication_closure(FactSet facts, bool product_rules) {
  std::map<ProductProperty, std::optional<Verdict>> known;
  for (ProductProperty p : kProductProperties) known[p] = std::nullopt;
  auto assign = [&](ProductProperty p, Verdict v, bool* changed) {
    std::optional<Verdict>& slot = known[p];
    if (!slot) {
      slot = v;
      if (changed) *changed = true;
      return;
    }
    if (*slot != v) {
      std::ostringstream os;
      os << "implication closure contradiction at " << property_name(p) << ": "
         << verdict_name(*slot) << " vs " << verdict_name(v);
      throw InconsistentFacts(os.str());
    }
  };
  for (const auto& [p, v] : facts)
    if (v != Verdict::undecided) assign(p, v, nullptr);

  using PP = ProductProperty;
  std::vector<std::pair<PP, PP>> edges = {
      {PP::universal, PP::characteristic},
      {PP::characteristic, PP::tensor_char},
      {PP::tensor_char, PP::tensor0_char},
      {PP::characteristic, PP::i_char},
  };
  if (product_rules) edges.emplace_back(PP::tensor_char, PP::universal);

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [a, b] : edges) {
      if (known[a] && *known[a] == Verdict::holds &&
          (!known[b] || *known[b] != Verdict::holds))
        assign(b, Verdict::holds, &changed);
      if (known[b] && *known[b] == Verdict::fails &&
          (!known[a] || *known[a] != Verdict::fails))
        assign(a, Verdict::fails, &changed);
    }
  }
  FactSet out;
  for (ProductProperty p : kProductProperties)
    out.emplace(p, known[p] ? *known[p] : Verdict::undecided);
  return out;
}

}  // namespace tklab
