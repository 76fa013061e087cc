#include "tklab/verify_suite.hpp"

#include <array>
#include <functional>
#include <sstream>

#include "tklab/property.hpp"
#include "tklab/witness.hpp"

namespace tklab {

namespace {

void run_check(VerifySuiteResult& out, const std::string& name,
               const std::string& anchor,
               const std::function<std::string()>& body) {
  VerifyCheck c;
  c.name = name;
  c.anchor = anchor;
  try {
    c.detail = body();
    c.passed = true;
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = e.what();
  }
  out.checks.push_back(std::move(c));
}

[[noreturn]] void check_fail(const std::string& why) {
  throw std::runtime_error(why);
}

void expect(bool cond, const std::string& why) {
  if (!cond) check_fail(why);
}

std::vector<Scalar> rational_coeffs(std::initializer_list<Rational> v) {
  std::vector<Scalar> out;
  for (const Rational& q : v) out.emplace_back(q);
  return out;
}

// Verifies one stored witness from scratch; optionally perturbs the first
// coefficient first to exercise the failure path.
std::string verify_fixture(const std::string& name, bool corrupt) {
  Fixture f = fixture(name);
  WitnessReport r = f.report;
  if (corrupt) {
    SignedMeasureTensor t = r.witness;
    t.set_flat(0, Scalar(t.flat(0).rational() + Rational(1, 1000)));
    r.witness = std::move(t);
  }
  VerifyOutcome v = verify_witness(f.kernel, r);
  expect(v.ok, "stored witness failed exact re-verification");
  expect(f.report.quad_value.is_zero(), "stored quadratic form is not zero");
  expect(f.report.nonzero, "stored witness is the zero measure");
  return "quad form 0, witness nonzero, all residuals 0";
}

std::string scalars_brief(const std::vector<Scalar>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i].str();
  return os.str();
}

}  // namespace

bool VerifySuiteResult::all_passed() const {
  for (const VerifyCheck& c : checks)
    if (!c.passed) return false;
  return true;
}

const VerifyCheck* VerifySuiteResult::first_failed() const {
  for (const VerifyCheck& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

VerifySuiteResult run_verify_suite(bool inject_fault) {
  VerifySuiteResult out;

  run_check(out, "example1 witness", "example-1", [] {
    Fixture f = fixture("example1");
    VerifyOutcome v = verify_witness(f.kernel, f.report);
    expect(v.ok, "stored witness failed exact re-verification");
    const std::vector<Scalar> want =
        rational_coeffs({Rational(1), Rational(1), Rational(-1), Rational(-1)});
    expect(f.report.witness.coefficients() == want,
           "witness is not (1,-1) x (1,1)");
    return std::string("witness (1,-1) x (1,1), quad form 0, mass 0");
  });

  run_check(out, "example1 product verdicts", "example-1", [] {
    Fixture f = fixture("example1");
    ProductReport r = decide_product_properties(f.kernel);
    for (const ComponentFindings& c : r.components) {
      expect(c.characteristic.verdict == Verdict::holds,
             "component should be characteristic");
      expect(c.universal.verdict == Verdict::fails,
             "component should not be universal");
    }
    const Finding& tc = r.product.at(ProductProperty::tensor_char);
    expect(tc.verdict == Verdict::fails, "product should fail tensor-char");
    expect(tc.witness.has_value(), "tensor-char failure needs a witness");
    expect(quad_form(f.kernel, *tc.witness).is_zero(),
           "tensor-char witness has nonzero quadratic form");
    expect(tc.witness->total_mass().is_zero(),
           "tensor-char witness has nonzero mass");
    const std::vector<Scalar> want =
        rational_coeffs({Rational(1), Rational(1), Rational(-1), Rational(-1)});
    expect(tc.witness->coefficients() == want,
           "decision witness is not (1,-1) x (1,1)");
    expect(r.product.at(ProductProperty::tensor0_char).verdict == Verdict::holds,
           "product should hold tensor0-char");
    return std::string("tensor-char Fails with witness (1,-1) x (1,1); tensor0-char Holds");
  });

  run_check(out, "example1 I-char certified", "thm-2i", [] {
    Fixture f = fixture("example1");
    ProductReport r = decide_product_properties(f.kernel);
    const Finding& ic = r.product.at(ProductProperty::i_char);
    expect(ic.verdict == Verdict::holds, "product should hold I-char");
    expect(ic.rule == "thm-2i", "expected the two-component certification rule");
    SearchOutcome s = search_I_witness(f.kernel, 0, 1, Rational(1, 100));
    expect(s.status == SearchOutcome::Status::certified_impossible,
           "search should certify impossibility without iterating");
    expect(s.rule == "thm-2i", "search certificate should carry the same rule");
    return std::string("I-char Holds [thm-2i]; search short-circuits");
  });

  run_check(out, "factorizing family grid", "table-2", [] {
    Fixture f = fixture("example1");
    int admissible = 0;
    for (int i = 0; i <= 10 && admissible < 50; ++i) {
      for (int j = 0; j <= 10 && admissible < 50; ++j) {
        const Rational a(i, 10), b(j, 10);
        std::optional<JointDistribution> p;
        try {
          p = factorizing_family(a, b);
        } catch (const std::invalid_argument&) {
          continue;  // outside the family's domain, not part of the grid
        }
        SignedMeasureTensor dep = i_class_element(*p);
        expect(dep.is_zero(), "family member does not factorize exactly");
        std::vector<SignedMeasureTensor> margs = {p->measure().marginal(0),
                                                  p->measure().marginal(1)};
        JointDistribution prod{product_measure(margs)};
        expect(mmd2(f.kernel, *p, prod).is_zero(),
               "embedding gap to the product of marginals is nonzero");
        ++admissible;
      }
    }
    expect(admissible == 50, "fewer than 50 admissible grid points");
    return std::string("first 50 admissible (a,b) all factorize exactly");
  });

  run_check(out, "example2-w1 quad form", "example-2",
            [&] { return verify_fixture("example2-w1", inject_fault); });
  run_check(out, "example2-w2 quad form", "example-2",
            [] { return verify_fixture("example2-w2", false); });

  run_check(out, "example2 joints are dependent", "example-2", [] {
    for (const char* name : {"example2-w1", "example2-w2"}) {
      Fixture f = fixture(name);
      expect(f.report.joint.has_value(), "fixture should carry its joint");
      SignedMeasureTensor dep = i_class_element(*f.report.joint);
      expect(!dep.is_zero(), "joint should not factorize");
      expect(dep == f.report.witness,
             "witness should equal the dependence tensor of its joint");
    }
    return std::string("both joints have nonzero dependence tensors");
  });

  run_check(out, "closed-form joint, first parameter point", "appendix-a", [] {
    const std::array<Rational, 6> z = {Rational(1, 10), Rational(1, 10),
                                       Rational(1, 10), Rational(1, 10),
                                       Rational(1, 10), Rational(1, 10)};
    DependentJointOutcome got = closed_form_dependent_joint(z);
    Fixture f = fixture("example2-w1");
    expect(got.joint.measure().coefficients() ==
               f.report.joint->measure().coefficients(),
           "generated joint differs from the stored table");
    expect(got.report.witness.coefficients() == f.report.witness.coefficients(),
           "generated dependence tensor differs from the stored table");
    return "P = (" + scalars_brief(got.joint.measure().coefficients()) + ")";
  });

  run_check(out, "closed-form joint, second parameter point", "appendix-a", [] {
    const std::array<Rational, 6> z = {Rational(3, 10), Rational(1, 10),
                                       Rational(1, 10), Rational(1, 10),
                                       Rational(1, 10), Rational(2, 10)};
    DependentJointOutcome got = closed_form_dependent_joint(z);
    Fixture f = fixture("example2-w2");
    expect(got.joint.measure().coefficients() ==
               f.report.joint->measure().coefficients(),
           "generated joint differs from the stored table");
    expect(got.report.witness.coefficients() == f.report.witness.coefficients(),
           "generated dependence tensor differs from the stored table");
    return "P = (" + scalars_brief(got.joint.measure().coefficients()) + ")";
  });

  run_check(out, "example3 rule verdict", "open-cell", [] {
    Fixture f = fixture("example3");
    ProductReport r = decide_product_properties(f.kernel);
    expect(r.components[0].characteristic.verdict == Verdict::holds &&
               r.components[0].universal.verdict == Verdict::fails,
           "first component should be characteristic, not universal");
    expect(r.components[1].universal.verdict == Verdict::holds &&
               r.components[2].universal.verdict == Verdict::holds,
           "delta components should be universal");
    expect(r.product.at(ProductProperty::i_char).verdict == Verdict::undecided,
           "rules alone should leave I-char undecided");
    return std::string("I-char Undecided by rules, delegated to the witness");
  });

  run_check(out, "example3 witness", "example-3",
            [] { return verify_fixture("example3", false); });

  run_check(out, "example3 row equality", "eq-28", [] {
    Fixture f = fixture("example3");
    const SignedMeasureTensor& a = f.report.witness;
    const SpaceShape& s = a.shape();
    expect(s.sizes() == std::vector<int>({2, 2, 2}), "unexpected shape");
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const std::array<int, 3> top = {0, j, k}, bot = {1, j, k};
        expect(a.at(top) == a.at(bot),
               "annihilation requires equal first-axis rows");
      }
    return std::string("a(1,j,k) = a(2,j,k) holds exactly for all j,k");
  });

  run_check(out, "product universality spot checks", "thm-4", [] {
    ProductKernelSpec pd({FiniteKernel::identity(2), FiniteKernel::identity(3)});
    ProductReport rp = decide_product_properties(pd);
    expect(rp.product.at(ProductProperty::universal).verdict == Verdict::holds,
           "product of strictly PD Grams should be universal");

    ProductKernelSpec sing(
        {FiniteKernel::two_delta_minus_one(2), FiniteKernel::identity(2)});
    ProductReport rs = decide_product_properties(sing);
    const Finding& u = rs.product.at(ProductProperty::universal);
    expect(u.verdict == Verdict::fails,
           "a singular component must break universality");
    expect(u.witness.has_value(), "universal failure needs a witness");
    expect(quad_form(sing, *u.witness).is_zero(),
           "universal-failure witness must be annihilated");
    expect(!u.witness->is_zero(), "universal-failure witness must be nonzero");
    return std::string("strict PD products hold; singular factor fails with null witness");
  });

  run_check(out, "embedding collision construction", "thm-2ii", [] {
    const FiniteKernel head = FiniteKernel::constant_one(3);
    std::optional<EmbeddingCollision> c = find_embedding_collision(head);
    expect(c.has_value(), "constant Gram should not be characteristic");
    expect(!(c->p.measure() == c->q.measure()),
           "collision must use two distinct distributions");
    ProductKernelSpec k({head, FiniteKernel::identity(2), FiniteKernel::identity(2)});
    std::vector<JointDistribution> tails = {JointDistribution{SignedMeasureTensor(
        SpaceShape({2}), rational_coeffs({Rational(1, 2), Rational(1, 2)}))}};
    CollisionWitnessOutcome got = dependence_witness_from_collision(k, *c, 0, 1, tails);
    expect(got.report.nonzero, "dependence tensor should be nonzero");
    expect(got.report.quad_value.is_zero(), "embedding quadratic form should vanish");
    VerifyOutcome v = verify_witness(k, got.report);
    expect(v.ok, "constructed witness failed exact re-verification");
    return std::string("collision joint is dependent with embedding gap exactly 0");
  });

  run_check(out, "search short-circuits on universal products", "eq-8", [] {
    ProductKernelSpec pd({FiniteKernel::identity(2), FiniteKernel::identity(2)});
    SearchOutcome s = search_I_witness(pd, 0, 1, Rational(1, 100));
    expect(s.status == SearchOutcome::Status::certified_impossible,
           "universal products certify impossibility");
    return "rule " + s.rule;
  });

  return out;
}

}  // namespace tklab
