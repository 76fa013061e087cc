#include "tklab/witness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tklab/exact.hpp"
#include "tklab/parallel.hpp"
#include "tklab/property.hpp"

namespace tklab {
namespace {

Rational q(long num, long den = 1) { return rat(num, den); }

std::vector<Scalar> rational_coeffs(std::initializer_list<Rational> xs) {
  std::vector<Scalar> out;
  out.reserve(xs.size());
  for (const Rational& x : xs) out.emplace_back(x);
  return out;
}

SignedMeasureTensor delta_tensor(int n, int at, Num mode) {
  std::vector<Scalar> c(static_cast<std::size_t>(n), Scalar::zero(mode));
  c[static_cast<std::size_t>(at)] = Scalar::one(mode);
  return SignedMeasureTensor(SpaceShape({n}), std::move(c));
}

std::optional<Scalar> named_residual(
    const std::vector<std::pair<std::string, Scalar>>& rs, const std::string& name) {
  for (const auto& [k, v] : rs)
    if (k == name) return v;
  return std::nullopt;
}

std::vector<std::pair<std::string, Scalar>> class_residuals(
    const SignedMeasureTensor& f, const std::string& tag,
    const std::optional<JointDistribution>& joint) {
  std::vector<std::pair<std::string, Scalar>> out;
  if (tag == "Mb") return out;
  if (tag == "Mb0") return class_membership(f, MeasureClass::mb0).residuals;
  if (tag == "[ProdMb]0") {
    out = class_membership(f, MeasureClass::mb0).residuals;
    ClassCheck prod = class_membership(f, MeasureClass::prod_mb0);
    if (auto minor = named_residual(prod.residuals, "max-minor"))
      out.emplace_back("max-minor", *minor);
    return out;
  }
  if (tag == "ProdMb0") return class_membership(f, MeasureClass::prod_mb0).residuals;
  if (tag == "I") {
    out = class_membership(f, MeasureClass::i_marginal).residuals;
    if (joint) {
      if (!(joint->shape() == f.shape()))
        throw std::invalid_argument("witness joint shape mismatch");
      out.emplace_back("joint-consistency",
                       (f - i_class_element(*joint)).linf_norm());
    }
    return out;
  }
  throw std::invalid_argument("unknown measure class: " + tag);
}

FiniteKernel signed_two_point_kernel(Num mode) {
  return FiniteKernel::two_delta_minus_one(2, mode);
}

// --- deterministic pseudo-random plumbing ----------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
  return splitmix64(seed ^ splitmix64(idx + 1));
}

double unit_double(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// --- continued-fraction rounding --------------------------------------------

std::optional<Rational> round_to_rational(double x, long max_den) {
  if (!std::isfinite(x)) return std::nullopt;
  const bool neg = x < 0;
  double y = std::fabs(x);
  if (y < 5e-13) return Rational(0);
  if (y > 1e12) return std::nullopt;
  long long p0 = 1, q0 = 0;  // previous convergent
  long long p1 = static_cast<long long>(std::floor(y)), q1 = 1;
  double frac = y - std::floor(y);
  for (int step = 0; step < 48; ++step) {
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::fabs(y - approx) <= 1e-12 * std::max(1.0, y)) break;
    if (frac < 1e-14) break;
    const double t = 1.0 / frac;
    if (t > 9e15) break;
    const long long a = static_cast<long long>(std::floor(t));
    frac = t - std::floor(t);
    const long long p2 = a * p1 + p0;
    const long long q2 = a * q1 + q0;
    if (q2 > max_den || p2 < 0 || q2 < 0) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
  }
  Rational r(static_cast<long>(p1), static_cast<long>(q1));
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

// --- dense double-precision tensor arithmetic for the search ---------------

struct DoubleSpace {
  std::vector<int> sizes;
  std::vector<long> strides;
  long total = 0;
  std::vector<std::vector<double>> gram;  // per axis, n*n row-major
};

DoubleSpace double_space(const ProductKernelSpec& spec) {
  DoubleSpace ds;
  const int m_count = spec.order();
  ds.sizes.resize(static_cast<std::size_t>(m_count));
  ds.strides.assign(static_cast<std::size_t>(m_count), 1);
  ds.total = 1;
  for (int m = 0; m < m_count; ++m)
    ds.sizes[static_cast<std::size_t>(m)] = spec.finite(m).size();
  for (int m = m_count - 2; m >= 0; --m)
    ds.strides[static_cast<std::size_t>(m)] =
        ds.strides[static_cast<std::size_t>(m + 1)] * ds.sizes[static_cast<std::size_t>(m + 1)];
  for (int m = 0; m < m_count; ++m) ds.total *= ds.sizes[static_cast<std::size_t>(m)];
  ds.gram.resize(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m) {
    const FiniteKernel& k = spec.finite(m);
    const int n = k.size();
    auto& g = ds.gram[static_cast<std::size_t>(m)];
    g.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        g[static_cast<std::size_t>(i) * n + j] = k.g(i, j).to_double();
  }
  return ds;
}

int axis_index(const DoubleSpace& ds, long flat, int m) {
  return static_cast<int>((flat / ds.strides[static_cast<std::size_t>(m)]) %
                          ds.sizes[static_cast<std::size_t>(m)]);
}

// x <- (I (x) ... (x) G_m (x) ... (x) I) x
void apply_axis(const DoubleSpace& ds, int m, std::vector<double>& x) {
  const int n = ds.sizes[static_cast<std::size_t>(m)];
  const long stride = ds.strides[static_cast<std::size_t>(m)];
  const long block = static_cast<long>(n) * stride;
  const auto& g = ds.gram[static_cast<std::size_t>(m)];
  std::vector<double> tmp(static_cast<std::size_t>(n));
  for (long base = 0; base < ds.total; base += block)
    for (long lo = 0; lo < stride; ++lo) {
      double* p = x.data() + base + lo;
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += g[static_cast<std::size_t>(i) * n + j] * p[j * stride];
        tmp[static_cast<std::size_t>(i)] = acc;
      }
      for (int i = 0; i < n; ++i) p[i * stride] = tmp[static_cast<std::size_t>(i)];
    }
}

std::vector<std::vector<double>> axis_marginals(const DoubleSpace& ds,
                                                const std::vector<double>& p) {
  const int m_count = static_cast<int>(ds.sizes.size());
  std::vector<std::vector<double>> marg(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m)
    marg[static_cast<std::size_t>(m)].assign(
        static_cast<std::size_t>(ds.sizes[static_cast<std::size_t>(m)]), 0.0);
  for (long j = 0; j < ds.total; ++j)
    for (int m = 0; m < m_count; ++m)
      marg[static_cast<std::size_t>(m)][static_cast<std::size_t>(axis_index(ds, j, m))] += p[static_cast<std::size_t>(j)];
  return marg;
}

// out(i) = sum_m c_m(i_m) with c_m(v) = sum_{j : j_m = v} y(j) prod_{n != m} marg_n(j_n)
std::vector<double> marginal_contraction(const DoubleSpace& ds,
                                         const std::vector<double>& y,
                                         const std::vector<std::vector<double>>& marg) {
  const int m_count = static_cast<int>(ds.sizes.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m)
    c[static_cast<std::size_t>(m)].assign(
        static_cast<std::size_t>(ds.sizes[static_cast<std::size_t>(m)]), 0.0);
  for (long j = 0; j < ds.total; ++j) {
    for (int m = 0; m < m_count; ++m) {
      double w = 1.0;
      for (int n = 0; n < m_count; ++n)
        if (n != m)
          w *= marg[static_cast<std::size_t>(n)][static_cast<std::size_t>(axis_index(ds, j, n))];
      c[static_cast<std::size_t>(m)][static_cast<std::size_t>(axis_index(ds, j, m))] +=
          y[static_cast<std::size_t>(j)] * w;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ds.total), 0.0);
  for (long i = 0; i < ds.total; ++i)
    for (int m = 0; m < m_count; ++m)
      out[static_cast<std::size_t>(i)] +=
          c[static_cast<std::size_t>(m)][static_cast<std::size_t>(axis_index(ds, i, m))];
  return out;
}

void project_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  long rho = 0;
  double cum_at_rho = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - cand > 0) {
      rho = static_cast<long>(j + 1);
      cum_at_rho = cum;
    }
  }
  theta = (cum_at_rho - 1.0) / static_cast<double>(rho);
  for (double& x : v) x = std::max(x - theta, 0.0);
}

struct SearchEval {
  std::vector<std::vector<double>> marg;
  std::vector<double> a;      // dependence tensor P - (x)marg
  std::vector<double> y;      // kernel applied to a
  double hsic2 = 0.0;
  double l1 = 0.0;
};

SearchEval evaluate_point(const DoubleSpace& ds, const std::vector<double>& p) {
  SearchEval ev;
  ev.marg = axis_marginals(ds, p);
  ev.a.resize(static_cast<std::size_t>(ds.total));
  const int m_count = static_cast<int>(ds.sizes.size());
  for (long j = 0; j < ds.total; ++j) {
    double t = 1.0;
    for (int m = 0; m < m_count; ++m)
      t *= ev.marg[static_cast<std::size_t>(m)][static_cast<std::size_t>(axis_index(ds, j, m))];
    ev.a[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(j)] - t;
    ev.l1 += std::fabs(ev.a[static_cast<std::size_t>(j)]);
  }
  ev.y = ev.a;
  for (int m = 0; m < m_count; ++m) apply_axis(ds, m, ev.y);
  for (long j = 0; j < ds.total; ++j)
    ev.hsic2 += ev.a[static_cast<std::size_t>(j)] * ev.y[static_cast<std::size_t>(j)];
  return ev;
}

// --- exact rounding of a float candidate ------------------------------------

struct ExactifyContext {
  const ProductKernelSpec* spec = nullptr;
  const SpaceShape* shape = nullptr;
  const std::vector<std::vector<Rational>>* basis = nullptr;
  const std::vector<std::vector<double>>* basis_d = nullptr;
  Rational separation;
};

constexpr long kRoundDenominatorCap = 10000;

std::optional<WitnessReport> exactify_with_cap(const ExactifyContext& ctx,
                                               const DoubleSpace& ds,
                                               const SearchEval& ev, long cap) {
  if (!ctx.basis || ctx.basis->empty()) return std::nullopt;
  const std::size_t total = static_cast<std::size_t>(ds.total);
  const int m_count = static_cast<int>(ds.sizes.size());

  // Round the marginals to small-denominator distributions.
  std::vector<std::vector<Rational>> margr(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m) {
    Rational sum(0);
    auto& row = margr[static_cast<std::size_t>(m)];
    for (double x : ev.marg[static_cast<std::size_t>(m)]) {
      auto r = round_to_rational(x, cap);
      if (!r) return std::nullopt;
      if (*r < 0) *r = 0;
      row.push_back(*r);
      sum += row.back();
    }
    if (sgn(sum) <= 0) return std::nullopt;
    for (Rational& x : row) x /= sum;
  }

  // Project the float dependence tensor onto the exact annihilated-and-
  // marginal-free subspace and round the coordinates.
  const std::size_t r = ctx.basis->size();
  std::vector<double> gram(r * r, 0.0);
  std::vector<double> rhs(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const auto& bi = (*ctx.basis_d)[i];
    for (std::size_t j = i; j < r; ++j) {
      const auto& bj = (*ctx.basis_d)[j];
      double acc = 0.0;
      for (std::size_t t = 0; t < total; ++t) acc += bi[t] * bj[t];
      gram[i * r + j] = acc;
      gram[j * r + i] = acc;
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < total; ++t) acc += bi[t] * ev.a[t];
    rhs[i] = acc;
  }
  // Gaussian elimination with partial pivoting on the small normal system.
  std::vector<double> coef = rhs;
  {
    std::vector<double> a = gram;
    std::vector<int> perm(r);
    for (std::size_t i = 0; i < r; ++i) perm[i] = static_cast<int>(i);
    for (std::size_t k = 0; k < r; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < r; ++i)
        if (std::fabs(a[i * r + k]) > std::fabs(a[piv * r + k])) piv = i;
      if (std::fabs(a[piv * r + k]) < 1e-14) return std::nullopt;
      if (piv != k) {
        for (std::size_t j = 0; j < r; ++j) std::swap(a[k * r + j], a[piv * r + j]);
        std::swap(coef[k], coef[piv]);
      }
      for (std::size_t i = k + 1; i < r; ++i) {
        const double f = a[i * r + k] / a[k * r + k];
        for (std::size_t j = k; j < r; ++j) a[i * r + j] -= f * a[k * r + j];
        coef[i] -= f * coef[k];
      }
    }
    for (std::size_t k = r; k-- > 0;) {
      for (std::size_t j = k + 1; j < r; ++j) coef[k] -= a[k * r + j] * coef[j];
      coef[k] /= a[k * r + k];
    }
  }
  std::vector<Rational> coefr(r);
  bool any = false;
  for (std::size_t i = 0; i < r; ++i) {
    auto c = round_to_rational(coef[i], cap);
    if (!c) return std::nullopt;
    coefr[i] = *c;
    if (sgn(coefr[i]) != 0) any = true;
  }
  if (!any) return std::nullopt;

  std::vector<Rational> a_exact(total, Rational(0));
  for (std::size_t i = 0; i < r; ++i) {
    if (sgn(coefr[i]) == 0) continue;
    const auto& bi = (*ctx.basis)[i];
    for (std::size_t t = 0; t < total; ++t) a_exact[t] += coefr[i] * bi[t];
  }
  bool nonzero = false;
  for (const Rational& x : a_exact)
    if (sgn(x) != 0) nonzero = true;
  if (!nonzero) return std::nullopt;

  // Exact product of the rounded marginals.
  std::vector<Rational> base(total, Rational(1));
  for (std::size_t t = 0; t < total; ++t)
    for (int m = 0; m < m_count; ++m)
      base[t] *= margr[static_cast<std::size_t>(m)][static_cast<std::size_t>(
          axis_index(ds, static_cast<long>(t), m))];

  // Largest scale in (0,1] keeping base + t*a nonnegative.
  Rational scale(1);
  for (std::size_t t = 0; t < total; ++t)
    if (sgn(a_exact[t]) < 0) {
      Rational bound = base[t] / Rational(-a_exact[t]);
      if (bound < scale) scale = bound;
    }
  if (sgn(scale) <= 0) return std::nullopt;

  Rational l1(0);
  for (const Rational& x : a_exact) l1 += abs(Rational(scale * x));
  if (l1 < ctx.separation) return std::nullopt;

  std::vector<Scalar> a_coeffs;
  std::vector<Scalar> p_coeffs;
  a_coeffs.reserve(total);
  p_coeffs.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    Rational av = scale * a_exact[t];
    Rational pv = base[t] + av;
    if (sgn(pv) < 0) return std::nullopt;
    a_coeffs.emplace_back(av);
    p_coeffs.emplace_back(pv);
  }
  SignedMeasureTensor a_use(*ctx.shape, std::move(a_coeffs));
  JointDistribution joint{SignedMeasureTensor(*ctx.shape, std::move(p_coeffs))};
  if (!(i_class_element(joint) - a_use).is_zero()) return std::nullopt;
  if (!quad_form(*ctx.spec, a_use).is_zero()) return std::nullopt;

  WitnessReport report =
      make_witness_report(*ctx.spec, std::move(a_use), "I", "search", joint);
  if (!verify_witness(*ctx.spec, report).ok) return std::nullopt;
  return report;
}

// Prefers the coarsest rounding that verifies, keeping reported witnesses in
// small denominators.
std::optional<WitnessReport> exactify_candidate(const ExactifyContext& ctx,
                                                const DoubleSpace& ds,
                                                const SearchEval& ev) {
  for (long cap : {10L, 100L, 1000L, kRoundDenominatorCap})
    if (auto found = exactify_with_cap(ctx, ds, ev, cap)) return found;
  return std::nullopt;
}

struct RestartResult {
  std::optional<WitnessReport> found;
  long evals = 0;
};

RestartResult run_restart(const ExactifyContext& ctx, const DoubleSpace& ds,
                          std::uint64_t rng_seed, long eval_budget,
                          double separation_d) {
  RestartResult out;
  if (eval_budget <= 0) return out;
  std::mt19937_64 eng(rng_seed);
  const std::size_t total = static_cast<std::size_t>(ds.total);
  std::vector<double> p(total);
  double mass = 0.0;
  for (double& x : p) {
    x = -std::log(std::max(unit_double(eng), 1e-300));
    mass += x;
  }
  for (double& x : p) x /= mass;

  double eta = 0.25;
  double best_h = std::numeric_limits<double>::infinity();
  std::optional<SearchEval> best_ev;
  int exact_attempts = 0;

  auto objective = [&](const SearchEval& ev) {
    return ev.hsic2 + std::max(0.0, separation_d - ev.l1);
  };

  SearchEval ev = evaluate_point(ds, p);
  ++out.evals;
  while (out.evals < eval_budget) {
    if (ev.hsic2 < best_h) {
      best_h = ev.hsic2;
      best_ev = ev;
    }
    if (ev.hsic2 < 1e-18 && ev.l1 >= 0.5 * separation_d && exact_attempts < 6) {
      ++exact_attempts;
      if (auto found = exactify_candidate(ctx, ds, ev)) {
        out.found = std::move(found);
        return out;
      }
    }
    // Gradient of hsic^2 plus the active-penalty subgradient.
    std::vector<double> grad = marginal_contraction(ds, ev.y, ev.marg);
    for (std::size_t j = 0; j < total; ++j)
      grad[j] = 2.0 * (ev.y[j] - grad[j]);
    if (separation_d - ev.l1 > 0) {
      std::vector<double> sg(total);
      for (std::size_t j = 0; j < total; ++j)
        sg[j] = ev.a[j] > 0 ? 1.0 : (ev.a[j] < 0 ? -1.0 : 0.0);
      std::vector<double> jt = marginal_contraction(ds, sg, ev.marg);
      for (std::size_t j = 0; j < total; ++j) grad[j] -= (sg[j] - jt[j]);
    }
    const double f0 = objective(ev);
    bool improved = false;
    for (int tries = 0; tries < 25 && out.evals < eval_budget; ++tries) {
      std::vector<double> cand = p;
      for (std::size_t j = 0; j < total; ++j) cand[j] -= eta * grad[j];
      project_simplex(cand);
      SearchEval cev = evaluate_point(ds, cand);
      ++out.evals;
      if (objective(cev) <= f0 - 1e-16) {
        p = std::move(cand);
        ev = std::move(cev);
        eta = std::min(eta * 1.2, 2.0);
        improved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!improved) break;
  }
  if (!out.found && best_ev && best_h < 1e-15 && exact_attempts < 8)
    if (auto found = exactify_candidate(ctx, ds, *best_ev))
      out.found = std::move(found);
  return out;
}

}  // namespace

WitnessReport make_witness_report(const ProductKernelSpec& k,
                                  SignedMeasureTensor witness,
                                  std::string measure_class, std::string origin,
                                  std::optional<JointDistribution> joint) {
  WitnessReport rep{std::move(witness),
                    std::move(measure_class),
                    std::move(origin),
                    Scalar::zero(Num::rational),
                    false,
                    {},
                    Scalar::zero(Num::rational),
                    {},
                    std::move(joint)};
  rep.quad_value = quad_form(k, rep.witness);
  const Num mode = rep.witness.mode();
  std::size_t arg = 0;
  Scalar best = rep.witness.flat(0).abs();
  for (std::size_t i = 1; i < rep.witness.size(); ++i) {
    Scalar mag = rep.witness.flat(i).abs();
    if (best < mag) {
      best = mag;
      arg = i;
    }
  }
  rep.nonzero = !best.is_zero();
  rep.nonzero_magnitude = best;
  rep.nonzero_entry = rep.witness.shape().unflatten(arg);
  (void)mode;
  rep.residuals = class_residuals(rep.witness, rep.measure_class, rep.joint);
  return rep;
}

Fixture fixture(const std::string& name) {
  const FiniteKernel k2 = signed_two_point_kernel(Num::rational);
  const FiniteKernel kd = FiniteKernel::identity(2, Num::rational);
  const SpaceShape cube({2, 2, 2});
  if (name == "example1") {
    ProductKernelSpec spec({KernelComponent(k2), KernelComponent(k2)});
    SignedMeasureTensor f(
        SpaceShape({2, 2}),
        rational_coeffs({q(1), q(1), q(-1), q(-1)}));  // (1,-1) (x) (1,1)
    WitnessReport rep =
        make_witness_report(spec, std::move(f), "[ProdMb]0", "fixture");
    return Fixture{name, std::move(spec), std::move(rep)};
  }
  if (name == "example2-w1" || name == "example3") {
    std::vector<KernelComponent> comps;
    if (name == "example2-w1")
      comps = {KernelComponent(k2), KernelComponent(k2), KernelComponent(k2)};
    else
      comps = {KernelComponent(k2), KernelComponent(kd), KernelComponent(kd)};
    ProductKernelSpec spec(std::move(comps));
    JointDistribution p{SignedMeasureTensor(
        cube, rational_coeffs({q(1, 5), q(1, 10), q(1, 10), q(1, 10),
                               q(1, 5), q(1, 10), q(1, 10), q(1, 10)}))};
    WitnessReport rep =
        make_witness_report(spec, i_class_element(p), "I", "fixture", p);
    return Fixture{name, std::move(spec), std::move(rep)};
  }
  if (name == "example2-w2") {
    ProductKernelSpec spec(
        {KernelComponent(k2), KernelComponent(k2), KernelComponent(k2)});
    JointDistribution p{SignedMeasureTensor(
        cube, rational_coeffs({q(0), q(1, 10), q(1, 10), q(1, 10),
                               q(1, 10), q(1, 10), q(3, 10), q(1, 5)}))};
    WitnessReport rep =
        make_witness_report(spec, i_class_element(p), "I", "fixture", p);
    return Fixture{name, std::move(spec), std::move(rep)};
  }
  throw std::invalid_argument("unknown fixture: " + name);
}

JointDistribution factorizing_family(const Rational& ain, const Rational& bin) {
  Rational a = ain, b = bin;
  a.canonicalize();  // guard against unreduced mpq_class(p, q) input
  b.canonicalize();
  if (sgn(a) < 0 || sgn(b) < 0)
    throw std::invalid_argument("factorizing family requires a, b >= 0");
  const Rational s = a + b;
  if (s > 1) throw std::invalid_argument("factorizing family requires a + b <= 1");
  if (sgn(s) <= 0)
    throw std::invalid_argument("factorizing family requires a + b > 0");
  const Rational one_minus = Rational(1) - s;
  return JointDistribution{SignedMeasureTensor(
      SpaceShape({2, 2}),
      rational_coeffs({a * one_minus / s, b * one_minus / s, a, b}))};
}

DependentJointOutcome closed_form_dependent_joint(const std::array<Rational, 6>& zin) {
  std::array<Rational, 6> z = zin;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i].canonicalize();  // guard against unreduced mpq_class(p, q) input
    if (sgn(z[i]) < 0 || z[i] > 1) {
      std::ostringstream os;
      os << "parameter z" << i << " out of [0,1]";
      throw std::invalid_argument(os.str());
    }
  }
  const Rational &z0 = z[0], &z1 = z[1], &z2 = z[2], &z3 = z[3], &z4 = z[4],
                 &z5 = z[5];
  auto p2 = [](const Rational& x) { return Rational(x * x); };
  auto p3 = [](const Rational& x) { return Rational(x * x * x); };

  const Rational n1 =
      z2 + z1 + z4 + z5 - 3 * z2 * z1 - 4 * z2 * z4 - 4 * z1 * z4 - z2 * z3 -
      2 * z2 * z0 - 2 * z1 * z3 - 3 * z2 * z5 - 2 * z4 * z3 - z1 * z0 -
      3 * z1 * z5 - 2 * z4 * z0 - 4 * z4 * z5 - z3 * z0 - z3 * z5 - z0 * z5 +
      2 * z2 * p2(z1) + 2 * p2(z2) * z1 + 4 * z2 * p2(z4) + 2 * p2(z2) * z4 +
      4 * z1 * p2(z4) + 2 * p2(z1) * z4 + 2 * p2(z2) * z0 + 2 * p2(z1) * z3 +
      2 * z2 * p2(z5) + 2 * p2(z2) * z5 + 2 * p2(z4) * z3 + 2 * z1 * p2(z5) +
      2 * p2(z1) * z5 + 2 * p2(z4) * z0 + 2 * z4 * p2(z5) + 4 * p2(z4) * z5 -
      p2(z2) - p2(z1) - 3 * p2(z4) + 2 * p3(z4) - p2(z5) + 6 * z2 * z1 * z4 +
      2 * z2 * z1 * z3 + 2 * z2 * z4 * z3 + 2 * z2 * z1 * z0 +
      4 * z2 * z1 * z5 + 4 * z2 * z4 * z0 + 4 * z1 * z4 * z3 +
      6 * z2 * z4 * z5 + 2 * z1 * z4 * z0 + 6 * z1 * z4 * z5 +
      2 * z2 * z3 * z0 + 2 * z2 * z3 * z5 + 2 * z1 * z3 * z0 +
      2 * z2 * z0 * z5 + 2 * z1 * z3 * z5 + 2 * z4 * z3 * z0 +
      2 * z4 * z3 * z5 + 2 * z1 * z0 * z5 + 2 * z4 * z0 * z5;

  const Rational den =
      2 * z2 * z1 - z1 - 2 * z4 - z3 - z0 - 2 * z5 - z2 + 2 * z2 * z4 +
      2 * z1 * z4 + 2 * z2 * z0 + 2 * z1 * z3 + 2 * z2 * z5 + 2 * z4 * z3 +
      2 * z1 * z5 + 2 * z4 * z0 + 4 * z4 * z5 + 2 * z3 * z0 + 2 * z3 * z5 +
      2 * z0 * z5 + 2 * p2(z4) + 2 * p2(z5);

  const Rational n2 =
      z4 + z3 + z0 + z5 - z2 * z1 - z2 * z4 - z1 * z4 - z2 * z3 -
      2 * z2 * z0 - 2 * z1 * z3 - 2 * z2 * z5 - 3 * z4 * z3 - z1 * z0 -
      2 * z1 * z5 - 3 * z4 * z0 - 4 * z4 * z5 - 3 * z3 * z0 - 4 * z3 * z5 -
      4 * z0 * z5 + 2 * z2 * p2(z0) + 2 * z1 * p2(z3) + 2 * z2 * p2(z5) +
      2 * z4 * p2(z3) + 2 * p2(z4) * z3 + 2 * z1 * p2(z5) + 2 * z4 * p2(z0) +
      2 * p2(z4) * z0 + 4 * z4 * p2(z5) + 2 * p2(z4) * z5 + 2 * z3 * p2(z0) +
      2 * p2(z3) * z0 + 4 * z3 * p2(z5) + 2 * p2(z3) * z5 + 4 * z0 * p2(z5) +
      2 * p2(z0) * z5 - p2(z4) - p2(z3) - p2(z0) - 3 * p2(z5) + 2 * p3(z5) +
      2 * z2 * z1 * z3 + 2 * z2 * z4 * z3 + 2 * z2 * z1 * z0 +
      2 * z2 * z1 * z5 + 2 * z2 * z4 * z0 + 2 * z1 * z4 * z3 +
      2 * z2 * z4 * z5 + 2 * z1 * z4 * z0 + 2 * z1 * z4 * z5 +
      2 * z2 * z3 * z0 + 2 * z2 * z3 * z5 + 2 * z1 * z3 * z0 +
      4 * z2 * z0 * z5 + 4 * z1 * z3 * z5 + 4 * z4 * z3 * z0 +
      6 * z4 * z3 * z5 + 2 * z1 * z0 * z5 + 6 * z4 * z0 * z5 +
      6 * z3 * z0 * z5;

  if (sgn(den) == 0)
    throw std::invalid_argument("zero denominator in the closed form");
  const Rational p111 = -n1 / den;
  const Rational p211 = -n2 / den;
  const std::array<Rational, 8> flat = {p111, z2, z1, z4, p211, z3, z0, z5};
  Rational sum(0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (sgn(flat[i]) < 0) {
      std::ostringstream os;
      const std::vector<int> idx = SpaceShape({2, 2, 2}).unflatten(i);
      os << "generated entry p(" << idx[0] + 1 << "," << idx[1] + 1 << ","
         << idx[2] + 1 << ") is negative";
      throw std::invalid_argument(os.str());
    }
    sum += flat[i];
  }
  if (sum != 1)
    throw std::logic_error("closed-form mass identity violated");

  std::vector<Scalar> coeffs;
  coeffs.reserve(8);
  for (const Rational& x : flat) coeffs.emplace_back(x);
  JointDistribution joint{SignedMeasureTensor(SpaceShape({2, 2, 2}), std::move(coeffs))};
  SignedMeasureTensor a = i_class_element(joint);

  // The two signed constraint groups must vanish identically.
  const auto av = [&](int i, int j, int k) {
    const std::array<int, 3> idx = {i, j, k};
    return a.at(idx);
  };
  const Scalar even = av(0, 0, 0) + av(0, 1, 1) + av(1, 0, 1) + av(1, 1, 0);
  const Scalar odd = av(0, 0, 1) + av(0, 1, 0) + av(1, 0, 0) + av(1, 1, 1);
  if (!even.is_zero() || !odd.is_zero())
    throw std::logic_error("closed-form annihilation identity violated");

  const FiniteKernel k2 = signed_two_point_kernel(Num::rational);
  ProductKernelSpec spec(
      {KernelComponent(k2), KernelComponent(k2), KernelComponent(k2)});
  WitnessReport rep =
      make_witness_report(spec, std::move(a), "I", "closed-form", joint);
  return DependentJointOutcome{std::move(joint), std::move(rep)};
}

EmbeddingCollision collision_from_null(const std::vector<Scalar>& v) {
  if (v.empty()) throw std::invalid_argument("empty vector");
  const Num mode = v.front().mode();
  Scalar pos_sum = Scalar::zero(mode);
  Scalar neg_sum = Scalar::zero(mode);
  for (const Scalar& x : v) {
    if (x.mode() != mode) throw ModeError("mixed scalar modes");
    if (x.sign() > 0) pos_sum += x;
    if (x.sign() < 0) neg_sum += -x;
  }
  if (pos_sum.is_zero() || !(pos_sum - neg_sum).is_zero())
    throw std::invalid_argument("vector is not zero-sum nonzero");
  std::vector<Scalar> p(v.size(), Scalar::zero(mode));
  std::vector<Scalar> n(v.size(), Scalar::zero(mode));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].sign() > 0) p[i] = v[i] / pos_sum;
    if (v[i].sign() < 0) n[i] = -v[i] / pos_sum;
  }
  const SpaceShape line({static_cast<int>(v.size())});
  return EmbeddingCollision{
      JointDistribution{SignedMeasureTensor(line, std::move(p))},
      JointDistribution{SignedMeasureTensor(line, std::move(n))}};
}

std::optional<EmbeddingCollision> find_embedding_collision(const FiniteKernel& k) {
  Finding f = is_characteristic_finite(k);
  if (f.verdict == Verdict::holds) return std::nullopt;
  return collision_from_null(f.witness->coefficients());
}

CollisionWitnessOutcome dependence_witness_from_collision(
    const ProductKernelSpec& k, const EmbeddingCollision& c, int z, int zp,
    const std::vector<JointDistribution>& tails) {
  if (!k.all_finite())
    throw std::invalid_argument("collision witness requires finite components");
  const int m_count = k.order();
  if (m_count < 2) throw std::invalid_argument("at least two components required");
  const Num mode = k.finite_mode();
  const int n1 = k.finite(0).size();
  const int n2 = k.finite(1).size();
  if (c.p.shape().order() != 1 || c.p.shape().size(0) != n1 ||
      !(c.p.shape() == c.q.shape()))
    throw std::invalid_argument("collision shape mismatch");
  if (z == zp || z < 0 || zp < 0 || z >= n2 || zp >= n2)
    throw std::invalid_argument("need two distinct points of component 2");
  if (static_cast<int>(tails.size()) != m_count - 2)
    throw std::invalid_argument("need one tail distribution per component 3..M");
  for (int m = 2; m < m_count; ++m) {
    const JointDistribution& t = tails[static_cast<std::size_t>(m - 2)];
    if (t.shape().order() != 1 || t.shape().size(0) != k.finite(m).size() ||
        t.mode() != mode)
      throw std::invalid_argument("tail distribution shape mismatch");
  }

  // Precondition: the pair embeds identically under component 1.
  ProductKernelSpec head({KernelComponent(k.finite(0))});
  const Scalar gap = mmd2(head, c.p, c.q);
  const bool gap_ok = gap.mode() == Num::rational
                          ? gap.is_zero()
                          : std::fabs(gap.to_double()) <= 1e-10;
  if (!gap_ok)
    throw std::invalid_argument(
        "collision pair does not have equal embeddings (MMD^2 != 0)");

  std::vector<SignedMeasureTensor> fa{c.p.measure(), delta_tensor(n2, z, mode)};
  std::vector<SignedMeasureTensor> fb{c.q.measure(), delta_tensor(n2, zp, mode)};
  for (const JointDistribution& t : tails) {
    fa.push_back(t.measure());
    fb.push_back(t.measure());
  }
  const Scalar half = Scalar::one(mode) / (Scalar::one(mode) + Scalar::one(mode));
  SignedMeasureTensor f =
      product_measure(fa).scaled(half) + product_measure(fb).scaled(half);
  JointDistribution joint{std::move(f)};
  WitnessReport rep =
      make_witness_report(k, i_class_element(joint), "I", "construction", joint);
  return CollisionWitnessOutcome{std::move(joint), std::move(rep)};
}

VerifyOutcome verify_witness(const ProductKernelSpec& k, const WitnessReport& w) {
  if (!k.all_finite())
    throw std::invalid_argument("exact verification requires finite components");
  if (!(w.witness.shape() == k.finite_shape()))
    throw std::invalid_argument("witness shape does not match the kernel");
  if (k.finite_mode() != Num::rational || w.witness.mode() != Num::rational)
    throw std::invalid_argument("exact verification requires rational data");

  WitnessReport fresh =
      make_witness_report(k, w.witness, w.measure_class, w.origin, w.joint);
  VerifyOutcome out;
  out.residuals = fresh.residuals;
  out.residuals.emplace_back("quad-form", fresh.quad_value);
  out.residuals.emplace_back("stated-quad-gap",
                             (fresh.quad_value - w.quad_value).abs());
  bool ok = fresh.quad_value.is_zero() && fresh.nonzero;
  for (const auto& [name, value] : out.residuals)
    if (!value.is_zero()) ok = false;
  out.ok = ok;
  return out;
}

SearchOutcome search_I_witness(const ProductKernelSpec& k, long budget,
                               std::uint64_t seed, const Rational& separation_in) {
  Rational separation = separation_in;
  separation.canonicalize();  // guard against unreduced mpq_class(p, q) input
  if (!k.all_finite())
    throw std::invalid_argument("witness search requires finite components");
  if (k.order() < 2)
    throw std::invalid_argument("witness search requires at least two components");
  if (k.finite_mode() != Num::rational)
    throw std::invalid_argument("witness search requires rational kernels");
  if (sgn(separation) < 0)
    throw std::invalid_argument("separation must be nonnegative");
  if (budget < 0) throw std::invalid_argument("budget must be nonnegative");

  SearchOutcome out;

  // Rule short-circuits: certified impossibility or a constructed witness.
  ProductReport decided = decide_product_properties(k);
  const Finding& target = decided.product.at(ProductProperty::i_char);
  if (target.verdict == Verdict::holds) {
    out.status = SearchOutcome::Status::certified_impossible;
    out.rule = target.rule;
    out.note = "no witness exists: " + target.note;
    return out;
  }
  if (target.verdict == Verdict::fails) {
    out.status = SearchOutcome::Status::witness_found;
    out.rule = target.rule;
    out.note = "constructed without search: " + target.note;
    out.witness = make_witness_report(k, *target.witness, "I", "construction",
                                      target.witness_joint);
    return out;
  }

  const SpaceShape shape = k.finite_shape();
  const long total = static_cast<long>(shape.total());

  // Exact basis of { a : K a = 0, all marginals of a vanish } used to round
  // float candidates; kept empty (disabling exact rounding) on big spaces.
  std::vector<std::vector<Rational>> basis;
  if (total <= 256) {
    const std::vector<Scalar> kron = kronecker_gram_entries(k);
    std::vector<int> axis_offset(static_cast<std::size_t>(k.order()), 0);
    int extra = 0;
    for (int m = 0; m < k.order(); ++m) {
      axis_offset[static_cast<std::size_t>(m)] = extra;
      extra += shape.size(m);
    }
    const std::size_t rows = static_cast<std::size_t>(total + extra);
    std::vector<Rational> mat(rows * static_cast<std::size_t>(total), Rational(0));
    for (long i = 0; i < total; ++i)
      for (long j = 0; j < total; ++j)
        mat[static_cast<std::size_t>(i) * total + j] =
            kron[static_cast<std::size_t>(i) * total + j].rational();
    for (long j = 0; j < total; ++j) {
      const std::vector<int> idx = shape.unflatten(static_cast<std::size_t>(j));
      for (int m = 0; m < k.order(); ++m) {
        const std::size_t row = static_cast<std::size_t>(
            total + axis_offset[static_cast<std::size_t>(m)] +
            idx[static_cast<std::size_t>(m)]);
        mat[row * static_cast<std::size_t>(total) + static_cast<std::size_t>(j)] = 1;
      }
    }
    basis = rational_nullspace(rows, static_cast<std::size_t>(total), mat);
  }
  if (basis.empty()) {
    out.status = SearchOutcome::Status::inconclusive;
    out.rule = "search";
    out.note = "no witness found within budget — inconclusive";
    return out;
  }

  std::vector<std::vector<double>> basis_d(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    basis_d[i].reserve(static_cast<std::size_t>(total));
    for (const Rational& x : basis[i]) basis_d[i].push_back(x.get_d());
  }

  ExactifyContext ctx;
  ctx.spec = &k;
  ctx.shape = &shape;
  ctx.basis = &basis;
  ctx.basis_d = &basis_d;
  ctx.separation = separation;

  const DoubleSpace ds = double_space(k);
  const double separation_d = separation.get_d();

  const int restarts =
      static_cast<int>(std::clamp<long>(budget / 5000, 1, 16));
  const long per_restart = budget / restarts;
  std::vector<RestartResult> results(static_cast<std::size_t>(restarts));
  parallel_for(restarts, [&](long r) {
    results[static_cast<std::size_t>(r)] =
        run_restart(ctx, ds, mix_seed(seed, static_cast<std::uint64_t>(r)),
                    per_restart, separation_d);
  });

  out.restarts = restarts;
  for (const RestartResult& r : results) out.evaluations += r.evals;
  for (RestartResult& r : results)
    if (r.found) {
      out.status = SearchOutcome::Status::witness_found;
      out.rule = "search";
      out.note = "projected-gradient candidate rounded and verified exactly";
      out.witness = std::move(r.found);
      return out;
    }
  out.status = SearchOutcome::Status::inconclusive;
  out.rule = "search";
  out.note = "no witness found within budget — inconclusive";
  return out;
}

SearchObjective search_objective(const ProductKernelSpec& k,
                                 const std::vector<double>& p) {
  if (!k.all_finite())
    throw std::invalid_argument("search objective requires finite components");
  if (k.order() < 2)
    throw std::invalid_argument("search objective requires at least two components");
  const DoubleSpace ds = double_space(k);
  if (static_cast<long>(p.size()) != ds.total)
    throw std::invalid_argument("point size does not match the product space");
  const SearchEval ev = evaluate_point(ds, p);
  SearchObjective out;
  out.value = ev.hsic2;
  out.gradient = marginal_contraction(ds, ev.y, ev.marg);
  for (std::size_t j = 0; j < out.gradient.size(); ++j)
    out.gradient[j] = 2.0 * (ev.y[j] - out.gradient[j]);
  return out;
}

}  // namespace tklab
