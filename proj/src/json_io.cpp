#include "tklab/json_io.hpp"

#include <regex>
#include <stdexcept>

namespace tklab {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument(what);
}

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    bad(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

int need_int(const Json& j, const char* key) {
  const Json& v = need(j, key);
  if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
  return v.get<int>();
}

std::string verdict_key(Verdict v) { return verdict_name(v); }

Json scalars_to_json(const std::vector<Scalar>& v) {
  Json a = Json::array();
  for (const Scalar& s : v) a.push_back(scalar_to_json(s));
  return a;
}

}  // namespace

Json scalar_to_json(const Scalar& s) {
  if (s.is_rational()) return Json(rat_str(s.rational()));
  return Json(s.real_value());
}

Scalar scalar_from_json(const Json& j) {
  if (j.is_string()) return Scalar(rat_parse(j.get<std::string>()));
  if (j.is_number()) return Scalar::real(j.get<double>());
  bad("scalar must be a \"p/q\" string or a number");
}

Json measure_to_json(const SignedMeasureTensor& f) {
  Json j = Json::object();
  j["shape"] = f.shape().sizes();
  j["coefficients"] = scalars_to_json(f.coefficients());
  return j;
}

SignedMeasureTensor measure_from_json(const Json& j) {
  const Json& shape_j = need(j, "shape");
  const Json& coef_j = need(j, "coefficients");
  if (!shape_j.is_array() || shape_j.empty()) bad("shape must be a nonempty array");
  std::vector<int> sizes;
  for (const Json& s : shape_j) {
    if (!s.is_number_integer() || s.get<int>() < 1)
      bad("shape entries must be positive integers");
    sizes.push_back(s.get<int>());
  }
  SpaceShape shape(sizes);
  if (!coef_j.is_array() || coef_j.size() != shape.total())
    bad("coefficients must list exactly one value per point");
  std::vector<Scalar> c;
  c.reserve(coef_j.size());
  bool any_rat = false, any_real = false;
  for (const Json& v : coef_j) {
    c.push_back(scalar_from_json(v));
    (c.back().is_rational() ? any_rat : any_real) = true;
  }
  if (any_rat && any_real) bad("coefficients mix rational strings and numbers");
  return SignedMeasureTensor(shape, std::move(c));
}

Json kernel_component_to_json(const KernelComponent& c) {
  Json j = Json::object();
  if (std::holds_alternative<FiniteKernel>(c)) {
    const FiniteKernel& k = std::get<FiniteKernel>(c);
    j["type"] = "finite";
    Json rows = Json::array();
    for (int i = 0; i < k.size(); ++i) {
      Json row = Json::array();
      for (int jj = 0; jj < k.size(); ++jj) row.push_back(scalar_to_json(k.g(i, jj)));
      rows.push_back(std::move(row));
    }
    j["gram"] = std::move(rows);
    return j;
  }
  const ContinuousKernel& k = std::get<ContinuousKernel>(c);
  switch (k.family()) {
    case ContinuousFamily::gaussian:
      j["type"] = "gaussian";
      j["bandwidth"] = k.bandwidth();
      break;
    case ContinuousFamily::laplacian:
      j["type"] = "laplacian";
      j["bandwidth"] = k.bandwidth();
      break;
    case ContinuousFamily::constant:
      j["type"] = "constant";
      break;
    case ContinuousFamily::discrete_delta:
      j["type"] = "discrete-delta";
      break;
  }
  j["dim"] = k.dim();
  return j;
}

Json kernel_to_json(const ProductKernelSpec& k) {
  Json j = Json::object();
  j["type"] = "product";
  Json comps = Json::array();
  for (int m = 0; m < k.order(); ++m)
    comps.push_back(kernel_component_to_json(k.component(m)));
  j["components"] = std::move(comps);
  return j;
}

KernelComponent kernel_component_from_json(const Json& j) {
  const Json& type_j = need(j, "type");
  if (!type_j.is_string()) bad("kernel type must be a string");
  const std::string type = type_j.get<std::string>();
  if (type == "finite") {
    const Json& gram_j = need(j, "gram");
    if (!gram_j.is_array() || gram_j.empty()) bad("gram must be a nonempty array of rows");
    const int n = static_cast<int>(gram_j.size());
    std::vector<Scalar> entries;
    entries.reserve(static_cast<std::size_t>(n) * n);
    bool any_rat = false, any_real = false;
    for (const Json& row : gram_j) {
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        bad("gram must be square");
      for (const Json& v : row) {
        entries.push_back(scalar_from_json(v));
        (entries.back().is_rational() ? any_rat : any_real) = true;
      }
    }
    if (any_rat && any_real) bad("gram mixes rational strings and numbers");
    return FiniteKernel(n, std::move(entries));
  }
  const int dim = j.contains("dim") ? need_int(j, "dim") : 1;
  if (type == "constant") return ContinuousKernel::constant(dim);
  if (type == "discrete-delta") return ContinuousKernel::discrete_delta(dim);
  if (type == "gaussian" || type == "laplacian") {
    const Json& bw_j = need(j, "bandwidth");
    if (!bw_j.is_number()) bad("bandwidth must be a number");
    const double bw = bw_j.get<double>();
    return type == "gaussian" ? ContinuousKernel::gaussian(bw, dim)
                              : ContinuousKernel::laplacian(bw, dim);
  }
  bad("unknown kernel type \"" + type + "\"");
}

ProductKernelSpec kernel_from_json(const Json& j) {
  const Json& type_j = need(j, "type");
  if (type_j.is_string() && type_j.get<std::string>() == "product") {
    const Json& comps_j = need(j, "components");
    if (!comps_j.is_array() || comps_j.empty())
      bad("product kernel needs a nonempty components array");
    std::vector<KernelComponent> comps;
    for (const Json& c : comps_j) {
      if (c.is_object() && c.contains("type") && c.at("type") == "product")
        bad("nested product kernels are not supported");
      comps.push_back(kernel_component_from_json(c));
    }
    return ProductKernelSpec(std::move(comps));
  }
  std::vector<KernelComponent> one;
  one.push_back(kernel_component_from_json(j));
  return ProductKernelSpec(std::move(one));
}

Json psd_certificate_to_json(const PsdCertificate& c) {
  Json j = Json::object();
  switch (c.kind) {
    case PsdKind::strictly_positive: j["kind"] = "strictly-positive"; break;
    case PsdKind::semidefinite_singular: j["kind"] = "semidefinite-singular"; break;
    case PsdKind::indefinite: j["kind"] = "indefinite"; break;
  }
  j["mode"] = c.mode == Num::rational ? "rational" : "float";
  j["n"] = c.n;
  j["rank"] = c.rank;
  if (!c.permutation.empty()) {
    Json perm = Json::array();
    for (int p : c.permutation) perm.push_back(p + 1);
    j["permutation"] = std::move(perm);
  }
  j["pivots"] = scalars_to_json(c.pivots);
  if (c.vector) j["vector"] = scalars_to_json(*c.vector);
  if (c.quad_value) j["quad_value"] = scalar_to_json(*c.quad_value);
  return j;
}

Json finding_to_json(const Finding& f) {
  Json j = Json::object();
  j["status"] = verdict_key(f.verdict);
  j["provenance"] = provenance_name(f.provenance);
  j["citation"] = f.rule;
  if (!f.note.empty()) j["note"] = f.note;
  if (f.algebra) {
    Json cert = Json::object();
    cert["kind"] = "psd";
    cert["detail"] = psd_certificate_to_json(*f.algebra);
    j["certificate"] = std::move(cert);
  } else if (f.witness) {
    Json cert = Json::object();
    cert["kind"] = "witness";
    cert["class"] = f.witness_class;
    cert["measure"] = measure_to_json(*f.witness);
    if (f.witness_joint)
      cert["joint"] = measure_to_json(f.witness_joint->measure());
    j["certificate"] = std::move(cert);
  }
  return j;
}

Json product_report_to_json(const ProductReport& r) {
  Json j = Json::object();
  Json comps = Json::array();
  for (const ComponentFindings& c : r.components) {
    Json cj = Json::object();
    cj["characteristic"] = finding_to_json(c.characteristic);
    cj["universal"] = finding_to_json(c.universal);
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  Json prod = Json::object();
  for (ProductProperty p : kProductProperties) {
    auto it = r.product.find(p);
    if (it != r.product.end()) prod[property_name(p)] = finding_to_json(it->second);
  }
  j["product"] = std::move(prod);
  j["trace"] = r.trace;
  return j;
}

Json witness_report_to_json(const WitnessReport& w) {
  Json j = measure_to_json(w.witness);
  j["quad_form"] = scalar_to_json(w.quad_value);
  j["class"] = w.measure_class;
  j["origin"] = w.origin;
  Json res = Json::object();
  for (const auto& [name, value] : w.residuals) res[name] = scalar_to_json(value);
  j["residuals"] = std::move(res);
  if (w.nonzero) {
    Json entry = Json::array();
    for (int i : w.nonzero_entry) entry.push_back(i + 1);
    j["nonzero_entry"] = std::move(entry);
    j["nonzero_magnitude"] = scalar_to_json(w.nonzero_magnitude);
  }
  if (w.joint) j["joint"] = measure_to_json(w.joint->measure());
  return j;
}

Json search_outcome_to_json(const SearchOutcome& s) {
  Json j = Json::object();
  switch (s.status) {
    case SearchOutcome::Status::witness_found: j["status"] = "witness-found"; break;
    case SearchOutcome::Status::certified_impossible:
      j["status"] = "certified-impossible";
      break;
    case SearchOutcome::Status::inconclusive: j["status"] = "inconclusive"; break;
  }
  j["citation"] = s.rule;
  j["note"] = s.note;
  j["evaluations"] = s.evaluations;
  j["restarts"] = s.restarts;
  if (s.witness) j["witness"] = witness_report_to_json(*s.witness);
  return j;
}

Json test_result_to_json(const TestResult& t) {
  Json j = Json::object();
  j["statistic"] = t.statistic;
  j["permutations"] = t.permutations;
  j["p_value"] = t.p_value;
  j["seed"] = t.seed;
  j["bandwidths"] = t.bandwidths;
  return j;
}

namespace {

bool type_matches(const Json& doc, const std::string& t) {
  if (t == "object") return doc.is_object();
  if (t == "array") return doc.is_array();
  if (t == "string") return doc.is_string();
  if (t == "integer") return doc.is_number_integer();
  if (t == "number") return doc.is_number();
  if (t == "boolean") return doc.is_boolean();
  if (t == "null") return doc.is_null();
  return false;
}

bool validate_at(const Json& doc, const Json& schema, const std::string& path,
                 std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = (path.empty() ? "$" : path) + ": " + msg;
    return false;
  };
  if (!schema.is_object()) return true;

  if (schema.contains("type")) {
    const Json& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(doc, t.get<std::string>());
    } else if (t.is_array()) {
      for (const Json& one : t)
        if (one.is_string() && type_matches(doc, one.get<std::string>())) ok = true;
    }
    if (!ok) return fail("type mismatch, expected " + t.dump());
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const Json& v : schema.at("enum"))
      if (v == doc) ok = true;
    if (!ok) return fail("value not in enum");
  }
  if (schema.contains("const") && schema.at("const") != doc)
    return fail("value differs from const");
  if (schema.contains("pattern") && doc.is_string()) {
    const std::regex re(schema.at("pattern").get<std::string>());
    if (!std::regex_search(doc.get<std::string>(), re))
      return fail("string does not match pattern");
  }
  if (schema.contains("minimum") && doc.is_number() &&
      doc.get<double>() < schema.at("minimum").get<double>())
    return fail("below minimum");
  if (schema.contains("exclusiveMinimum") && doc.is_number() &&
      doc.get<double>() <= schema.at("exclusiveMinimum").get<double>())
    return fail("not above exclusiveMinimum");

  if (schema.contains("anyOf")) {
    for (const Json& alt : schema.at("anyOf")) {
      std::string ignored;
      if (validate_at(doc, alt, path, &ignored)) goto any_ok;
    }
    return fail("no anyOf branch matched");
  }
any_ok:
  if (schema.contains("allOf")) {
    for (const Json& alt : schema.at("allOf"))
      if (!validate_at(doc, alt, path, why)) return false;
  }

  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const Json& req : schema.at("required"))
        if (!doc.contains(req.get<std::string>()))
          return fail("missing required field \"" + req.get<std::string>() + "\"");
    }
    const Json* props = schema.contains("properties") ? &schema.at("properties") : nullptr;
    for (const auto& [key, value] : doc.items()) {
      if (props && props->contains(key)) {
        if (!validate_at(value, props->at(key), path + "." + key, why)) return false;
      } else if (schema.contains("additionalProperties")) {
        const Json& ap = schema.at("additionalProperties");
        if (ap.is_boolean() && !ap.get<bool>())
          return fail("unexpected field \"" + key + "\"");
        if (ap.is_object() && !validate_at(value, ap, path + "." + key, why))
          return false;
      }
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") &&
        doc.size() < schema.at("minItems").get<std::size_t>())
      return fail("too few items");
    if (schema.contains("maxItems") &&
        doc.size() > schema.at("maxItems").get<std::size_t>())
      return fail("too many items");
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i)
        if (!validate_at(doc[i], schema.at("items"),
                         path + "[" + std::to_string(i) + "]", why))
          return false;
    }
  }
  return true;
}

}  // namespace

bool schema_validate(const Json& doc, const Json& schema, std::string* why) {
  return validate_at(doc, schema, "", why);
}

}  // namespace tklab
