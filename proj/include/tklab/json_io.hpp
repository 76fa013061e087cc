#pragma once

#include <json.hpp>
#include <string>

#include "tklab/hsic.hpp"
#include "tklab/property.hpp"
#include "tklab/witness.hpp"

namespace tklab {

// Insertion-ordered JSON keeps report key order stable for golden tests.
using Json = nlohmann::ordered_json;

// Rationals serialize as "p" / "p/q" strings; floats as JSON numbers.
Json scalar_to_json(const Scalar& s);
Scalar scalar_from_json(const Json& j);

// {"shape":[2,2],"coefficients":["1/2","0",...]} — row-major, first
// coordinate slowest.
Json measure_to_json(const SignedMeasureTensor& f);
SignedMeasureTensor measure_from_json(const Json& j);

// {"type":"finite","gram":[["1","-1"],["-1","1"]]},
// {"type":"product","components":[...]},
// {"type":"gaussian","bandwidth":1.0,"dim":3}, {"type":"laplacian",...},
// {"type":"constant","dim":1}, {"type":"discrete-delta","dim":1}.
Json kernel_component_to_json(const KernelComponent& c);
Json kernel_to_json(const ProductKernelSpec& k);
KernelComponent kernel_component_from_json(const Json& j);
// A single non-product kernel is accepted and wrapped as a one-factor
// product.
ProductKernelSpec kernel_from_json(const Json& j);

Json psd_certificate_to_json(const PsdCertificate& c);

// {"status","provenance","citation"[,"note","certificate"]}; indices inside
// certificates are 1-based.
Json finding_to_json(const Finding& f);
Json product_report_to_json(const ProductReport& r);

// Measure fields plus {"quad_form","class","origin","residuals",...}.
Json witness_report_to_json(const WitnessReport& w);
Json search_outcome_to_json(const SearchOutcome& s);
Json test_result_to_json(const TestResult& t);

// Structural validator covering the subset of JSON Schema the shipped
// schemas use: type, enum, const, required, properties,
// additionalProperties, items, minItems/maxItems, pattern,
// minimum/exclusiveMinimum, anyOf/allOf. Returns false and fills `why`
// (when given) with the first violation, path-prefixed.
bool schema_validate(const Json& doc, const Json& schema,
                     std::string* why = nullptr);

}  // namespace tklab
