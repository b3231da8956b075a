#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "causalcert/certification.hpp"
#include "causalcert/dpovm.hpp"
#include "causalcert/instruments.hpp"
#include "causalcert/process.hpp"

namespace causalcert {

using Json = nlohmann::json;

// {kind, factors:[{name,dim}], re:[[...]], im:[[...]]}, row-major in
// canonical factor order.
Json to_json(const LabeledOperator& op, const std::string& kind = "operator");
LabeledOperator operator_from_json(const Json& j);

// kind is "bipartite" or "2+F".
Json to_json(const ProcessMatrix& w);
ProcessMatrix process_from_json(const Json& j);

// {role, factors_in, factors_out, elements:[operator...]}
Json to_json(const Instrument& I);
Instrument instrument_from_json(const Json& j);

Json to_json(const OutcomeIndex& i);
Json to_json(const TrustedSplit& s);
TrustedSplit split_from_json(const Json& j);

// {"split": {...}, "elements": [{"a","b","f","y","z","op"}]}, absent indices null.
Json to_json(const DPOVM& E);
DPOVM dpovm_from_json(const Json& j);
Json to_json(const Assemblage& w);
Assemblage assemblage_from_json(const Json& j);

Json to_json(const WitnessFamily& S);
WitnessFamily witness_from_json(const Json& j);
Json to_json(const WitnessReport& r);

// {cone, robustness, status, duality_gap, witness|null, solve_time_ms} plus
// r_free, verdict and iterations.
Json to_json(const CertificationResult& r);

// ParseError carries the file name and byte offset.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace causalcert
