#pragma once

#include <optional>
#include <string>
#include <vector>

#include "causalcert/certification.hpp"
#include "causalcert/process.hpp"

namespace causalcert::catalog {

struct ScenarioConfig {
  std::string name = "qs-sdiqi";
  std::optional<double> r, q, epsilon, xi;
  std::string process_file;      // custom
  std::string instruments_file;  // custom: {"alice": ..., "bob": ..., "fiona": ...}
  std::optional<std::string> cone;
  CertifyOptions certify;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
  double reference = 0.0;  // expected threshold
  double tolerance = 0.0;
  double r_lo = 0.0, r_hi = 1.0;
};

const std::vector<ScenarioInfo>& named_scenarios();
// Throws ParseError for an unknown name.
const ScenarioInfo& info(const std::string& name);

// Builds every object the scenario needs at noise weight r and reports each
// validity condition. Parameter-bound violations come back as failed items.
ValidityReport validate(const ScenarioConfig& cfg);

// Certification of the scenario's object at noise weight r.
CertificationResult certify_at(const ScenarioConfig& cfg, double r);

// The family handed to the solver (teleported for assemblages, a single
// element for processes) and its noise.
struct Family {
  DPOVM object;
  DPOVM noise;
  ConeVariant cone = ConeVariant::DPOVM_Bipartite;
};
Family family_at(const ScenarioConfig& cfg, double r);

ScanResult scan(const ScenarioConfig& cfg, double r_lo, double r_hi, const ScanOptions& opt = {});

// Fixed-witness rows: S_QS * E_QS and S_QS * E°.
struct WitnessRows {
  double on_object = 0.0;
  double on_noise = 0.0;
};
WitnessRows qs_witness_rows();

}  // namespace causalcert::catalog
