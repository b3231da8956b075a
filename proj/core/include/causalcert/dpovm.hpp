#pragma once

#include <optional>
#include <string>
#include <vector>

#include "causalcert/hilbert.hpp"
#include "causalcert/instruments.hpp"
#include "causalcert/process.hpp"

namespace causalcert {

// Outcome (a, b, f) and classical inputs (y, z); -1 marks an absent index.
struct OutcomeIndex {
  int a = 0;
  int b = 0;
  int f = -1;
  int y = -1;
  int z = -1;

  bool operator==(const OutcomeIndex& o) const { return a == o.a && b == o.b && f == o.f && y == o.y && z == o.z; }
  std::string str() const;
};

struct DPOVMElement {
  OutcomeIndex index;
  LabeledOperator op;
};

// Trusted factors per party. `*_out` lists the factors playing the role of
// the output-isomorphic ancilla (needed by the single-element cones).
struct TrustedSplit {
  Names alice, bob, fiona;
  Names alice_out, bob_out;
};

// A D-POVM, or any family of D-POVM elements sharing trusted factors.
struct DPOVM {
  std::vector<DPOVMElement> elements;
  TrustedSplit split;

  int size() const { return static_cast<int>(elements.size()); }
  const Factors& factors() const;
  const LabeledOperator& at(const OutcomeIndex& idx) const;
  bool has_f() const;
};

// Splits trusted factors by prefix: At_* to Alice, Bt_* to Bob, Ft* to Fiona;
// names ending in "_O" form the output-isomorphic parts.
TrustedSplit infer_split(const Factors& trusted);

struct DPOVMReport {
  std::vector<double> psd_residual;
  double normalization_residual = 0.0;  // worst over classical-input groups
  bool ok = true;
};
DPOVMReport check_dpovm(const DPOVM& E, double tol = 1e-9);

DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const Instrument& bob);
DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const Instrument& bob, const Instrument& fiona);
// Classical inputs: Bob's instrument indexed by y, Fiona's by z; every element
// carries explicit y and z.
DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const std::vector<Instrument>& bob_by_y,
                   const std::vector<Instrument>& fiona_by_z);

// Tr[E^T (rho_1 (x) rho_2 ...)]
double probability(const LabeledOperator& element, const std::vector<LabeledOperator>& rho_inputs);

struct NosigReport {
  double a_before_b = 0.0;  // max_a |sum_b E_ab - E_a (x) 1^B|
  double b_before_a = 0.0;
};
NosigReport nosig_marginals(const DPOVM& E);

// P[element][joint input], joint inputs in mixed radix over parties (first
// party most significant).
struct CorrelationTable {
  std::vector<std::vector<double>> p;
};
CorrelationTable correlations(const DPOVM& E, const std::vector<QuantumInputSet>& inputs);
// sum over elements and inputs of s^{x..} P, with s from the dual frames.
double witness_value_from_correlations(const DPOVM& S, const std::vector<QuantumInputSet>& inputs,
                                       const CorrelationTable& P);

struct Assemblage {
  enum class Variant { TTU, TUU };
  Variant variant = Variant::TTU;
  ScenarioKind kind;  // scenario of the process that generated it
  std::vector<DPOVMElement> elements;  // TTU: (f, z); TUU: (b, f, y, z)
};
Assemblage ttu_assemblage(const ProcessMatrix& W, const std::vector<POVM>& fiona_by_z);
Assemblage tuu_assemblage(const ProcessMatrix& W, const std::vector<Instrument>& bob_by_y,
                          const std::vector<POVM>& fiona_by_z);

struct AssemblageReport {
  std::vector<CheckItem> items;
  bool ok() const;
};
AssemblageReport check_assemblage(const Assemblage& w, double tol = 1e-9);

// Element (0,0) of the teleportation instruments applied to W.
DPOVM teleport_process(const ProcessMatrix& W);
// Element families (E_{0,0,f|z}) for TTU and (E_{0,b,f|y,z}) for TUU.
DPOVM teleport_assemblage(const Assemblage& w);

// Elements with the given (a, b), re-indexed to (0, 0).
DPOVM restrict_outcomes(const DPOVM& E, int a, int b);
// E°_o = 1 * (sum_o Tr E_o) / (n * D): the trace of the family spread evenly.
DPOVM uniform_noise(const DPOVM& E);
// (E + r N) / (1 + r)
DPOVM mix(const DPOVM& E, const DPOVM& N, double r);

struct Realization {
  ProcessMatrix W;
  Instrument alice;
  Instrument bob;
};
// Builds a causally separable process and instruments that induce
// q * part_ab + (1 - q) * part_ba (bipartite only).
Realization realize_separable_dpovm(const DPOVM& E, double q, const DPOVM& part_ab, const DPOVM& part_ba);

}  // namespace causalcert
