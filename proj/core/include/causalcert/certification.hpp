#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "causalcert/conic.hpp"
#include "causalcert/dpovm.hpp"
#include "causalcert/process.hpp"

namespace causalcert {

enum class ConeVariant {
  DPOVM_Bipartite,
  DPOVM_TwoPlusF,
  MDCI_Element,
  MDCI_ElementFamily_F,
  MDCI_TTU,
  MDCI_TUU,
  Process_Bipartite,
  Process_TwoPlusF,
};
std::string to_string(ConeVariant v);
// Accepts the enumerator names.
ConeVariant cone_from_string(const std::string& s);
bool is_process_cone(ConeVariant v);

struct ConeSpec {
  ConeVariant variant = ConeVariant::DPOVM_Bipartite;
  TrustedSplit split;   // D-POVM cones
  ScenarioKind kind;    // process cones
  int n_a = 1, n_b = 1, n_f = 1, n_y = 1, n_z = 1;

  // Takes the split and the cardinalities from the object.
  static ConeSpec for_dpovm(ConeVariant v, const DPOVM& E);
  static ConeSpec for_process(const ScenarioKind& kind);
};

// Throws InvalidParam when the object does not have the index structure and
// factors the cone expects.
void check_shape(const ConeSpec& cone, const DPOVM& E);

struct NamedOperator {
  std::string name;
  OutcomeIndex index;
  LabeledOperator op;
};

struct WitnessFamily {
  ConeSpec cone;
  DPOVM S;  // processes: a single element with index (0, 0)
  std::vector<NamedOperator> certificate;
};

enum class Verdict { Noncausal, Separable, Boundary, Unknown };
std::string to_string(Verdict v);

struct CertificationResult {
  ConeVariant cone = ConeVariant::DPOVM_Bipartite;
  double robustness = 0.0;   // max(0, r_free)
  double r_free = 0.0;       // optimum with r unrestricted in sign
  std::optional<WitnessFamily> witness;
  SolveStatus status = SolveStatus::NumericalError;
  double duality_gap = 0.0;  // |r_free + S * E|
  double solve_time_ms = 0.0;
  int iterations = 0;
  Verdict verdict = Verdict::Unknown;
};

struct CertifyOptions {
  SolverOptions solver;
  double margin = 1e-6;
  bool verify = false;  // run verify_witness on the extracted witness
};

// min r s.t. object + r * noise lies in the cone. r is solved as a free
// scalar; a negative optimum marks an interior point ("separable").
// Throws SolverError when the solver fails outright.
CertificationResult certify(const DPOVM& E, const ConeSpec& cone, const DPOVM& noise, const CertifyOptions& opt = {});
CertificationResult certify_process(const ProcessMatrix& W, const CertifyOptions& opt = {});
CertificationResult certify_process(const ProcessMatrix& W, const ProcessMatrix& noise, const CertifyOptions& opt = {});
// Teleported assemblage family on the TTU or TUU cone against uniform noise.
CertificationResult certify_assemblage(const Assemblage& w, const CertifyOptions& opt = {});

struct OrderCheck {
  std::string order;
  double margin = 0.0;          // largest t with S - L - t 1 PSD (SDP)
  double min_eigenvalue = 0.0;  // recomputed from the returned decomposition
  double linear_residual = 0.0; // constraints on the non-PSD parts
  bool ok = false;
};

struct WitnessReport {
  std::vector<OrderCheck> orders;
  std::vector<NamedOperator> certificate;
  bool ok() const;
};

// Searches, per causal order, the additive decomposition of the dual-cone
// characterization. Throws NotAWitness when one does not exist within tol,
// taken relative to the largest operator norm among the elements of S.
WitnessReport verify_witness(const WitnessFamily& S, const SolverOptions& opt = {}, double tol = 1e-8);
WitnessReport check_witness(const WitnessFamily& S, const SolverOptions& opt = {}, double tol = 1e-8);

// sum_o Tr[S_o^T E_o], matched by outcome index.
double apply_witness(const WitnessFamily& S, const DPOVM& E);
double apply_witness(const WitnessFamily& S, const ProcessMatrix& W);

// The hand-built witness for the switch D-POVM on the (2+F) cone, with its
// decomposition for both orders.
WitnessFamily qs_witness();

struct ScanProbe {
  double r = 0.0;
  double robustness = 0.0;
  Verdict verdict = Verdict::Unknown;
  SolveStatus status = SolveStatus::NumericalError;
};

struct ScanOptions {
  double width = 1e-3;
  double margin = 1e-6;         // bracket test on the robustness
  double bisect_margin = 0.0;   // interior probes compare r_free against this
};

struct ScanResult {
  double threshold = 0.0;
  double lo = 0.0, hi = 0.0;
  std::vector<ScanProbe> probes;
};

// Bisection on r for the sign change of r_free. The endpoints must have
// robustness above the margin at r_lo and at most the margin at r_hi.
ScanResult threshold_scan(const std::function<CertificationResult(double)>& probe, double r_lo, double r_hi,
                          const ScanOptions& opt = {});

// Device families of the catalogued scans, as functions of the noise weight.
DPOVM qs_dpovm(double r);
DPOVM feix_dpovm(double r, double xi = 0.01);
Assemblage qs_ttu_assemblage(double r);
Assemblage qs_tuu_assemblage(double r);

}  // namespace causalcert
