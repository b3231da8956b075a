#pragma once

#include <string>
#include <vector>

#include "causalcert/hilbert.hpp"

namespace causalcert {

struct ScenarioKind {
  enum class Variant { Bipartite, TwoPlusF };
  Variant variant = Variant::Bipartite;
  int d_ai = 2, d_ao = 2, d_bi = 2, d_bo = 2, d_f = 1;

  static ScenarioKind bipartite(int ai = 2, int ao = 2, int bi = 2, int bo = 2);
  static ScenarioKind two_plus_f(int ai = 2, int ao = 2, int bi = 2, int bo = 2, int f = 2);

  bool has_f() const { return variant == Variant::TwoPlusF; }
  Factors factors() const;
  bool operator==(const ScenarioKind& o) const;
};

std::string to_string(ScenarioKind::Variant v);

struct ScenarioParams {
  double q = 0.0;
  double epsilon = 0.0;
  double r = 0.0;
  double xi = 0.01;
};

struct CheckItem {
  std::string name;
  double residual = 0.0;
  bool ok = true;
};

struct ValidityReport {
  std::vector<CheckItem> items;
  bool ok() const;
  const CheckItem* first_failure() const;
  std::string summary() const;
};

class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(ValidityReport r) : Error(r.summary()), report_(std::move(r)) {}
  const ValidityReport& report() const { return report_; }

 private:
  ValidityReport report_;
};

struct ProcessMatrix {
  ScenarioKind kind;
  LabeledOperator W;
};

// PSD, normalization and every projective validity constraint, reported
// individually with max-entry residuals.
ValidityReport check_process(const LabeledOperator& W, const ScenarioKind& kind, double tol = 1e-9);
// Throws ValidationFailed carrying the report when any check fails.
ProcessMatrix validate_process(const LabeledOperator& W, const ScenarioKind& kind, double tol = 1e-9);

// Orthogonal projection onto the linear span of valid processes (the trace
// normalization is not imposed).
LabeledOperator project_valid(const LabeledOperator& W, const ScenarioKind& kind);

ProcessMatrix white_noise_process(const ScenarioKind& kind);
ProcessMatrix quantum_switch();
ProcessMatrix depolarized_switch(double r);
ProcessMatrix feix_process(double q, double epsilon);
double feix_q();
double feix_epsilon();
ProcessMatrix depolarized_feix(double r);
// (W + r * noise) / (1 + r)
ProcessMatrix depolarize(const ProcessMatrix& w, double r);

// Ordered-process constructions: W^{A<B_I} (x) 1^{B_O} and the mirror, from
// an ordered operator on A_I A_O B_I (resp. B_I B_O A_I).
ProcessMatrix ordered_process_a_first(const LabeledOperator& w_a_bi, int d_bo);
ProcessMatrix ordered_process_b_first(const LabeledOperator& w_b_ai, int d_ao);

}  // namespace causalcert
