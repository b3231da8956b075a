#pragma once

#include <string>
#include <vector>

#include "causalcert/conic.hpp"
#include "causalcert/hilbert.hpp"

namespace causalcert {

// coef * (Tr_{trace_over} V) (x) kron, landing on the factor space of the
// equality it belongs to. A variable with no factors is a real scalar.
struct LinearTerm {
  int var = -1;
  double coef = 1.0;
  Names trace_over;
  LabeledOperator kron;  // scalar 1 by default
};

// Semidefinite program over Hermitian matrix variables on labeled spaces.
// Compiles either to real-symmetric blocks through the [[A,-B],[B,A]]
// embedding, or (when every datum is real) directly to the real-symmetric
// subspace, which holds an optimum by complex-conjugation symmetry.
class HermitianModel {
 public:
  int add_psd(const Factors& f, std::string label = {});
  int add_free(const Factors& f, std::string label = {});
  const Factors& factors_of(int var) const { return vars_[var].factors; }
  int num_vars() const { return static_cast<int>(vars_.size()); }

  LinearTerm term(int var, double coef = 1.0) const;
  LinearTerm traced(int var, Names over, double coef = 1.0) const;
  // coef * V (x) 1^{with}
  LinearTerm extended(int var, const Factors& with, double coef = 1.0) const;
  // coef * Tr_{over} V (x) 1^{with}
  LinearTerm traced_extended(int var, Names over, const Factors& with, double coef = 1.0) const;
  // coef * s * op for a scalar variable s
  LinearTerm times(int scalar_var, const LabeledOperator& op, double coef = 1.0) const;

  // sum of terms == rhs, entrywise on rhs's factor space.
  int add_equality(std::vector<LinearTerm> terms, LabeledOperator rhs, std::string label = {});
  // objective += coef * s for a scalar variable s; the model is minimized.
  void add_objective(int scalar_var, double coef);

  bool data_is_real() const;

  struct Solution {
    ConicSolution raw;
    bool complex_mode = true;
    std::vector<LabeledOperator> values;       // primal value of each variable
    std::vector<LabeledOperator> slacks;       // dual slack of each PSD variable (zero for free ones)
    std::vector<LabeledOperator> multipliers;  // Y_c with Tr(Y_c H) = dual pairing of equality c
    double objective = 0.0;
  };
  // force_complex keeps the embedding even for real data.
  Solution solve(const SolverOptions& options, bool force_complex = false) const;

 private:
  struct Var {
    Factors factors;
    bool psd = true;
    std::string label;
  };
  struct Equality {
    std::vector<LinearTerm> terms;
    LabeledOperator rhs;
    std::string label;
  };
  std::vector<Var> vars_;
  std::vector<Equality> eqs_;
  std::vector<std::pair<int, double>> objective_;
};

// Real-symmetric embedding [[A,-B],[B,A]] of a Hermitian A + iB.
Eigen::MatrixXd embed_complex(const CMatrix& h);
// Inverse of embed_complex after averaging the redundant blocks.
CMatrix unembed_complex(const Eigen::MatrixXd& x);

}  // namespace causalcert
