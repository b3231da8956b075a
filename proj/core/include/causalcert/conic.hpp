#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace causalcert {

// Coefficient v on entry (i, j) of the symmetric block X_block, i <= j.
struct ConicEntry {
  int block = 0;
  int i = 0;
  int j = 0;
  double v = 0.0;
};

struct ConicRow {
  std::vector<ConicEntry> psd;
  std::vector<std::pair<int, double>> free;
  double rhs = 0.0;
};

// min <C, X> + c_f . x  s.t.  A(X) + B x = b,  X in a product of PSD cones, x free.
// Dual: max b . y  s.t.  C - A^*(y) = Z PSD,  B^T y = c_f.
struct ConicProblem {
  std::vector<int> blocks;
  int num_free = 0;
  std::vector<ConicEntry> c_psd;
  std::vector<std::pair<int, double>> c_free;
  std::vector<ConicRow> rows;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 120;
  bool verbose = false;
};

enum class SolveStatus { Optimal, Inaccurate, MaxIterations, NumericalError };
std::string to_string(SolveStatus s);

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> Z;
  Eigen::VectorXd x_free;
  Eigen::VectorXd y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  int dropped_rows = 0;
};

// Primal-dual path following (HKM direction, Mehrotra predictor-corrector).
// Linearly dependent equality rows are detected and removed beforehand; their
// multipliers are reported as zero.
ConicSolution solve_conic(const ConicProblem& problem, const SolverOptions& options = {});

}  // namespace causalcert
