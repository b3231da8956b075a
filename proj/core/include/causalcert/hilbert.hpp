#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalcert/errors.hpp"

namespace causalcert {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Names = std::vector<std::string>;

inline constexpr double kHermitianTol = 1e-9;
inline constexpr double kPsdTol = 1e-9;

struct SpaceLabel {
  std::string name;
  int dim = 1;

  bool operator==(const SpaceLabel& o) const { return name == o.name && dim == o.dim; }
  bool operator!=(const SpaceLabel& o) const { return !(*this == o); }
};

using Factors = std::vector<SpaceLabel>;

// Position of a label in the global factor order; unknown names rank after
// every known one and are compared lexicographically.
int canonical_rank(const std::string& name);
bool canonical_less(const SpaceLabel& a, const SpaceLabel& b);
Factors canonical_sorted(Factors f);
int total_dim(const Factors& f);

// Dense operator over named tensor factors, always stored in canonical order.
class LabeledOperator {
 public:
  LabeledOperator();  // the 0-factor scalar 1
  // `factors` describes the layout of `m` (first factor most significant); the
  // result is permuted into canonical order.
  LabeledOperator(Factors factors, CMatrix m);

  static LabeledOperator scalar(cplx value);
  static LabeledOperator identity(const Factors& factors);
  static LabeledOperator zero(const Factors& factors);

  const Factors& factors() const { return factors_; }
  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  Names names() const;
  bool has(const std::string& name) const;
  int dim_of(const std::string& name) const;
  cplx trace() const { return m_.trace(); }

  // Matrix laid out over `order`, which must be a permutation of the factors.
  CMatrix matrix_in(const Names& order) const;
  // Factors renamed one-to-one (e.g. untrusted to trusted labels), re-sorted.
  LabeledOperator relabeled(const std::vector<std::pair<std::string, std::string>>& map) const;

  LabeledOperator adjoint() const;
  LabeledOperator conjugate() const;

  LabeledOperator& operator+=(const LabeledOperator& o);
  LabeledOperator& operator-=(const LabeledOperator& o);
  LabeledOperator& operator*=(cplx s);

 private:
  Factors factors_;
  CMatrix m_;
};

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator*(cplx s, LabeledOperator a);
LabeledOperator operator*(LabeledOperator a, cplx s);
// Ordinary matrix product of operators on the same factors.
LabeledOperator compose(const LabeledOperator& a, const LabeledOperator& b);

// State vector over named factors, canonical order.
class LabeledKet {
 public:
  LabeledKet();
  LabeledKet(Factors factors, CVector v);

  static LabeledKet basis(const std::string& name, int dim, int index);

  const Factors& factors() const { return factors_; }
  const CVector& vector() const { return v_; }
  LabeledOperator projector() const;

  LabeledKet& operator+=(const LabeledKet& o);

 private:
  Factors factors_;
  CVector v_;
};

LabeledKet operator+(LabeledKet a, const LabeledKet& b);
LabeledKet operator*(cplx s, LabeledKet a);
LabeledKet tensor(const LabeledKet& a, const LabeledKet& b);

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);
LabeledOperator partial_trace(const LabeledOperator& m, const Names& over);
LabeledOperator partial_transpose(const LabeledOperator& m, const Names& over);
// (Tr_X M) (x) 1^X / d_X
LabeledOperator trace_replace(const LabeledOperator& m, const Names& over);
// M - (Tr_X M) (x) 1^X / d_X
LabeledOperator trace_replace_complement(const LabeledOperator& m, const Names& over);
// Appends identities on the listed factors that M does not yet carry.
LabeledOperator extend(const LabeledOperator& m, const Factors& with);

// A chain of trace-and-replace maps; `complement` selects 1 - (.) for a term.
struct ReplaceTerm {
  Names over;
  bool complement = false;
};
LabeledOperator apply_replace_chain(const LabeledOperator& m, const std::vector<ReplaceTerm>& chain);

LabeledOperator link_product(const LabeledOperator& m, const LabeledOperator& n);
// Link product over all factors, Tr[S^T E]; both must carry the same factors.
cplx link_scalar(const LabeledOperator& s, const LabeledOperator& e);

LabeledKet max_entangled_ket(const SpaceLabel& x, const SpaceLabel& y);
LabeledOperator max_entangled(const SpaceLabel& x, const SpaceLabel& y);

struct PsdReport {
  bool psd = false;
  double min_eigenvalue = 0.0;
};
double hermiticity_residual(const LabeledOperator& m);
PsdReport psd_check(const LabeledOperator& m, double tol = kPsdTol);

double max_abs(const CMatrix& m);

// Index bookkeeping shared with the SDP compiler.
// map[i] = position of basis element i of layout `from` within layout `to`.
std::vector<int> index_map(const Factors& from, const Factors& to);
struct FactorSplit {
  Factors kept;
  Factors sel;
  int dk = 1;
  int ds = 1;
  std::vector<int> table;  // table[k * ds + s]: index with kept part k, selected part s
};
FactorSplit split_factors(const Factors& f, const Names& selected);

double max_abs_diff(const LabeledOperator& a, const LabeledOperator& b);

}  // namespace causalcert
