#include "causalcert/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace causalcert {

Eigen::MatrixXd embed_complex(const CMatrix& h) {
  if (h.rows() != h.cols()) throw DimMismatch("embedding needs a square matrix");
  const double herm = max_abs(h - h.adjoint());
  if (herm > kHermitianTol) throw NotHermitian("embedding needs Hermitian data (residual " + std::to_string(herm) + ")");
  const Eigen::Index n = h.rows();
  Eigen::MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.bottomRightCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  return out;
}

CMatrix unembed_complex(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows() / 2;
  Eigen::MatrixXd a = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  Eigen::MatrixXd b = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMatrix out(n, n);
  out.real() = a;
  out.imag() = b;
  return out;
}

int HermitianModel::add_psd(const Factors& f, std::string label) {
  vars_.push_back({canonical_sorted(f), true, std::move(label)});
  return static_cast<int>(vars_.size()) - 1;
}

int HermitianModel::add_free(const Factors& f, std::string label) {
  vars_.push_back({canonical_sorted(f), false, std::move(label)});
  return static_cast<int>(vars_.size()) - 1;
}

LinearTerm HermitianModel::term(int var, double coef) const { return {var, coef, {}, LabeledOperator()}; }

LinearTerm HermitianModel::traced(int var, Names over, double coef) const {
  return {var, coef, std::move(over), LabeledOperator()};
}

LinearTerm HermitianModel::extended(int var, const Factors& with, double coef) const {
  return {var, coef, {}, LabeledOperator::identity(with)};
}

LinearTerm HermitianModel::traced_extended(int var, Names over, const Factors& with, double coef) const {
  return {var, coef, std::move(over), LabeledOperator::identity(with)};
}

LinearTerm HermitianModel::times(int scalar_var, const LabeledOperator& op, double coef) const {
  if (!vars_[scalar_var].factors.empty()) throw InvalidParam("times() needs a scalar variable");
  return {scalar_var, coef, {}, op};
}

int HermitianModel::add_equality(std::vector<LinearTerm> terms, LabeledOperator rhs, std::string label) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_vars()) throw InvalidParam("equality refers to an unknown variable");
    FactorSplit sp = split_factors(vars_[t.var].factors, t.trace_over);
    Factors landed = sp.kept;
    for (const auto& l : t.kron.factors()) {
      for (const auto& k : landed)
        if (k.name == l.name) throw DuplicateFactor("term lands twice on factor " + l.name);
      landed.push_back(l);
    }
    if (canonical_sorted(landed) != rhs.factors())
      throw DimMismatch("term of equality '" + label + "' does not land on the equality's factors");
  }
  eqs_.push_back({std::move(terms), std::move(rhs), std::move(label)});
  return static_cast<int>(eqs_.size()) - 1;
}

void HermitianModel::add_objective(int scalar_var, double coef) {
  if (!vars_[scalar_var].factors.empty()) throw InvalidParam("objective terms must be scalar variables");
  objective_.push_back({scalar_var, coef});
}

bool HermitianModel::data_is_real() const {
  for (const auto& e : eqs_) {
    if (max_abs(e.rhs.matrix().imag().cast<cplx>()) > 1e-14) return false;
    for (const auto& t : e.terms)
      if (max_abs(t.kron.matrix().imag().cast<cplx>()) > 1e-14) return false;
  }
  return true;
}

namespace {

struct Layout {
  bool cplx_mode = true;
  std::vector<int> block;       // PSD block index or -1
  std::vector<int> free_off;    // first free coordinate or -1
  std::vector<int> n;           // matrix side of the variable
  std::vector<bool> embedded;   // PSD block carries the [[A,-B],[B,A]] form
  std::vector<int> block_sizes;
  int num_free = 0;

  int re_index(int v, int p, int q) const {
    if (p > q) std::swap(p, q);
    const int nn = n[v];
    return free_off[v] + p * nn - p * (p - 1) / 2 + (q - p);
  }
  int im_index(int v, int p, int q) const {  // p < q
    const int nn = n[v];
    const int base = free_off[v] + nn * (nn + 1) / 2;
    return base + p * (nn - 1) - p * (p - 1) / 2 + (q - p - 1);
  }
};

// Adds coef * (part ? Im : Re) V[p, q] to a conic row.
void add_atom(const Layout& L, ConicRow& row, int v, int p, int q, int part, double coef) {
  if (coef == 0.0) return;
  if (L.block[v] >= 0) {
    const int b = L.block[v];
    if (L.embedded[v]) {
      const int n = L.n[v];
      if (part == 0) {
        row.psd.push_back({b, p, q, 0.5 * coef});
        row.psd.push_back({b, p + n, q + n, 0.5 * coef});
      } else {
        row.psd.push_back({b, p + n, q, 0.5 * coef});
        row.psd.push_back({b, p, q + n, -0.5 * coef});
      }
    } else if (part == 0) {
      row.psd.push_back({b, p, q, coef});
    }
    return;
  }
  if (part == 0) {
    row.free.push_back({L.re_index(v, p, q), coef});
  } else if (L.cplx_mode && p != q) {
    if (p < q) row.free.push_back({L.im_index(v, p, q), coef});
    else row.free.push_back({L.im_index(v, q, p), -coef});
  }
}

}  // namespace

HermitianModel::Solution HermitianModel::solve(const SolverOptions& options, bool force_complex) const {
  Layout L;
  L.cplx_mode = force_complex || !data_is_real();
  const int nv = num_vars();
  L.block.assign(nv, -1);
  L.free_off.assign(nv, -1);
  L.n.assign(nv, 0);
  L.embedded.assign(nv, false);
  for (int v = 0; v < nv; ++v) {
    const int n = total_dim(vars_[v].factors);
    L.n[v] = n;
    if (vars_[v].psd) {
      L.embedded[v] = L.cplx_mode && n > 1;
      L.block[v] = static_cast<int>(L.block_sizes.size());
      L.block_sizes.push_back(L.embedded[v] ? 2 * n : n);
    } else {
      L.free_off[v] = L.num_free;
      L.num_free += L.cplx_mode ? n * n : n * (n + 1) / 2;
    }
  }

  ConicProblem prob;
  prob.blocks = L.block_sizes;
  prob.num_free = L.num_free;
  for (const auto& [v, coef] : objective_) {
    if (L.block[v] >= 0) prob.c_psd.push_back({L.block[v], 0, 0, coef});
    else prob.c_free.push_back({L.free_off[v], coef});
  }

  // rows_of[e] lists (P, Q, part, row index) for the rows of equality e.
  struct RowRef {
    int P, Q, part, row;
  };
  std::vector<std::vector<RowRef>> rows_of(eqs_.size());
  for (size_t e = 0; e < eqs_.size(); ++e) {
    const Equality& eq = eqs_[e];
    const int D = eq.rhs.dim();
    std::vector<ConicRow> re(D * D), im(D * D);
    for (const auto& t : eq.terms) {
      const Factors& fv = vars_[t.var].factors;
      FactorSplit sp = split_factors(fv, t.trace_over);
      Factors joint = sp.kept;
      joint.insert(joint.end(), t.kron.factors().begin(), t.kron.factors().end());
      std::vector<int> map = index_map(joint, eq.rhs.factors());
      const CMatrix& K = t.kron.matrix();
      const int dK = static_cast<int>(K.rows());
      for (int k = 0; k < sp.dk; ++k)
        for (int kp = 0; kp < sp.dk; ++kp)
          for (int i = 0; i < dK; ++i)
            for (int ip = 0; ip < dK; ++ip) {
              const cplx kappa = t.coef * K(i, ip);
              if (kappa == cplx(0.0)) continue;
              const int P = map[k * dK + i], Q = map[kp * dK + ip];
              if (P > Q) continue;
              for (int s = 0; s < sp.ds; ++s) {
                const int vp = sp.table[k * sp.ds + s], vq = sp.table[kp * sp.ds + s];
                ConicRow& rr = re[P * D + Q];
                add_atom(L, rr, t.var, vp, vq, 0, kappa.real());
                add_atom(L, rr, t.var, vp, vq, 1, -kappa.imag());
                if (L.cplx_mode && P < Q) {
                  ConicRow& ri = im[P * D + Q];
                  add_atom(L, ri, t.var, vp, vq, 1, kappa.real());
                  add_atom(L, ri, t.var, vp, vq, 0, kappa.imag());
                }
              }
            }
    }
    const CMatrix& R = eq.rhs.matrix();
    for (int P = 0; P < D; ++P)
      for (int Q = P; Q < D; ++Q) {
        for (int part = 0; part < 2; ++part) {
          if (part == 1 && (!L.cplx_mode || P == Q)) continue;
          ConicRow& row = part == 0 ? re[P * D + Q] : im[P * D + Q];
          row.rhs = part == 0 ? R(P, Q).real() : R(P, Q).imag();
          if (row.psd.empty() && row.free.empty()) {
            if (std::abs(row.rhs) > 1e-12)
              throw InvalidParam("equality '" + eq.label + "' has an unsatisfiable constant entry");
            continue;
          }
          rows_of[e].push_back({P, Q, part, static_cast<int>(prob.rows.size())});
          prob.rows.push_back(std::move(row));
        }
      }
  }

  Solution out;
  out.complex_mode = L.cplx_mode;
  out.raw = solve_conic(prob, options);
  const ConicSolution& s = out.raw;
  out.objective = s.primal_objective;
  for (int v = 0; v < nv; ++v) {
    const int n = L.n[v];
    CMatrix val(n, n), slack = CMatrix::Zero(n, n);
    if (L.block[v] >= 0) {
      const auto& X = s.X[L.block[v]];
      const auto& Z = s.Z[L.block[v]];
      if (L.embedded[v]) {
        val = unembed_complex(X);
        slack = unembed_complex(Z);
      } else {
        val = X.cast<cplx>();
        slack = Z.cast<cplx>();
      }
    } else {
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
          double a = s.x_free(L.re_index(v, p, q));
          double b = (L.cplx_mode && p < q) ? s.x_free(L.im_index(v, p, q)) : 0.0;
          val(p, q) = cplx(a, b);
          val(q, p) = cplx(a, -b);
        }
    }
    out.values.emplace_back(vars_[v].factors, val);
    out.slacks.emplace_back(vars_[v].factors, slack);
  }
  for (size_t e = 0; e < eqs_.size(); ++e) {
    const int D = eqs_[e].rhs.dim();
    CMatrix Y = CMatrix::Zero(D, D);
    for (const auto& r : rows_of[e]) {
      const double yv = s.y(r.row);
      if (r.P == r.Q) {
        Y(r.P, r.P) += yv;
      } else if (r.part == 0) {
        Y(r.P, r.Q) += 0.5 * yv;
        Y(r.Q, r.P) += 0.5 * yv;
      } else {
        Y(r.P, r.Q) += cplx(0.0, 0.5 * yv);
        Y(r.Q, r.P) += cplx(0.0, -0.5 * yv);
      }
    }
    out.multipliers.emplace_back(eqs_[e].rhs.factors(), Y);
  }
  return out;
}

}  // namespace causalcert
