#include "causalcert/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace causalcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "unknown";
}

namespace {

struct Sym {
  int p;
  int q;
  double v;
};

struct BlockRows {
  std::vector<int> rows;
  std::vector<std::vector<Sym>> entries;
};

struct Compiled {
  std::vector<int> n;
  int m = 0;
  int nf = 0;
  std::vector<BlockRows> by_block;
  MatrixXd B;  // m x nf
  VectorXd b;
  std::vector<MatrixXd> C;
  VectorXd cf;
};

void expand(const ConicEntry& e, double scale, std::vector<Sym>& out) {
  if (e.i == e.j) {
    out.push_back({e.i, e.i, scale * e.v});
  } else {
    out.push_back({e.i, e.j, 0.5 * scale * e.v});
    out.push_back({e.j, e.i, 0.5 * scale * e.v});
  }
}

// Canonical (i <= j) accumulation of a row's entries.
std::map<std::tuple<int, int, int>, double> merged(const std::vector<ConicEntry>& es) {
  std::map<std::tuple<int, int, int>, double> acc;
  for (const auto& e : es) {
    int i = std::min(e.i, e.j), j = std::max(e.i, e.j);
    acc[{e.block, i, j}] += e.v;
  }
  return acc;
}

// Selects a maximal linearly independent subset of rows (row-normalized).
std::vector<int> independent_rows(const ConicProblem& p, const std::vector<double>& scale) {
  std::vector<int> offset(p.blocks.size() + 1, 0);
  for (size_t k = 0; k < p.blocks.size(); ++k) offset[k + 1] = offset[k] + p.blocks[k] * (p.blocks[k] + 1) / 2;
  const int ncoord = offset.back() + p.num_free;
  const int m = static_cast<int>(p.rows.size());
  MatrixXd At = MatrixXd::Zero(ncoord, m);
  for (int r = 0; r < m; ++r) {
    for (const auto& [key, v] : merged(p.rows[r].psd)) {
      auto [blk, i, j] = key;
      const int nb = p.blocks[blk];
      // packed upper-triangular coordinate of (i, j)
      const int c = offset[blk] + i * nb - i * (i - 1) / 2 + (j - i);
      At(c, r) += v * scale[r];
    }
    for (const auto& [f, v] : p.rows[r].free) At(offset.back() + f, r) += v * scale[r];
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(At);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> keep;
  for (int k = 0; k < rank; ++k) keep.push_back(qr.colsPermutation().indices()(k));
  std::sort(keep.begin(), keep.end());
  return keep;
}

Compiled compile(const ConicProblem& p, const std::vector<int>& keep, const std::vector<double>& scale) {
  Compiled c;
  c.n = p.blocks;
  c.m = static_cast<int>(keep.size());
  c.nf = p.num_free;
  c.by_block.resize(p.blocks.size());
  c.B = MatrixXd::Zero(c.m, c.nf);
  c.b = VectorXd::Zero(c.m);
  for (int r = 0; r < c.m; ++r) {
    const ConicRow& row = p.rows[keep[r]];
    const double s = scale[keep[r]];
    std::map<int, std::vector<Sym>> parts;
    for (const auto& [key, v] : merged(row.psd)) {
      auto [blk, i, j] = key;
      if (v == 0.0) continue;
      expand({blk, i, j, v}, s, parts[blk]);
    }
    for (auto& [blk, es] : parts) {
      c.by_block[blk].rows.push_back(r);
      c.by_block[blk].entries.push_back(std::move(es));
    }
    for (const auto& [f, v] : row.free) c.B(r, f) += s * v;
    c.b(r) = s * row.rhs;
  }
  c.C.resize(p.blocks.size());
  for (size_t k = 0; k < p.blocks.size(); ++k) c.C[k] = MatrixXd::Zero(p.blocks[k], p.blocks[k]);
  for (const auto& e : p.c_psd) {
    std::vector<Sym> es;
    expand(e, 1.0, es);
    for (const auto& s : es) c.C[e.block](s.p, s.q) += s.v;
  }
  c.cf = VectorXd::Zero(c.nf);
  for (const auto& [f, v] : p.c_free) c.cf(f) += v;
  return c;
}

// Drops free columns that are linear combinations of the others, so the KKT
// matrix stays nonsingular. Columns carrying objective weight are kept.
std::vector<int> reduce_free(Compiled& c) {
  std::vector<int> keep;
  if (c.nf == 0) return keep;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(c.B);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  std::vector<bool> on(c.nf, false);
  for (int k = 0; k < rank; ++k) on[qr.colsPermutation().indices()(k)] = true;
  for (int f = 0; f < c.nf; ++f)
    if (on[f] || c.cf(f) != 0.0) keep.push_back(f);
  if (static_cast<int>(keep.size()) == c.nf) return keep;
  MatrixXd B(c.m, keep.size());
  VectorXd cf(keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    B.col(k) = c.B.col(keep[k]);
    cf(k) = c.cf(keep[k]);
  }
  c.B = std::move(B);
  c.cf = std::move(cf);
  c.nf = static_cast<int>(keep.size());
  return keep;
}

VectorXd apply_A(const Compiled& c, const std::vector<MatrixXd>& X) {
  VectorXd out = VectorXd::Zero(c.m);
  for (size_t k = 0; k < c.n.size(); ++k) {
    const auto& br = c.by_block[k];
    for (size_t t = 0; t < br.rows.size(); ++t) {
      double acc = 0.0;
      for (const auto& s : br.entries[t]) acc += s.v * X[k](s.p, s.q);
      out(br.rows[t]) += acc;
    }
  }
  return out;
}

std::vector<MatrixXd> apply_At(const Compiled& c, const VectorXd& y) {
  std::vector<MatrixXd> out(c.n.size());
  for (size_t k = 0; k < c.n.size(); ++k) {
    out[k] = MatrixXd::Zero(c.n[k], c.n[k]);
    const auto& br = c.by_block[k];
    for (size_t t = 0; t < br.rows.size(); ++t) {
      const double yr = y(br.rows[t]);
      if (yr == 0.0) continue;
      for (const auto& s : br.entries[t]) out[k](s.p, s.q) += yr * s.v;
    }
  }
  return out;
}

double frob2(const std::vector<MatrixXd>& blocks) {
  double s = 0.0;
  for (const auto& b : blocks) s += b.squaredNorm();
  return s;
}

double inner(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// Largest alpha with X + alpha dX PSD (infinity if none bounds it).
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd W = llt.matrixL().solve(dX);
  W = llt.matrixL().solve(W.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(W), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

MatrixXd schur(const Compiled& c, const std::vector<MatrixXd>& X, const std::vector<MatrixXd>& Zi) {
  MatrixXd M = MatrixXd::Zero(c.m, c.m);
  for (size_t k = 0; k < c.n.size(); ++k) {
    const auto& br = c.by_block[k];
    const MatrixXd& x = X[k];
    const MatrixXd& zi = Zi[k];
    const size_t nr = br.rows.size();
    for (size_t a = 0; a < nr; ++a) {
      const auto& ea = br.entries[a];
      for (size_t b = a; b < nr; ++b) {
        const auto& eb = br.entries[b];
        double acc = 0.0;
        // Tr(A_a X A_b Zi) = sum A_a(p,q) X(q,s) A_b(s,t) Zi(t,p)
        for (const auto& u : ea)
          for (const auto& w : eb) acc += u.v * w.v * x(u.q, w.p) * zi(w.q, u.p);
        M(br.rows[a], br.rows[b]) += acc;
        if (a != b) M(br.rows[b], br.rows[a]) += acc;
      }
    }
  }
  return M;
}

}  // namespace

ConicSolution solve_conic(const ConicProblem& problem, const SolverOptions& opt) {
  const int m_all = static_cast<int>(problem.rows.size());
  std::vector<double> scale(m_all, 1.0);
  for (int r = 0; r < m_all; ++r) {
    double nrm = 0.0;
    for (const auto& [key, v] : merged(problem.rows[r].psd)) nrm += v * v;
    for (const auto& [f, v] : problem.rows[r].free) nrm += v * v;
    scale[r] = nrm > 0.0 ? 1.0 / std::sqrt(nrm) : 1.0;
  }
  std::vector<int> keep = independent_rows(problem, scale);
  Compiled c = compile(problem, keep, scale);
  const std::vector<int> free_keep = reduce_free(c);
  const size_t nb = c.n.size();
  int ntot = 0;
  for (int s : c.n) ntot += s;

  ConicSolution sol;
  sol.dropped_rows = m_all - c.m;

  // Infeasible starting point scaled to the data.
  std::vector<MatrixXd> X(nb), Z(nb);
  VectorXd y = VectorXd::Zero(c.m);
  VectorXd xf = VectorXd::Zero(c.nf);
  {
    std::vector<double> anorm(nb, 0.0);
    std::vector<double> ratio(nb, 0.0);
    for (size_t k = 0; k < nb; ++k) {
      const auto& br = c.by_block[k];
      for (size_t t = 0; t < br.rows.size(); ++t) {
        double a2 = 0.0;
        for (const auto& s : br.entries[t]) a2 += s.v * s.v;
        const double an = std::sqrt(a2);
        anorm[k] = std::max(anorm[k], an);
        ratio[k] = std::max(ratio[k], (1.0 + std::abs(c.b(br.rows[t]))) / (1.0 + an));
      }
      const double nk = c.n[k];
      const double xi = std::max({10.0, std::sqrt(nk), nk * ratio[k]});
      const double eta = std::max({10.0, std::sqrt(nk), anorm[k], c.C[k].norm()});
      X[k] = xi * MatrixXd::Identity(c.n[k], c.n[k]);
      Z[k] = eta * MatrixXd::Identity(c.n[k], c.n[k]);
    }
  }
  const double bnorm = c.b.norm();
  const double cnorm = std::sqrt(frob2(c.C) + c.cf.squaredNorm());

  std::vector<MatrixXd> Zi(nb);
  int it = 0;
  double pinf = 0, dinf = 0, gap = 0, pobj = 0, dobj = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  double best_err = std::numeric_limits<double>::infinity();
  for (; it < opt.max_iter; ++it) {
    VectorXd rp = c.b - apply_A(c, X) - c.B * xf;
    std::vector<MatrixXd> Aty = apply_At(c, y);
    std::vector<MatrixXd> Rd(nb);
    for (size_t k = 0; k < nb; ++k) Rd[k] = c.C[k] - Z[k] - Aty[k];
    VectorXd rf = c.cf - c.B.transpose() * y;
    pobj = inner(c.C, X) + c.cf.dot(xf);
    dobj = c.b.dot(y);
    pinf = rp.norm() / (1.0 + bnorm);
    dinf = std::sqrt(frob2(Rd) + rf.squaredNorm()) / (1.0 + cnorm);
    gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double mu = inner(X, Z) / ntot;
    const double err = std::max({pinf, dinf, gap});
    best_err = std::min(best_err, err);
    if (opt.verbose)
      std::fprintf(stderr, "it %3d pobj % .10e dobj % .10e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", it, pobj,
                   dobj, pinf, dinf, gap, mu);
    if (err <= opt.tol) {
      status = SolveStatus::Optimal;
      break;
    }

    bool ok = true;
    for (size_t k = 0; k < nb && ok; ++k) {
      Eigen::LLT<MatrixXd> llt(Z[k]);
      if (llt.info() != Eigen::Success) ok = false;
      else Zi[k] = llt.solve(MatrixXd::Identity(c.n[k], c.n[k]));
    }
    if (!ok) {
      status = SolveStatus::NumericalError;
      break;
    }

    MatrixXd M = schur(c, X, Zi);
    const int dim = c.m + c.nf;
    MatrixXd K = MatrixXd::Zero(dim, dim);
    K.topLeftCorner(c.m, c.m) = M;
    K.topRightCorner(c.m, c.nf) = c.B;
    K.bottomLeftCorner(c.nf, c.m) = c.B.transpose();
    Eigen::PartialPivLU<MatrixXd> lu(K);

    std::vector<MatrixXd> XRdZi(nb);
    for (size_t k = 0; k < nb; ++k) XRdZi[k] = X[k] * Rd[k] * Zi[k];

    auto direction = [&](double sigma_mu, const std::vector<MatrixXd>* corr, std::vector<MatrixXd>& dX,
                         std::vector<MatrixXd>& dZ, VectorXd& dy, VectorXd& dxf) {
      std::vector<MatrixXd> H(nb);
      for (size_t k = 0; k < nb; ++k) {
        H[k] = sigma_mu * Zi[k] - X[k] - XRdZi[k];
        if (corr) H[k] -= (*corr)[k];
      }
      VectorXd rhs(dim);
      rhs.head(c.m) = rp - apply_A(c, H);
      rhs.tail(c.nf) = rf;
      VectorXd sol_v = lu.solve(rhs);
      dy = sol_v.head(c.m);
      dxf = sol_v.tail(c.nf);
      std::vector<MatrixXd> Atdy = apply_At(c, dy);
      dZ.resize(nb);
      dX.resize(nb);
      for (size_t k = 0; k < nb; ++k) {
        dZ[k] = Rd[k] - Atdy[k];
        dX[k] = sym(H[k] + X[k] * Atdy[k] * Zi[k]);
      }
    };

    auto steps = [&](const std::vector<MatrixXd>& dX, const std::vector<MatrixXd>& dZ, double& ap, double& ad) {
      ap = std::numeric_limits<double>::infinity();
      ad = std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], dX[k]));
        ad = std::min(ad, max_step(Z[k], dZ[k]));
      }
    };

    std::vector<MatrixXd> dXa, dZa, dX, dZ;
    VectorXd dya, dxfa, dy, dxf;
    direction(0.0, nullptr, dXa, dZa, dya, dxfa);
    double apa, ada;
    steps(dXa, dZa, apa, ada);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double mu_aff = 0.0;
    for (size_t k = 0; k < nb; ++k)
      mu_aff += (X[k] + apa * dXa[k]).cwiseProduct(Z[k] + ada * dZa[k]).sum();
    mu_aff /= ntot;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    std::vector<MatrixXd> corr(nb);
    for (size_t k = 0; k < nb; ++k) corr[k] = dXa[k] * dZa[k] * Zi[k];
    direction(sigma * mu, &corr, dX, dZ, dy, dxf);
    double ap, ad;
    steps(dX, dZ, ap, ad);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite()) {
      status = SolveStatus::NumericalError;
      break;
    }
    for (size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      Z[k] = sym(Z[k] + ad * dZ[k]);
    }
    xf += ap * dxf;
    y += ad * dy;
    if (ap < 1e-12 && ad < 1e-12) {
      status = SolveStatus::NumericalError;
      break;
    }
  }
  if (status != SolveStatus::Optimal && std::max({pinf, dinf, gap}) <= 1e3 * opt.tol)
    status = SolveStatus::Inaccurate;

  sol.status = status;
  sol.iterations = it;
  sol.X = X;
  sol.Z = Z;
  sol.x_free = VectorXd::Zero(problem.num_free);
  for (size_t k = 0; k < free_keep.size(); ++k) sol.x_free(free_keep[k]) = xf(k);
  sol.y = VectorXd::Zero(m_all);
  for (int r = 0; r < c.m; ++r) sol.y(keep[r]) = y(r) * scale[keep[r]];
  sol.primal_objective = pobj;
  sol.dual_objective = dobj;
  sol.dual_infeasibility = dinf;
  sol.relative_gap = gap;
  // Primal residual over every original row, including the dropped ones.
  double r2 = 0.0, b2 = 0.0;
  for (int r = 0; r < m_all; ++r) {
    double acc = 0.0;
    for (const auto& e : problem.rows[r].psd) acc += e.v * X[e.block](e.i, e.j);
    for (const auto& [f, v] : problem.rows[r].free) acc += v * sol.x_free(f);
    const double res = (problem.rows[r].rhs - acc) * scale[r];
    r2 += res * res;
    b2 += std::pow(problem.rows[r].rhs * scale[r], 2);
  }
  sol.primal_infeasibility = std::sqrt(r2) / (1.0 + std::sqrt(b2));
  if (sol.primal_infeasibility > 1e3 * opt.tol && status != SolveStatus::NumericalError)
    sol.status = SolveStatus::NumericalError;
  return sol;
}

}  // namespace causalcert
