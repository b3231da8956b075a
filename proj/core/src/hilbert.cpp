#include "causalcert/hilbert.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <string_view>

namespace causalcert {

namespace {

constexpr std::array<std::string_view, 10> kKnownOrder = {
    "A_I", "A_O", "B_I", "B_O", "F", "At_I", "At_O", "Bt_I", "Bt_O", "Ft"};

std::vector<int> strides_of(const Factors& f) {
  std::vector<int> s(f.size(), 1);
  for (int k = static_cast<int>(f.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * f[k + 1].dim;
  return s;
}

int find_factor(const Factors& f, const std::string& name) {
  for (size_t k = 0; k < f.size(); ++k)
    if (f[k].name == name) return static_cast<int>(k);
  return -1;
}

void check_unique(const Factors& f) {
  std::set<std::string> seen;
  for (const auto& l : f) {
    if (l.dim < 1) throw InvalidParam("factor " + l.name + " has dimension < 1");
    if (!seen.insert(l.name).second) throw DuplicateFactor("factor " + l.name + " appears twice");
  }
}

// out[i] = index of basis element i of layout `from` within layout `to`.
std::vector<int> layout_map(const Factors& from, const Factors& to) {
  const int d = total_dim(from);
  std::vector<int> to_strides = strides_of(to);
  std::vector<int> pos(from.size());
  for (size_t k = 0; k < from.size(); ++k) pos[k] = to_strides[find_factor(to, from[k].name)];
  std::vector<int> out(d);
  std::vector<int> digit(from.size(), 0);
  for (int i = 0; i < d; ++i) {
    int j = 0;
    for (size_t k = 0; k < from.size(); ++k) j += digit[k] * pos[k];
    out[i] = j;
    for (int k = static_cast<int>(from.size()) - 1; k >= 0; --k) {
      if (++digit[k] < from[k].dim) break;
      digit[k] = 0;
    }
  }
  return out;
}

// Splits factors into (kept, selected) and tabulates original indices:
// table[k * d_sel + s] is the basis index with kept part k and selected part s.
using Split = FactorSplit;

}  // namespace

FactorSplit split_factors(const Factors& f, const Names& selected) {
  Split sp;
  for (const auto& n : selected)
    if (find_factor(f, n) < 0) throw UnknownFactor("unknown factor " + n);
  for (const auto& l : f) {
    if (std::find(selected.begin(), selected.end(), l.name) != selected.end())
      sp.sel.push_back(l);
    else
      sp.kept.push_back(l);
  }
  sp.dk = total_dim(sp.kept);
  sp.ds = total_dim(sp.sel);
  Factors joint = sp.kept;
  joint.insert(joint.end(), sp.sel.begin(), sp.sel.end());
  std::vector<int> fwd = layout_map(f, joint);
  sp.table.assign(fwd.size(), 0);
  for (size_t i = 0; i < fwd.size(); ++i) sp.table[fwd[i]] = static_cast<int>(i);
  return sp;
}

std::vector<int> index_map(const Factors& from, const Factors& to) { return layout_map(from, to); }

namespace {

CMatrix permute_matrix(const CMatrix& m, const Factors& from, const Factors& to) {
  std::vector<int> map = layout_map(from, to);
  const int d = static_cast<int>(m.rows());
  CMatrix out(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out(map[i], map[j]) = m(i, j);
  return out;
}

}  // namespace

int canonical_rank(const std::string& name) {
  for (size_t k = 0; k < kKnownOrder.size(); ++k)
    if (kKnownOrder[k] == name) return static_cast<int>(k);
  return static_cast<int>(kKnownOrder.size());
}

bool canonical_less(const SpaceLabel& a, const SpaceLabel& b) {
  int ra = canonical_rank(a.name), rb = canonical_rank(b.name);
  if (ra != rb) return ra < rb;
  return a.name < b.name;
}

Factors canonical_sorted(Factors f) {
  std::sort(f.begin(), f.end(), canonical_less);
  return f;
}

int total_dim(const Factors& f) {
  int d = 1;
  for (const auto& l : f) d *= l.dim;
  return d;
}

// ---------------------------------------------------------------------------
// LabeledOperator

LabeledOperator::LabeledOperator() : m_(CMatrix::Ones(1, 1)) {}

LabeledOperator::LabeledOperator(Factors factors, CMatrix m) {
  check_unique(factors);
  const int d = total_dim(factors);
  if (m.rows() != d || m.cols() != d)
    throw DimMismatch("matrix side " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      " does not match factor dimension " + std::to_string(d));
  Factors sorted = canonical_sorted(factors);
  if (sorted == factors) {
    m_ = std::move(m);
  } else {
    m_ = permute_matrix(m, factors, sorted);
  }
  factors_ = std::move(sorted);
}

LabeledOperator LabeledOperator::scalar(cplx value) {
  return LabeledOperator({}, CMatrix::Constant(1, 1, value));
}

LabeledOperator LabeledOperator::identity(const Factors& factors) {
  const int d = total_dim(factors);
  return LabeledOperator(factors, CMatrix::Identity(d, d));
}

LabeledOperator LabeledOperator::zero(const Factors& factors) {
  const int d = total_dim(factors);
  return LabeledOperator(factors, CMatrix::Zero(d, d));
}

Names LabeledOperator::names() const {
  Names n;
  for (const auto& l : factors_) n.push_back(l.name);
  return n;
}

bool LabeledOperator::has(const std::string& name) const { return find_factor(factors_, name) >= 0; }

int LabeledOperator::dim_of(const std::string& name) const {
  int k = find_factor(factors_, name);
  if (k < 0) throw UnknownFactor("unknown factor " + name);
  return factors_[k].dim;
}

CMatrix LabeledOperator::matrix_in(const Names& order) const {
  if (order.size() != factors_.size()) throw UnknownFactor("factor order does not match operator");
  Factors to;
  for (const auto& n : order) {
    int k = find_factor(factors_, n);
    if (k < 0) throw UnknownFactor("unknown factor " + n);
    to.push_back(factors_[k]);
  }
  check_unique(to);
  return permute_matrix(m_, factors_, to);
}

LabeledOperator LabeledOperator::relabeled(
    const std::vector<std::pair<std::string, std::string>>& map) const {
  Factors f = factors_;
  for (const auto& [from, to] : map) {
    int k = find_factor(f, from);
    if (k < 0) throw UnknownFactor("unknown factor " + from);
    f[k].name = to;
  }
  return LabeledOperator(f, m_);
}

LabeledOperator LabeledOperator::adjoint() const { return LabeledOperator(factors_, m_.adjoint()); }

LabeledOperator LabeledOperator::conjugate() const { return LabeledOperator(factors_, m_.conjugate()); }

LabeledOperator& LabeledOperator::operator+=(const LabeledOperator& o) {
  if (o.factors_ != factors_) throw DimMismatch("adding operators on different factors");
  m_ += o.m_;
  return *this;
}

LabeledOperator& LabeledOperator::operator-=(const LabeledOperator& o) {
  if (o.factors_ != factors_) throw DimMismatch("subtracting operators on different factors");
  m_ -= o.m_;
  return *this;
}

LabeledOperator& LabeledOperator::operator*=(cplx s) {
  m_ *= s;
  return *this;
}

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b) { return a += b; }
LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b) { return a -= b; }
LabeledOperator operator*(cplx s, LabeledOperator a) { return a *= s; }
LabeledOperator operator*(LabeledOperator a, cplx s) { return a *= s; }

LabeledOperator compose(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.factors() != b.factors()) throw DimMismatch("composing operators on different factors");
  return LabeledOperator(a.factors(), a.matrix() * b.matrix());
}

// ---------------------------------------------------------------------------
// LabeledKet

LabeledKet::LabeledKet() : v_(CVector::Ones(1)) {}

LabeledKet::LabeledKet(Factors factors, CVector v) {
  check_unique(factors);
  const int d = total_dim(factors);
  if (v.size() != d) throw DimMismatch("vector length does not match factor dimension");
  Factors sorted = canonical_sorted(factors);
  if (sorted == factors) {
    v_ = std::move(v);
  } else {
    std::vector<int> map = layout_map(factors, sorted);
    v_ = CVector(d);
    for (int i = 0; i < d; ++i) v_(map[i]) = v(i);
  }
  factors_ = std::move(sorted);
}

LabeledKet LabeledKet::basis(const std::string& name, int dim, int index) {
  if (index < 0 || index >= dim) throw InvalidParam("basis index out of range");
  CVector v = CVector::Zero(dim);
  v(index) = 1.0;
  return LabeledKet({{name, dim}}, v);
}

LabeledOperator LabeledKet::projector() const { return LabeledOperator(factors_, v_ * v_.adjoint()); }

LabeledKet& LabeledKet::operator+=(const LabeledKet& o) {
  if (o.factors_ != factors_) throw DimMismatch("adding kets on different factors");
  v_ += o.v_;
  return *this;
}

LabeledKet operator+(LabeledKet a, const LabeledKet& b) { return a += b; }

LabeledKet operator*(cplx s, LabeledKet a) {
  return LabeledKet(a.factors(), s * a.vector());
}

LabeledKet tensor(const LabeledKet& a, const LabeledKet& b) {
  Factors f = a.factors();
  f.insert(f.end(), b.factors().begin(), b.factors().end());
  const auto& va = a.vector();
  const auto& vb = b.vector();
  CVector v(va.size() * vb.size());
  for (Eigen::Index i = 0; i < va.size(); ++i) v.segment(i * vb.size(), vb.size()) = va(i) * vb;
  return LabeledKet(f, v);
}

// ---------------------------------------------------------------------------
// Operations

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  for (const auto& l : b.factors())
    if (a.has(l.name)) throw DuplicateFactor("factor " + l.name + " present in both operands");
  Factors f = a.factors();
  f.insert(f.end(), b.factors().begin(), b.factors().end());
  const CMatrix& ma = a.matrix();
  const CMatrix& mb = b.matrix();
  const Eigen::Index db = mb.rows();
  CMatrix out(ma.rows() * db, ma.cols() * db);
  for (Eigen::Index j = 0; j < ma.cols(); ++j)
    for (Eigen::Index i = 0; i < ma.rows(); ++i) out.block(i * db, j * db, db, db) = ma(i, j) * mb;
  return LabeledOperator(f, out);
}

LabeledOperator partial_trace(const LabeledOperator& m, const Names& over) {
  Split sp = split_factors(m.factors(), over);
  const CMatrix& a = m.matrix();
  CMatrix out = CMatrix::Zero(sp.dk, sp.dk);
  for (int q = 0; q < sp.dk; ++q)
    for (int p = 0; p < sp.dk; ++p) {
      cplx acc = 0.0;
      for (int s = 0; s < sp.ds; ++s) acc += a(sp.table[p * sp.ds + s], sp.table[q * sp.ds + s]);
      out(p, q) = acc;
    }
  return LabeledOperator(sp.kept, out);
}

LabeledOperator partial_transpose(const LabeledOperator& m, const Names& over) {
  Split sp = split_factors(m.factors(), over);
  const CMatrix& a = m.matrix();
  CMatrix out(a.rows(), a.cols());
  for (int kj = 0; kj < sp.dk; ++kj)
    for (int sj = 0; sj < sp.ds; ++sj)
      for (int ki = 0; ki < sp.dk; ++ki)
        for (int si = 0; si < sp.ds; ++si)
          out(sp.table[ki * sp.ds + si], sp.table[kj * sp.ds + sj]) =
              a(sp.table[ki * sp.ds + sj], sp.table[kj * sp.ds + si]);
  return LabeledOperator(m.factors(), out);
}

LabeledOperator trace_replace(const LabeledOperator& m, const Names& over) {
  Split sp = split_factors(m.factors(), over);
  const CMatrix& a = m.matrix();
  CMatrix out = CMatrix::Zero(a.rows(), a.cols());
  const double inv = 1.0 / sp.ds;
  for (int q = 0; q < sp.dk; ++q)
    for (int p = 0; p < sp.dk; ++p) {
      cplx acc = 0.0;
      for (int s = 0; s < sp.ds; ++s) acc += a(sp.table[p * sp.ds + s], sp.table[q * sp.ds + s]);
      acc *= inv;
      for (int s = 0; s < sp.ds; ++s) out(sp.table[p * sp.ds + s], sp.table[q * sp.ds + s]) = acc;
    }
  return LabeledOperator(m.factors(), out);
}

LabeledOperator trace_replace_complement(const LabeledOperator& m, const Names& over) {
  return m - trace_replace(m, over);
}

LabeledOperator apply_replace_chain(const LabeledOperator& m, const std::vector<ReplaceTerm>& chain) {
  LabeledOperator out = m;
  for (const auto& t : chain)
    out = t.complement ? trace_replace_complement(out, t.over) : trace_replace(out, t.over);
  return out;
}

LabeledOperator extend(const LabeledOperator& m, const Factors& with) {
  Factors missing;
  for (const auto& l : with) {
    if (m.has(l.name)) {
      if (m.dim_of(l.name) != l.dim) throw DimMismatch("factor " + l.name + " has a different dimension");
      continue;
    }
    missing.push_back(l);
  }
  if (missing.empty()) return m;
  return tensor(m, LabeledOperator::identity(missing));
}

LabeledOperator link_product(const LabeledOperator& m, const LabeledOperator& n) {
  Names shared;
  for (const auto& l : m.factors()) {
    if (!n.has(l.name)) continue;
    if (n.dim_of(l.name) != l.dim) throw DimMismatch("shared factor " + l.name + " has different dimensions");
    shared.push_back(l.name);
  }
  Split sm = split_factors(m.factors(), shared);
  Split sn = split_factors(n.factors(), shared);
  // sm.sel and sn.sel list the shared factors in the same canonical order.
  const int dx = sm.dk, dy = sm.ds, dz = sn.dk;
  const CMatrix& a = m.matrix();
  const CMatrix& b = n.matrix();
  CMatrix lhs(dx * dx, dy * dy);
  for (int x = 0; x < dx; ++x)
    for (int xp = 0; xp < dx; ++xp)
      for (int yp = 0; yp < dy; ++yp)
        for (int y = 0; y < dy; ++y)
          lhs(x * dx + xp, yp * dy + y) = a(sm.table[x * dy + yp], sm.table[xp * dy + y]);
  CMatrix rhs(dy * dy, dz * dz);
  for (int yp = 0; yp < dy; ++yp)
    for (int y = 0; y < dy; ++y)
      for (int z = 0; z < dz; ++z)
        for (int zp = 0; zp < dz; ++zp)
          rhs(yp * dy + y, z * dz + zp) = b(sn.table[z * dy + yp], sn.table[zp * dy + y]);
  // Tr_Y[(M^{T_Y})(N)] pairs M[(x,y'),(x',y)] with N[(y',z),(y,z')].
  CMatrix prod = lhs * rhs;
  CMatrix out(dx * dz, dx * dz);
  for (int x = 0; x < dx; ++x)
    for (int xp = 0; xp < dx; ++xp)
      for (int z = 0; z < dz; ++z)
        for (int zp = 0; zp < dz; ++zp) out(x * dz + z, xp * dz + zp) = prod(x * dx + xp, z * dz + zp);
  Factors f = sm.kept;
  f.insert(f.end(), sn.kept.begin(), sn.kept.end());
  return LabeledOperator(f, out);
}

cplx link_scalar(const LabeledOperator& s, const LabeledOperator& e) {
  if (s.factors() != e.factors()) throw DimMismatch("witness and object live on different factors");
  return (s.matrix().transpose().cwiseProduct(e.matrix().transpose())).sum();
}

LabeledKet max_entangled_ket(const SpaceLabel& x, const SpaceLabel& y) {
  if (x.dim != y.dim) throw DimMismatch("maximally entangled pair needs equal dimensions");
  if (x.name == y.name) throw DuplicateFactor("maximally entangled pair needs two distinct factors");
  const int d = x.dim;
  CVector v = CVector::Zero(d * d);
  for (int i = 0; i < d; ++i) v(i * d + i) = 1.0;
  return LabeledKet({x, y}, v);
}

LabeledOperator max_entangled(const SpaceLabel& x, const SpaceLabel& y) {
  return max_entangled_ket(x, y).projector();
}

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double max_abs_diff(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.factors() != b.factors()) throw DimMismatch("comparing operators on different factors");
  return max_abs(a.matrix() - b.matrix());
}

double hermiticity_residual(const LabeledOperator& m) { return max_abs(m.matrix() - m.matrix().adjoint()); }

PsdReport psd_check(const LabeledOperator& m, double tol) {
  double h = hermiticity_residual(m);
  if (h > kHermitianTol) throw NotHermitian("operator is not Hermitian (residual " + std::to_string(h) + ")");
  CMatrix herm = 0.5 * (m.matrix() + m.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  PsdReport r;
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.psd = r.min_eigenvalue >= -tol;
  return r;
}

}  // namespace causalcert
