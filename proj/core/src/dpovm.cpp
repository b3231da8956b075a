#include "causalcert/dpovm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace causalcert {

std::string OutcomeIndex::str() const {
  std::ostringstream os;
  os << "a=" << a << ",b=" << b;
  if (f >= 0) os << ",f=" << f;
  if (y >= 0) os << ",y=" << y;
  if (z >= 0) os << ",z=" << z;
  return os.str();
}

const Factors& DPOVM::factors() const {
  if (elements.empty()) throw InvalidParam("empty D-POVM");
  return elements.front().op.factors();
}

const LabeledOperator& DPOVM::at(const OutcomeIndex& idx) const {
  for (const auto& e : elements)
    if (e.index == idx) return e.op;
  throw InvalidParam("no element with index " + idx.str());
}

bool DPOVM::has_f() const {
  return std::any_of(elements.begin(), elements.end(), [](const DPOVMElement& e) { return e.index.f >= 0; });
}

TrustedSplit infer_split(const Factors& trusted) {
  TrustedSplit s;
  auto ends_out = [](const std::string& n) { return n.size() >= 2 && n.compare(n.size() - 2, 2, "_O") == 0; };
  for (const auto& f : trusted) {
    const std::string& n = f.name;
    if (n.rfind("At", 0) == 0) {
      s.alice.push_back(n);
      if (ends_out(n)) s.alice_out.push_back(n);
    } else if (n.rfind("Bt", 0) == 0) {
      s.bob.push_back(n);
      if (ends_out(n)) s.bob_out.push_back(n);
    } else if (n.rfind("Ft", 0) == 0) {
      s.fiona.push_back(n);
    } else {
      throw InvalidParam("cannot attribute trusted factor " + n + " to a party");
    }
  }
  return s;
}

DPOVMReport check_dpovm(const DPOVM& E, double tol) {
  DPOVMReport rep;
  std::map<std::pair<int, int>, LabeledOperator> sums;
  for (const auto& e : E.elements) {
    if (e.op.factors() != E.factors()) throw InvalidParam("D-POVM elements on different factors");
    PsdReport p = psd_check(0.5 * (e.op + e.op.adjoint()), tol);
    const double r = std::max(0.0, -p.min_eigenvalue) + hermiticity_residual(e.op);
    rep.psd_residual.push_back(r);
    if (r > tol) rep.ok = false;
    auto key = std::make_pair(e.index.y, e.index.z);
    auto it = sums.find(key);
    if (it == sums.end()) sums.emplace(key, e.op);
    else it->second += e.op;
  }
  for (const auto& [k, s] : sums)
    rep.normalization_residual =
        std::max(rep.normalization_residual, max_abs_diff(s, LabeledOperator::identity(s.factors())));
  if (rep.normalization_residual > tol) rep.ok = false;
  return rep;
}

namespace {

bool has_name(const Factors& f, const std::string& n) {
  return std::any_of(f.begin(), f.end(), [&](const SpaceLabel& l) { return l.name == n; });
}

// Every factor of W is acted on by exactly one device; trusted factors are
// disjoint across devices.
void check_devices(const Factors& w, const std::vector<const Instrument*>& devs) {
  std::set<std::string> seen_w, seen_t;
  for (const Instrument* d : devs) {
    std::set<std::string> own;
    for (const auto& l : d->factors()) {
      if (has_name(w, l.name)) {
        for (const auto& wl : w)
          if (wl.name == l.name && wl.dim != l.dim)
            throw InvalidParam("device factor " + l.name + " has the wrong dimension");
        own.insert(l.name);
      } else if (!seen_t.insert(l.name).second) {
        throw InvalidParam("trusted factor " + l.name + " is shared between devices");
      }
    }
    for (const auto& n : own)
      if (!seen_w.insert(n).second) throw InvalidParam("factor " + n + " is acted on by two devices");
  }
  for (const auto& l : w)
    if (!seen_w.count(l.name)) throw InvalidParam("no device acts on factor " + l.name);
}

DPOVM finish(std::vector<DPOVMElement> els) {
  DPOVM E;
  E.elements = std::move(els);
  E.split = infer_split(E.factors());
  return E;
}

}  // namespace

DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const Instrument& bob) {
  check_devices(W.W.factors(), {&alice, &bob});
  std::vector<DPOVMElement> els;
  for (int a = 0; a < alice.size(); ++a) {
    LabeledOperator wa = link_product(W.W, alice.elements[a]);
    for (int b = 0; b < bob.size(); ++b) els.push_back({{a, b}, link_product(wa, bob.elements[b])});
  }
  return finish(std::move(els));
}

DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const Instrument& bob, const Instrument& fiona) {
  check_devices(W.W.factors(), {&alice, &bob, &fiona});
  std::vector<DPOVMElement> els;
  for (int a = 0; a < alice.size(); ++a) {
    LabeledOperator wa = link_product(W.W, alice.elements[a]);
    for (int b = 0; b < bob.size(); ++b) {
      LabeledOperator wab = link_product(wa, bob.elements[b]);
      for (int f = 0; f < fiona.size(); ++f) els.push_back({{a, b, f}, link_product(wab, fiona.elements[f])});
    }
  }
  return finish(std::move(els));
}

DPOVM induce_dpovm(const ProcessMatrix& W, const Instrument& alice, const std::vector<Instrument>& bob_by_y,
                   const std::vector<Instrument>& fiona_by_z) {
  if (bob_by_y.empty() || fiona_by_z.empty()) throw InvalidParam("classical-input devices need at least one input");
  for (const auto& b : bob_by_y)
    for (const auto& f : fiona_by_z) check_devices(W.W.factors(), {&alice, &b, &f});
  std::vector<DPOVMElement> els;
  for (int y = 0; y < static_cast<int>(bob_by_y.size()); ++y)
    for (int z = 0; z < static_cast<int>(fiona_by_z.size()); ++z)
      for (int a = 0; a < alice.size(); ++a) {
        LabeledOperator wa = link_product(W.W, alice.elements[a]);
        const Instrument& bob = bob_by_y[y];
        const Instrument& fiona = fiona_by_z[z];
        for (int b = 0; b < bob.size(); ++b) {
          LabeledOperator wab = link_product(wa, bob.elements[b]);
          for (int f = 0; f < fiona.size(); ++f)
            els.push_back({{a, b, f, y, z}, link_product(wab, fiona.elements[f])});
        }
      }
  return finish(std::move(els));
}

double probability(const LabeledOperator& element, const std::vector<LabeledOperator>& rho_inputs) {
  LabeledOperator rho;
  for (const auto& r : rho_inputs) rho = tensor(rho, r);
  if (rho.factors() != element.factors()) throw DimMismatch("input states do not cover the element's factors");
  return link_scalar(element, rho).real();
}

NosigReport nosig_marginals(const DPOVM& E) {
  if (E.has_f()) throw InvalidParam("no-signalling marginals are defined for bipartite outcomes");
  std::map<int, LabeledOperator> by_a, by_b;
  for (const auto& e : E.elements) {
    auto ia = by_a.find(e.index.a);
    if (ia == by_a.end()) by_a.emplace(e.index.a, e.op);
    else ia->second += e.op;
    auto ib = by_b.find(e.index.b);
    if (ib == by_b.end()) by_b.emplace(e.index.b, e.op);
    else ib->second += e.op;
  }
  NosigReport rep;
  for (const auto& [a, s] : by_a)
    rep.a_before_b = std::max(rep.a_before_b, max_abs(trace_replace_complement(s, E.split.bob).matrix()));
  for (const auto& [b, s] : by_b)
    rep.b_before_a = std::max(rep.b_before_a, max_abs(trace_replace_complement(s, E.split.alice).matrix()));
  return rep;
}

namespace {

QuantumInputSet joint_inputs(const std::vector<QuantumInputSet>& inputs) {
  if (inputs.empty()) throw InvalidParam("at least one input set is required");
  QuantumInputSet joint = inputs.front();
  for (size_t i = 1; i < inputs.size(); ++i) joint = product_input_set(joint, inputs[i]);
  return joint;
}

}  // namespace

CorrelationTable correlations(const DPOVM& E, const std::vector<QuantumInputSet>& inputs) {
  QuantumInputSet joint = joint_inputs(inputs);
  if (joint.space != E.factors()) throw DimMismatch("input sets do not cover the D-POVM factors");
  CorrelationTable t;
  for (const auto& e : E.elements) {
    std::vector<double> row;
    for (const auto& rho : joint.states) row.push_back(link_scalar(e.op, rho).real());
    t.p.push_back(std::move(row));
  }
  return t;
}

double witness_value_from_correlations(const DPOVM& S, const std::vector<QuantumInputSet>& inputs,
                                       const CorrelationTable& P) {
  for (const auto& s : inputs) {
    if (s.dual.size() != s.states.size()) throw FrameError("input set carries no dual frame");
    const double r = frame_residual(s);
    if (r > 1e-8) throw FrameError("input set is not tomographically complete (frame residual " + std::to_string(r) + ")");
  }
  QuantumInputSet joint = joint_inputs(inputs);
  if (joint.space != S.factors()) throw DimMismatch("input sets do not cover the witness factors");
  if (static_cast<int>(P.p.size()) != S.size()) throw DimMismatch("correlation table has the wrong number of outcomes");
  double value = 0.0;
  for (int e = 0; e < S.size(); ++e) {
    if (static_cast<int>(P.p[e].size()) != joint.size()) throw DimMismatch("correlation table has the wrong number of inputs");
    for (int x = 0; x < joint.size(); ++x) value += link_scalar(joint.dual[x], S.elements[e].op).real() * P.p[e][x];
  }
  return value;
}

Assemblage ttu_assemblage(const ProcessMatrix& W, const std::vector<POVM>& fiona_by_z) {
  if (!W.kind.has_f()) throw InvalidParam("TTU assemblages need a 2+F process");
  if (fiona_by_z.empty()) throw InvalidParam("at least one POVM for Fiona is required");
  Assemblage w;
  w.variant = Assemblage::Variant::TTU;
  w.kind = W.kind;
  for (int z = 0; z < static_cast<int>(fiona_by_z.size()); ++z) {
    const POVM& p = fiona_by_z[z];
    if (p.space != Factors{{"F", W.kind.d_f}}) throw InvalidParam("Fiona's POVM must act on F alone");
    for (int f = 0; f < p.size(); ++f) w.elements.push_back({{0, 0, f, -1, z}, link_product(W.W, p.elements[f])});
  }
  return w;
}

Assemblage tuu_assemblage(const ProcessMatrix& W, const std::vector<Instrument>& bob_by_y,
                          const std::vector<POVM>& fiona_by_z) {
  if (!W.kind.has_f()) throw InvalidParam("TUU assemblages need a 2+F process");
  if (bob_by_y.empty() || fiona_by_z.empty()) throw InvalidParam("classical-input devices need at least one input");
  const Factors bob_space = canonical_sorted({{"B_I", W.kind.d_bi}, {"B_O", W.kind.d_bo}});
  for (const auto& b : bob_by_y)
    if (b.factors() != bob_space) throw InvalidParam("Bob's instruments must act on B_I B_O alone");
  for (const auto& p : fiona_by_z)
    if (p.space != Factors{{"F", W.kind.d_f}}) throw InvalidParam("Fiona's POVM must act on F alone");
  Assemblage w;
  w.variant = Assemblage::Variant::TUU;
  w.kind = W.kind;
  for (int y = 0; y < static_cast<int>(bob_by_y.size()); ++y)
    for (int z = 0; z < static_cast<int>(fiona_by_z.size()); ++z)
      for (int b = 0; b < bob_by_y[y].size(); ++b) {
        LabeledOperator wb = link_product(W.W, bob_by_y[y].elements[b]);
        for (int f = 0; f < fiona_by_z[z].size(); ++f)
          w.elements.push_back({{0, b, f, y, z}, link_product(wb, fiona_by_z[z].elements[f])});
      }
  return w;
}

bool AssemblageReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.ok; });
}

AssemblageReport check_assemblage(const Assemblage& w, double tol) {
  AssemblageReport rep;
  double psd = 0.0;
  for (const auto& e : w.elements) psd = std::max(psd, -psd_check(0.5 * (e.op + e.op.adjoint()), tol).min_eigenvalue);
  rep.items.push_back({"psd", std::max(0.0, psd), psd <= tol});
  if (w.variant == Assemblage::Variant::TTU) {
    std::map<int, LabeledOperator> by_z;
    for (const auto& e : w.elements) {
      auto it = by_z.find(e.index.z);
      if (it == by_z.end()) by_z.emplace(e.index.z, e.op);
      else it->second += e.op;
    }
    double dz = 0.0;
    for (const auto& [z, s] : by_z) dz = std::max(dz, max_abs_diff(s, by_z.begin()->second));
    rep.items.push_back({"sum_f independent of z", dz, dz <= tol});
    const ScenarioKind k = ScenarioKind::bipartite(w.kind.d_ai, w.kind.d_ao, w.kind.d_bi, w.kind.d_bo);
    for (const auto& c : check_process(by_z.begin()->second, k, tol).items)
      rep.items.push_back({"marginal process " + c.name, c.residual, c.ok});
    return rep;
  }
  std::map<std::tuple<int, int, int>, LabeledOperator> by_byz;
  for (const auto& e : w.elements) {
    auto key = std::make_tuple(e.index.b, e.index.y, e.index.z);
    auto it = by_byz.find(key);
    if (it == by_byz.end()) by_byz.emplace(key, e.op);
    else it->second += e.op;
  }
  double dz = 0.0;
  std::map<int, LabeledOperator> by_y;
  for (const auto& [k, s] : by_byz) {
    const auto [b, y, z] = k;
    const LabeledOperator& ref = by_byz.at(std::make_tuple(b, y, 0));
    dz = std::max(dz, max_abs_diff(s, ref));
    if (z == 0) {
      auto it = by_y.find(y);
      if (it == by_y.end()) by_y.emplace(y, s);
      else it->second += s;
    }
  }
  rep.items.push_back({"sum_f independent of z", dz, dz <= tol});
  double shape = 0.0, norm = 0.0;
  for (const auto& [y, s] : by_y) {
    shape = std::max(shape, max_abs(trace_replace_complement(s, {"A_O"}).matrix()));
    norm = std::max(norm, std::abs(s.trace() - static_cast<double>(w.kind.d_ao)));
  }
  rep.items.push_back({"sum_b = rho_y (x) 1^{A_O}", shape, shape <= tol});
  rep.items.push_back({"rho_y normalization", norm, norm <= tol});
  return rep;
}

DPOVM teleport_process(const ProcessMatrix& W) {
  if (W.kind.has_f()) throw InvalidParam("teleport_process expects a bipartite process");
  auto [ta, tb] = teleport_instruments(W.kind);
  LabeledOperator e = link_product(link_product(W.W, ta.elements[0]), tb.elements[0]);
  return finish({{{0, 0}, e}});
}

DPOVM teleport_assemblage(const Assemblage& w) {
  auto [ta, tb] = teleport_instruments(w.kind);
  std::vector<DPOVMElement> els;
  for (const auto& e : w.elements) {
    LabeledOperator t = link_product(e.op, ta.elements[0]);
    if (w.variant == Assemblage::Variant::TTU) t = link_product(t, tb.elements[0]);
    els.push_back({e.index, t});
  }
  return finish(std::move(els));
}

DPOVM restrict_outcomes(const DPOVM& E, int a, int b) {
  std::vector<DPOVMElement> els;
  for (const auto& e : E.elements)
    if (e.index.a == a && e.index.b == b) {
      DPOVMElement c = e;
      c.index.a = 0;
      c.index.b = 0;
      els.push_back(c);
    }
  if (els.empty()) throw InvalidParam("no elements with the requested outcomes");
  DPOVM out{std::move(els), E.split};
  return out;
}

DPOVM uniform_noise(const DPOVM& E) {
  double total = 0.0;
  for (const auto& e : E.elements) total += e.op.trace().real();
  const Factors& f = E.factors();
  const double w = total / (static_cast<double>(E.size()) * total_dim(f));
  DPOVM N = E;
  for (auto& e : N.elements) e.op = w * LabeledOperator::identity(f);
  return N;
}

DPOVM mix(const DPOVM& E, const DPOVM& N, double r) {
  if (E.size() != N.size()) throw InvalidParam("mixing families of different sizes");
  DPOVM out = E;
  for (int i = 0; i < E.size(); ++i) {
    if (!(E.elements[i].index == N.elements[i].index)) throw InvalidParam("mixing families with different indices");
    out.elements[i].op = (1.0 / (1.0 + r)) * (E.elements[i].op + r * N.elements[i].op);
  }
  return out;
}

namespace {

constexpr double kRankCutoff = 1e-10;

// Non-normalised eigenvectors sqrt(lambda) v for lambda above the cutoff.
std::vector<CVector> spectral_vectors(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
  std::vector<CVector> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > kRankCutoff) out.push_back(std::sqrt(es.eigenvalues()(i)) * es.eigenvectors().col(i));
  return out;
}

LabeledOperator sum_projectors(const Factors& f, const std::vector<CVector>& vs) {
  const int d = total_dim(f);
  CMatrix m = CMatrix::Zero(d, d);
  for (const auto& v : vs) m += v * v.adjoint();
  return LabeledOperator(f, m);
}

// Re-expresses `op` with adjacent temporary factors fused into single labels.
LabeledOperator fuse(const LabeledOperator& op, const Names& order, const Factors& fused) {
  return LabeledOperator(fused, op.matrix_in(order));
}

Factors concat(Factors a, const Factors& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Names names_of(const Factors& f) {
  Names n;
  for (const auto& l : f) n.push_back(l.name);
  return n;
}

}  // namespace

Realization realize_separable_dpovm(const DPOVM& E, double q, const DPOVM& part_ab, const DPOVM& part_ba) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParam("q must lie in [0, 1]");
  if (E.has_f()) throw InvalidParam("the realization is implemented for bipartite D-POVMs");
  if (part_ab.size() != E.size() || part_ba.size() != E.size()) throw InvalidParam("parts must match the D-POVM");
  for (const DPOVM* p : {&part_ab, &part_ba}) {
    DPOVMReport r = check_dpovm(*p, 1e-8);
    if (!r.ok) throw InvalidParam("ordered part is not a valid D-POVM");
  }
  const NosigReport n_ab = nosig_marginals(part_ab), n_ba = nosig_marginals(part_ba);
  if (n_ab.a_before_b > 1e-8) throw InvalidParam("first part is not compatible with the order A<B");
  if (n_ba.b_before_a > 1e-8) throw InvalidParam("second part is not compatible with the order B<A");
  for (int i = 0; i < E.size(); ++i) {
    const OutcomeIndex& idx = E.elements[i].index;
    LabeledOperator m = q * part_ab.at(idx) + (1.0 - q) * part_ba.at(idx);
    if (max_abs_diff(m, E.elements[i].op) > 1e-8) throw InvalidParam("the parts do not mix to the D-POVM");
  }

  Factors FA, FB;
  for (const auto& l : E.factors()) {
    if (std::find(E.split.alice.begin(), E.split.alice.end(), l.name) != E.split.alice.end()) FA.push_back(l);
    else if (std::find(E.split.bob.begin(), E.split.bob.end(), l.name) != E.split.bob.end()) FB.push_back(l);
    else throw InvalidParam("factor " + l.name + " is not attributed to Alice or Bob");
  }
  if (concat(FA, FB) != E.factors()) throw InvalidParam("Alice's factors must precede Bob's in the canonical order");
  const int dA = total_dim(FA), dB = total_dim(FB);
  int nA = 0, nB = 0;
  for (const auto& e : E.elements) {
    nA = std::max(nA, e.index.a + 1);
    nB = std::max(nB, e.index.b + 1);
  }

  // A<B part: Alice measures and forwards a label, Bob conditions on it.
  std::vector<std::vector<CVector>> ea(nA);
  std::vector<int> off_a(nA + 1, 0);
  for (int a = 0; a < nA; ++a) {
    LabeledOperator s = LabeledOperator::zero(E.factors());
    for (int b = 0; b < nB; ++b) s += part_ab.at({a, b});
    ea[a] = spectral_vectors(partial_trace(s, names_of(FB)).matrix() / static_cast<double>(dB));
    off_a[a + 1] = off_a[a] + static_cast<int>(ea[a].size());
  }
  const int R = off_a[nA];

  // B<A part, mirrored.
  std::vector<std::vector<CVector>> fb(nB);
  std::vector<int> off_b(nB + 1, 0);
  for (int b = 0; b < nB; ++b) {
    LabeledOperator s = LabeledOperator::zero(E.factors());
    for (int a = 0; a < nA; ++a) s += part_ba.at({a, b});
    fb[b] = spectral_vectors(partial_trace(s, names_of(FA)).matrix() / static_cast<double>(dA));
    off_b[b + 1] = off_b[b] + static_cast<int>(fb[b].size());
  }
  const int Rp = off_b[nB];

  const SpaceLabel alpha{"alpha", 2}, beta{"beta", 2}, ai0{"A_I0", Rp}, bi0{"B_I0", R};
  const SpaceLabel ao{"A_O", R}, bo{"B_O", Rp};

  std::vector<LabeledOperator> ma_ab(nA), ma_ba(nA), mb_ab(nB), mb_ba(nB);
  for (int a = 0; a < nA; ++a) {
    CVector m = CVector::Zero(dA * R);
    for (int i = 0; i < static_cast<int>(ea[a].size()); ++i)
      for (int x = 0; x < dA; ++x) m(x * R + off_a[a] + i) = ea[a][i](x);
    ma_ab[a] = LabeledKet(concat(FA, {ao}), m).projector();
  }
  for (int b = 0; b < nB; ++b) {
    std::vector<CVector> vs;
    for (int a = 0; a < nA; ++a)
      for (const auto& e : spectral_vectors(part_ab.at({a, b}).matrix())) {
        CVector m = CVector::Zero(dB * R);
        for (int i = 0; i < static_cast<int>(ea[a].size()); ++i) {
          const double lam = ea[a][i].squaredNorm();
          for (int y = 0; y < dB; ++y) {
            cplx c = 0.0;
            for (int x = 0; x < dA; ++x) c += std::conj(ea[a][i](x)) * e(x * dB + y);
            m(y * R + off_a[a] + i) = c / lam;
          }
        }
        vs.push_back(m);
      }
    mb_ab[b] = sum_projectors(concat(FB, {bi0}), vs);
  }
  for (int b = 0; b < nB; ++b) {
    CVector n = CVector::Zero(dB * Rp);
    for (int k = 0; k < static_cast<int>(fb[b].size()); ++k)
      for (int y = 0; y < dB; ++y) n(y * Rp + off_b[b] + k) = fb[b][k](y);
    mb_ba[b] = LabeledKet(concat(FB, {bo}), n).projector();
  }
  for (int a = 0; a < nA; ++a) {
    std::vector<CVector> vs;
    for (int b = 0; b < nB; ++b)
      for (const auto& e : spectral_vectors(part_ba.at({a, b}).matrix())) {
        CVector n = CVector::Zero(dA * Rp);
        for (int k = 0; k < static_cast<int>(fb[b].size()); ++k) {
          const double lam = fb[b][k].squaredNorm();
          for (int x = 0; x < dA; ++x) {
            cplx c = 0.0;
            for (int y = 0; y < dB; ++y) c += std::conj(fb[b][k](y)) * e(x * dB + y);
            n(x * Rp + off_b[b] + k) = c / lam;
          }
        }
        vs.push_back(n);
      }
    ma_ba[a] = sum_projectors(concat(FA, {ai0}), vs);
  }

  auto proj = [](const SpaceLabel& s, int i) { return LabeledKet::basis(s.name, s.dim, i).projector(); };
  const Factors fused_a = concat({{"A_I", 2 * Rp}, ao}, FA);
  const Factors fused_b = concat({{"B_I", 2 * R}, bo}, FB);
  const Names order_a = names_of(concat({alpha, ai0, ao}, FA));
  const Names order_b = names_of(concat({beta, bi0, bo}, FB));

  Realization out;
  out.alice = Instrument{"alice", concat({{"A_I", 2 * Rp}}, FA), {ao}, {}};
  out.bob = Instrument{"bob", concat({{"B_I", 2 * R}}, FB), {bo}, {}};
  for (int a = 0; a < nA; ++a) {
    LabeledOperator m = tensor(tensor(proj(alpha, 0), LabeledOperator::identity({ai0})), ma_ab[a]) +
                        tensor(tensor(proj(alpha, 1), ma_ba[a]), (1.0 / R) * LabeledOperator::identity({ao}));
    out.alice.elements.push_back(fuse(m, order_a, fused_a));
  }
  for (int b = 0; b < nB; ++b) {
    LabeledOperator m = tensor(tensor(proj(beta, 0), mb_ab[b]), (1.0 / Rp) * LabeledOperator::identity({bo})) +
                        tensor(tensor(proj(beta, 1), LabeledOperator::identity({bi0})), mb_ba[b]);
    out.bob.elements.push_back(fuse(m, order_b, fused_b));
  }

  LabeledOperator w1 = tensor(tensor(tensor(proj(alpha, 0), proj(beta, 0)), (1.0 / Rp) * LabeledOperator::identity({ai0})),
                              tensor(max_entangled(ao, bi0), LabeledOperator::identity({bo})));
  LabeledOperator w2 = tensor(tensor(tensor(proj(alpha, 1), proj(beta, 1)), (1.0 / R) * LabeledOperator::identity({bi0})),
                              tensor(max_entangled(bo, ai0), LabeledOperator::identity({ao})));
  LabeledOperator w = q * w1 + (1.0 - q) * w2;
  const ScenarioKind kind = ScenarioKind::bipartite(2 * Rp, R, 2 * R, Rp);
  LabeledOperator W = fuse(w, {"alpha", "A_I0", "A_O", "beta", "B_I0", "B_O"}, kind.factors());
  out.W = validate_process(W, kind, 1e-8);
  return out;
}

}  // namespace causalcert
