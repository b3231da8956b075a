#include "causalcert/instruments.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace causalcert {

Factors Instrument::factors() const {
  Factors f = inputs;
  f.insert(f.end(), outputs.begin(), outputs.end());
  return canonical_sorted(f);
}

Names Instrument::output_names() const {
  Names n;
  for (const auto& f : outputs) n.push_back(f.name);
  return n;
}

Instrument POVM::as_instrument(std::string role) const { return {std::move(role), space, {}, elements}; }

InstrumentReport validate_instrument(const Instrument& I, double tol) {
  if (I.elements.empty()) throw InvalidParam("instrument has no elements");
  const Factors f = I.factors();
  InstrumentReport rep;
  LabeledOperator sum = LabeledOperator::zero(f);
  for (const auto& e : I.elements) {
    if (e.factors() != f) throw InvalidParam("instrument element factors differ from the declared ones");
    PsdReport p = psd_check(0.5 * (e + e.adjoint()), tol);
    const double res = std::max(0.0, -p.min_eigenvalue) + hermiticity_residual(e);
    rep.psd_residual.push_back(res);
    if (res > tol) rep.ok = false;
    sum += e;
  }
  LabeledOperator marg = partial_trace(sum, I.output_names());
  rep.tp_residual = max_abs_diff(marg, LabeledOperator::identity(marg.factors()));
  if (rep.tp_residual > tol) rep.ok = false;
  return rep;
}

InstrumentReport validate_povm(const POVM& p, double tol) { return validate_instrument(p.as_instrument(), tol); }

std::pair<Instrument, Instrument> teleport_instruments(const ScenarioKind& kind) {
  auto build = [](const std::string& party, int d_in, int d_out) {
    const SpaceLabel in{party + "_I", d_in}, out{party + "_O", d_out};
    const SpaceLabel tin{party + "t_I", d_in}, tout{party + "t_O", d_out};
    LabeledOperator phi_in = max_entangled(tin, in);
    LabeledOperator phi_out = max_entangled(tout, out);
    LabeledOperator m0 = tensor((1.0 / d_in) * phi_in, phi_out);
    LabeledOperator m1 = tensor(LabeledOperator::identity({tin, in}) - (1.0 / d_in) * phi_in, phi_out);
    return Instrument{party == "A" ? "alice" : "bob", {tin, tout, in}, {out}, {m0, m1}};
  };
  return {build("A", kind.d_ai, kind.d_ao), build("B", kind.d_bi, kind.d_bo)};
}

namespace {

LabeledOperator basis_projector(const std::string& name, int dim, int i) {
  return LabeledKet::basis(name, dim, i).projector();
}

LabeledOperator pm_projector(const std::string& name, int sign) {
  CVector v(2);
  v << 1.0 / std::sqrt(2.0), sign / std::sqrt(2.0);
  return LabeledKet({{name, 2}}, v).projector();
}

// |a><a|^{in} (x) |1>><<1|^{ancilla, out}
Instrument measure_and_forward(const std::string& role, const SpaceLabel& in, const SpaceLabel& anc,
                               const SpaceLabel& out) {
  Instrument I{role, {in, anc}, {out}, {}};
  for (int a = 0; a < in.dim; ++a) I.elements.push_back(tensor(basis_projector(in.name, in.dim, a), max_entangled(anc, out)));
  return I;
}

}  // namespace

POVM plus_minus_povm(const std::string& factor) {
  return {{{factor, 2}}, {pm_projector(factor, 1), pm_projector(factor, -1)}};
}

POVM trivial_povm(const SpaceLabel& space) { return {{space}, {LabeledOperator::identity({space})}}; }

SwitchDevices qs_instruments() {
  SwitchDevices d;
  d.alice = measure_and_forward("alice", {"A_I", 2}, {"At_O", 2}, {"A_O", 2});
  d.bob = measure_and_forward("bob", {"B_I", 2}, {"Bt_O", 2}, {"B_O", 2});
  d.fiona = plus_minus_povm("F");
  return d;
}

std::vector<Instrument> switch_bob_instruments() {
  const SpaceLabel bi{"B_I", 2}, bo{"B_O", 2};
  Instrument comp{"bob", {bi}, {bo}, {}}, diag{"bob", {bi}, {bo}, {}};
  for (int b = 0; b < 2; ++b) {
    comp.elements.push_back(tensor(basis_projector("B_I", 2, b), basis_projector("B_O", 2, b)));
    const int s = b == 0 ? 1 : -1;
    diag.elements.push_back(tensor(pm_projector("B_I", s), pm_projector("B_O", s)));
  }
  return {comp, diag};
}

std::pair<Instrument, Instrument> feix_instruments(double xi) {
  if (!std::isfinite(xi)) throw InvalidParam("xi must be finite");
  Instrument alice = measure_and_forward("alice", {"A_I", 2}, {"At_O", 2}, {"A_O", 2});

  const SpaceLabel bti{"Bt_I", 2}, bto{"Bt_O", 2}, bi{"B_I", 2}, bo{"B_O", 2};
  const double s = 1.0 / std::sqrt(2.0);
  CVector plus(2), minus(2), zero(2);
  plus << s, s;
  minus << s, -s;
  zero << 1, 0;
  CVector psi(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) psi(2 * i + j) = plus(i) * plus(j) + xi * minus(i) * zero(j);
  psi /= std::sqrt(1.0 + xi * xi);
  LabeledOperator psi_op = LabeledKet({bti, bi}, psi).projector();

  LabeledOperator copy = tensor(basis_projector("Bt_O", 2, 0), basis_projector("B_O", 2, 0)) +
                         tensor(basis_projector("Bt_O", 2, 1), basis_projector("B_O", 2, 1));
  CMatrix Z(2, 2);
  Z << 1, 0, 0, -1;
  LabeledOperator zz = tensor(LabeledOperator({bto}, Z), LabeledOperator({bo}, Z));
  LabeledOperator m0 = tensor(psi_op, copy);
  LabeledOperator m1 = tensor(LabeledOperator::identity({bti, bi}), copy) -
                       tensor(tensor(pm_projector("Bt_I", 1), pm_projector("B_I", -1)), zz) - m0;
  Instrument bob{"bob", {bti, bto, bi}, {bo}, {m0, m1}};
  InstrumentReport rep = validate_instrument(bob);
  if (!rep.ok)
    throw InvalidParam("Bob's instrument is not CP for xi = " + std::to_string(xi) +
                       " (residual " + std::to_string(rep.psd_residual[1]) + ")");
  return {alice, bob};
}

Instrument classical_embedding(const std::vector<Instrument>& families, const std::string& ancilla) {
  if (families.empty()) throw InvalidParam("classical embedding needs at least one family");
  const Instrument& first = families.front();
  const int nx = static_cast<int>(families.size());
  for (const auto& f : families) {
    if (f.size() != first.size()) throw InvalidParam("families have different outcome counts");
    if (f.factors() != first.factors()) throw InvalidParam("families act on different factors");
  }
  Instrument out{first.role, first.inputs, first.outputs, {}};
  out.inputs.push_back({ancilla, nx});
  for (int a = 0; a < first.size(); ++a) {
    LabeledOperator m = LabeledOperator::zero(out.factors());
    for (int x = 0; x < nx; ++x) m += tensor(basis_projector(ancilla, nx, x), families[x].elements[a]);
    out.elements.push_back(m);
  }
  return out;
}

MdciReport mdci_check(const Instrument& I, const Names& tilde_out, double tol) {
  MdciReport rep;
  for (const auto& e : I.elements) {
    LabeledOperator marg = partial_trace(e, I.output_names());
    const double r = max_abs(trace_replace_complement(marg, tilde_out).matrix());
    rep.residual.push_back(r);
    if (r > tol) rep.ok = false;
  }
  return rep;
}

QuantumInputSet make_input_set(std::vector<LabeledOperator> states) {
  if (states.empty()) throw FrameError("empty input set");
  const Factors f = states.front().factors();
  const int d = states.front().dim();
  const int n = static_cast<int>(states.size());
  Eigen::MatrixXd G(n, n);
  for (int x = 0; x < n; ++x) {
    if (states[x].factors() != f) throw DimMismatch("input states live on different factors");
    for (int y = 0; y < n; ++y) G(x, y) = (states[x].matrix() * states[y].matrix()).trace().real();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double cutoff = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  int rank = 0;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) > cutoff) {
      inv(i) = 1.0 / es.eigenvalues()(i);
      ++rank;
    }
  if (rank < d * d)
    throw FrameError("input states span " + std::to_string(rank) + " of " + std::to_string(d * d) +
                     " Hermitian dimensions");
  Eigen::MatrixXd Gp = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  QuantumInputSet s;
  s.space = f;
  s.states = std::move(states);
  for (int x = 0; x < n; ++x) {
    CMatrix D = CMatrix::Zero(d, d);
    for (int y = 0; y < n; ++y) D += Gp(x, y) * s.states[y].matrix().transpose();
    s.dual.emplace_back(f, D);
  }
  return s;
}

QuantumInputSet tomo_input_set(int dim, const std::string& factor) {
  if (dim < 2) throw InvalidParam("tomographic input sets need dim >= 2");
  std::vector<CVector> vecs;
  int k = 0;
  while ((1 << k) < dim) ++k;
  if ((1 << k) == dim) {
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<CVector> q(4, CVector(2));
    q[0] << 1, 0;
    q[1] << 0, 1;
    q[2] << s, s;
    q[3] << s, cplx(0, s);
    vecs = q;
    for (int j = 1; j < k; ++j) {
      std::vector<CVector> next;
      for (const auto& a : vecs)
        for (const auto& b : q) {
          CVector v(a.size() * 2);
          for (Eigen::Index i = 0; i < a.size(); ++i) v.segment(2 * i, 2) = a(i) * b;
          next.push_back(v);
        }
      vecs = std::move(next);
    }
  } else {
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < dim; ++i) vecs.push_back(CVector::Unit(dim, i));
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) {
        CVector a = CVector::Zero(dim), b = CVector::Zero(dim);
        a(i) = s;
        a(j) = s;
        b(i) = s;
        b(j) = cplx(0, s);
        vecs.push_back(a);
        vecs.push_back(b);
      }
  }
  std::vector<LabeledOperator> states;
  for (const auto& v : vecs) states.push_back(LabeledKet({{factor, dim}}, v).projector());
  return make_input_set(std::move(states));
}

QuantumInputSet product_input_set(const QuantumInputSet& a, const QuantumInputSet& b) {
  QuantumInputSet s;
  for (int x = 0; x < a.size(); ++x)
    for (int y = 0; y < b.size(); ++y) {
      s.states.push_back(tensor(a.states[x], b.states[y]));
      s.dual.push_back(tensor(a.dual[x], b.dual[y]));
    }
  s.space = s.states.front().factors();
  return s;
}

double frame_residual(const QuantumInputSet& s) {
  const int d = s.states.front().dim();
  double worst = 0.0;
  auto check = [&](const CMatrix& sigma) {
    CMatrix rec = CMatrix::Zero(d, d);
    for (int x = 0; x < s.size(); ++x) rec += (s.dual[x].matrix().transpose() * sigma).trace() * s.states[x].matrix();
    worst = std::max(worst, max_abs(rec - sigma));
  };
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      CMatrix h = CMatrix::Zero(d, d);
      h(j, k) = 1.0;
      h(k, j) = 1.0;
      check(h);
      if (j != k) {
        CMatrix g = CMatrix::Zero(d, d);
        g(j, k) = cplx(0, 1);
        g(k, j) = cplx(0, -1);
        check(g);
      }
    }
  return worst;
}

}  // namespace causalcert
