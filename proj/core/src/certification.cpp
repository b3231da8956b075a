#include "causalcert/certification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "causalcert/model.hpp"

namespace causalcert {

std::string to_string(ConeVariant v) {
  switch (v) {
    case ConeVariant::DPOVM_Bipartite: return "DPOVM_Bipartite";
    case ConeVariant::DPOVM_TwoPlusF: return "DPOVM_TwoPlusF";
    case ConeVariant::MDCI_Element: return "MDCI_Element";
    case ConeVariant::MDCI_ElementFamily_F: return "MDCI_ElementFamily_F";
    case ConeVariant::MDCI_TTU: return "MDCI_TTU";
    case ConeVariant::MDCI_TUU: return "MDCI_TUU";
    case ConeVariant::Process_Bipartite: return "Process_Bipartite";
    case ConeVariant::Process_TwoPlusF: return "Process_TwoPlusF";
  }
  return "unknown";
}

ConeVariant cone_from_string(const std::string& s) {
  static const std::map<std::string, ConeVariant> table = {
      {"DPOVM_Bipartite", ConeVariant::DPOVM_Bipartite},
      {"DPOVM_TwoPlusF", ConeVariant::DPOVM_TwoPlusF},
      {"MDCI_Element", ConeVariant::MDCI_Element},
      {"MDCI_ElementFamily_F", ConeVariant::MDCI_ElementFamily_F},
      {"MDCI_TTU", ConeVariant::MDCI_TTU},
      {"MDCI_TUU", ConeVariant::MDCI_TUU},
      {"Process_Bipartite", ConeVariant::Process_Bipartite},
      {"Process_TwoPlusF", ConeVariant::Process_TwoPlusF},
  };
  auto it = table.find(s);
  if (it == table.end()) throw InvalidParam("unknown cone '" + s + "'");
  return it->second;
}

bool is_process_cone(ConeVariant v) {
  return v == ConeVariant::Process_Bipartite || v == ConeVariant::Process_TwoPlusF;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Noncausal: return "noncausal";
    case Verdict::Separable: return "separable";
    case Verdict::Boundary: return "boundary";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

ConeSpec ConeSpec::for_dpovm(ConeVariant v, const DPOVM& E) {
  if (is_process_cone(v)) throw InvalidParam("process cones take a process, not a D-POVM");
  ConeSpec c;
  c.variant = v;
  c.split = E.split;
  for (const auto& e : E.elements) {
    c.n_a = std::max(c.n_a, e.index.a + 1);
    c.n_b = std::max(c.n_b, e.index.b + 1);
    c.n_f = std::max(c.n_f, e.index.f + 1);
    c.n_y = std::max(c.n_y, e.index.y + 1);
    c.n_z = std::max(c.n_z, e.index.z + 1);
  }
  check_shape(c, E);
  return c;
}

ConeSpec ConeSpec::for_process(const ScenarioKind& kind) {
  ConeSpec c;
  c.variant = kind.has_f() ? ConeVariant::Process_TwoPlusF : ConeVariant::Process_Bipartite;
  c.kind = kind;
  return c;
}

namespace {

Names names_of(const Factors& f) {
  Names n;
  for (const auto& l : f) n.push_back(l.name);
  return n;
}

bool contains(const Names& n, const std::string& s) { return std::find(n.begin(), n.end(), s) != n.end(); }

Factors pick(const Factors& f, const Names& n) {
  Factors out;
  for (const auto& l : f)
    if (contains(n, l.name)) out.push_back(l);
  return out;
}

Factors drop(const Factors& f, const Names& n) {
  Factors out;
  for (const auto& l : f)
    if (!contains(n, l.name)) out.push_back(l);
  return out;
}

Factors join(Factors a, const Factors& b) {
  a.insert(a.end(), b.begin(), b.end());
  return canonical_sorted(a);
}

Names join(Names a, const Names& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

void check_shape(const ConeSpec& cone, const DPOVM& E) {
  if (is_process_cone(cone.variant)) throw InvalidParam("process cones take a process, not a D-POVM");
  if (E.elements.empty()) throw InvalidParam("empty object");
  const Factors& f = E.factors();
  for (const auto& e : E.elements)
    if (e.op.factors() != f) throw InvalidParam("object elements carry different factors");
  const Names all = join(join(cone.split.alice, cone.split.bob), cone.split.fiona);
  for (const auto& l : f)
    if (!contains(all, l.name)) throw InvalidParam("factor " + l.name + " is not attributed by the cone split");
  for (const auto& n : all)
    if (!E.elements.front().op.has(n)) throw InvalidParam("cone split names factor " + n + " absent from the object");
  for (const auto& n : join(cone.split.alice_out, cone.split.bob_out))
    if (!E.elements.front().op.has(n)) throw InvalidParam("cone split names factor " + n + " absent from the object");

  auto all_of = [&](auto pred) { return std::all_of(E.elements.begin(), E.elements.end(), pred); };
  bool ok = true;
  switch (cone.variant) {
    case ConeVariant::DPOVM_Bipartite:
      ok = all_of([](const DPOVMElement& e) { return e.index.f < 0 && e.index.y < 0 && e.index.z < 0; });
      break;
    case ConeVariant::DPOVM_TwoPlusF:
      ok = all_of([](const DPOVMElement& e) { return e.index.f >= 0 && e.index.y < 0 && e.index.z < 0; });
      break;
    case ConeVariant::MDCI_Element:
      ok = E.size() == 1;
      break;
    case ConeVariant::MDCI_ElementFamily_F: {
      const OutcomeIndex& i0 = E.elements.front().index;
      ok = all_of([&](const DPOVMElement& e) {
        return e.index.f >= 0 && e.index.y < 0 && e.index.z < 0 && e.index.a == i0.a && e.index.b == i0.b;
      });
      break;
    }
    case ConeVariant::MDCI_TTU: {
      const OutcomeIndex& i0 = E.elements.front().index;
      ok = all_of([&](const DPOVMElement& e) {
        return e.index.f >= 0 && e.index.z >= 0 && e.index.y < 0 && e.index.a == i0.a && e.index.b == i0.b;
      });
      break;
    }
    case ConeVariant::MDCI_TUU: {
      const OutcomeIndex& i0 = E.elements.front().index;
      ok = all_of([&](const DPOVMElement& e) {
        return e.index.f >= 0 && e.index.y >= 0 && e.index.z >= 0 && e.index.a == i0.a;
      });
      break;
    }
    default:
      break;
  }
  if (!ok) throw InvalidParam("object index structure does not match the " + to_string(cone.variant) + " cone");
}

namespace {

using Contrib = std::vector<std::vector<LinearTerm>>;

// HermitianModel plus a record of the auxiliary linear equalities, so that a
// returned decomposition can be rechecked without the solver.
struct Recorder {
  HermitianModel m;
  struct Lin {
    std::vector<LinearTerm> terms;
    LabeledOperator rhs;
  };
  std::vector<Lin> lin;

  void zero_eq(std::vector<LinearTerm> terms, const Factors& f, const std::string& label) {
    LabeledOperator z = LabeledOperator::zero(canonical_sorted(f));
    m.add_equality(terms, z, label);
    lin.push_back({std::move(terms), z});
  }
};

LabeledOperator eval_term(const std::vector<LabeledOperator>& values, const LinearTerm& t) {
  LabeledOperator v = t.trace_over.empty() ? values[t.var] : partial_trace(values[t.var], t.trace_over);
  return t.coef * tensor(v, t.kron);
}

LabeledOperator eval_terms(const std::vector<LabeledOperator>& values, const std::vector<LinearTerm>& ts,
                           const Factors& f) {
  LabeledOperator acc = LabeledOperator::zero(f);
  for (const auto& t : ts) acc += eval_term(values, t);
  return acc;
}

struct Order {
  std::string name;
  bool a_first = true;
};

std::vector<Order> orders_of(ConeVariant v) {
  const bool f = v == ConeVariant::DPOVM_TwoPlusF || v == ConeVariant::MDCI_ElementFamily_F ||
                 v == ConeVariant::Process_TwoPlusF;
  return {{f ? "A<B<F" : "A<B", true}, {f ? "B<A<F" : "B<A", false}};
}

// ---- primal membership decompositions, one causal order at a time ----

void primal_dpovm(Recorder& R, const DPOVM& E, const Order& ord, bool with_f, Contrib& c) {
  const Factors full = E.factors();
  const Factors F1 = pick(full, ord.a_first ? E.split.alice : E.split.bob);
  const Factors F2 = pick(full, ord.a_first ? E.split.bob : E.split.alice);
  const Factors FF = pick(full, E.split.fiona);
  const Factors F12 = join(F1, F2);
  std::map<std::pair<int, int>, std::vector<LinearTerm>> fam;
  for (int o = 0; o < E.size(); ++o) {
    const OutcomeIndex& i = E.elements[o].index;
    const int x = R.m.add_psd(full, "X" + ord.name);
    c[o].push_back(R.m.term(x));
    fam[ord.a_first ? std::make_pair(i.a, i.b) : std::make_pair(i.b, i.a)].push_back(R.m.term(x));
  }
  std::map<int, std::vector<LinearTerm>> lvl1;
  for (auto& [k, ts] : fam) {
    if (with_f && !FF.empty()) {
      const int g = R.m.add_free(F12);
      ts.push_back(R.m.extended(g, FF, -1.0));
      R.zero_eq(ts, full, "sum_f " + ord.name);
      lvl1[k.first].push_back(R.m.term(g));
    } else {
      for (const auto& t : ts) lvl1[k.first].push_back(t);
    }
  }
  std::vector<LinearTerm> top;
  for (auto& [k, ts] : lvl1) {
    const int g = R.m.add_free(F1);
    ts.push_back(R.m.extended(g, F2, -1.0));
    R.zero_eq(ts, F12, "second party marginal " + ord.name);
    top.push_back(R.m.term(g));
  }
  const int lam = R.m.add_free({});
  top.push_back(R.m.times(lam, LabeledOperator::identity(F1), -1.0));
  R.zero_eq(top, F1, "proportional to identity " + ord.name);
}

const Names& other_out(const TrustedSplit& s, const Order& ord) { return ord.a_first ? s.bob_out : s.alice_out; }

void primal_element(Recorder& R, const DPOVM& E, const Order& ord, Contrib& c) {
  const Factors full = E.factors();
  const Factors out = pick(full, other_out(E.split, ord));
  const int x = R.m.add_psd(drop(full, names_of(out)), "X" + ord.name);
  c[0].push_back(R.m.extended(x, out));
}

void primal_family_f(Recorder& R, const DPOVM& E, const Order& ord, Contrib& c) {
  const Factors full = E.factors();
  const Factors rest = join(pick(full, other_out(E.split, ord)), pick(full, E.split.fiona));
  std::vector<LinearTerm> ts;
  for (int o = 0; o < E.size(); ++o) {
    const int x = R.m.add_psd(full, "X" + ord.name);
    c[o].push_back(R.m.term(x));
    ts.push_back(R.m.term(x));
  }
  const int g = R.m.add_free(drop(full, names_of(rest)));
  ts.push_back(R.m.extended(g, rest, -1.0));
  R.zero_eq(ts, full, "sum_f " + ord.name);
}

void primal_ttu(Recorder& R, const DPOVM& E, const Order& ord, Contrib& c) {
  const Factors full = E.factors();
  const Factors out = pick(full, other_out(E.split, ord));
  const int g = R.m.add_free(drop(full, names_of(out)));
  std::map<int, std::vector<LinearTerm>> by_z;
  for (int o = 0; o < E.size(); ++o) {
    const int x = R.m.add_psd(full, "X" + ord.name);
    c[o].push_back(R.m.term(x));
    by_z[E.elements[o].index.z].push_back(R.m.term(x));
  }
  for (auto& [z, ts] : by_z) {
    ts.push_back(R.m.extended(g, out, -1.0));
    R.zero_eq(ts, full, "sum_f " + ord.name);
  }
}

void primal_tuu(Recorder& R, const DPOVM& E, const Order& ord, Contrib& c) {
  const Factors full = E.factors();
  const Factors aout = pick(full, E.split.alice_out);
  const Factors ain = drop(full, names_of(aout));
  std::map<std::tuple<int, int, int>, std::vector<LinearTerm>> byz;
  for (int o = 0; o < E.size(); ++o) {
    const OutcomeIndex& i = E.elements[o].index;
    const int x = R.m.add_psd(full, "X" + ord.name);
    c[o].push_back(R.m.term(x));
    byz[{i.b, i.y, i.z}].push_back(R.m.term(x));
  }
  if (ord.a_first) {
    std::map<std::pair<int, int>, int> h;
    for (const auto& [k, ts] : byz) {
      const auto [b, y, z] = k;
      if (!h.count({b, y})) h[{b, y}] = R.m.add_free(full);
    }
    for (auto& [k, ts] : byz) {
      const auto [b, y, z] = k;
      ts.push_back(R.m.term(h[{b, y}], -1.0));
      R.zero_eq(ts, full, "sum_f " + ord.name);
    }
    const int g = R.m.add_free(ain);
    std::map<int, std::vector<LinearTerm>> by_y;
    for (const auto& [k, v] : h) by_y[k.second].push_back(R.m.term(v));
    for (auto& [y, ts] : by_y) {
      ts.push_back(R.m.extended(g, aout, -1.0));
      R.zero_eq(ts, full, "sum_b " + ord.name);
    }
  } else {
    std::map<std::pair<int, int>, int> k_by;
    for (auto& [k, ts] : byz) {
      const auto [b, y, z] = k;
      if (!k_by.count({b, y})) k_by[{b, y}] = R.m.add_free(ain);
      ts.push_back(R.m.extended(k_by[{b, y}], aout, -1.0));
      R.zero_eq(ts, full, "sum_f " + ord.name);
    }
  }
}

SpaceLabel label_of(const ScenarioKind& k, const std::string& n) {
  for (const auto& l : k.factors())
    if (l.name == n) return l;
  throw UnknownFactor("scenario has no factor " + n);
}

Factors labels(const ScenarioKind& k, const Names& ns) {
  Factors f;
  for (const auto& n : ns) f.push_back(label_of(k, n));
  return canonical_sorted(f);
}

// Party names in the order's roles: first (X), second (Y).
struct Roles {
  std::string xi, xo, yi, yo;
};
Roles roles(const Order& ord) {
  return ord.a_first ? Roles{"A_I", "A_O", "B_I", "B_O"} : Roles{"B_I", "B_O", "A_I", "A_O"};
}

void primal_process(Recorder& R, const ScenarioKind& k, const Order& ord, Contrib& c) {
  const Roles p = roles(ord);
  if (!k.has_f()) {
    const int g1 = R.m.add_psd(labels(k, {p.xi, p.xo, p.yi}), "W" + ord.name);
    const int g2 = R.m.add_free(labels(k, {p.xi}));
    R.zero_eq({R.m.traced(g1, {p.yi}), R.m.extended(g2, labels(k, {p.xo}), -1.0)}, labels(k, {p.xi, p.xo}),
              "comb " + ord.name);
    c[0].push_back(R.m.extended(g1, labels(k, {p.yo})));
    return;
  }
  const int w = R.m.add_psd(k.factors(), "W" + ord.name);
  const int g = R.m.add_free(labels(k, {p.xi, p.xo, p.yi}));
  const int g2 = R.m.add_free(labels(k, {p.xi}));
  R.zero_eq({R.m.traced(w, {"F"}), R.m.extended(g, labels(k, {p.yo}), -1.0)}, labels(k, {p.xi, p.xo, p.yi, p.yo}),
            "comb F " + ord.name);
  R.zero_eq({R.m.traced(g, {p.yi}), R.m.extended(g2, labels(k, {p.xo}), -1.0)}, labels(k, {p.xi, p.xo}),
            "comb " + ord.name);
  c[0].push_back(R.m.term(w));
}

void add_primal_order(Recorder& R, const ConeSpec& cone, const DPOVM& E, const Order& ord, Contrib& c) {
  switch (cone.variant) {
    case ConeVariant::DPOVM_Bipartite: primal_dpovm(R, E, ord, false, c); break;
    case ConeVariant::DPOVM_TwoPlusF: primal_dpovm(R, E, ord, true, c); break;
    case ConeVariant::MDCI_Element: primal_element(R, E, ord, c); break;
    case ConeVariant::MDCI_ElementFamily_F: primal_family_f(R, E, ord, c); break;
    case ConeVariant::MDCI_TTU: primal_ttu(R, E, ord, c); break;
    case ConeVariant::MDCI_TUU: primal_tuu(R, E, ord, c); break;
    case ConeVariant::Process_Bipartite:
    case ConeVariant::Process_TwoPlusF: primal_process(R, cone.kind, ord, c); break;
  }
}

LabeledOperator transpose_neg(const LabeledOperator& y) {
  return LabeledOperator(y.factors(), -y.matrix().transpose());
}

CertificationResult solve_robustness(const ConeSpec& cone, const DPOVM& E, const DPOVM& noise,
                                     const CertifyOptions& opt) {
  if (noise.size() != E.size()) throw InvalidParam("noise family does not match the object");
  for (int o = 0; o < E.size(); ++o)
    if (!(noise.elements[o].index == E.elements[o].index) ||
        noise.elements[o].op.factors() != E.elements[o].op.factors())
      throw InvalidParam("noise family does not match the object");

  const auto t0 = std::chrono::steady_clock::now();
  Recorder R;
  const int r = R.m.add_free({}, "r");
  Contrib c(E.size());
  for (const auto& ord : orders_of(cone.variant)) add_primal_order(R, cone, E, ord, c);
  std::vector<int> main_eq;
  for (int o = 0; o < E.size(); ++o) {
    std::vector<LinearTerm> ts = c[o];
    ts.push_back(R.m.times(r, noise.elements[o].op, -1.0));
    main_eq.push_back(R.m.add_equality(ts, E.elements[o].op, "object " + E.elements[o].index.str()));
  }
  R.m.add_objective(r, 1.0);
  HermitianModel::Solution sol = R.m.solve(opt.solver);
  const auto t1 = std::chrono::steady_clock::now();

  CertificationResult res;
  res.cone = cone.variant;
  res.status = sol.raw.status;
  res.iterations = sol.raw.iterations;
  res.solve_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  res.r_free = sol.values[r].matrix()(0, 0).real();
  res.robustness = std::max(0.0, res.r_free);
  if (res.status == SolveStatus::NumericalError)
    throw SolverError(to_string(res.status), "conic solver failed after " + std::to_string(res.iterations) + " iterations");

  WitnessFamily w;
  w.cone = cone;
  w.S.split = E.split;
  for (int o = 0; o < E.size(); ++o)
    w.S.elements.push_back({E.elements[o].index, transpose_neg(sol.multipliers[main_eq[o]])});
  double se = 0.0;
  for (int o = 0; o < E.size(); ++o) se += link_scalar(w.S.elements[o].op, E.elements[o].op).real();
  res.duality_gap = std::abs(res.r_free + se);
  const bool solved = res.status == SolveStatus::Optimal || res.status == SolveStatus::Inaccurate;
  if (solved) {
    if (res.r_free > opt.margin) res.verdict = Verdict::Noncausal;
    else if (res.r_free < -opt.margin) res.verdict = Verdict::Separable;
    else res.verdict = Verdict::Boundary;
    if (opt.verify) w.certificate = check_witness(w, opt.solver).certificate;
    res.witness = std::move(w);
  }
  return res;
}

DPOVM as_family(const LabeledOperator& W) {
  DPOVM d;
  d.elements.push_back({{0, 0}, W});
  return d;
}

}  // namespace

CertificationResult certify(const DPOVM& E, const ConeSpec& cone, const DPOVM& noise, const CertifyOptions& opt) {
  check_shape(cone, E);
  return solve_robustness(cone, E, noise, opt);
}

CertificationResult certify_process(const ProcessMatrix& W, const ProcessMatrix& noise, const CertifyOptions& opt) {
  if (!(noise.kind == W.kind)) throw InvalidParam("noise process is on a different scenario");
  if (W.W.factors() != canonical_sorted(W.kind.factors())) throw InvalidParam("process factors do not match its scenario");
  return solve_robustness(ConeSpec::for_process(W.kind), as_family(W.W), as_family(noise.W), opt);
}

CertificationResult certify_process(const ProcessMatrix& W, const CertifyOptions& opt) {
  return certify_process(W, white_noise_process(W.kind), opt);
}

CertificationResult certify_assemblage(const Assemblage& w, const CertifyOptions& opt) {
  DPOVM E = teleport_assemblage(w);
  const ConeVariant v = w.variant == Assemblage::Variant::TTU ? ConeVariant::MDCI_TTU : ConeVariant::MDCI_TUU;
  return certify(E, ConeSpec::for_dpovm(v, E), uniform_noise(E), opt);
}

double apply_witness(const WitnessFamily& S, const DPOVM& E) {
  if (S.S.size() != E.size()) throw InvalidParam("witness and object have different index sets");
  double v = 0.0;
  for (const auto& s : S.S.elements) {
    const LabeledOperator& e = E.at(s.index);
    if (e.factors() != s.op.factors()) throw DimMismatch("witness and object live on different factors");
    v += link_scalar(s.op, e).real();
  }
  return v;
}

double apply_witness(const WitnessFamily& S, const ProcessMatrix& W) {
  if (!is_process_cone(S.cone.variant)) throw InvalidParam("not a process witness");
  return apply_witness(S, as_family(W.W));
}

bool WitnessReport::ok() const {
  return !orders.empty() && std::all_of(orders.begin(), orders.end(), [](const OrderCheck& o) { return o.ok; });
}

namespace {

// ---- dual-cone decompositions: per element, the non-PSD parts ----

// Free variable on `f` whose partial trace over `over` vanishes.
int traceless_free(Recorder& R, const Factors& f, const Names& over, const std::string& label) {
  const int v = R.m.add_free(f, label);
  R.zero_eq({R.m.traced(v, over)}, drop(f, over), label + " traceless");
  return v;
}

void dual_dpovm(Recorder& R, const DPOVM& S, const Order& ord, bool with_f, Contrib& c) {
  const Factors full = S.factors();
  const Names n1 = names_of(pick(full, ord.a_first ? S.split.alice : S.split.bob));
  const Names n2 = names_of(pick(full, ord.a_first ? S.split.bob : S.split.alice));
  const Names nf = names_of(pick(full, S.split.fiona));
  const int s0 = traceless_free(R, full, names_of(full), "S " + ord.name);
  std::map<int, int> s_a;
  std::map<std::pair<int, int>, int> s_ab;
  for (int o = 0; o < S.size(); ++o) {
    const OutcomeIndex& i = S.elements[o].index;
    const int k1 = ord.a_first ? i.a : i.b, k2 = ord.a_first ? i.b : i.a;
    c[o].push_back(R.m.term(s0));
    const Names over1 = join(n2, with_f ? nf : Names{});
    if (!over1.empty()) {
      if (!s_a.count(k1)) s_a[k1] = traceless_free(R, full, over1, "S_first " + ord.name);
      c[o].push_back(R.m.term(s_a[k1]));
    }
    if (with_f && !nf.empty()) {
      if (!s_ab.count({k1, k2})) s_ab[{k1, k2}] = traceless_free(R, full, nf, "S_pair " + ord.name);
      c[o].push_back(R.m.term(s_ab[{k1, k2}]));
    }
  }
}

void dual_family_f(Recorder& R, const DPOVM& S, const Order& ord, Contrib& c) {
  const Factors full = S.factors();
  const Names over = join(names_of(pick(full, other_out(S.split, ord))), names_of(pick(full, S.split.fiona)));
  if (over.empty()) return;
  const int s0 = traceless_free(R, full, over, "S " + ord.name);
  for (int o = 0; o < S.size(); ++o) c[o].push_back(R.m.term(s0));
}

void dual_ttu(Recorder& R, const DPOVM& S, const Order& ord, Contrib& c) {
  const Factors full = S.factors();
  const Names out = names_of(pick(full, other_out(S.split, ord)));
  std::map<int, int> s_z;
  for (int o = 0; o < S.size(); ++o) {
    const int z = S.elements[o].index.z;
    if (!s_z.count(z)) s_z[z] = R.m.add_free(full, "S_z " + ord.name);
    c[o].push_back(R.m.term(s_z[z]));
  }
  std::vector<LinearTerm> ts;
  for (const auto& [z, v] : s_z) ts.push_back(R.m.traced(v, out));
  R.zero_eq(ts, drop(full, out), "sum_z " + ord.name);
}

void dual_tuu(Recorder& R, const DPOVM& S, const Order& ord, Contrib& c) {
  const Factors full = S.factors();
  const Names aout = names_of(pick(full, S.split.alice_out));
  std::map<std::tuple<int, int, int>, int> s_byz;
  for (int o = 0; o < S.size(); ++o) {
    const OutcomeIndex& i = S.elements[o].index;
    auto key = std::make_tuple(i.b, i.y, i.z);
    if (!s_byz.count(key)) s_byz[key] = R.m.add_free(full, "S_byz " + ord.name);
    c[o].push_back(R.m.term(s_byz[key]));
  }
  std::map<std::pair<int, int>, std::vector<LinearTerm>> by;
  if (ord.a_first) {
    std::map<int, int> s_y;
    for (const auto& [k, v] : s_byz) {
      const auto [b, y, z] = k;
      if (!s_y.count(y)) s_y[y] = R.m.add_free(full, "S_y " + ord.name);
      by[{b, y}].push_back(R.m.term(v));
    }
    for (auto& [k, ts] : by) {
      ts.push_back(R.m.term(s_y[k.second], -1.0));
      R.zero_eq(ts, full, "sum_z " + ord.name);
    }
    std::vector<LinearTerm> ts;
    for (const auto& [y, v] : s_y) ts.push_back(R.m.traced(v, aout));
    R.zero_eq(ts, drop(full, aout), "sum_y " + ord.name);
  } else {
    for (const auto& [k, v] : s_byz) {
      const auto [b, y, z] = k;
      by[{b, y}].push_back(R.m.traced(v, aout));
    }
    for (auto& [k, ts] : by) R.zero_eq(ts, drop(full, aout), "sum_z " + ord.name);
  }
}

// Returns the operator the PSD part is matched against (S, or a marginal of
// it for the bipartite process cone).
LabeledOperator dual_process(Recorder& R, const ScenarioKind& k, const LabeledOperator& S, const Order& ord,
                             Contrib& c) {
  const Roles p = roles(ord);
  if (!k.has_f()) {
    const int t = R.m.add_free(labels(k, {p.xi, p.xo}), "T " + ord.name);
    R.zero_eq({R.m.traced(t, {p.xo})}, labels(k, {p.xi}), "T traceless " + ord.name);
    c[0].push_back(R.m.extended(t, labels(k, {p.yi})));
    return partial_trace(S, {p.yo});
  }
  const int t = R.m.add_free(labels(k, {p.xi, p.xo, p.yi, p.yo}), "T " + ord.name);
  const int u = R.m.add_free(labels(k, {p.xi, p.xo}), "U " + ord.name);
  R.zero_eq({R.m.traced(t, {p.yo}), R.m.extended(u, labels(k, {p.yi}), -1.0)}, labels(k, {p.xi, p.xo, p.yi}),
            "T marginal " + ord.name);
  R.zero_eq({R.m.traced(u, {p.xo})}, labels(k, {p.xi}), "U traceless " + ord.name);
  c[0].push_back(R.m.extended(t, labels(k, {"F"})));
  return S;
}

OrderCheck check_order(const WitnessFamily& W, const Order& ord, const SolverOptions& opt, double tol,
                       std::vector<NamedOperator>& cert) {
  const DPOVM& S = W.S;
  double scale = 1.0;
  for (const auto& e : S.elements)
    scale = std::max(scale, Eigen::SelfAdjointEigenSolver<CMatrix>(e.op.matrix(), Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .cwiseAbs()
                                .maxCoeff());
  tol *= scale;
  OrderCheck chk;
  chk.order = ord.name;
  if (W.cone.variant == ConeVariant::MDCI_Element) {
    const Names out = names_of(pick(S.factors(), other_out(W.cone.split, ord)));
    LabeledOperator m = partial_trace(S.elements[0].op, out);
    chk.min_eigenvalue = psd_check(0.5 * (m + m.adjoint())).min_eigenvalue;
    chk.margin = chk.min_eigenvalue;
    chk.linear_residual = hermiticity_residual(S.elements[0].op);
    chk.ok = chk.min_eigenvalue >= -tol && chk.linear_residual <= tol;
    cert.push_back({"marginal " + ord.name, S.elements[0].index, m});
    return chk;
  }

  Recorder R;
  const int t = R.m.add_free({}, "t");
  Contrib c(S.size());
  std::vector<LabeledOperator> target;
  switch (W.cone.variant) {
    case ConeVariant::DPOVM_Bipartite: dual_dpovm(R, S, ord, false, c); break;
    case ConeVariant::DPOVM_TwoPlusF: dual_dpovm(R, S, ord, true, c); break;
    case ConeVariant::MDCI_ElementFamily_F: dual_family_f(R, S, ord, c); break;
    case ConeVariant::MDCI_TTU: dual_ttu(R, S, ord, c); break;
    case ConeVariant::MDCI_TUU: dual_tuu(R, S, ord, c); break;
    case ConeVariant::Process_Bipartite:
    case ConeVariant::Process_TwoPlusF:
      target.push_back(dual_process(R, W.cone.kind, S.elements[0].op, ord, c));
      break;
    default: break;
  }
  if (target.empty())
    for (const auto& e : S.elements) target.push_back(e.op);
  std::vector<int> psd;
  for (int o = 0; o < S.size(); ++o) {
    const Factors& f = target[o].factors();
    psd.push_back(R.m.add_psd(f, "P " + ord.name));
    std::vector<LinearTerm> ts = c[o];
    ts.push_back(R.m.term(psd.back()));
    ts.push_back(R.m.times(t, LabeledOperator::identity(f)));
    R.m.add_equality(ts, target[o], "witness " + S.elements[o].index.str());
  }
  R.m.add_objective(t, -1.0);
  HermitianModel::Solution sol = R.m.solve(opt);
  chk.margin = sol.values[t].matrix()(0, 0).real();

  // Recheck from the returned non-PSD parts only.
  chk.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int o = 0; o < S.size(); ++o) {
    const Factors& f = target[o].factors();
    LabeledOperator lin = eval_terms(sol.values, c[o], f);
    LabeledOperator p = target[o] - lin;
    chk.min_eigenvalue = std::min(chk.min_eigenvalue, psd_check(0.5 * (p + p.adjoint())).min_eigenvalue);
    cert.push_back({"psd " + ord.name, S.elements[o].index, p});
    cert.push_back({"linear " + ord.name, S.elements[o].index, lin});
  }
  for (const auto& l : R.lin)
    chk.linear_residual = std::max(chk.linear_residual, max_abs_diff(eval_terms(sol.values, l.terms, l.rhs.factors()), l.rhs));
  const bool solved = sol.raw.status == SolveStatus::Optimal || sol.raw.status == SolveStatus::Inaccurate;
  chk.ok = solved && chk.min_eigenvalue >= -tol && chk.linear_residual <= tol;
  return chk;
}

}  // namespace

WitnessReport check_witness(const WitnessFamily& S, const SolverOptions& opt, double tol) {
  if (S.S.elements.empty()) throw InvalidParam("empty witness");
  if (!is_process_cone(S.cone.variant)) check_shape(S.cone, S.S);
  WitnessReport rep;
  for (const auto& ord : orders_of(S.cone.variant)) rep.orders.push_back(check_order(S, ord, opt, tol, rep.certificate));
  return rep;
}

WitnessReport verify_witness(const WitnessFamily& S, const SolverOptions& opt, double tol) {
  WitnessReport rep = check_witness(S, opt, tol);
  if (!rep.ok()) {
    std::string msg = "no dual-cone decomposition:";
    for (const auto& o : rep.orders)
      msg += " " + o.order + " (min eigenvalue " + std::to_string(o.min_eigenvalue) + ", linear residual " +
             std::to_string(o.linear_residual) + ")";
    throw NotAWitness(msg);
  }
  return rep;
}

WitnessFamily qs_witness() {
  const double u = (std::sqrt(6.0) + 2.0) / 3.0, v = std::sqrt(6.0) - 2.0;
  const Factors ab = {{"At_O", 2}, {"Bt_O", 2}};
  auto ket = [&](double c01, double c10) {
    CVector k = CVector::Zero(4);
    k(1) = c01;
    k(2) = c10;
    return LabeledKet(ab, k).projector();
  };
  auto proj = [&](int i) {
    CVector k = CVector::Zero(4);
    k(i) = 1.0;
    return LabeledKet(ab, k).projector();
  };
  const LabeledOperator zero = LabeledOperator::zero(ab);
  // Index 0 of the computational pair is |00>, 1 is |01>, 2 is |10>.
  const LabeledOperator s_a0 = (u - v) * (proj(1) - proj(0));
  const LabeledOperator s_b0 = (u - v) * (proj(2) - proj(0));

  WitnessFamily w;
  w.cone.variant = ConeVariant::DPOVM_TwoPlusF;
  w.cone.split = infer_split(ab);
  w.cone.n_a = w.cone.n_b = w.cone.n_f = 2;
  w.S.split = w.cone.split;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int f = 0; f < 2; ++f) {
        const double sign = f == 0 ? -1.0 : 1.0;  // f = 0 is the "+" outcome
        LabeledOperator pab, pba;
        if (a == 0 && b == 0) {
          pab = ket(std::sqrt(v), sign * std::sqrt(u));
          pba = ket(std::sqrt(u), sign * std::sqrt(v));
        } else if (a == 0 && b == 1) {
          pab = (u - v) * proj(0);
          pba = (u - v) * proj(1);
        } else if (a == 1 && b == 0) {
          pab = (u - v) * proj(2);
          pba = (u - v) * proj(0);
        } else {
          pab = zero;
          pba = zero;
        }
        const LabeledOperator lab = a == 0 ? s_a0 : zero;
        const LabeledOperator lba = b == 0 ? s_b0 : zero;
        const OutcomeIndex idx{a, b, f};
        w.S.elements.push_back({idx, pab + lab});
        w.certificate.push_back({"psd A<B<F", idx, pab});
        w.certificate.push_back({"linear A<B<F", idx, lab});
        w.certificate.push_back({"psd B<A<F", idx, pba});
        w.certificate.push_back({"linear B<A<F", idx, lba});
      }
  return w;
}

ScanResult threshold_scan(const std::function<CertificationResult(double)>& probe, double r_lo, double r_hi,
                          const ScanOptions& opt) {
  if (!(r_lo < r_hi)) throw InvalidBracket("scan bracket must satisfy r_lo < r_hi");
  ScanResult res;
  auto run = [&](double r) {
    CertificationResult c = probe(r);
    res.probes.push_back({r, c.robustness, c.verdict, c.status});
    if (c.status != SolveStatus::Optimal && c.status != SolveStatus::Inaccurate)
      throw SolverError(to_string(c.status), "solver failed at r = " + std::to_string(r));
    return c;
  };
  if (run(r_lo).robustness <= opt.margin)
    throw InvalidBracket("robustness at r_lo = " + std::to_string(r_lo) + " is not above the margin");
  if (run(r_hi).robustness > opt.margin)
    throw InvalidBracket("robustness at r_hi = " + std::to_string(r_hi) + " is above the margin");
  double lo = r_lo, hi = r_hi;
  while (hi - lo > opt.width) {
    const double mid = 0.5 * (lo + hi);
    if (run(mid).r_free > opt.bisect_margin) lo = mid;
    else hi = mid;
  }
  res.lo = lo;
  res.hi = hi;
  res.threshold = 0.5 * (lo + hi);
  return res;
}

DPOVM qs_dpovm(double r) {
  SwitchDevices d = qs_instruments();
  return induce_dpovm(depolarized_switch(r), d.alice, d.bob, d.fiona.as_instrument("fiona"));
}

DPOVM feix_dpovm(double r, double xi) {
  auto [alice, bob] = feix_instruments(xi);
  return induce_dpovm(depolarized_feix(r), alice, bob);
}

Assemblage qs_ttu_assemblage(double r) { return ttu_assemblage(depolarized_switch(r), {plus_minus_povm()}); }

Assemblage qs_tuu_assemblage(double r) {
  return tuu_assemblage(depolarized_switch(r), switch_bob_instruments(), {plus_minus_povm()});
}

}  // namespace causalcert
