#include "causalcert/process.hpp"

#include <cmath>
#include <sstream>

namespace causalcert {

ScenarioKind ScenarioKind::bipartite(int ai, int ao, int bi, int bo) {
  return {Variant::Bipartite, ai, ao, bi, bo, 1};
}

ScenarioKind ScenarioKind::two_plus_f(int ai, int ao, int bi, int bo, int f) {
  return {Variant::TwoPlusF, ai, ao, bi, bo, f};
}

Factors ScenarioKind::factors() const {
  Factors f = {{"A_I", d_ai}, {"A_O", d_ao}, {"B_I", d_bi}, {"B_O", d_bo}};
  if (has_f()) f.push_back({"F", d_f});
  return f;
}

bool ScenarioKind::operator==(const ScenarioKind& o) const {
  return variant == o.variant && d_ai == o.d_ai && d_ao == o.d_ao && d_bi == o.d_bi && d_bo == o.d_bo &&
         (!has_f() || d_f == o.d_f);
}

std::string to_string(ScenarioKind::Variant v) {
  return v == ScenarioKind::Variant::Bipartite ? "bipartite" : "2+F";
}

bool ValidityReport::ok() const {
  for (const auto& i : items)
    if (!i.ok) return false;
  return true;
}

const CheckItem* ValidityReport::first_failure() const {
  for (const auto& i : items)
    if (!i.ok) return &i;
  return nullptr;
}

std::string ValidityReport::summary() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& i : items) {
    if (i.ok) continue;
    os << (first ? "" : "; ") << i.name << " violated (residual " << i.residual << ")";
    first = false;
  }
  return first ? "valid" : os.str();
}

namespace {

struct NamedChain {
  std::string name;
  std::vector<ReplaceTerm> chain;
};

std::vector<NamedChain> validity_chains(const ScenarioKind& kind) {
  if (kind.has_f()) {
    return {
        {"_[1-A_O]BF", {{{"A_O"}, true}, {{"B_I", "B_O", "F"}, false}}},
        {"_[1-B_O]AF", {{{"B_O"}, true}, {{"A_I", "A_O", "F"}, false}}},
        {"_[1-A_O][1-B_O]F", {{{"A_O"}, true}, {{"B_O"}, true}, {{"F"}, false}}},
    };
  }
  return {
      {"_[1-A_O]B", {{{"A_O"}, true}, {{"B_I", "B_O"}, false}}},
      {"_[1-B_O]A", {{{"B_O"}, true}, {{"A_I", "A_O"}, false}}},
      {"_[1-A_O][1-B_O]", {{{"A_O"}, true}, {{"B_O"}, true}}},
  };
}

}  // namespace

ValidityReport check_process(const LabeledOperator& W, const ScenarioKind& kind, double tol) {
  if (W.factors() != canonical_sorted(kind.factors()))
    throw InvalidParam("process factors do not match the scenario");
  ValidityReport rep;
  const double herm = hermiticity_residual(W);
  rep.items.push_back({"hermitian", herm, herm <= tol});
  LabeledOperator h = 0.5 * (W + W.adjoint());
  PsdReport psd = psd_check(h, tol);
  rep.items.push_back({"psd", std::max(0.0, -psd.min_eigenvalue), psd.psd});
  const double target = kind.d_ao * kind.d_bo;
  const double tr = std::abs(W.trace() - target);
  rep.items.push_back({"trace", tr, tr <= tol});
  for (const auto& c : validity_chains(kind)) {
    const double res = max_abs(apply_replace_chain(W, c.chain).matrix());
    rep.items.push_back({c.name, res, res <= tol});
  }
  return rep;
}

ProcessMatrix validate_process(const LabeledOperator& W, const ScenarioKind& kind, double tol) {
  ValidityReport rep = check_process(W, kind, tol);
  if (!rep.ok()) throw ValidationFailed(rep);
  return {kind, W};
}

LabeledOperator project_valid(const LabeledOperator& W, const ScenarioKind& kind) {
  // The violating components are images of commuting orthogonal projectors,
  // so the valid span is reached by removing them one after the other.
  LabeledOperator out = W;
  for (const auto& c : validity_chains(kind)) out = out - apply_replace_chain(out, c.chain);
  return out;
}

ProcessMatrix white_noise_process(const ScenarioKind& kind) {
  const Factors f = kind.factors();
  const double d_in = static_cast<double>(kind.d_ai) * kind.d_bi * (kind.has_f() ? kind.d_f : 1);
  return {kind, (1.0 / d_in) * LabeledOperator::identity(f)};
}

ProcessMatrix quantum_switch() {
  const SpaceLabel ai{"A_I", 2}, ao{"A_O", 2}, bi{"B_I", 2}, bo{"B_O", 2}, f{"F", 2}, ft{"Ftarget", 2};
  const double s = 1.0 / std::sqrt(2.0);
  LabeledKet first = tensor(tensor(LabeledKet::basis("A_I", 2, 0), max_entangled_ket(ao, bi)),
                            tensor(max_entangled_ket(bo, ft), LabeledKet::basis("F", 2, 0)));
  LabeledKet second = tensor(tensor(LabeledKet::basis("B_I", 2, 0), max_entangled_ket(bo, ai)),
                             tensor(max_entangled_ket(ao, ft), LabeledKet::basis("F", 2, 1)));
  LabeledKet w = s * first + s * second;
  LabeledOperator W = partial_trace(w.projector(), {"Ftarget"});
  return validate_process(W, ScenarioKind::two_plus_f());
}

ProcessMatrix depolarize(const ProcessMatrix& w, double r) {
  if (!(r >= 0.0)) throw InvalidParam("noise weight r must be non-negative");
  ProcessMatrix noise = white_noise_process(w.kind);
  LabeledOperator W = (1.0 / (1.0 + r)) * (w.W + r * noise.W);
  return {w.kind, W};
}

ProcessMatrix depolarized_switch(double r) {
  if (!(r >= 0.0)) throw InvalidParam("noise weight r must be non-negative");
  return depolarize(quantum_switch(), r);
}

double feix_q() { return std::sqrt(3.0) - 1.0; }
double feix_epsilon() { return 4.0 / std::sqrt(3.0) - 2.0; }

ProcessMatrix feix_process(double q, double epsilon) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParam("q must lie in [0, 1]");
  const double bound = std::sqrt((1.0 - q) * (q + 3.0) / 3.0);
  if (std::abs(1.0 - q + epsilon) > bound + 1e-12)
    throw InvalidParam("|1-q+epsilon| exceeds the positivity bound " + std::to_string(bound));
  CMatrix I = CMatrix::Identity(2, 2), X(2, 2), Y(2, 2), Z(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, cplx(0, -1), cplx(0, 1), 0;
  Z << 1, 0, 0, -1;
  auto pauli4 = [](const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d) {
    CMatrix ab(4, 4), cd(4, 4), out(16, 16);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        ab.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
        cd.block(2 * i, 2 * j, 2, 2) = c(i, j) * d;
      }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.block(4 * i, 4 * j, 4, 4) = ab(i, j) * cd;
    return out;
  };
  CMatrix W = 0.25 * CMatrix::Identity(16, 16) +
              (q / 12.0) * (pauli4(I, X, X, I) + pauli4(I, Y, Y, I) + pauli4(I, Z, Z, I)) +
              ((1.0 - q + epsilon) / 4.0) * pauli4(Z, I, X, Z);
  return validate_process(LabeledOperator(ScenarioKind::bipartite().factors(), W), ScenarioKind::bipartite());
}

ProcessMatrix depolarized_feix(double r) {
  if (!(r >= 0.0)) throw InvalidParam("noise weight r must be non-negative");
  return depolarize(feix_process(feix_q(), feix_epsilon()), r);
}

ProcessMatrix ordered_process_a_first(const LabeledOperator& w_a_bi, int d_bo) {
  LabeledOperator W = tensor(w_a_bi, LabeledOperator::identity({{"B_O", d_bo}}));
  ScenarioKind k = ScenarioKind::bipartite(W.dim_of("A_I"), W.dim_of("A_O"), W.dim_of("B_I"), d_bo);
  return {k, W};
}

ProcessMatrix ordered_process_b_first(const LabeledOperator& w_b_ai, int d_ao) {
  LabeledOperator W = tensor(w_b_ai, LabeledOperator::identity({{"A_O", d_ao}}));
  ScenarioKind k = ScenarioKind::bipartite(W.dim_of("A_I"), d_ao, W.dim_of("B_I"), W.dim_of("B_O"));
  return {k, W};
}

}  // namespace causalcert
