#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "causalcert/certification.hpp"
#include "causalcert/dpovm.hpp"
#include "causalcert/random.hpp"

using namespace causalcert;

namespace {

const SpaceLabel kAI{"A_I", 2}, kAO{"A_O", 2}, kBI{"B_I", 2}, kBO{"B_O", 2};
const SpaceLabel kTAI{"At_I", 2}, kTAO{"At_O", 2}, kTBI{"Bt_I", 2}, kTBO{"Bt_O", 2};

DPOVM switch_dpovm() {
  SwitchDevices d = qs_instruments();
  return induce_dpovm(quantum_switch(), d.alice, d.bob, d.fiona.as_instrument("fiona"));
}

// E_{a,b,f} over At_O Bt_O from the switch ket: fix A_I = a, B_I = b, project
// the control on |+> or |->, move A_O and B_O to the ancillas, trace the target.
CMatrix switch_element_oracle(int a, int b, int f) {
  const double s = 1.0 / std::sqrt(2.0);
  auto amp = [&](int ai, int ao, int bi, int bo, int fc, int ft) {
    double v = 0.0;
    if (ai == 0 && ao == bi && bo == ft && fc == 0) v += s;
    if (bi == 0 && bo == ai && ao == ft && fc == 1) v += s;
    return v;
  };
  const double sign = f == 0 ? 1.0 : -1.0;
  CMatrix E = CMatrix::Zero(4, 4);
  for (int ft = 0; ft < 2; ++ft) {
    CVector e = CVector::Zero(4);
    for (int ao = 0; ao < 2; ++ao)
      for (int bo = 0; bo < 2; ++bo) e(2 * ao + bo) = s * (amp(a, ao, b, bo, 0, ft) + sign * amp(a, ao, b, bo, 1, ft));
    E += e * e.adjoint();
  }
  return E;
}

DPOVM marginal_over_f(const DPOVM& E) {
  DPOVM out;
  out.split = E.split;
  for (const auto& e : E.elements) {
    OutcomeIndex k{e.index.a, e.index.b};
    bool found = false;
    for (auto& o : out.elements)
      if (o.index == k) {
        o.op += e.op;
        found = true;
      }
    if (!found) out.elements.push_back({k, e.op});
  }
  return out;
}

Instrument with_ancilla(const std::string& role, const SpaceLabel& anc, const SpaceLabel& in, const SpaceLabel& out,
                        int outcomes, Rng& rng) {
  return random_instrument(role, {anc, in}, {out}, outcomes, rng);
}

}  // namespace

TEST(InduceDpovm, SwitchMatchesKetOracle) {
  DPOVM E = switch_dpovm();
  ASSERT_EQ(E.size(), 8);
  EXPECT_EQ(E.factors(), (Factors{kTAO, kTBO}));
  for (const auto& e : E.elements)
    EXPECT_LT(max_abs(e.op.matrix() - switch_element_oracle(e.index.a, e.index.b, e.index.f)), 1e-12) << e.index.str();
  DPOVMReport r = check_dpovm(E);
  EXPECT_TRUE(r.ok);
  EXPECT_LT(r.normalization_residual, 1e-12);
  EXPECT_LT(max_abs_diff(E.at({0, 0, 0}), qs_dpovm(0.0).at({0, 0, 0})), 1e-14);
}

TEST(InduceDpovm, TeleportedElementIsRescaledProcess) {
  Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    ProcessMatrix W = random_valid_process(ScenarioKind::bipartite(), rng);
    DPOVM E = teleport_process(W);
    LabeledOperator expect =
        0.25 * W.W.relabeled({{"A_I", "At_I"}, {"A_O", "At_O"}, {"B_I", "Bt_I"}, {"B_O", "Bt_O"}});
    EXPECT_LT(max_abs_diff(E.elements[0].op, expect), 1e-14);
    auto [ta, tb] = teleport_instruments(W.kind);
    DPOVM full = induce_dpovm(W, ta, tb);
    EXPECT_LT(max_abs_diff(full.at({0, 0}), expect), 1e-14);
    EXPECT_LT(check_dpovm(full).normalization_residual, 1e-12);
  }
}

TEST(InduceDpovm, OrderedProcessGivesOrderedMarginals) {
  Rng rng(32);
  for (int t = 0; t < 10; ++t) {
    ProcessMatrix W = random_ordered_process(ScenarioKind::bipartite(), true, rng);
    DPOVM E = induce_dpovm(W, with_ancilla("alice", kTAI, kAI, kAO, 3, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
    EXPECT_LT(nosig_marginals(E).a_before_b, 1e-10);
    ProcessMatrix V = random_ordered_process(ScenarioKind::bipartite(), false, rng);
    DPOVM F = induce_dpovm(V, with_ancilla("alice", kTAI, kAI, kAO, 2, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
    EXPECT_LT(nosig_marginals(F).b_before_a, 1e-10);
  }
}

TEST(InduceDpovm, FactorMismatchThrows) {
  SwitchDevices d = qs_instruments();
  EXPECT_THROW(induce_dpovm(quantum_switch(), d.alice, d.bob), InvalidParam);
  ProcessMatrix W = white_noise_process(ScenarioKind::bipartite(2, 3, 2, 2));
  EXPECT_THROW(induce_dpovm(W, d.alice, d.bob), InvalidParam);
}

TEST(InduceDpovm, ClassicalInputsCarryIndices) {
  SwitchDevices d = qs_instruments();
  std::vector<Instrument> bob = switch_bob_instruments();
  DPOVM E = induce_dpovm(quantum_switch(), d.alice, bob, {d.fiona.as_instrument("fiona")});
  EXPECT_EQ(E.size(), 2 * 2 * 2 * 2);
  for (const auto& e : E.elements) {
    EXPECT_GE(e.index.y, 0);
    EXPECT_EQ(e.index.z, 0);
  }
  EXPECT_TRUE(check_dpovm(E).ok);
}

TEST(NosigMarginals, SwitchSignalsBothWays) {
  NosigReport r = nosig_marginals(marginal_over_f(switch_dpovm()));
  EXPECT_GT(r.a_before_b, 1e-3);
  EXPECT_GT(r.b_before_a, 1e-3);
  EXPECT_THROW(nosig_marginals(switch_dpovm()), InvalidParam);
}

TEST(NosigMarginals, ClassicalCausalCorrelations) {
  Rng rng(33);
  ProcessMatrix W = random_ordered_process(ScenarioKind::bipartite(), true, rng);
  std::vector<Instrument> fa, fb;
  for (int x = 0; x < 2; ++x) {
    fa.push_back(random_instrument("alice", {kAI}, {kAO}, 2, rng));
    fb.push_back(random_instrument("bob", {kBI}, {kBO}, 2, rng));
  }
  DPOVM E = induce_dpovm(W, classical_embedding(fa, "At_I"), classical_embedding(fb, "Bt_I"));
  NosigReport r = nosig_marginals(E);
  EXPECT_LT(std::min(r.a_before_b, r.b_before_a), 1e-10);
}

TEST(Probability, UniformElement) {
  Rng rng(34);
  LabeledOperator e = 0.25 * LabeledOperator::identity({kTAO, kTBO});
  EXPECT_NEAR(probability(e, {random_density({kTAO}, rng), random_density({kTBO}, rng)}), 0.25, 1e-15);
  EXPECT_THROW(probability(e, {random_density({kTAO}, rng)}), DimMismatch);
}

TEST(Probability, SwitchElementAgreesWithFullContraction) {
  SwitchDevices d = qs_instruments();
  const LabeledOperator rx = LabeledKet::basis("At_O", 2, 0).projector();
  const LabeledOperator ry = LabeledKet::basis("Bt_O", 2, 0).projector();
  const double direct = probability(switch_dpovm().at({0, 0, 0}), {rx, ry});
  LabeledOperator devices = link_product(tensor(rx, ry), tensor(d.alice.elements[0], d.bob.elements[0]));
  LabeledOperator rest = link_product(quantum_switch().W, d.fiona.elements[0]);
  const double full = link_scalar(devices, rest).real();
  EXPECT_NEAR(direct, full, 1e-12);
  EXPECT_GT(direct, 0.0);
}

TEST(Probability, OutcomesSumToOne) {
  Rng rng(35);
  DPOVM E = switch_dpovm();
  for (int t = 0; t < 10; ++t) {
    const std::vector<LabeledOperator> rho = {random_density({kTAO}, rng), random_density({kTBO}, rng)};
    double total = 0.0;
    for (const auto& e : E.elements) {
      const double p = probability(e.op, rho);
      EXPECT_GE(p, -1e-12);
      EXPECT_LE(p, 1.0 + 1e-12);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(WitnessFromCorrelations, ConstantWitness) {
  DPOVM E = switch_dpovm();
  DPOVM S = E;
  for (auto& e : S.elements) e.op = LabeledOperator::identity(E.factors());
  std::vector<QuantumInputSet> in = {tomo_input_set(2, "At_O"), tomo_input_set(2, "Bt_O")};
  const double v = witness_value_from_correlations(S, in, correlations(E, in));
  EXPECT_NEAR(v, 4.0, 1e-10);
}

TEST(WitnessFromCorrelations, SwitchWitnessFromProbabilities) {
  const WitnessFamily S = qs_witness();
  const DPOVM E = qs_dpovm(0.0);
  std::vector<QuantumInputSet> in = {tomo_input_set(2, "At_O"), tomo_input_set(2, "Bt_O")};
  EXPECT_NEAR(witness_value_from_correlations(S.S, in, correlations(E, in)), -(2.0 - 2.0 * std::sqrt(2.0 / 3.0)), 1e-6);
  const DPOVM N = uniform_noise(E);
  EXPECT_NEAR(witness_value_from_correlations(S.S, in, correlations(N, in)), 1.0, 1e-6);
}

TEST(WitnessFromCorrelations, IncompleteFrameThrows) {
  const DPOVM E = qs_dpovm(0.0);
  QuantumInputSet full = tomo_input_set(2, "At_O");
  QuantumInputSet partial = full;
  partial.states.pop_back();
  partial.dual.pop_back();
  std::vector<QuantumInputSet> in = {partial, tomo_input_set(2, "Bt_O")};
  CorrelationTable P = correlations(E, in);
  EXPECT_THROW(witness_value_from_correlations(qs_witness().S, in, P), FrameError);
}

TEST(Assemblage, TtuTrivialPovmIsMarginal) {
  ProcessMatrix W = quantum_switch();
  Assemblage w = ttu_assemblage(W, {trivial_povm({"F", 2})});
  ASSERT_EQ(w.elements.size(), 1u);
  EXPECT_LT(max_abs_diff(w.elements[0].op, partial_trace(W.W, {"F"})), 1e-15);
}

TEST(Assemblage, TtuSwitchElements) {
  ProcessMatrix W = quantum_switch();
  Assemblage w = ttu_assemblage(W, {plus_minus_povm()});
  ASSERT_EQ(w.elements.size(), 2u);
  for (const auto& e : w.elements) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(e.op.matrix());
    int rank = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 1e-10;
    EXPECT_LE(rank, 2);
  }
  EXPECT_LT(max_abs_diff(w.elements[0].op + w.elements[1].op, partial_trace(W.W, {"F"})), 1e-14);
  EXPECT_TRUE(check_assemblage(w).ok());
  EXPECT_THROW(ttu_assemblage(W, {plus_minus_povm("G")}), InvalidParam);
  EXPECT_THROW(ttu_assemblage(feix_process(feix_q(), feix_epsilon()), {plus_minus_povm()}), InvalidParam);
}

TEST(Assemblage, TuuSwitchIsValid) {
  Assemblage w = tuu_assemblage(quantum_switch(), switch_bob_instruments(), {plus_minus_povm()});
  EXPECT_EQ(w.elements.size(), 8u);
  AssemblageReport r = check_assemblage(w, 1e-10);
  for (const auto& it : r.items) EXPECT_TRUE(it.ok) << it.name << " " << it.residual;
  EXPECT_THROW(tuu_assemblage(quantum_switch(), {qs_instruments().alice}, {plus_minus_povm()}), InvalidParam);
}

TEST(Assemblage, NoisyFamiliesStayValid) {
  for (double r : {0.1, 1.0}) {
    EXPECT_TRUE(check_assemblage(qs_ttu_assemblage(r), 1e-10).ok());
    EXPECT_TRUE(check_assemblage(qs_tuu_assemblage(r), 1e-10).ok());
  }
}

TEST(RealizeSeparable, ProductPovmsRoundTrip) {
  Rng rng(36);
  Instrument ea = random_instrument("a", {kTAI}, {}, 2, rng), eb = random_instrument("b", {kTBI}, {}, 3, rng);
  DPOVM E;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b) E.elements.push_back({{a, b}, tensor(ea.elements[a], eb.elements[b])});
  E.split = infer_split(E.factors());
  ASSERT_TRUE(check_dpovm(E).ok);
  Realization R = realize_separable_dpovm(E, 0.5, E, E);
  DPOVM back = induce_dpovm(R.W, R.alice, R.bob);
  for (const auto& e : E.elements) EXPECT_LT(max_abs_diff(back.at(e.index), e.op), 1e-10);
  EXPECT_TRUE(check_process(R.W.W, R.W.kind, 1e-8).ok());
}

TEST(RealizeSeparable, RandomOrderedRoundTrip) {
  Rng rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    ProcessMatrix Wab = random_ordered_process(ScenarioKind::bipartite(), true, rng);
    ProcessMatrix Wba = random_ordered_process(ScenarioKind::bipartite(), false, rng);
    DPOVM Eab = induce_dpovm(Wab, with_ancilla("alice", kTAI, kAI, kAO, 2, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
    DPOVM Eba = induce_dpovm(Wba, with_ancilla("alice", kTAI, kAI, kAO, 2, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
    const double q = u(rng);
    DPOVM E = Eab;
    for (auto& e : E.elements) e.op = q * Eab.at(e.index) + (1.0 - q) * Eba.at(e.index);
    Realization R = realize_separable_dpovm(E, q, Eab, Eba);
    DPOVM back = induce_dpovm(R.W, R.alice, R.bob);
    double worst = 0.0;
    for (const auto& e : E.elements) worst = std::max(worst, max_abs_diff(back.at(e.index), e.op));
    EXPECT_LT(worst, 1e-8);
  }
}

TEST(RealizeSeparable, SingleOrderKeepsOneControlBlock) {
  Rng rng(38);
  ProcessMatrix Wab = random_ordered_process(ScenarioKind::bipartite(), true, rng);
  ProcessMatrix Wba = random_ordered_process(ScenarioKind::bipartite(), false, rng);
  DPOVM Eab = induce_dpovm(Wab, with_ancilla("alice", kTAI, kAI, kAO, 2, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
  DPOVM Eba = induce_dpovm(Wba, with_ancilla("alice", kTAI, kAI, kAO, 2, rng), with_ancilla("bob", kTBI, kBI, kBO, 2, rng));
  Realization R = realize_separable_dpovm(Eab, 1.0, Eab, Eba);
  DPOVM back = induce_dpovm(R.W, R.alice, R.bob);
  for (const auto& e : Eab.elements) EXPECT_LT(max_abs_diff(back.at(e.index), e.op), 1e-8);

  // A_I carries the control flag alpha as its most significant digit, B_I carries beta.
  const CMatrix m = partial_trace(R.W.W, {"A_O", "B_O"}).matrix();
  const int rp = R.W.kind.d_bo, r = R.W.kind.d_ao, dbi = R.W.kind.d_bi;
  for (int ai = 0; ai < R.W.kind.d_ai; ++ai)
    for (int bi = 0; bi < dbi; ++bi) {
      const double diag = std::abs(m(ai * dbi + bi, ai * dbi + bi));
      if (ai >= rp || bi >= r) {
        EXPECT_LT(diag, 1e-12);
      }
    }
}

TEST(RealizeSeparable, RejectsSignallingParts) {
  DPOVM E = marginal_over_f(switch_dpovm());
  EXPECT_THROW(realize_separable_dpovm(E, 0.5, E, E), InvalidParam);
  EXPECT_THROW(realize_separable_dpovm(E, 1.5, E, E), InvalidParam);
}

TEST(MixAndNoise, UniformNoiseSpreadsTrace) {
  DPOVM E = qs_dpovm(0.0);
  DPOVM N = uniform_noise(E);
  for (const auto& e : N.elements) EXPECT_LT(max_abs_diff(e.op, (1.0 / 8.0) * LabeledOperator::identity(E.factors())), 1e-15);
  DPOVM M = mix(E, N, 1.0);
  EXPECT_LT(max_abs_diff(M.elements[3].op, 0.5 * (E.elements[3].op + N.elements[3].op)), 1e-15);
  EXPECT_LT(max_abs_diff(qs_dpovm(1.0).elements[3].op, M.elements[3].op), 1e-14);
}
