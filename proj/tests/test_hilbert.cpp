#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "causalcert/hilbert.hpp"
#include "causalcert/model.hpp"
#include "causalcert/process.hpp"
#include "causalcert/random.hpp"
#include "oracles.hpp"

using namespace causalcert;

namespace {

const SpaceLabel kAI{"A_I", 2}, kAO{"A_O", 2}, kBI{"B_I", 2}, kBO{"B_O", 2};

LabeledOperator proj(const std::string& n, int i) { return LabeledKet::basis(n, 2, i).projector(); }

std::vector<double> sorted_eigs(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Tensor, IdentityTimesIdentity) {
  LabeledOperator t = tensor(LabeledOperator::identity({kAI}), LabeledOperator::identity({kBI}));
  EXPECT_EQ(t.dim(), 4);
  EXPECT_NEAR(t.trace().real(), 4.0, 1e-15);
  EXPECT_LT(max_abs(t.matrix() - CMatrix::Identity(4, 4)), 1e-15);
}

TEST(Tensor, BasisProjector) {
  LabeledOperator t = tensor(proj("A_I", 0), proj("B_I", 1));
  CMatrix expect = CMatrix::Zero(4, 4);
  expect(1, 1) = 1.0;
  EXPECT_LT(max_abs(t.matrix() - expect), 1e-15);
}

TEST(Tensor, EigenvaluesArePairwiseProducts) {
  Rng rng(11);
  LabeledOperator m = random_hermitian({kAI}, rng), n = random_hermitian({kBI}, rng);
  std::vector<double> em = sorted_eigs(m.matrix()), en = sorted_eigs(n.matrix()), prod;
  for (double a : em)
    for (double b : en) prod.push_back(a * b);
  std::sort(prod.begin(), prod.end());
  std::vector<double> got = sorted_eigs(tensor(m, n).matrix());
  for (size_t i = 0; i < prod.size(); ++i) EXPECT_NEAR(got[i], prod[i], 1e-12);
}

TEST(Tensor, OverlappingNamesThrow) {
  EXPECT_THROW(tensor(LabeledOperator::identity({kAI}), LabeledOperator::identity({kAI})), DuplicateFactor);
}

TEST(Tensor, ResultIsCanonicallyOrdered) {
  LabeledOperator t = tensor(LabeledOperator::identity({kBO}), proj("A_I", 1));
  ASSERT_EQ(t.factors().size(), 2u);
  EXPECT_EQ(t.factors()[0].name, "A_I");
  EXPECT_EQ(t.factors()[1].name, "B_O");
  EXPECT_NEAR(t.matrix()(2, 2).real(), 1.0, 1e-15);
  EXPECT_NEAR(t.matrix()(0, 0).real(), 0.0, 1e-15);
}

TEST(PartialTrace, MaximallyEntangledMarginal) {
  LabeledOperator phi = 0.5 * max_entangled(kAI, kBI);
  LabeledOperator r = partial_trace(phi, {"B_I"});
  EXPECT_LT(max_abs(r.matrix() - 0.5 * CMatrix::Identity(2, 2)), 1e-15);
}

TEST(PartialTrace, ProductState) {
  Rng rng(3);
  LabeledOperator m = random_hermitian({kAI}, rng), n = random_hermitian({kBI, kBO}, rng);
  LabeledOperator r = partial_trace(tensor(m, n), {"B_I", "B_O"});
  EXPECT_LT(max_abs_diff(r, n.trace() * m), 1e-12);
}

TEST(PartialTrace, MatchesIndexSumOracle) {
  Rng rng(5);
  LabeledOperator m = random_hermitian({kAI, kAO, kBI}, rng);
  const std::vector<int> d = {2, 2, 2};
  const Names names = {"A_I", "A_O", "B_I"};
  for (int k = 0; k < 3; ++k)
    EXPECT_LT(oracle::max_abs(partial_trace(m, {names[k]}).matrix() - oracle::partial_trace(m.matrix(), d, k)),
              1e-13);
}

TEST(PartialTrace, FullTraceIsScalar) {
  Rng rng(6);
  LabeledOperator m = random_hermitian({kAI, kBI}, rng);
  LabeledOperator s = partial_trace(m, {"A_I", "B_I"});
  EXPECT_TRUE(s.factors().empty());
  EXPECT_NEAR(std::abs(s.matrix()(0, 0) - m.trace()), 0.0, 1e-13);
}

TEST(PartialTrace, UnknownFactorThrows) {
  EXPECT_THROW(partial_trace(LabeledOperator::identity({kAI}), {"B_O"}), UnknownFactor);
}

TEST(PartialTranspose, ProductCase) {
  Rng rng(7);
  LabeledOperator m = random_hermitian({kAI}, rng), n = random_hermitian({kBI}, rng);
  LabeledOperator nt({kBI}, n.matrix().transpose());
  EXPECT_LT(max_abs_diff(partial_transpose(tensor(m, n), {"B_I"}), tensor(m, nt)), 1e-15);
}

TEST(PartialTranspose, AllFactorsIsFullTranspose) {
  Rng rng(8);
  LabeledOperator m = random_hermitian({kAI, kBI}, rng);
  EXPECT_LT(max_abs(partial_transpose(m, {"A_I", "B_I"}).matrix() - m.matrix().transpose()), 1e-15);
}

TEST(PartialTranspose, EntangledProjectorGivesHalfSwap) {
  LabeledOperator pt = partial_transpose(0.5 * max_entangled(kAI, kBI), {"B_I"});
  std::vector<double> e = sorted_eigs(pt.matrix());
  EXPECT_NEAR(e[0], -0.5, 1e-14);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(e[i], 0.5, 1e-14);
  CMatrix swap = CMatrix::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = swap(1, 2) = swap(2, 1) = 1.0;
  EXPECT_LT(max_abs(pt.matrix() - 0.5 * swap), 1e-15);
}

TEST(PartialTranspose, Involution) {
  Rng rng(9);
  LabeledOperator m = random_hermitian({kAI, kAO, kBI}, rng);
  EXPECT_LT(max_abs_diff(partial_transpose(partial_transpose(m, {"A_O"}), {"A_O"}), m), 1e-15);
  EXPECT_THROW(partial_transpose(m, {"F"}), UnknownFactor);
}

TEST(TraceReplace, IdentityIsFixed) {
  LabeledOperator id = LabeledOperator::identity({kAI, kAO, kBI});
  EXPECT_LT(max_abs_diff(trace_replace(id, {"A_O"}), id), 1e-15);
  EXPECT_LT(max_abs_diff(trace_replace(id, {"A_I", "B_I"}), id), 1e-15);
}

TEST(TraceReplace, ComplementAnnihilatesReplaced) {
  Rng rng(10);
  LabeledOperator m = random_hermitian({kAI, kAO, kBI}, rng);
  LabeledOperator r = trace_replace(m, {"A_O", "B_I"});
  EXPECT_LT(max_abs(trace_replace_complement(r, {"A_O", "B_I"}).matrix()), 1e-14);
  EXPECT_NEAR(std::abs(r.trace() - m.trace()), 0.0, 1e-13);
  EXPECT_THROW(trace_replace(m, {"B_O"}), UnknownFactor);
}

TEST(TraceReplace, SwitchSatisfiesAliceOutputConstraint) {
  const LabeledOperator W = quantum_switch().W;
  LabeledOperator r = apply_replace_chain(W, {{{"B_I", "B_O", "F"}, false}, {{"A_O"}, true}});
  EXPECT_LT(max_abs(r.matrix()), 1e-10);
}

TEST(LinkProduct, IdentityContractionIsPartialTrace) {
  Rng rng(12);
  LabeledOperator m = random_hermitian({kAI, kAO}, rng);
  EXPECT_LT(max_abs_diff(link_product(m, LabeledOperator::identity({kAO})), partial_trace(m, {"A_O"})), 1e-14);
}

TEST(LinkProduct, FullContractionIsBornRule) {
  Rng rng(13);
  LabeledOperator e = random_psd({kAI, kBI}, rng), rho = random_density({kAI, kBI}, rng);
  LabeledOperator s = link_product(e, rho);
  const cplx born = (e.matrix().transpose() * rho.matrix()).trace();
  EXPECT_TRUE(s.factors().empty());
  EXPECT_NEAR(std::abs(s.matrix()(0, 0) - born), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(link_scalar(e, rho) - born), 0.0, 1e-13);
}

TEST(LinkProduct, DisjointIsTensor) {
  Rng rng(14);
  LabeledOperator m = random_hermitian({kAI}, rng), n = random_hermitian({kBO}, rng);
  EXPECT_LT(max_abs_diff(link_product(m, n), tensor(m, n)), 1e-15);
}

TEST(LinkProduct, MatchesIndexOracle) {
  Rng rng(15);
  const SpaceLabel x{"A_I", 2}, y{"A_O", 3}, z{"B_I", 2};
  LabeledOperator m = random_hermitian({x, y}, rng), n = random_hermitian({y, z}, rng);
  EXPECT_LT(oracle::max_abs(link_product(m, n).matrix() - oracle::link_xyz(m.matrix(), n.matrix(), 2, 3, 2)), 1e-12);
}

TEST(LinkProduct, AssociativeOnOverlappingTriples) {
  Rng rng(16);
  for (int t = 0; t < 20; ++t) {
    LabeledOperator m = random_psd({kAI, kAO}, rng), n = random_psd({kAO, kBI}, rng), p = random_psd({kBI, kBO}, rng);
    EXPECT_LT(max_abs_diff(link_product(link_product(m, n), p), link_product(m, link_product(n, p))), 1e-12);
  }
}

TEST(LinkProduct, SharedDimensionMismatchThrows) {
  EXPECT_THROW(link_product(LabeledOperator::identity({{"A_O", 2}}), LabeledOperator::identity({{"A_O", 3}})),
               DimMismatch);
}

TEST(MaxEntangled, QubitVectorAndTrace) {
  LabeledKet k = max_entangled_ket(kAI, kBI);
  CVector expect = CVector::Zero(4);
  expect(0) = expect(3) = 1.0;
  EXPECT_LT((k.vector() - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(max_entangled(kAI, kBI).trace().real(), 2.0, 1e-15);
  EXPECT_THROW(max_entangled(kAI, {"B_I", 3}), DimMismatch);
}

TEST(MaxEntangled, TeleportationIdentity) {
  Rng rng(17);
  LabeledOperator m = random_hermitian({kBI}, rng);
  LabeledOperator moved = link_product(max_entangled(kAO, kBI), m);
  EXPECT_LT(max_abs(moved.matrix() - m.matrix()), 1e-14);
  EXPECT_EQ(moved.factors().front().name, "A_O");
}

TEST(MaxEntangled, IdentityChannelIsTracePreserving) {
  LabeledOperator choi = max_entangled(kAI, kAO);
  EXPECT_LT(max_abs_diff(partial_trace(choi, {"A_O"}), LabeledOperator::identity({kAI})), 1e-15);
  EXPECT_TRUE(psd_check(choi).psd);
}

TEST(PsdCheck, Examples) {
  PsdReport r = psd_check(0.25 * LabeledOperator::identity({kAI, kBI}));
  EXPECT_TRUE(r.psd);
  EXPECT_NEAR(r.min_eigenvalue, 0.25, 1e-15);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -0.1;
  EXPECT_FALSE(psd_check(LabeledOperator({kAI}, d), 1e-9).psd);

  CMatrix nh = CMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  EXPECT_THROW(psd_check(LabeledOperator({kAI}, nh)), NotHermitian);

  EXPECT_TRUE(psd_check(feix_process(feix_q(), feix_epsilon()).W).psd);
}

TEST(LabeledOperator, ConstructorPermutesToCanonicalOrder) {
  Rng rng(18);
  LabeledOperator a = random_hermitian({kAI}, rng), b = random_hermitian({kBO}, rng);
  CMatrix kron_ba(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) kron_ba.block(2 * i, 2 * j, 2, 2) = b.matrix()(i, j) * a.matrix();
  LabeledOperator built({kBO, kAI}, kron_ba);
  EXPECT_LT(max_abs_diff(built, tensor(a, b)), 1e-15);
  EXPECT_LT(max_abs(built.matrix_in({"B_O", "A_I"}) - kron_ba), 1e-15);
}

TEST(LabeledOperator, RelabelKeepsEntries) {
  Rng rng(19);
  LabeledOperator m = random_hermitian({kAI, kBI}, rng);
  LabeledOperator r = m.relabeled({{"A_I", "At_I"}, {"B_I", "Bt_I"}});
  EXPECT_EQ(r.factors()[0].name, "At_I");
  EXPECT_LT(max_abs(r.matrix() - m.matrix()), 1e-15);
}

TEST(ComplexEmbedding, IdentityAndPauliY) {
  Eigen::MatrixXd e = embed_complex(CMatrix::Identity(2, 2));
  EXPECT_LT((e - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);

  CMatrix y(2, 2);
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(embed_complex(y));
  EXPECT_NEAR(es.eigenvalues()(0), -1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), -1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(2), 1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(3), 1.0, 1e-14);
  EXPECT_LT(max_abs(unembed_complex(embed_complex(y)) - y), 1e-15);
}

TEST(ComplexEmbedding, SpectrumDoubles) {
  Rng rng(20);
  for (int t = 0; t < 10; ++t) {
    LabeledOperator h = random_hermitian({kAI, kBI}, rng);
    std::vector<double> e = sorted_eigs(h.matrix()), twice;
    for (double v : e) twice.insert(twice.end(), {v, v});
    std::sort(twice.begin(), twice.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(embed_complex(h.matrix()));
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(es.eigenvalues()(i), twice[i], 1e-12);
  }
}

TEST(ComplexEmbedding, NonHermitianDataThrows) {
  CMatrix nh = CMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  EXPECT_THROW(embed_complex(nh), NotHermitian);
}
