#include "causalcert/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace causalcert {

CMatrix random_ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

CMatrix random_unitary(int n, Rng& rng) {
  Eigen::HouseholderQR<CMatrix> qr(random_ginibre(n, n, rng));
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
  return q;
}

LabeledOperator random_hermitian(const Factors& f, Rng& rng) {
  const int n = total_dim(f);
  CMatrix g = random_ginibre(n, n, rng);
  return LabeledOperator(f, 0.5 * (g + g.adjoint()));
}

LabeledOperator random_psd(const Factors& f, Rng& rng, int rank) {
  const int n = total_dim(f);
  CMatrix g = random_ginibre(n, rank > 0 ? rank : n, rng);
  return LabeledOperator(f, g * g.adjoint());
}

LabeledOperator random_density(const Factors& f, Rng& rng, int rank) {
  LabeledOperator p = random_psd(f, rng, rank);
  return (1.0 / p.trace().real()) * p;
}

namespace {

// (T^{-1/2} (x) 1) X (T^{-1/2} (x) 1) for T = Tr_out sum X.
std::vector<LabeledOperator> normalize_on_inputs(std::vector<LabeledOperator> xs, const Factors& in,
                                                 const Factors& out) {
  Names out_names;
  for (const auto& l : out) out_names.push_back(l.name);
  LabeledOperator t = LabeledOperator::zero(canonical_sorted(in));
  for (const auto& x : xs) t += partial_trace(x, out_names);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(t.matrix());
  CMatrix isq = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                es.eigenvectors().adjoint();
  LabeledOperator k = tensor(LabeledOperator(t.factors(), isq), LabeledOperator::identity(out));
  for (auto& x : xs) x = compose(compose(k, x), k);
  return xs;
}

}  // namespace

LabeledOperator random_channel(const Factors& in, const Factors& out, Rng& rng) {
  Factors all = in;
  all.insert(all.end(), out.begin(), out.end());
  return normalize_on_inputs({random_psd(canonical_sorted(all), rng)}, in, out).front();
}

Instrument random_instrument(const std::string& role, const Factors& inputs, const Factors& outputs, int outcomes,
                             Rng& rng) {
  Factors all = inputs;
  all.insert(all.end(), outputs.begin(), outputs.end());
  std::vector<LabeledOperator> xs;
  for (int k = 0; k < outcomes; ++k) xs.push_back(random_psd(canonical_sorted(all), rng));
  return {role, inputs, outputs, normalize_on_inputs(std::move(xs), inputs, outputs)};
}

ProcessMatrix random_ordered_process(const ScenarioKind& kind, bool a_first, Rng& rng) {
  const SpaceLabel ai{"A_I", kind.d_ai}, ao{"A_O", kind.d_ao}, bi{"B_I", kind.d_bi}, bo{"B_O", kind.d_bo};
  const SpaceLabel m1{"M1", 2}, m2{"M2", 2};
  const SpaceLabel xi = a_first ? ai : bi, xo = a_first ? ao : bo, yi = a_first ? bi : ai, yo = a_first ? bo : ao;
  LabeledOperator rho = random_density({xi, m1}, rng);
  if (!kind.has_f()) {
    LabeledOperator c = random_channel({m1, xo}, {yi}, rng);
    LabeledOperator w = link_product(rho, c);
    return a_first ? ordered_process_a_first(w, kind.d_bo) : ordered_process_b_first(w, kind.d_ao);
  }
  LabeledOperator c1 = random_channel({m1, xo}, {yi, m2}, rng);
  LabeledOperator c2 = random_channel({m2, yo}, {{"F", kind.d_f}}, rng);
  return {kind, link_product(link_product(rho, c1), c2)};
}

ProcessMatrix random_separable_process(const ScenarioKind& kind, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double q = u(rng);
  ProcessMatrix a = random_ordered_process(kind, true, rng);
  ProcessMatrix b = random_ordered_process(kind, false, rng);
  return {kind, q * a.W + (1.0 - q) * b.W};
}

ProcessMatrix random_valid_process(const ScenarioKind& kind, Rng& rng, double reach) {
  const Factors f = canonical_sorted(kind.factors());
  ProcessMatrix noise = white_noise_process(kind);
  LabeledOperator p = project_valid(random_hermitian(f, rng), kind);
  p -= (p.trace().real() / p.dim()) * LabeledOperator::identity(f);
  const double lmin = Eigen::SelfAdjointEigenSolver<CMatrix>(p.matrix(), Eigen::EigenvaluesOnly).eigenvalues()(0);
  const double floor = noise.W.matrix()(0, 0).real();
  const double t = lmin < 0.0 ? reach * floor / -lmin : 1.0;
  return {kind, noise.W + t * p};
}

}  // namespace causalcert
