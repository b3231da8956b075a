#include <benchmark/benchmark.h>

#include "causalcert/certification.hpp"
#include "causalcert/dpovm.hpp"
#include "causalcert/random.hpp"

using namespace causalcert;

namespace {

void BM_LinkProduct(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(7);
  LabeledOperator m = random_hermitian({{"A_I", d}, {"A_O", d}, {"B_I", d}}, rng);
  LabeledOperator n = random_hermitian({{"A_O", d}, {"B_I", d}, {"B_O", d}}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(link_product(m, n));
}
BENCHMARK(BM_LinkProduct)->Arg(2)->Arg(3)->Arg(4);

void BM_PartialTrace(benchmark::State& state) {
  LabeledOperator w = quantum_switch().W;
  for (auto _ : state) benchmark::DoNotOptimize(partial_trace(w, {"A_O", "F"}));
}
BENCHMARK(BM_PartialTrace);

void BM_CheckProcess(benchmark::State& state) {
  ProcessMatrix w = quantum_switch();
  for (auto _ : state) benchmark::DoNotOptimize(check_process(w.W, w.kind));
}
BENCHMARK(BM_CheckProcess);

void BM_InduceSwitchDpovm(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(qs_dpovm(0.0));
}
BENCHMARK(BM_InduceSwitchDpovm);

void BM_CertifySwitchDpovm(benchmark::State& state) {
  DPOVM E = qs_dpovm(0.0);
  ConeSpec cone = ConeSpec::for_dpovm(ConeVariant::DPOVM_TwoPlusF, E);
  DPOVM noise = uniform_noise(E);
  for (auto _ : state) benchmark::DoNotOptimize(certify(E, cone, noise));
}
BENCHMARK(BM_CertifySwitchDpovm)->Unit(benchmark::kMillisecond);

void BM_CertifyFeixProcess(benchmark::State& state) {
  ProcessMatrix w = feix_process(feix_q(), feix_epsilon());
  for (auto _ : state) benchmark::DoNotOptimize(certify_process(w));
}
BENCHMARK(BM_CertifyFeixProcess)->Unit(benchmark::kMillisecond);

void BM_CertifySwitchProcess(benchmark::State& state) {
  ProcessMatrix w = depolarized_switch(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(certify_process(w));
}
BENCHMARK(BM_CertifySwitchProcess)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_VerifyHandWitness(benchmark::State& state) {
  WitnessFamily s = qs_witness();
  for (auto _ : state) benchmark::DoNotOptimize(verify_witness(s));
}
BENCHMARK(BM_VerifyHandWitness)->Unit(benchmark::kMillisecond);

void BM_ConicMinEigenvalue(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(9);
  LabeledOperator h = random_hermitian({{"A_I", n}}, rng);
  ConicProblem p;
  p.blocks = {n};
  p.num_free = 1;
  p.c_free = {{0, -1.0}};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      ConicRow r;
      r.psd = {{0, i, j, 1.0}};
      if (i == j) r.free = {{0, 1.0}};
      r.rhs = h.matrix()(i, j).real();
      p.rows.push_back(r);
    }
  for (auto _ : state) benchmark::DoNotOptimize(solve_conic(p));
}
BENCHMARK(BM_ConicMinEigenvalue)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
