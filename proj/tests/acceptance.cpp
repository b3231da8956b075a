// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "causalcert/certification.hpp"
#include "causalcert/dpovm.hpp"
#include "causalcert/random.hpp"
#include "oracles.hpp"

using namespace causalcert;
namespace cat = causalcert::catalog;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const double kQs = 2.0 - 2.0 * std::sqrt(2.0 / 3.0);
const SpaceLabel kAI{"A_I", 2}, kAO{"A_O", 2}, kBI{"B_I", 2}, kBO{"B_O", 2};
const SpaceLabel kTAI{"At_I", 2}, kTBI{"Bt_I", 2};

double scan_threshold(const std::string& name) {
  cat::ScenarioConfig cfg;
  cfg.name = name;
  const cat::ScenarioInfo& in = cat::info(name);
  return cat::scan(cfg, in.r_lo, in.r_hi).threshold;
}

Outcome qs_scan() {
  const double t = scan_threshold("qs-sdiqi");
  return {std::abs(t - kQs) <= 0.002, "threshold " + fmt("%.4f", t) + ", expected " + fmt("%.5f", kQs) + " +- 0.002"};
}

Outcome hand_witness() {
  const WitnessFamily S = qs_witness();
  bool ok = true;
  std::string orders;
  try {
    WitnessReport rep = verify_witness(S);
    ok = rep.ok();
    for (const auto& o : rep.orders) orders += " " + o.order + (o.ok ? " ok" : " FAIL");
  } catch (const NotAWitness& e) {
    ok = false;
    orders = std::string(" ") + e.what();
  }
  const DPOVM E = qs_dpovm(0.0);
  const double se = apply_witness(S, E), sn = apply_witness(S, uniform_noise(E));
  const bool values = std::abs(se + kQs) <= 1e-8 && std::abs(sn - 1.0) <= 1e-8;
  return {ok && values, "S*E " + fmt("%.10f", se) + ", S*E0 " + fmt("%.10f", sn) + ", orders:" + orders};
}

Outcome feix() {
  const double dd = certify_process(feix_process(feix_q(), feix_epsilon())).robustness;
  const double target = 4.0 / std::sqrt(3.0) - 2.0;
  const double sdi = scan_threshold("feix-sdiqi");
  DPOVM E0 = feix_dpovm(0.0, 0.0);
  const double r0 = certify(E0, ConeSpec::for_dpovm(ConeVariant::DPOVM_Bipartite, E0), uniform_noise(E0)).robustness;
  const bool pass = std::abs(dd - target) <= 1e-3 && std::abs(sdi - 0.113) <= 0.003 && r0 <= 1e-6;
  return {pass, "device-dependent " + fmt("%.5f", dd) + ", trusted-input threshold " + fmt("%.4f", sdi) +
                    ", xi=0 robustness " + fmt("%.2e", r0)};
}

Outcome qs_dd(double& out) {
  out = scan_threshold("qs-dd");
  return {std::abs(out - 1.576) <= 0.01, "threshold " + fmt("%.4f", out) + ", expected 1.576 +- 0.01"};
}

Outcome assemblages(double dd) {
  const double ttu = scan_threshold("qs-ttu"), tuu = scan_threshold("qs-tuu");
  const bool pass = std::abs(ttu - 1.319) <= 0.01 && std::abs(tuu - 0.194) <= 0.01 && tuu <= ttu && ttu <= dd;
  return {pass, "TTU " + fmt("%.4f", ttu) + ", TUU " + fmt("%.4f", tuu) + ", process " + fmt("%.4f", dd)};
}

double teleported_robustness(const ProcessMatrix& W) {
  DPOVM E = teleport_process(W);
  return certify(E, ConeSpec::for_dpovm(ConeVariant::MDCI_Element, E), uniform_noise(E)).robustness;
}

Outcome mdci_soundness() {
  Rng rng(1001);
  const ScenarioKind k = ScenarioKind::bipartite();
  double worst_sep = 0.0;
  for (int t = 0; t < 50; ++t) worst_sep = std::max(worst_sep, teleported_robustness(random_separable_process(k, rng)));
  int found = 0, tried = 0, missed = 0;
  double least_ns = 1e9;
  while (found < 20 && tried < 5000) {
    ++tried;
    ProcessMatrix W = random_valid_process(k, rng);
    if (certify_process(W).robustness <= 1e-6) continue;
    ++found;
    const double r = teleported_robustness(W);
    least_ns = std::min(least_ns, r);
    if (r <= 1e-6) ++missed;
  }
  const bool pass = worst_sep <= 1e-6 && found == 20 && missed == 0;
  return {pass, "separable max " + fmt("%.2e", worst_sep) + " (50), nonseparable min " + fmt("%.2e", least_ns) + " (" +
                    std::to_string(found) + " of " + std::to_string(tried) + " sampled)"};
}

Factors random_factors(const std::vector<std::string>& names, Rng& rng) {
  std::uniform_int_distribution<int> d(1, 3);
  Factors f;
  for (const auto& n : names) f.push_back({n, d(rng)});
  return f;
}

Outcome algebra() {
  Rng rng(1002);
  double comm = 0.0, assoc = 0.0, psd = 0.0, ptr = 0.0, idem = 0.0, oracle_link = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Factors x = random_factors({"A_I"}, rng), y = random_factors({"A_O"}, rng), z = random_factors({"B_I"}, rng),
                  w = random_factors({"B_O"}, rng);
    const LabeledOperator M = random_hermitian({x[0], y[0]}, rng), N = random_hermitian({y[0], z[0]}, rng),
                          P = random_hermitian({z[0], w[0]}, rng);
    const LabeledOperator mn = link_product(M, N);
    comm = std::max(comm, max_abs_diff(mn, link_product(N, M)));
    oracle_link = std::max(oracle_link, oracle::max_abs(mn.matrix() - oracle::link_xyz(M.matrix(), N.matrix(), x[0].dim,
                                                                                        y[0].dim, z[0].dim)));
    assoc = std::max(assoc, max_abs_diff(link_product(mn, P), link_product(M, link_product(N, P))));

    const LabeledOperator A = random_psd({x[0], y[0]}, rng), B = random_psd({y[0], z[0]}, rng);
    const LabeledOperator ab = link_product(A, B);
    const double scale = std::max(1.0, ab.matrix().norm());
    psd = std::max(psd, std::max(0.0, -psd_check(ab, 0.0).min_eigenvalue) / scale);

    const LabeledOperator R = random_hermitian({x[0], y[0], z[0]}, rng);
    const std::vector<int> dims = {x[0].dim, y[0].dim, z[0].dim};
    const oracle::CMatrix ry = oracle::partial_trace(R.matrix(), dims, 1);
    ptr = std::max(ptr, oracle::max_abs(partial_trace(R, {"A_O"}).matrix() - ry));
    ptr = std::max(ptr, max_abs_diff(partial_trace(partial_trace(R, {"A_I"}), {"B_I"}), partial_trace(R, {"A_I", "B_I"})));
    ptr = std::max(ptr, std::abs(partial_trace(R, {"A_I", "A_O", "B_I"}).matrix()(0, 0) - R.trace()));

    const LabeledOperator once = trace_replace(R, {"A_O"});
    idem = std::max(idem, max_abs_diff(trace_replace(once, {"A_O"}), once));
    idem = std::max(idem, max_abs_diff(trace_replace_complement(trace_replace_complement(R, {"B_I"}), {"B_I"}),
                                       trace_replace_complement(R, {"B_I"})));
  }
  const double worst = std::max({comm, assoc, psd, ptr, idem, oracle_link});
  return {worst < 1e-10, "commutativity " + fmt("%.1e", std::max(comm, oracle_link)) + ", associativity " +
                             fmt("%.1e", assoc) + ", PSD closure " + fmt("%.1e", psd) + ", partial trace " +
                             fmt("%.1e", ptr) + ", trace_replace " + fmt("%.1e", idem) + " (1000 cases each)"};
}

Outcome dpovm_normalization() {
  Rng rng(1003);
  std::uniform_int_distribution<int> n(1, 3);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const bool with_f = t % 2 == 1;
    const ScenarioKind k = with_f ? ScenarioKind::two_plus_f() : ScenarioKind::bipartite();
    ProcessMatrix W = t % 4 < 2 ? random_valid_process(k, rng) : random_separable_process(k, rng);
    Instrument a = random_instrument("alice", {kTAI, kAI}, {kAO}, n(rng), rng);
    Instrument b = random_instrument("bob", {kTBI, kBI}, {kBO}, n(rng), rng);
    DPOVM E = with_f ? induce_dpovm(W, a, b, random_instrument("fiona", {{"Ft_I", 2}, {"F", 2}}, {}, n(rng), rng))
                     : induce_dpovm(W, a, b);
    LabeledOperator sum = LabeledOperator::zero(E.factors());
    for (const auto& e : E.elements) sum += e.op;
    worst = std::max(worst, max_abs_diff(sum, LabeledOperator::identity(E.factors())));
  }
  return {worst <= 1e-10, "max deviation from identity " + fmt("%.2e", worst) + " (200 pairs)"};
}

Outcome realize_round_trip() {
  Rng rng(1004);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const ScenarioKind k = ScenarioKind::bipartite();
    ProcessMatrix Wab = random_ordered_process(k, true, rng), Wba = random_ordered_process(k, false, rng);
    // Two outcomes per party keep the realized process at dimension 1024 or below.
    const int na = 2, nb = 2;
    DPOVM Eab = induce_dpovm(Wab, random_instrument("alice", {kTAI, kAI}, {kAO}, na, rng),
                             random_instrument("bob", {kTBI, kBI}, {kBO}, nb, rng));
    DPOVM Eba = induce_dpovm(Wba, random_instrument("alice", {kTAI, kAI}, {kAO}, na, rng),
                             random_instrument("bob", {kTBI, kBI}, {kBO}, nb, rng));
    const double q = u(rng);
    DPOVM E = Eab;
    for (auto& e : E.elements) e.op = q * Eab.at(e.index) + (1.0 - q) * Eba.at(e.index);
    Realization R = realize_separable_dpovm(E, q, Eab, Eba);
    DPOVM back = induce_dpovm(R.W, R.alice, R.bob);
    for (const auto& e : E.elements) worst = std::max(worst, max_abs_diff(back.at(e.index), e.op));
  }
  return {worst <= 1e-8, "max deviation " + fmt("%.2e", worst) + " (50 D-POVMs)"};
}

Outcome correlation_witness() {
  const WitnessFamily S = qs_witness();
  const DPOVM E = qs_dpovm(0.0);
  const std::vector<QuantumInputSet> in = {tomo_input_set(2, "At_O"), tomo_input_set(2, "Bt_O")};
  const double v = witness_value_from_correlations(S.S, in, correlations(E, in));
  const double direct = apply_witness(S, E);
  const bool pass = std::abs(v - direct) <= 1e-6 && std::abs(v + kQs) <= 1e-6;
  return {pass, "from correlations " + fmt("%.8f", v) + ", direct " + fmt("%.8f", direct)};
}

}  // namespace

int main() {
  double dd = 0.0;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"switch trusted-input threshold", qs_scan},
      {"hand-built switch witness", hand_witness},
      {"Feix process values", feix},
      {"switch process-level threshold", [&] { return qs_dd(dd); }},
      {"TTU and TUU thresholds", [&] { return assemblages(dd); }},
      {"teleportation soundness", mdci_soundness},
      {"algebra invariants", algebra},
      {"induced D-POVM normalization", dpovm_normalization},
      {"separable realization round trip", realize_round_trip},
      {"witness from correlations", correlation_witness},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s: %s  [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
