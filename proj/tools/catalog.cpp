#include "catalog.hpp"

#include <cmath>
#include <limits>

#include "causalcert/dpovm.hpp"
#include "causalcert/instruments.hpp"
#include "causalcert/serialize.hpp"

namespace causalcert::catalog {

const std::vector<ScenarioInfo>& named_scenarios() {
  static const std::vector<ScenarioInfo> table = {
      {"qs-sdiqi", "quantum switch, trusted quantum inputs, (2+F) D-POVM cone", 2.0 - 2.0 * std::sqrt(2.0 / 3.0), 0.002,
       0.0, 1.0},
      {"feix-sdiqi", "Feix process, trusted quantum inputs (xi = 0.01), bipartite D-POVM cone", 0.113, 0.003, 0.0, 0.5},
      {"qs-dd", "quantum switch, device-dependent process cone", 1.576, 0.01, 0.0, 3.0},
      {"qs-ttu", "quantum switch, teleported TTU assemblage", 1.319, 0.01, 0.0, 3.0},
      {"qs-tuu", "quantum switch, teleported TUU assemblage", 0.194, 0.01, 0.0, 1.0},
      {"feix-dd", "Feix process, device-dependent process cone", 4.0 / std::sqrt(3.0) - 2.0, 0.002, 0.0, 1.0},
  };
  return table;
}

const ScenarioInfo& info(const std::string& name) {
  for (const auto& s : named_scenarios())
    if (s.name == name) return s;
  throw ParseError("unknown scenario '" + name + "'");
}

namespace {

struct Device {
  std::string name;
  Instrument instrument;
};

struct Built {
  ProcessMatrix process;
  std::vector<Device> devices;
  std::optional<DPOVM> dpovm;
  ConeVariant cone = ConeVariant::DPOVM_Bipartite;
  std::optional<Assemblage> assemblage;
};

ProcessMatrix feix_base(const ScenarioConfig& c) {
  return feix_process(c.q.value_or(feix_q()), c.epsilon.value_or(feix_epsilon()));
}

Built build_custom(const ScenarioConfig& c, double r) {
  if (c.process_file.empty()) throw ParseError("custom scenario needs --process");
  ProcessMatrix p = process_from_json(read_json_file(c.process_file));
  Built b{validate_process(p.W, p.kind), {}, std::nullopt, ConeVariant::DPOVM_Bipartite, std::nullopt};
  b.process = depolarize(b.process, r);
  if (!c.instruments_file.empty()) {
    const Json j = read_json_file(c.instruments_file);
    for (const char* who : {"alice", "bob", "fiona"})
      if (j.contains(who)) b.devices.push_back({who, instrument_from_json(j.at(who))});
    if (b.devices.size() < 2 || b.devices[0].name != "alice" || b.devices[1].name != "bob")
      throw ParseError(c.instruments_file + ": needs \"alice\" and \"bob\" instruments");
    const bool f = b.devices.size() == 3;
    b.dpovm = f ? induce_dpovm(b.process, b.devices[0].instrument, b.devices[1].instrument, b.devices[2].instrument)
                : induce_dpovm(b.process, b.devices[0].instrument, b.devices[1].instrument);
    b.cone = c.cone ? cone_from_string(*c.cone) : (f ? ConeVariant::DPOVM_TwoPlusF : ConeVariant::DPOVM_Bipartite);
  } else if (c.cone && cone_from_string(*c.cone) == ConeVariant::MDCI_Element) {
    b.dpovm = teleport_process(b.process);
    b.cone = ConeVariant::MDCI_Element;
  } else if (c.cone && !is_process_cone(cone_from_string(*c.cone))) {
    throw InvalidParam("cone " + *c.cone + " needs --instruments");
  }
  return b;
}

Built build(const ScenarioConfig& c, double r) {
  if (!(r >= 0.0)) throw InvalidParam("noise weight r must be non-negative");
  const std::string& n = c.name;
  if (n == "custom") return build_custom(c, r);
  info(n);
  Built b;
  if (n == "qs-sdiqi" || n == "qs-ttu" || n == "qs-tuu" || n == "qs-dd") {
    b.process = depolarized_switch(r);
    if (n == "qs-sdiqi") {
      SwitchDevices d = qs_instruments();
      b.devices = {{"alice", d.alice}, {"bob", d.bob}, {"fiona", d.fiona.as_instrument("fiona")}};
      b.dpovm = qs_dpovm(r);
      b.cone = ConeVariant::DPOVM_TwoPlusF;
    } else if (n == "qs-ttu") {
      b.devices = {{"fiona", plus_minus_povm().as_instrument("fiona")}};
      b.assemblage = qs_ttu_assemblage(r);
    } else if (n == "qs-tuu") {
      std::vector<Instrument> bob = switch_bob_instruments();
      b.devices = {{"bob y=0", bob[0]}, {"bob y=1", bob[1]}, {"fiona", plus_minus_povm().as_instrument("fiona")}};
      b.assemblage = qs_tuu_assemblage(r);
    }
  } else {
    b.process = depolarize(feix_base(c), r);
    if (n == "feix-sdiqi") {
      auto [alice, bob] = feix_instruments(c.xi.value_or(0.01));
      b.devices = {{"alice", alice}, {"bob", bob}};
      b.dpovm = induce_dpovm(b.process, alice, bob);
      b.cone = ConeVariant::DPOVM_Bipartite;
    }
  }
  if (c.cone && b.dpovm) b.cone = cone_from_string(*c.cone);
  return b;
}

void add(ValidityReport& rep, const std::string& name, double residual, double tol) {
  rep.items.push_back({name, residual, residual <= tol});
}

}  // namespace

ValidityReport validate(const ScenarioConfig& cfg) {
  ValidityReport rep;
  const double tol = 1e-8;
  Built b;
  try {
    b = build(cfg, cfg.r.value_or(0.0));
  } catch (const ValidationFailed& e) {
    for (auto it : e.report().items) {
      it.name = "process " + it.name;
      rep.items.push_back(it);
    }
    return rep;
  } catch (const InvalidParam& e) {
    rep.items.push_back({std::string("parameters: ") + e.what(), std::numeric_limits<double>::infinity(), false});
    return rep;
  }
  for (auto it : check_process(b.process.W, b.process.kind, tol).items) {
    it.name = "process " + it.name;
    rep.items.push_back(it);
  }
  for (const auto& d : b.devices) {
    InstrumentReport ir = validate_instrument(d.instrument, tol);
    double psd = 0.0;
    for (double x : ir.psd_residual) psd = std::max(psd, x);
    add(rep, d.name + " PSD", psd, tol);
    add(rep, d.name + " trace preservation", ir.tp_residual, tol);
  }
  if (b.dpovm) {
    DPOVMReport dr = check_dpovm(*b.dpovm, tol);
    double psd = 0.0;
    for (double x : dr.psd_residual) psd = std::max(psd, x);
    add(rep, "D-POVM PSD", psd, tol);
    if (b.cone != ConeVariant::MDCI_Element) add(rep, "D-POVM sums to identity", dr.normalization_residual, tol);
  }
  if (b.assemblage)
    for (auto it : check_assemblage(*b.assemblage, tol).items) {
      it.name = "assemblage " + it.name;
      rep.items.push_back(it);
    }
  return rep;
}

CertificationResult certify_at(const ScenarioConfig& cfg, double r) {
  Built b = build(cfg, r);
  if (b.assemblage) return certify_assemblage(*b.assemblage, cfg.certify);
  if (b.dpovm) return certify(*b.dpovm, ConeSpec::for_dpovm(b.cone, *b.dpovm), uniform_noise(*b.dpovm), cfg.certify);
  return certify_process(b.process, cfg.certify);
}

Family family_at(const ScenarioConfig& cfg, double r) {
  Built b = build(cfg, r);
  if (b.assemblage) {
    DPOVM E = teleport_assemblage(*b.assemblage);
    const ConeVariant v =
        b.assemblage->variant == Assemblage::Variant::TTU ? ConeVariant::MDCI_TTU : ConeVariant::MDCI_TUU;
    return {E, uniform_noise(E), v};
  }
  if (b.dpovm) return {*b.dpovm, uniform_noise(*b.dpovm), b.cone};
  DPOVM w, n;
  w.elements.push_back({{0, 0}, b.process.W});
  n.elements.push_back({{0, 0}, white_noise_process(b.process.kind).W});
  return {w, n, ConeSpec::for_process(b.process.kind).variant};
}

ScanResult scan(const ScenarioConfig& cfg, double r_lo, double r_hi, const ScanOptions& opt) {
  ScenarioConfig c = cfg;
  c.certify.verify = false;
  return threshold_scan([&](double r) { return certify_at(c, r); }, r_lo, r_hi, opt);
}

WitnessRows qs_witness_rows() {
  const WitnessFamily w = qs_witness();
  const DPOVM E = qs_dpovm(0.0);
  return {apply_witness(w, E), apply_witness(w, uniform_noise(E))};
}

}  // namespace causalcert::catalog
