#include "causalcert/serialize.hpp"

#include <fstream>
#include <sstream>

namespace causalcert {

namespace {

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

Json factors_json(const Factors& f) {
  Json a = Json::array();
  for (const auto& l : f) a.push_back({{"name", l.name}, {"dim", l.dim}});
  return a;
}

Json index_json(int v) { return v < 0 ? Json(nullptr) : Json(v); }
int index_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return -1;
  return j.at(key).get<int>();
}

Json names_json(const Names& n) { return Json(n); }
Names names_from(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<Names>();
}

std::vector<DPOVMElement> elements_from(const Json& j) {
  std::vector<DPOVMElement> out;
  for (const auto& e : j.at("elements")) {
    OutcomeIndex i;
    i.a = index_from(e, "a") < 0 ? 0 : index_from(e, "a");
    i.b = index_from(e, "b") < 0 ? 0 : index_from(e, "b");
    i.f = index_from(e, "f");
    i.y = index_from(e, "y");
    i.z = index_from(e, "z");
    out.push_back({i, operator_from_json(e.at("op"))});
  }
  return out;
}

Json elements_json(const std::vector<DPOVMElement>& els) {
  Json a = Json::array();
  for (const auto& e : els) {
    Json x = to_json(e.index);
    x["op"] = to_json(e.op);
    a.push_back(std::move(x));
  }
  return a;
}

ScenarioKind kind_from(const std::string& variant, const Factors& f) {
  auto dim = [&](const std::string& n, bool required) {
    for (const auto& l : f)
      if (l.name == n) return l.dim;
    if (required) throw ParseError("process is missing factor " + n);
    return 1;
  };
  ScenarioKind k;
  if (variant == "bipartite") k = ScenarioKind::bipartite(dim("A_I", true), dim("A_O", true), dim("B_I", true), dim("B_O", true));
  else if (variant == "2+F")
    k = ScenarioKind::two_plus_f(dim("A_I", true), dim("A_O", true), dim("B_I", true), dim("B_O", true), dim("F", true));
  else throw ParseError("unknown process kind '" + variant + "'");
  if (canonical_sorted(f) != canonical_sorted(k.factors())) throw ParseError("process factors do not match kind " + variant);
  return k;
}

Json kind_json(const ScenarioKind& k) {
  return {{"variant", to_string(k.variant)}, {"factors", factors_json(canonical_sorted(k.factors()))}};
}

}  // namespace

Json to_json(const LabeledOperator& op, const std::string& kind) {
  const CMatrix& m = op.matrix();
  Json re = Json::array(), im = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array(), c = Json::array();
    for (int j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(std::move(r));
    im.push_back(std::move(c));
  }
  return {{"kind", kind}, {"factors", factors_json(op.factors())}, {"re", re}, {"im", im}};
}

LabeledOperator operator_from_json(const Json& j) {
  return guarded("operator", [&] {
    Factors f;
    for (const auto& e : j.at("factors")) {
      const int dim = e.at("dim").get<int>();
      if (dim < 1) throw ParseError("factor dimension must be positive");
      f.push_back({e.at("name").get<std::string>(), dim});
    }
    const int d = total_dim(f);
    const Json& re = j.at("re");
    const bool has_im = j.contains("im") && !j.at("im").is_null();
    if (static_cast<int>(re.size()) != d) throw ParseError("operator has " + std::to_string(re.size()) + " rows, expected " + std::to_string(d));
    CMatrix m(d, d);
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(re.at(r).size()) != d) throw ParseError("operator row " + std::to_string(r) + " has the wrong length");
      for (int c = 0; c < d; ++c) {
        const double b = has_im ? j.at("im").at(r).at(c).get<double>() : 0.0;
        m(r, c) = cplx(re.at(r).at(c).get<double>(), b);
      }
    }
    // Stored in the listed factor order; the constructor brings it to canonical order.
    return LabeledOperator(f, m);
  });
}

Json to_json(const ProcessMatrix& w) { return to_json(w.W, to_string(w.kind.variant)); }

ProcessMatrix process_from_json(const Json& j) {
  return guarded("process", [&] {
    LabeledOperator W = operator_from_json(j);
    return ProcessMatrix{kind_from(j.at("kind").get<std::string>(), W.factors()), W};
  });
}

Json to_json(const Instrument& I) {
  Json els = Json::array();
  for (const auto& e : I.elements) els.push_back(to_json(e));
  return {{"role", I.role}, {"factors_in", factors_json(I.inputs)}, {"factors_out", factors_json(I.outputs)},
          {"elements", els}};
}

Instrument instrument_from_json(const Json& j) {
  return guarded("instrument", [&] {
    Instrument I;
    I.role = j.value("role", std::string("instrument"));
    for (const auto& e : j.at("factors_in")) I.inputs.push_back({e.at("name").get<std::string>(), e.at("dim").get<int>()});
    for (const auto& e : j.at("factors_out")) I.outputs.push_back({e.at("name").get<std::string>(), e.at("dim").get<int>()});
    const Factors expect = canonical_sorted(I.factors());
    for (const auto& e : j.at("elements")) {
      I.elements.push_back(operator_from_json(e));
      if (I.elements.back().factors() != expect) throw ParseError("instrument element factors differ from factors_in + factors_out");
    }
    if (I.elements.empty()) throw ParseError("instrument has no elements");
    return I;
  });
}

Json to_json(const OutcomeIndex& i) {
  return {{"a", i.a}, {"b", i.b}, {"f", index_json(i.f)}, {"y", index_json(i.y)}, {"z", index_json(i.z)}};
}

Json to_json(const TrustedSplit& s) {
  return {{"alice", names_json(s.alice)},         {"bob", names_json(s.bob)},
          {"fiona", names_json(s.fiona)},         {"alice_out", names_json(s.alice_out)},
          {"bob_out", names_json(s.bob_out)}};
}

TrustedSplit split_from_json(const Json& j) {
  return guarded("split", [&] {
    return TrustedSplit{names_from(j, "alice"), names_from(j, "bob"), names_from(j, "fiona"),
                        names_from(j, "alice_out"), names_from(j, "bob_out")};
  });
}

Json to_json(const DPOVM& E) { return {{"split", to_json(E.split)}, {"elements", elements_json(E.elements)}}; }

DPOVM dpovm_from_json(const Json& j) {
  return guarded("dpovm", [&] {
    DPOVM E;
    E.elements = elements_from(j);
    if (E.elements.empty()) throw ParseError("D-POVM has no elements");
    E.split = j.contains("split") ? split_from_json(j.at("split")) : infer_split(E.elements.front().op.factors());
    return E;
  });
}

Json to_json(const Assemblage& w) {
  return {{"variant", w.variant == Assemblage::Variant::TTU ? "TTU" : "TUU"},
          {"kind", kind_json(w.kind)},
          {"elements", elements_json(w.elements)}};
}

Assemblage assemblage_from_json(const Json& j) {
  return guarded("assemblage", [&] {
    Assemblage w;
    const std::string v = j.at("variant").get<std::string>();
    if (v != "TTU" && v != "TUU") throw ParseError("unknown assemblage variant '" + v + "'");
    w.variant = v == "TTU" ? Assemblage::Variant::TTU : Assemblage::Variant::TUU;
    const Json& k = j.at("kind");
    Factors f;
    for (const auto& e : k.at("factors")) f.push_back({e.at("name").get<std::string>(), e.at("dim").get<int>()});
    w.kind = kind_from(k.at("variant").get<std::string>(), f);
    w.elements = elements_from(j);
    return w;
  });
}

Json to_json(const WitnessFamily& S) {
  Json cert = Json::array();
  for (const auto& c : S.certificate) {
    Json x = to_json(c.index);
    x["name"] = c.name;
    x["op"] = to_json(c.op);
    cert.push_back(std::move(x));
  }
  Json j = {{"cone", to_string(S.cone.variant)}, {"elements", elements_json(S.S.elements)}, {"certificate", cert}};
  if (is_process_cone(S.cone.variant)) j["kind"] = kind_json(S.cone.kind);
  else j["split"] = to_json(S.cone.split);
  return j;
}

WitnessFamily witness_from_json(const Json& j) {
  return guarded("witness", [&] {
    WitnessFamily S;
    const ConeVariant v = [&] {
      try {
        return cone_from_string(j.at("cone").get<std::string>());
      } catch (const InvalidParam& e) {
        throw ParseError(e.what());
      }
    }();
    S.S.elements = elements_from(j);
    if (S.S.elements.empty()) throw ParseError("witness has no elements");
    if (is_process_cone(v)) {
      const Json& k = j.at("kind");
      Factors f;
      for (const auto& e : k.at("factors")) f.push_back({e.at("name").get<std::string>(), e.at("dim").get<int>()});
      S.cone = ConeSpec::for_process(kind_from(k.at("variant").get<std::string>(), f));
    } else {
      S.S.split = j.contains("split") ? split_from_json(j.at("split")) : infer_split(S.S.elements.front().op.factors());
      try {
        S.cone = ConeSpec::for_dpovm(v, S.S);
      } catch (const InvalidParam& e) {
        throw ParseError(e.what());
      }
    }
    if (j.contains("certificate"))
      for (const auto& c : j.at("certificate")) {
        DPOVMElement e = elements_from(Json{{"elements", Json::array({c})}}).front();
        S.certificate.push_back({c.at("name").get<std::string>(), e.index, e.op});
      }
    return S;
  });
}

Json to_json(const WitnessReport& r) {
  Json orders = Json::array();
  for (const auto& o : r.orders)
    orders.push_back({{"order", o.order},
                      {"margin", o.margin},
                      {"min_eigenvalue", o.min_eigenvalue},
                      {"linear_residual", o.linear_residual},
                      {"ok", o.ok}});
  return {{"ok", r.ok()}, {"orders", orders}};
}

Json to_json(const CertificationResult& r) {
  return {{"cone", to_string(r.cone)},
          {"robustness", r.robustness},
          {"r_free", r.r_free},
          {"verdict", to_string(r.verdict)},
          {"status", to_string(r.status)},
          {"duality_gap", r.duality_gap},
          {"iterations", r.iterations},
          {"witness", r.witness ? to_json(*r.witness) : Json(nullptr)},
          {"solve_time_ms", r.solve_time_ms}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
}

}  // namespace causalcert
