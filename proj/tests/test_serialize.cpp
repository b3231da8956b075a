#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "causalcert/random.hpp"
#include "causalcert/serialize.hpp"

using namespace causalcert;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "causalcert_test_serialize";
  fs::create_directories(d);
  return d / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

Json through_file(const Json& j, const std::string& name) {
  const fs::path p = scratch(name);
  write_json_file(p.string(), j);
  return read_json_file(p.string());
}

void expect_same_elements(const std::vector<DPOVMElement>& a, const std::vector<DPOVMElement>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_EQ(a[i].op.factors(), b[i].op.factors());
    EXPECT_LT(max_abs_diff(a[i].op, b[i].op), 1e-15);
  }
}

}  // namespace

TEST(Serialize, OperatorRoundTrip) {
  Rng rng(71);
  LabeledOperator op = random_hermitian({{"A_I", 2}, {"At_O", 3}}, rng);
  LabeledOperator back = operator_from_json(through_file(to_json(op), "op.json"));
  EXPECT_EQ(back.factors(), op.factors());
  EXPECT_LT(max_abs_diff(back, op), 1e-15);
}

TEST(Serialize, MissingImaginaryPartIsReal) {
  Json j = {{"kind", "operator"},
            {"factors", Json::array({{{"name", "A_I"}, {"dim", 2}}})},
            {"re", Json::array({Json::array({1.0, 0.5}), Json::array({0.5, 2.0})})}};
  LabeledOperator op = operator_from_json(j);
  EXPECT_DOUBLE_EQ(op.matrix()(0, 1).real(), 0.5);
  EXPECT_DOUBLE_EQ(op.matrix().imag().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Serialize, ProcessRoundTrip) {
  for (const ProcessMatrix& w : {quantum_switch(), feix_process(feix_q(), feix_epsilon())}) {
    ProcessMatrix back = process_from_json(through_file(to_json(w), "process.json"));
    EXPECT_EQ(back.kind.has_f(), w.kind.has_f());
    EXPECT_LT(max_abs_diff(back.W, w.W), 1e-15);
  }
}

TEST(Serialize, InstrumentRoundTrip) {
  Rng rng(72);
  Instrument I = random_instrument("alice", {{"A_I", 2}}, {{"A_O", 2}}, 3, rng);
  Instrument back = instrument_from_json(through_file(to_json(I), "instrument.json"));
  EXPECT_EQ(back.role, I.role);
  ASSERT_EQ(back.elements.size(), I.elements.size());
  for (size_t k = 0; k < I.elements.size(); ++k) EXPECT_LT(max_abs_diff(back.elements[k], I.elements[k]), 1e-15);
}

TEST(Serialize, DpovmRoundTrip) {
  DPOVM E = qs_dpovm(0.3);
  DPOVM back = dpovm_from_json(through_file(to_json(E), "dpovm.json"));
  expect_same_elements(back.elements, E.elements);
  EXPECT_EQ(back.split.alice, E.split.alice);
  EXPECT_EQ(back.split.fiona, E.split.fiona);
}

TEST(Serialize, AssemblageRoundTrip) {
  Assemblage w = qs_tuu_assemblage(0.2);
  Assemblage back = assemblage_from_json(through_file(to_json(w), "assemblage.json"));
  EXPECT_EQ(back.variant, w.variant);
  expect_same_elements(back.elements, w.elements);
}

TEST(Serialize, WitnessRoundTrip) {
  WitnessFamily S = qs_witness();
  WitnessFamily back = witness_from_json(through_file(to_json(S), "witness.json"));
  EXPECT_EQ(back.cone.variant, S.cone.variant);
  expect_same_elements(back.S.elements, S.S.elements);
  ASSERT_EQ(back.certificate.size(), S.certificate.size());
  for (size_t k = 0; k < S.certificate.size(); ++k) {
    EXPECT_EQ(back.certificate[k].name, S.certificate[k].name);
    EXPECT_LT(max_abs_diff(back.certificate[k].op, S.certificate[k].op), 1e-15);
  }
  EXPECT_TRUE(verify_witness(back).ok());
}

TEST(Serialize, ProcessWitnessRoundTrip) {
  CertificationResult r = certify_process(feix_process(feix_q(), feix_epsilon()));
  ASSERT_TRUE(r.witness.has_value());
  WitnessFamily back = witness_from_json(to_json(*r.witness));
  EXPECT_TRUE(is_process_cone(back.cone.variant));
  expect_same_elements(back.S.elements, r.witness->S.elements);
}

TEST(Serialize, ResultFields) {
  DPOVM E = qs_dpovm(0.0);
  CertificationResult r = certify(E, ConeSpec::for_dpovm(ConeVariant::DPOVM_TwoPlusF, E), uniform_noise(E));
  Json j = through_file(to_json(r), "result.json");
  for (const char* k : {"cone", "robustness", "status", "duality_gap", "witness", "solve_time_ms"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("cone").get<std::string>(), "DPOVM_TwoPlusF");
  EXPECT_DOUBLE_EQ(j.at("robustness").get<double>(), r.robustness);
  EXPECT_EQ(j.at("status").get<std::string>(), to_string(r.status));
  WitnessFamily back = witness_from_json(j.at("witness"));
  expect_same_elements(back.S.elements, r.witness->S.elements);
}

TEST(Serialize, MalformedFileReportsOffset) {
  const fs::path p = scratch("broken.json");
  write_text(p, "{\"kind\": \"2+F\", \"factors\": [1, 2,");
  try {
    read_json_file(p.string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("broken.json"), std::string::npos);
    EXPECT_NE(msg.find("byte"), std::string::npos);
  }
  EXPECT_THROW(read_json_file(scratch("does_not_exist.json").string()), ParseError);
}

TEST(Serialize, StructuralErrorsAreParseErrors) {
  EXPECT_THROW(operator_from_json(Json{{"factors", Json::array()}}), ParseError);
  Json bad = to_json(LabeledOperator::identity({{"A_I", 2}}));
  bad["re"] = Json::array({Json::array({1.0, 0.0})});
  EXPECT_THROW(operator_from_json(bad), ParseError);
  Json proc = to_json(quantum_switch());
  proc["kind"] = "tripartite";
  EXPECT_THROW(process_from_json(proc), ParseError);
  Json w = to_json(qs_witness());
  w["cone"] = "NotACone";
  EXPECT_THROW(witness_from_json(w), ParseError);
  Json d = to_json(qs_dpovm(0.0));
  d["elements"] = Json::array();
  EXPECT_THROW(dpovm_from_json(d), ParseError);
}
