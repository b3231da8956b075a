#pragma once

#include <string>
#include <utility>
#include <vector>

#include "causalcert/hilbert.hpp"
#include "causalcert/process.hpp"

namespace causalcert {

// Family of CP-map Choi matrices on inputs (x) outputs. Trusted ancillas are
// listed among the inputs.
struct Instrument {
  std::string role;
  Factors inputs;
  Factors outputs;
  std::vector<LabeledOperator> elements;

  Factors factors() const;
  Names output_names() const;
  int size() const { return static_cast<int>(elements.size()); }
};

struct POVM {
  Factors space;
  std::vector<LabeledOperator> elements;

  Instrument as_instrument(std::string role = "povm") const;
  int size() const { return static_cast<int>(elements.size()); }
};

struct InstrumentReport {
  std::vector<double> psd_residual;  // max(0, -lambda_min) per element
  double tp_residual = 0.0;
  bool ok = true;
};

InstrumentReport validate_instrument(const Instrument& I, double tol = 1e-9);
InstrumentReport validate_povm(const POVM& p, double tol = 1e-9);

// Element 0 is the entangled projection (x) identity channel; element 1 its
// product-form TP completion.
std::pair<Instrument, Instrument> teleport_instruments(const ScenarioKind& kind);

struct SwitchDevices {
  Instrument alice;
  Instrument bob;
  POVM fiona;
};
// Computational-basis measurement on the input, identity channel from the
// ancilla to the output; Fiona measures in the +/- basis.
SwitchDevices qs_instruments();
// Bob's two projective instruments (y = 0: computational, y = 1: +/-).
std::vector<Instrument> switch_bob_instruments();
POVM plus_minus_povm(const std::string& factor = "F");
POVM trivial_povm(const SpaceLabel& space);

std::pair<Instrument, Instrument> feix_instruments(double xi = 0.01);

// M_a = sum_x |x><x|^{ancilla} (x) M_{a|x}
Instrument classical_embedding(const std::vector<Instrument>& families, const std::string& ancilla);

struct MdciReport {
  std::vector<double> residual;  // per element: Tr_out M - (Tr_out M)_{tilde_out} replaced
  bool ok = true;
};
// Checks Tr_{outputs} M_a = M_a^{rest} (x) 1^{tilde_out} for every element.
MdciReport mdci_check(const Instrument& I, const Names& tilde_out, double tol = 1e-9);

struct QuantumInputSet {
  Factors space;
  std::vector<LabeledOperator> states;
  std::vector<LabeledOperator> dual;  // sum_x Tr[D_x^T s] rho_x = s

  int size() const { return static_cast<int>(states.size()); }
};

// d^2 pure states: the qubit quartet {|0>,|1>,|+>,|+i>} and its tensor powers
// for d = 2^k; other d use {|i>, (|i>+|j>)/sqrt2, (|i>+i|j>)/sqrt2}.
QuantumInputSet tomo_input_set(int dim, const std::string& factor);
// Input set on a group of factors from per-factor sets.
QuantumInputSet product_input_set(const QuantumInputSet& a, const QuantumInputSet& b);
// Builds the dual frame from the Gram pseudoinverse; FrameError when the
// states do not span the Hermitian operators.
QuantumInputSet make_input_set(std::vector<LabeledOperator> states);
// Max entry residual of the reconstruction identity over a Hermitian basis.
double frame_residual(const QuantumInputSet& s);

}  // namespace causalcert
