#pragma once

#include <random>
#include <string>

#include "causalcert/hilbert.hpp"
#include "causalcert/instruments.hpp"
#include "causalcert/process.hpp"

namespace causalcert {

using Rng = std::mt19937_64;

CMatrix random_ginibre(int rows, int cols, Rng& rng);
CMatrix random_unitary(int n, Rng& rng);
LabeledOperator random_hermitian(const Factors& f, Rng& rng);
// rank 0 means full rank.
LabeledOperator random_psd(const Factors& f, Rng& rng, int rank = 0);
LabeledOperator random_density(const Factors& f, Rng& rng, int rank = 0);

// Choi operator on in (x) out with Tr_out C = 1^in.
LabeledOperator random_channel(const Factors& in, const Factors& out, Rng& rng);
Instrument random_instrument(const std::string& role, const Factors& inputs, const Factors& outputs, int outcomes,
                             Rng& rng);

// Causally ordered processes built as a chain of random channels with a
// memory system. TwoPlusF kinds put F last.
ProcessMatrix random_ordered_process(const ScenarioKind& kind, bool a_first, Rng& rng);
// q * ordered(A<B) + (1 - q) * ordered(B<A), q uniform.
ProcessMatrix random_separable_process(const ScenarioKind& kind, Rng& rng);
// White noise plus a random traceless direction of the valid span, scaled to
// the fraction `reach` of the largest weight that keeps it PSD.
ProcessMatrix random_valid_process(const ScenarioKind& kind, Rng& rng, double reach = 0.9);

}  // namespace causalcert
