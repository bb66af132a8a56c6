#pragma once

#include "medrec/model/tape.hpp"

namespace medrec {

// Parameter handles for one GRU cell bound to a tape. Update gate z and
// reset gate r use the logistic function, the candidate uses tanh:
//   z = logistic(Wz x + Uz h + bz)
//   r = logistic(Wr x + Ur h + br)
//   n = tanh(Wn x + r .* (Un h) + bn)
//   h' = (1 - z) .* n + z .* h
struct GruVars {
    Var wz, uz, bz;
    Var wr, ur, br;
    Var wn, un, bn;
};

Var gruStep(Tape& tape, const GruVars& g, Var x, Var h);

// One hidden layer with logistic activation, linear output.
struct MlpVars {
    Var w1, b1;
    Var w2, b2;
};

Var mlpForward(Tape& tape, const MlpVars& m, Var x);

// Per-medication probabilities from the hidden state.
struct HeadVars {
    Var weight, bias;
};

Var headForward(Tape& tape, const HeadVars& h, Var x);

}  // namespace medrec
