#include "medrec/model/sequence.hpp"

namespace medrec {

Var gruStep(Tape& tape, const GruVars& g, Var x, Var h) {
    Var z = tape.act(tape.addMany({tape.matmul(g.wz, x), tape.matmul(g.uz, h), g.bz}),
                     Activation::Logistic);
    Var r = tape.act(tape.addMany({tape.matmul(g.wr, x), tape.matmul(g.ur, h), g.br}),
                     Activation::Logistic);
    Var n = tape.act(
        tape.addMany({tape.matmul(g.wn, x), tape.hadamard(r, tape.matmul(g.un, h)), g.bn}),
        Activation::Tanh);
    return tape.add(tape.hadamard(tape.oneMinus(z), n), tape.hadamard(z, h));
}

Var mlpForward(Tape& tape, const MlpVars& m, Var x) {
    Var hidden = tape.act(tape.add(tape.matmul(m.w1, x), m.b1), Activation::Logistic);
    return tape.add(tape.matmul(m.w2, hidden), m.b2);
}

Var headForward(Tape& tape, const HeadVars& h, Var x) {
    return tape.act(tape.add(tape.matmul(h.weight, x), h.bias), Activation::Logistic);
}

}  // namespace medrec
