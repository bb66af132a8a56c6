#include "medrec/model/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "medrec/errors.hpp"

namespace medrec {

Activation activationFromName(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + name + "'");
}

const char* activationName(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Logistic: return "logistic";
        case Activation::Identity: return "identity";
    }
    return "?";
}

int Tape::checked(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw NumericError("tape: dangling variable handle");
    return v.id;
}

Var Tape::push(Eigen::MatrixXd value, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Eigen::MatrixXd& Tape::gradRef(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Var Tape::param(const Eigen::MatrixXd& value, Eigen::MatrixXd* gradSink) {
    Var v = push(value, {});
    nodes_.back().paramGrad = gradSink;
    return v;
}

Var Tape::constant(Eigen::MatrixXd value) { return push(std::move(value), {}); }

Var Tape::row(Var table, int r) {
    int t = checked(table);
    Eigen::MatrixXd v = nodes_[t].value.row(r).transpose();
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [t, r, id](Tape& tp) {
        tp.gradRef(t).row(r) += tp.nodes_[id].grad.transpose();
    };
    return out;
}

Var Tape::elem(Var m, int r, int c) {
    int t = checked(m);
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = nodes_[t].value(r, c);
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [t, r, c, id](Tape& tp) {
        tp.gradRef(t)(r, c) += tp.nodes_[id].grad(0, 0);
    };
    return out;
}

Var Tape::add(Var a, Var b) {
    int ia = checked(a), ib = checked(b);
    Var out = push(nodes_[ia].value + nodes_[ib].value, {});
    int id = out.id;
    nodes_[id].back = [ia, ib, id](Tape& tp) {
        tp.gradRef(ia) += tp.nodes_[id].grad;
        tp.gradRef(ib) += tp.nodes_[id].grad;
    };
    return out;
}

Var Tape::sub(Var a, Var b) {
    int ia = checked(a), ib = checked(b);
    Var out = push(nodes_[ia].value - nodes_[ib].value, {});
    int id = out.id;
    nodes_[id].back = [ia, ib, id](Tape& tp) {
        tp.gradRef(ia) += tp.nodes_[id].grad;
        tp.gradRef(ib) -= tp.nodes_[id].grad;
    };
    return out;
}

Var Tape::addMany(const std::vector<Var>& vs) {
    if (vs.empty()) throw NumericError("tape: addMany over empty list");
    std::vector<int> ids;
    ids.reserve(vs.size());
    Eigen::MatrixXd sum = nodes_[checked(vs[0])].value;
    ids.push_back(vs[0].id);
    for (std::size_t k = 1; k < vs.size(); ++k) {
        sum += nodes_[checked(vs[k])].value;
        ids.push_back(vs[k].id);
    }
    Var out = push(std::move(sum), {});
    int id = out.id;
    nodes_[id].back = [ids, id](Tape& tp) {
        for (int p : ids) tp.gradRef(p) += tp.nodes_[id].grad;
    };
    return out;
}

Var Tape::meanOf(const std::vector<Var>& vs) {
    return scale(addMany(vs), 1.0 / static_cast<double>(vs.size()));
}

Var Tape::scale(Var a, double c) {
    int ia = checked(a);
    Var out = push(nodes_[ia].value * c, {});
    int id = out.id;
    nodes_[id].back = [ia, c, id](Tape& tp) { tp.gradRef(ia) += c * tp.nodes_[id].grad; };
    return out;
}

Var Tape::matmul(Var a, Var b) {
    int ia = checked(a), ib = checked(b);
    Var out = push(nodes_[ia].value * nodes_[ib].value, {});
    int id = out.id;
    nodes_[id].back = [ia, ib, id](Tape& tp) {
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        tp.gradRef(ia) += g * tp.nodes_[ib].value.transpose();
        tp.gradRef(ib) += tp.nodes_[ia].value.transpose() * g;
    };
    return out;
}

Var Tape::hadamard(Var a, Var b) {
    int ia = checked(a), ib = checked(b);
    Var out = push(nodes_[ia].value.cwiseProduct(nodes_[ib].value), {});
    int id = out.id;
    nodes_[id].back = [ia, ib, id](Tape& tp) {
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        tp.gradRef(ia) += g.cwiseProduct(tp.nodes_[ib].value);
        tp.gradRef(ib) += g.cwiseProduct(tp.nodes_[ia].value);
    };
    return out;
}

Var Tape::oneMinus(Var a) {
    int ia = checked(a);
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(nodes_[ia].value.rows(),
                                              nodes_[ia].value.cols()) -
                        nodes_[ia].value;
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [ia, id](Tape& tp) { tp.gradRef(ia) -= tp.nodes_[id].grad; };
    return out;
}

Var Tape::scalarMul(Var scalar, Var x) {
    int is = checked(scalar), ix = checked(x);
    if (nodes_[is].value.size() != 1) throw NumericError("tape: scalarMul needs a 1x1 scalar");
    Var out = push(nodes_[is].value(0, 0) * nodes_[ix].value, {});
    int id = out.id;
    nodes_[id].back = [is, ix, id](Tape& tp) {
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        tp.gradRef(is)(0, 0) += g.cwiseProduct(tp.nodes_[ix].value).sum();
        tp.gradRef(ix) += tp.nodes_[is].value(0, 0) * g;
    };
    return out;
}

Var Tape::divByScalar(Var x, Var denom) {
    int ix = checked(x), iq = checked(denom);
    if (nodes_[iq].value.size() != 1) throw NumericError("tape: divByScalar needs a 1x1 scalar");
    const double q = nodes_[iq].value(0, 0);
    Var out = push(nodes_[ix].value / q, {});
    int id = out.id;
    nodes_[id].back = [ix, iq, q, id](Tape& tp) {
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        tp.gradRef(ix) += g / q;
        tp.gradRef(iq)(0, 0) += -g.cwiseProduct(tp.nodes_[ix].value).sum() / (q * q);
    };
    return out;
}

Var Tape::dot(Var a, Var b) {
    int ia = checked(a), ib = checked(b);
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = nodes_[ia].value.cwiseProduct(nodes_[ib].value).sum();
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [ia, ib, id](Tape& tp) {
        const double g = tp.nodes_[id].grad(0, 0);
        tp.gradRef(ia) += g * tp.nodes_[ib].value;
        tp.gradRef(ib) += g * tp.nodes_[ia].value;
    };
    return out;
}

Var Tape::vconcat(const std::vector<Var>& vs) {
    if (vs.empty()) throw NumericError("tape: vconcat over empty list");
    Eigen::Index rows = 0;
    for (Var v : vs) {
        int i = checked(v);
        if (nodes_[i].value.cols() != 1) throw NumericError("tape: vconcat needs column vectors");
        rows += nodes_[i].value.rows();
    }
    Eigen::MatrixXd out(rows, 1);
    std::vector<int> ids;
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (Var v : vs) {
        const Eigen::MatrixXd& blk = nodes_[v.id].value;
        out.block(at, 0, blk.rows(), 1) = blk;
        ids.push_back(v.id);
        offsets.push_back(at);
        at += blk.rows();
    }
    Var res = push(std::move(out), {});
    int id = res.id;
    nodes_[id].back = [ids, offsets, id](Tape& tp) {
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            Eigen::Index n = tp.nodes_[ids[k]].value.rows();
            tp.gradRef(ids[k]) += g.block(offsets[k], 0, n, 1);
        }
    };
    return res;
}

Var Tape::act(Var a, Activation f) {
    if (f == Activation::Identity) return a;
    int ia = checked(a);
    Eigen::MatrixXd v;
    if (f == Activation::Tanh)
        v = nodes_[ia].value.array().tanh();
    else
        v = (1.0 / (1.0 + (-nodes_[ia].value.array()).exp()));
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [ia, f, id](Tape& tp) {
        const Eigen::MatrixXd& y = tp.nodes_[id].value;
        const Eigen::MatrixXd& g = tp.nodes_[id].grad;
        if (f == Activation::Tanh)
            tp.gradRef(ia) += g.cwiseProduct((1.0 - y.array().square()).matrix());
        else
            tp.gradRef(ia) += g.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
    };
    return out;
}

Var Tape::expOf(Var a) {
    int ia = checked(a);
    Eigen::MatrixXd v = nodes_[ia].value.array().exp();
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [ia, id](Tape& tp) {
        tp.gradRef(ia) += tp.nodes_[id].grad.cwiseProduct(tp.nodes_[id].value);
    };
    return out;
}

Var Tape::clamp01(Var a) {
    int ia = checked(a);
    const Eigen::MatrixXd& x = nodes_[ia].value;
    Eigen::MatrixXd v = x.array().min(1.0).max(0.0);
    Var out = push(std::move(v), {});
    int id = out.id;
    nodes_[id].back = [ia, id](Tape& tp) {
        const Eigen::MatrixXd& src = tp.nodes_[ia].value;
        Eigen::MatrixXd& g = tp.gradRef(ia);
        const Eigen::MatrixXd& og = tp.nodes_[id].grad;
        for (Eigen::Index r = 0; r < src.rows(); ++r)
            for (Eigen::Index c = 0; c < src.cols(); ++c)
                if (src(r, c) > 0.0 && src(r, c) < 1.0) g(r, c) += og(r, c);
    };
    return out;
}

Var Tape::bceLoss(Var probs, const std::vector<std::uint8_t>& truth, double eps) {
    int ip = checked(probs);
    const Eigen::MatrixXd& p = nodes_[ip].value;
    if (p.cols() != 1 || p.rows() != static_cast<Eigen::Index>(truth.size()))
        throw NumericError("tape: bce shape mismatch");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double pc = std::clamp(p(i, 0), eps, 1.0 - eps);
        loss -= truth[static_cast<std::size_t>(i)] ? std::log(pc) : std::log(1.0 - pc);
    }
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = loss;
    Var out = push(std::move(v), {});
    int id = out.id;
    auto y = truth;
    nodes_[id].back = [ip, y, eps, id](Tape& tp) {
        const double g = tp.nodes_[id].grad(0, 0);
        const Eigen::MatrixXd& p = tp.nodes_[ip].value;
        Eigen::MatrixXd& pg = tp.gradRef(ip);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            double pi = p(i, 0);
            if (pi <= eps || pi >= 1.0 - eps) continue;  // clamped: locally flat
            pg(i, 0) += g * (pi - (y[static_cast<std::size_t>(i)] ? 1.0 : 0.0)) /
                        (pi * (1.0 - pi));
        }
    };
    return out;
}

Var Tape::marginLoss(Var probs, const std::vector<std::uint8_t>& truth) {
    int ip = checked(probs);
    const Eigen::MatrixXd& p = nodes_[ip].value;
    if (p.cols() != 1 || p.rows() != static_cast<Eigen::Index>(truth.size()))
        throw NumericError("tape: margin shape mismatch");
    const double scale = 1.0 / static_cast<double>(truth.size());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (!truth[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = 0; j < p.rows(); ++j) {
            if (truth[static_cast<std::size_t>(j)]) continue;
            loss += std::max(0.0, 1.0 - (p(i, 0) - p(j, 0))) * scale;
        }
    }
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = loss;
    Var out = push(std::move(v), {});
    int id = out.id;
    auto y = truth;
    nodes_[id].back = [ip, y, scale, id](Tape& tp) {
        const double g = tp.nodes_[id].grad(0, 0);
        const Eigen::MatrixXd& p = tp.nodes_[ip].value;
        Eigen::MatrixXd& pg = tp.gradRef(ip);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            if (!y[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < p.rows(); ++j) {
                if (y[static_cast<std::size_t>(j)]) continue;
                if (1.0 - (p(i, 0) - p(j, 0)) > 0.0) {
                    pg(i, 0) -= g * scale;
                    pg(j, 0) += g * scale;
                }
            }
        }
    };
    return out;
}

Var Tape::pairInteractionLoss(Var probs, const DdiMatrix& ddi) {
    int ip = checked(probs);
    const Eigen::MatrixXd& p = nodes_[ip].value;
    if (p.cols() != 1 || p.rows() != static_cast<Eigen::Index>(ddi.size()))
        throw NumericError("tape: interaction-loss shape mismatch");
    double loss = 0.0;
    for (int i = 0; i < ddi.size(); ++i)
        for (int j = 0; j < ddi.size(); ++j)
            if (ddi.interacts(i, j)) loss += p(i, 0) * p(j, 0);
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = loss;
    Var out = push(std::move(v), {});
    int id = out.id;
    const DdiMatrix* mat = &ddi;
    nodes_[id].back = [ip, mat, id](Tape& tp) {
        const double g = tp.nodes_[id].grad(0, 0);
        const Eigen::MatrixXd& p = tp.nodes_[ip].value;
        Eigen::MatrixXd& pg = tp.gradRef(ip);
        for (int i = 0; i < mat->size(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < mat->size(); ++j)
                if (mat->interacts(i, j)) acc += p(j, 0);
            pg(i, 0) += g * 2.0 * acc;
        }
    };
    return out;
}

void Tape::backward(Var loss) {
    int il = checked(loss);
    if (nodes_[il].value.size() != 1) throw NumericError("tape: backward needs a scalar loss");
    gradRef(il)(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() == 0) continue;  // no downstream use
        if (n.paramGrad) *n.paramGrad += n.grad;
        if (n.back) n.back(*this);
    }
}

}  // namespace medrec
