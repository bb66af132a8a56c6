#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "medrec/ddi.hpp"

namespace medrec {

enum class Activation { Tanh, Logistic, Identity };

Activation activationFromName(const std::string& name);
const char* activationName(Activation a);

// Reverse-mode differentiation tape over dynamically sized matrices.
// Column vectors are dim x 1 matrices; scalars are 1 x 1. A tape is built
// fresh per forward pass; backward() walks it once in reverse and
// accumulates parameter gradients into the matrices registered via param().
class Tape {
  public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Var param(const Eigen::MatrixXd& value, Eigen::MatrixXd* gradSink);
    Var constant(Eigen::MatrixXd value);

    const Eigen::MatrixXd& value(Var v) const { return nodes_[checked(v)].value; }
    const Eigen::MatrixXd& grad(Var v) const { return nodes_[checked(v)].grad; }

    Var row(Var table, int r);      // table row as a column vector
    Var elem(Var m, int r, int c);  // single entry as a 1x1
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var addMany(const std::vector<Var>& vs);
    Var meanOf(const std::vector<Var>& vs);
    Var scale(Var a, double c);
    Var matmul(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var oneMinus(Var a);
    Var scalarMul(Var scalar, Var x);   // scalar is 1x1
    Var divByScalar(Var x, Var denom);  // denom is 1x1
    Var dot(Var a, Var b);
    Var vconcat(const std::vector<Var>& vs);
    Var act(Var a, Activation f);
    Var expOf(Var a);
    // Clamp to [0,1]; gradient passes only through strictly interior
    // coordinates.
    Var clamp01(Var a);

    // Binary cross-entropy summed over coordinates, log arguments clamped
    // into [eps, 1-eps]; gradient is zero where the clamp binds.
    Var bceLoss(Var probs, const std::vector<std::uint8_t>& truth, double eps);
    // Hinge margin between each prescribed/unprescribed pair, averaged by
    // the vocabulary size.
    Var marginLoss(Var probs, const std::vector<std::uint8_t>& truth);
    // Sum over ordered medication pairs of ddi_ij * p_i * p_j.
    Var pairInteractionLoss(Var probs, const DdiMatrix& ddi);

    void backward(Var loss);
    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        std::function<void(Tape&)> back;  // pulls from this node's grad
        Eigen::MatrixXd* paramGrad = nullptr;
    };

    int checked(Var v) const;
    Var push(Eigen::MatrixXd value, std::function<void(Tape&)> back);
    Eigen::MatrixXd& gradRef(int id);

    std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace medrec
