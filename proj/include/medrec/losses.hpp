#pragma once

#include <vector>

#include "medrec/ddi.hpp"
#include "medrec/model/tape.hpp"
#include "medrec/records.hpp"

namespace medrec {

// Log arguments inside the cross-entropy are clamped away from 0 and 1 by
// this margin; clamped coordinates carry no gradient.
inline constexpr double kBceClampEps = 1e-7;

struct LossConfig {
    double beta = 0.95;   // cross-entropy share inside the accuracy term
    double gamma = 0.06;  // tolerated interaction rate
    double kp = 0.05;     // slope of the interaction penalty ramp
    bool correctInLoss = false;  // apply probability correction before the loss

    void validate() const;
};

// alpha = 1 when the interaction rate is within tolerance, then falls off
// linearly at slope 1/kp, floored at 0.
double alphaSchedule(double rateDdi, double gamma, double kp);

// Interaction rate of the set {i : probs_i >= threshold}: interacting pairs
// over all pairs, 0 when fewer than two medications clear the threshold.
double predictedDdiRate(const std::vector<double>& probs, const DdiMatrix& ddi,
                        double threshold);

struct VisitLoss {
    Var total;         // scalar node on the tape
    double alpha = 0;  // weight applied to the accuracy term
    double rate = 0;   // thresholded interaction rate that produced alpha
    double bce = 0;
    double multi = 0;
    double ddi = 0;
};

// alpha(beta L_bce + (1-beta) L_multi) + (1-alpha) L_ddi, with alpha taken
// from the schedule on the current thresholded predictions.
VisitLoss combinedLoss(Tape& tape, Var probs, const MultiHotVector& truth, const DdiMatrix& ddi,
                       const LossConfig& cfg);

// Same composite with a caller-supplied alpha; keeps the loss smooth for
// derivative checks where the thresholded rate would introduce jumps.
VisitLoss combinedLossFixedAlpha(Tape& tape, Var probs, const MultiHotVector& truth,
                                 const DdiMatrix& ddi, const LossConfig& cfg, double alpha);

}  // namespace medrec
