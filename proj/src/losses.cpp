#include "medrec/losses.hpp"

#include <algorithm>

#include "medrec/errors.hpp"

namespace medrec {

void LossConfig::validate() const {
    if (beta < 0.0 || beta > 1.0) throw ConfigError("loss mix beta must lie in [0,1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("interaction tolerance gamma must lie in [0,1]");
    if (kp <= 0.0) throw ConfigError("penalty slope kp must be positive");
}

double alphaSchedule(double rateDdi, double gamma, double kp) {
    if (rateDdi <= gamma) return 1.0;
    return std::max(0.0, 1.0 - (rateDdi - gamma) / kp);
}

double predictedDdiRate(const std::vector<double>& probs, const DdiMatrix& ddi,
                        double threshold) {
    std::vector<int> sel;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] >= threshold) sel.push_back(static_cast<int>(i));
    if (sel.size() < 2) return 0.0;
    long long total = 0, interacting = 0;
    for (std::size_t a = 0; a < sel.size(); ++a) {
        for (std::size_t b = a + 1; b < sel.size(); ++b) {
            ++total;
            if (ddi.interacts(sel[a], sel[b])) ++interacting;
        }
    }
    return static_cast<double>(interacting) / static_cast<double>(total);
}

VisitLoss combinedLossFixedAlpha(Tape& tape, Var probs, const MultiHotVector& truth,
                                 const DdiMatrix& ddi, const LossConfig& cfg, double alpha) {
    cfg.validate();
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0,1]");

    Var bce = tape.bceLoss(probs, truth, kBceClampEps);
    Var multi = tape.marginLoss(probs, truth);
    Var inter = tape.pairInteractionLoss(probs, ddi);

    Var accuracy = tape.add(tape.scale(bce, cfg.beta), tape.scale(multi, 1.0 - cfg.beta));
    Var total = tape.add(tape.scale(accuracy, alpha), tape.scale(inter, 1.0 - alpha));

    VisitLoss out;
    out.total = total;
    out.alpha = alpha;
    out.bce = tape.value(bce)(0, 0);
    out.multi = tape.value(multi)(0, 0);
    out.ddi = tape.value(inter)(0, 0);
    return out;
}

VisitLoss combinedLoss(Tape& tape, Var probs, const MultiHotVector& truth, const DdiMatrix& ddi,
                       const LossConfig& cfg) {
    const Eigen::MatrixXd& p = tape.value(probs);
    std::vector<double> pv(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) pv[static_cast<std::size_t>(i)] = p(i, 0);
    const double rate = predictedDdiRate(pv, ddi, 0.5);
    VisitLoss out = combinedLossFixedAlpha(tape, probs, truth, ddi, cfg,
                                           alphaSchedule(rate, cfg.gamma, cfg.kp));
    out.rate = rate;
    return out;
}

}  // namespace medrec
