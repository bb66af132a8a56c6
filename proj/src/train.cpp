#include "medrec/train.hpp"

#include <cmath>

#include "medrec/errors.hpp"
#include "medrec/evaluate.hpp"
#include "medrec/io.hpp"
#include "medrec/rng.hpp"

namespace medrec {

const char* const kRunLogHeader =
    "epoch,step,patient,loss,bce,multi,ddi,alpha,rate,val_jaccard\n";

namespace {

// Correction offsets as constants of the current effects; keeps the loss
// differentiable in the probabilities while honoring the branch rule.
Var correctedOnTape(Tape& tape, Var probs, const Visit& visit,
                    const CausalEffectMatrix& dm, const CausalEffectMatrix& pm,
                    const CorrectionConfig& cc) {
    const Eigen::Index n = tape.value(probs).rows();
    Eigen::MatrixXd offset = Eigen::MatrixXd::Zero(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = maxRelevantEffect(static_cast<int>(i), visit, dm, pm);
        if (e >= cc.delta1) {
            offset(i, 0) = cc.tau1;
        } else if (e < cc.delta2) {
            offset(i, 0) = -cc.tau2;
        }
    }
    return tape.clamp01(tape.add(probs, tape.constant(std::move(offset))));
}

}  // namespace

TrainResult train(Model& model, const std::vector<PatientRecord>& records,
                  const DatasetSplit& split, const DdiMatrix& ddi, const RunConfig& cfg,
                  const CausalEffectMatrix* diseaseMed, const CausalEffectMatrix* procedureMed,
                  std::ostream* runLog) {
    cfg.validate();
    if (split.train.empty()) throw DataError("training split is empty");
    if (cfg.loss.correctInLoss && (!diseaseMed || !procedureMed))
        throw MissingArtifactError("in-loss correction requested without effect matrices");

    AdamOptimizer adam(cfg.adamConfig());
    Rng shuffleRng(stageSeed(cfg.seed, kStreamTrain));
    std::vector<int> order = split.train;

    EvalOptions valOpts;  // uncorrected validation drives checkpoint choice
    valOpts.threshold = cfg.correction.selectionThreshold;

    TrainResult result;
    std::vector<Eigen::MatrixXd> bestValues;
    if (runLog) *runLog << kRunLogHeader;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffleRng.shuffle(order);
        double lossSum = 0.0;
        int step = 0;
        for (int idx : order) {
            const PatientRecord& rec = records[static_cast<std::size_t>(idx)];
            Tape tape;
            std::vector<Var> probs = model.forwardPatient(tape, rec);

            std::vector<Var> visitTotals;
            double bceSum = 0, multiSum = 0, ddiSum = 0, alphaSum = 0, rateSum = 0;
            for (std::size_t t = 0; t < rec.visits.size(); ++t) {
                Var p = probs[t];
                if (cfg.loss.correctInLoss) {
                    p = correctedOnTape(tape, p, rec.visits[t], *diseaseMed, *procedureMed,
                                        cfg.correction);
                }
                MultiHotVector truth(static_cast<std::size_t>(ddi.size()), 0);
                for (int m : rec.visits[t].medications)
                    truth[static_cast<std::size_t>(m)] = 1;
                VisitLoss vl = combinedLoss(tape, p, truth, ddi, cfg.loss);
                visitTotals.push_back(vl.total);
                bceSum += vl.bce;
                multiSum += vl.multi;
                ddiSum += vl.ddi;
                alphaSum += vl.alpha;
                rateSum += vl.rate;
            }
            Var patientLoss = tape.meanOf(visitTotals);
            const double lossValue = tape.value(patientLoss)(0, 0);
            if (!std::isfinite(lossValue)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", patient " + rec.patientId);
            }

            model.params().zeroGrads();
            tape.backward(patientLoss);
            adam.step(model.params());

            lossSum += lossValue;
            ++step;
            if (runLog) {
                const double nv = static_cast<double>(rec.visits.size());
                *runLog << epoch << ',' << step << ',' << rec.patientId << ','
                        << fmtDouble(lossValue) << ',' << fmtDouble(bceSum / nv) << ','
                        << fmtDouble(multiSum / nv) << ',' << fmtDouble(ddiSum / nv) << ','
                        << fmtDouble(alphaSum / nv) << ',' << fmtDouble(rateSum / nv) << ",\n";
            }
        }

        const double epochLoss = lossSum / static_cast<double>(order.size());
        result.epochLoss.push_back(epochLoss);

        double valJaccard = 0.0;
        if (!split.val.empty()) {
            valJaccard = evaluateSubset(model, records, split.val, ddi, valOpts).jaccard;
        }
        result.epochValJaccard.push_back(valJaccard);
        if (runLog) {
            *runLog << epoch << ",,,," << ",,,," << ',' << fmtDouble(valJaccard) << '\n';
        }

        // Strict improvement keeps the earliest best epoch.
        if (result.bestEpoch == 0 || valJaccard > result.bestValJaccard) {
            result.bestEpoch = epoch;
            result.bestValJaccard = valJaccard;
            bestValues.clear();
            for (const auto& e : model.params().entries()) bestValues.push_back(e.value);
        }
    }

    auto& entries = model.params().entries();
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].value = bestValues[i];
    return result;
}

}  // namespace medrec
