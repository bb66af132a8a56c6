#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "medrec/causal/effects.hpp"
#include "medrec/config.hpp"
#include "medrec/ddi.hpp"
#include "medrec/losses.hpp"
#include "medrec/model/model.hpp"
#include "medrec/records.hpp"
#include "medrec/sampling.hpp"

namespace medrec {

struct TrainResult {
    int bestEpoch = 0;  // 1-based
    double bestValJaccard = 0.0;
    std::vector<double> epochLoss;        // mean per-patient loss
    std::vector<double> epochValJaccard;  // uncorrected, threshold 0.5
};

// Per-patient optimizer steps over shuffled training patients; the loss of
// a patient is the mean of its visit losses. Validation runs after each
// epoch on uncorrected predictions; the parameters of the best-Jaccard
// epoch are restored before returning. A non-finite loss aborts and names
// the offending patient.
//
// effects matrices are only consulted when cfg.loss.correctInLoss is set;
// either pointer may be null otherwise.
TrainResult train(Model& model, const std::vector<PatientRecord>& records,
                  const DatasetSplit& split, const DdiMatrix& ddi, const RunConfig& cfg,
                  const CausalEffectMatrix* diseaseMed, const CausalEffectMatrix* procedureMed,
                  std::ostream* runLog);

// Header for the run-log rows written during training.
extern const char* const kRunLogHeader;

}  // namespace medrec
