#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medrec/causal/effects.hpp"
#include "medrec/correction.hpp"
#include "medrec/ddi.hpp"
#include "medrec/metrics.hpp"
#include "medrec/model/model.hpp"
#include "medrec/records.hpp"
#include "medrec/sampling.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

struct EvalOptions {
    bool applyCorrection = false;
    CorrectionConfig correction;
    // Required when applyCorrection is set.
    const CausalEffectMatrix* diseaseMed = nullptr;
    const CausalEffectMatrix* procedureMed = nullptr;
    double threshold = 0.5;
};

// Forward every listed patient once. Ranking and selection use corrected
// probabilities when correction is on, raw probabilities otherwise. audit
// collects one row per (visit, medication) when non-null and correction is
// on.
std::vector<PatientEval> evalPatients(Model& model, const std::vector<PatientRecord>& records,
                                      const std::vector<int>& indices, const EvalOptions& opts,
                                      const Vocabulary* medVocab,
                                      std::vector<CorrectionAuditRow>* audit);

// Single deterministic pass, no resampling.
MetricSummary evaluateSubset(Model& model, const std::vector<PatientRecord>& records,
                             const std::vector<int>& indices, const DdiMatrix& ddi,
                             const EvalOptions& opts);

// Patients are forwarded once; bootstrap rounds resample the cached
// per-patient outcomes.
MetricReport bootstrapEvaluate(Model& model, const std::vector<PatientRecord>& records,
                               const std::vector<int>& testIndices, const DdiMatrix& ddi,
                               const EvalOptions& opts, int rounds, double fraction,
                               bool withReplacement, std::uint64_t seed,
                               const Vocabulary* medVocab,
                               std::vector<CorrectionAuditRow>* audit);

// Per-medication training-frequency predictor: recommends the k most
// frequent training medications for every test visit, k being the mean
// medication count per training visit. The reference point for learned-model
// comparisons.
MetricSummary frequencyBaseline(const std::vector<PatientRecord>& records,
                                const DatasetSplit& split, const DdiMatrix& ddi, int medCount);

}  // namespace medrec
