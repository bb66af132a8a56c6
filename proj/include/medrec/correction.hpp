#pragma once

#include <string>
#include <vector>

#include "medrec/causal/effects.hpp"
#include "medrec/records.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

struct CorrectionConfig {
    double delta1 = 0.97;  // boost at or above this effect
    double delta2 = 0.90;  // penalize strictly below this effect
    double tau1 = 0.10;
    double tau2 = 0.10;
    double selectionThreshold = 0.5;

    void validate() const;  // 0 <= delta2 < delta1 <= 1, taus >= 0
};

enum class CorrectionBranch { Boost, Keep, Penalize };
const char* branchName(CorrectionBranch b);

struct RecommendationResult {
    std::vector<double> raw;
    std::vector<double> corrected;  // clamped to [0,1]
    std::vector<int> selected;      // corrected_i >= selectionThreshold
    std::vector<CorrectionBranch> branch;
    std::vector<double> maxEffect;
};

// Largest effect of med over the visit's current diseases and procedures;
// unrecorded pairs count as zero.
double maxRelevantEffect(int med, const Visit& visit, const CausalEffectMatrix& diseaseMed,
                         const CausalEffectMatrix& procedureMed);

// Three-branch adjustment: effect >= delta1 adds tau1, effect < delta2
// subtracts tau2, otherwise the probability stands. Every medication takes
// exactly one branch.
RecommendationResult correct(const std::vector<double>& raw, const Visit& visit,
                             const CausalEffectMatrix& diseaseMed,
                             const CausalEffectMatrix& procedureMed,
                             const CorrectionConfig& cfg);

std::vector<int> selectSet(const std::vector<double>& corrected, double threshold);

// One audit line per medication of one visit; feeds the explain command and
// the evaluation audit file.
struct CorrectionAuditRow {
    std::string patientId;
    int visitIndex = 0;
    std::string medication;
    double raw = 0.0;
    double effect = 0.0;
    CorrectionBranch branch = CorrectionBranch::Keep;
    double corrected = 0.0;
};

std::vector<CorrectionAuditRow> auditRows(const std::string& patientId, int visitIndex,
                                          const RecommendationResult& result,
                                          const Vocabulary& medVocab);
void writeAuditCsv(const std::string& path, const std::vector<CorrectionAuditRow>& rows);

}  // namespace medrec
