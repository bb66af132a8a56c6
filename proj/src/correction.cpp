#include "medrec/correction.hpp"

#include <algorithm>
#include <fstream>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"

namespace medrec {

void CorrectionConfig::validate() const {
    if (!(delta2 >= 0.0 && delta2 < delta1 && delta1 <= 1.0))
        throw ConfigError("correction thresholds must satisfy 0 <= delta2 < delta1 <= 1");
    if (tau1 < 0.0 || tau2 < 0.0) throw ConfigError("correction offsets must be non-negative");
    if (!(selectionThreshold > 0.0 && selectionThreshold < 1.0))
        throw ConfigError("selection threshold must lie in (0,1)");
}

const char* branchName(CorrectionBranch b) {
    switch (b) {
        case CorrectionBranch::Boost: return "boost";
        case CorrectionBranch::Keep: return "keep";
        case CorrectionBranch::Penalize: return "penalize";
    }
    return "?";
}

double maxRelevantEffect(int med, const Visit& visit, const CausalEffectMatrix& diseaseMed,
                         const CausalEffectMatrix& procedureMed) {
    double best = 0.0;
    for (int d : visit.diseases) best = std::max(best, diseaseMed.effect(d, med));
    for (int p : visit.procedures) best = std::max(best, procedureMed.effect(p, med));
    return best;
}

RecommendationResult correct(const std::vector<double>& raw, const Visit& visit,
                             const CausalEffectMatrix& diseaseMed,
                             const CausalEffectMatrix& procedureMed,
                             const CorrectionConfig& cfg) {
    cfg.validate();
    RecommendationResult out;
    out.raw = raw;
    out.corrected.resize(raw.size());
    out.branch.resize(raw.size());
    out.maxEffect.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double e = maxRelevantEffect(static_cast<int>(i), visit, diseaseMed, procedureMed);
        double p = raw[i];
        CorrectionBranch b;
        if (e >= cfg.delta1) {
            p += cfg.tau1;
            b = CorrectionBranch::Boost;
        } else if (e >= cfg.delta2) {
            b = CorrectionBranch::Keep;
        } else {
            p -= cfg.tau2;
            b = CorrectionBranch::Penalize;
        }
        out.corrected[i] = std::clamp(p, 0.0, 1.0);
        out.branch[i] = b;
        out.maxEffect[i] = e;
    }
    out.selected = selectSet(out.corrected, cfg.selectionThreshold);
    return out;
}

std::vector<int> selectSet(const std::vector<double>& corrected, double threshold) {
    std::vector<int> sel;
    for (std::size_t i = 0; i < corrected.size(); ++i)
        if (corrected[i] >= threshold) sel.push_back(static_cast<int>(i));
    return sel;
}

std::vector<CorrectionAuditRow> auditRows(const std::string& patientId, int visitIndex,
                                          const RecommendationResult& result,
                                          const Vocabulary& medVocab) {
    std::vector<CorrectionAuditRow> rows;
    rows.reserve(result.raw.size());
    for (std::size_t i = 0; i < result.raw.size(); ++i) {
        CorrectionAuditRow r;
        r.patientId = patientId;
        r.visitIndex = visitIndex;
        r.medication = medVocab.code(static_cast<int>(i));
        r.raw = result.raw[i];
        r.effect = result.maxEffect[i];
        r.branch = result.branch[i];
        r.corrected = result.corrected[i];
        rows.push_back(std::move(r));
    }
    return rows;
}

void writeAuditCsv(const std::string& path, const std::vector<CorrectionAuditRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "patient,visit,medication,raw,effect,branch,corrected\n";
    for (const auto& r : rows) {
        out << r.patientId << ',' << r.visitIndex << ',' << r.medication << ','
            << fmtDouble(r.raw) << ',' << fmtDouble(r.effect) << ',' << branchName(r.branch)
            << ',' << fmtDouble(r.corrected) << '\n';
    }
    if (!out) throw DataError("write failed for " + path);
}

}  // namespace medrec
