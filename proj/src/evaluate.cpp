#include "medrec/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medrec/errors.hpp"
#include "medrec/sampling.hpp"

namespace medrec {

std::vector<PatientEval> evalPatients(Model& model, const std::vector<PatientRecord>& records,
                                      const std::vector<int>& indices, const EvalOptions& opts,
                                      const Vocabulary* medVocab,
                                      std::vector<CorrectionAuditRow>* audit) {
    if (opts.applyCorrection && (!opts.diseaseMed || !opts.procedureMed)) {
        throw MissingArtifactError("correction requested without effect matrices");
    }
    std::vector<PatientEval> out;
    out.reserve(indices.size());
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= records.size())
            throw DataError("evaluation index out of range");
        const PatientRecord& rec = records[static_cast<std::size_t>(idx)];
        Tape tape;
        std::vector<Var> probs = model.forwardPatient(tape, rec);
        PatientEval pe;
        pe.visits.reserve(rec.visits.size());
        for (std::size_t t = 0; t < rec.visits.size(); ++t) {
            const Eigen::MatrixXd& p = tape.value(probs[t]);
            std::vector<double> raw(static_cast<std::size_t>(p.rows()));
            for (Eigen::Index i = 0; i < p.rows(); ++i) raw[static_cast<std::size_t>(i)] = p(i, 0);

            VisitEval ve;
            ve.truth = rec.visits[t].medications;
            if (opts.applyCorrection) {
                RecommendationResult res = correct(raw, rec.visits[t], *opts.diseaseMed,
                                                   *opts.procedureMed, opts.correction);
                ve.probs = res.corrected;
                ve.predicted = selectSet(res.corrected, opts.threshold);
                if (audit && medVocab) {
                    auto rows = auditRows(rec.patientId, static_cast<int>(t), res, *medVocab);
                    audit->insert(audit->end(), rows.begin(), rows.end());
                }
            } else {
                ve.probs = raw;
                ve.predicted = selectSet(raw, opts.threshold);
            }
            pe.visits.push_back(std::move(ve));
        }
        out.push_back(std::move(pe));
    }
    return out;
}

MetricSummary evaluateSubset(Model& model, const std::vector<PatientRecord>& records,
                             const std::vector<int>& indices, const DdiMatrix& ddi,
                             const EvalOptions& opts) {
    auto evals = evalPatients(model, records, indices, opts, nullptr, nullptr);
    return summarize(evals, ddi, ddi.size());
}

MetricReport bootstrapEvaluate(Model& model, const std::vector<PatientRecord>& records,
                               const std::vector<int>& testIndices, const DdiMatrix& ddi,
                               const EvalOptions& opts, int rounds, double fraction,
                               bool withReplacement, std::uint64_t seed,
                               const Vocabulary* medVocab,
                               std::vector<CorrectionAuditRow>* audit) {
    auto evals = evalPatients(model, records, testIndices, opts, medVocab, audit);
    auto draws = bootstrapRounds(static_cast<int>(evals.size()), rounds, fraction, seed,
                                 withReplacement);
    std::vector<MetricSummary> perRound;
    perRound.reserve(draws.size());
    for (const auto& round : draws) {
        std::vector<PatientEval> subset;
        subset.reserve(round.size());
        for (int i : round) subset.push_back(evals[static_cast<std::size_t>(i)]);
        perRound.push_back(summarize(subset, ddi, ddi.size()));
    }
    return aggregateRounds(perRound);
}

MetricSummary frequencyBaseline(const std::vector<PatientRecord>& records,
                                const DatasetSplit& split, const DdiMatrix& ddi, int medCount) {
    std::vector<long long> counts(static_cast<std::size_t>(medCount), 0);
    long long visits = 0;
    long long medsTotal = 0;
    for (int idx : split.train) {
        const PatientRecord& rec = records[static_cast<std::size_t>(idx)];
        for (const Visit& v : rec.visits) {
            ++visits;
            medsTotal += static_cast<long long>(v.medications.size());
            for (int m : v.medications) ++counts[static_cast<std::size_t>(m)];
        }
    }
    if (visits == 0) throw DataError("frequency baseline: empty training split");

    std::vector<double> freq(static_cast<std::size_t>(medCount), 0.0);
    for (int m = 0; m < medCount; ++m) {
        freq[static_cast<std::size_t>(m)] =
            static_cast<double>(counts[static_cast<std::size_t>(m)]) / static_cast<double>(visits);
    }

    // Predicts the k most frequent training medications for every visit,
    // where k is the mean medication count per training visit.
    int k = static_cast<int>(
        std::lround(static_cast<double>(medsTotal) / static_cast<double>(visits)));
    k = std::clamp(k, 1, medCount);
    std::vector<int> order(static_cast<std::size_t>(medCount));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return freq[static_cast<std::size_t>(a)] > freq[static_cast<std::size_t>(b)];
    });
    std::vector<int> picked(order.begin(), order.begin() + k);
    std::sort(picked.begin(), picked.end());

    std::vector<PatientEval> evals;
    evals.reserve(split.test.size());
    for (int idx : split.test) {
        const PatientRecord& rec = records[static_cast<std::size_t>(idx)];
        PatientEval pe;
        for (const Visit& v : rec.visits) {
            VisitEval ve;
            ve.predicted = picked;
            ve.truth = v.medications;
            ve.probs = freq;
            pe.visits.push_back(std::move(ve));
        }
        evals.push_back(std::move(pe));
    }
    return summarize(evals, ddi, medCount);
}

}  // namespace medrec
