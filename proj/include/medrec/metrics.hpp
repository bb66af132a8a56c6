#pragma once

#include <string>
#include <vector>

#include "medrec/ddi.hpp"
#include "medrec/records.hpp"

namespace medrec {

// One evaluated visit: the thresholded recommendation, the prescribed
// ground truth, and the probabilities that ranked the medications.
struct VisitEval {
    std::vector<int> predicted;
    std::vector<int> truth;
    std::vector<double> probs;
};

struct PatientEval {
    std::vector<VisitEval> visits;
};

double jaccardIndex(const std::vector<int>& predicted, const std::vector<int>& truth);
double f1Score(const std::vector<int>& predicted, const std::vector<int>& truth);

// Area under the precision-recall steps of the medication ranking, ties
// broken by medication index. truth is multi-hot over the full vocabulary.
double prAuc(const std::vector<double>& probs, const MultiHotVector& truth);

// Set metrics average per visit inside a patient, then across patients.
// Interaction rate and set size pool all visits directly.
struct MetricSummary {
    double jaccard = 0.0;
    double ddi = 0.0;
    double f1 = 0.0;
    double prauc = 0.0;
    double avgMed = 0.0;
    // Same interacting-pair count over the ground-truth pair denominator;
    // reported alongside, never headline.
    double ddiAlt = 0.0;
};

MetricSummary summarize(const std::vector<PatientEval>& patients, const DdiMatrix& ddi,
                        int medCount);

struct MetricReport {
    std::vector<MetricSummary> rounds;
    MetricSummary mean;
    MetricSummary stderrOfMean;
};

MetricReport aggregateRounds(const std::vector<MetricSummary>& rounds);

// Table layout: jaccard, ddi, f1, prauc, avg_med (ddi_alt trailing), one
// row per bootstrap round, then mean and stderr rows.
void writeMetricReport(const std::string& path, const MetricReport& report);

}  // namespace medrec
