#include "medrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"

namespace medrec {

namespace {

// Both inputs sorted ascending.
int intersectionSize(const std::vector<int>& a, const std::vector<int>& b) {
    int n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

long long pairsWithin(const std::vector<int>& set, const DdiMatrix& ddi, long long* interacting) {
    long long total = 0;
    for (std::size_t a = 0; a < set.size(); ++a) {
        for (std::size_t b = a + 1; b < set.size(); ++b) {
            ++total;
            if (interacting && ddi.interacts(set[a], set[b])) ++*interacting;
        }
    }
    return total;
}

}  // namespace

double jaccardIndex(const std::vector<int>& predicted, const std::vector<int>& truth) {
    const int inter = intersectionSize(predicted, truth);
    const std::size_t uni = predicted.size() + truth.size() - static_cast<std::size_t>(inter);
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double f1Score(const std::vector<int>& predicted, const std::vector<int>& truth) {
    const int inter = intersectionSize(predicted, truth);
    const double precision =
        predicted.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(predicted.size());
    const double recall =
        truth.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(truth.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double prAuc(const std::vector<double>& probs, const MultiHotVector& truth) {
    if (probs.size() != truth.size())
        throw DataError("ranking metric: probability and truth lengths differ");
    const int n = static_cast<int>(probs.size());
    int positives = 0;
    for (std::uint8_t t : truth) positives += t ? 1 : 0;
    if (positives == 0) return 0.0;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
            return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
        return a < b;  // deterministic tie order
    });

    double auc = 0.0;
    double prevRecall = 0.0;
    int tp = 0;
    for (int k = 0; k < n; ++k) {
        if (truth[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]) ++tp;
        const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        auc += precision * (recall - prevRecall);
        prevRecall = recall;
    }
    return auc;
}

MetricSummary summarize(const std::vector<PatientEval>& patients, const DdiMatrix& ddi,
                        int medCount) {
    if (patients.empty()) throw DataError("metric summary over zero patients");

    double jaccardSum = 0.0, f1Sum = 0.0, praucSum = 0.0;
    int patientCount = 0;
    long long predPairs = 0, predInteracting = 0, truthPairs = 0;
    long long visitCount = 0, medTotal = 0;

    for (const PatientEval& p : patients) {
        if (p.visits.empty()) continue;
        double j = 0.0, f = 0.0, a = 0.0;
        for (const VisitEval& v : p.visits) {
            j += jaccardIndex(v.predicted, v.truth);
            f += f1Score(v.predicted, v.truth);
            MultiHotVector hot(static_cast<std::size_t>(medCount), 0);
            for (int m : v.truth) {
                if (m < 0 || m >= medCount) throw DataError("metric summary: truth index out of range");
                hot[static_cast<std::size_t>(m)] = 1;
            }
            a += prAuc(v.probs, hot);

            predPairs += pairsWithin(v.predicted, ddi, &predInteracting);
            truthPairs += pairsWithin(v.truth, ddi, nullptr);
            ++visitCount;
            medTotal += static_cast<long long>(v.predicted.size());
        }
        const double nv = static_cast<double>(p.visits.size());
        jaccardSum += j / nv;
        f1Sum += f / nv;
        praucSum += a / nv;
        ++patientCount;
    }
    if (patientCount == 0) throw DataError("metric summary: every patient was empty");

    MetricSummary s;
    const double np = static_cast<double>(patientCount);
    s.jaccard = jaccardSum / np;
    s.f1 = f1Sum / np;
    s.prauc = praucSum / np;
    s.ddi = predPairs == 0 ? 0.0
                           : static_cast<double>(predInteracting) / static_cast<double>(predPairs);
    s.ddiAlt = truthPairs == 0
                   ? 0.0
                   : static_cast<double>(predInteracting) / static_cast<double>(truthPairs);
    s.avgMed = visitCount == 0 ? 0.0
                               : static_cast<double>(medTotal) / static_cast<double>(visitCount);
    return s;
}

MetricReport aggregateRounds(const std::vector<MetricSummary>& rounds) {
    if (rounds.empty()) throw DataError("metric aggregation over zero rounds");
    MetricReport rep;
    rep.rounds = rounds;

    auto meanAndStderr = [&](auto field) {
        double sum = 0.0;
        for (const auto& r : rounds) sum += r.*field;
        const double mean = sum / static_cast<double>(rounds.size());
        double sq = 0.0;
        for (const auto& r : rounds) sq += (r.*field - mean) * (r.*field - mean);
        double se = 0.0;
        if (rounds.size() > 1) {
            const double var = sq / static_cast<double>(rounds.size() - 1);
            se = std::sqrt(var / static_cast<double>(rounds.size()));
        }
        return std::pair<double, double>(mean, se);
    };

    auto assign = [&](auto field) {
        auto [m, s] = meanAndStderr(field);
        rep.mean.*field = m;
        rep.stderrOfMean.*field = s;
    };
    assign(&MetricSummary::jaccard);
    assign(&MetricSummary::ddi);
    assign(&MetricSummary::f1);
    assign(&MetricSummary::prauc);
    assign(&MetricSummary::avgMed);
    assign(&MetricSummary::ddiAlt);
    return rep;
}

void writeMetricReport(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "row,jaccard,ddi,f1,prauc,avg_med,ddi_alt\n";
    auto line = [&](const std::string& label, const MetricSummary& s) {
        out << label << ',' << fmtDouble(s.jaccard) << ',' << fmtDouble(s.ddi) << ','
            << fmtDouble(s.f1) << ',' << fmtDouble(s.prauc) << ',' << fmtDouble(s.avgMed) << ','
            << fmtDouble(s.ddiAlt) << '\n';
    };
    for (std::size_t i = 0; i < report.rounds.size(); ++i)
        line("round" + std::to_string(i + 1), report.rounds[i]);
    line("mean", report.mean);
    line("stderr", report.stderrOfMean);
    if (!out) throw DataError("write failed for " + path);
}

}  // namespace medrec
