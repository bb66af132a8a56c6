#include "medrec/causal/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "medrec/errors.hpp"

namespace medrec {

BinaryTable BinaryTable::fromVisits(const std::vector<PatientRecord>& records,
                                    const std::vector<int>& patientIndices, EntityKind kind,
                                    int vocabSize) {
    int nRows = 0;
    for (int pi : patientIndices)
        nRows += static_cast<int>(records[static_cast<std::size_t>(pi)].visits.size());
    BinaryTable table(nRows, vocabSize);
    int r = 0;
    for (int pi : patientIndices) {
        for (const Visit& v : records[static_cast<std::size_t>(pi)].visits) {
            const std::vector<int>* codes = nullptr;
            switch (kind) {
                case EntityKind::Disease: codes = &v.diseases; break;
                case EntityKind::Procedure: codes = &v.procedures; break;
                case EntityKind::Medication: codes = &v.medications; break;
                case EntityKind::Molecule: codes = &v.medications; break;
            }
            for (int c : *codes) table.set(r, c, 1);
            ++r;
        }
    }
    return table;
}

int BinaryTable::columnSum(int c) const {
    int s = 0;
    for (int r = 0; r < rows_; ++r) s += at(r, c);
    return s;
}

int BinaryTable::coOccurrence(int a, int b) const {
    int s = 0;
    for (int r = 0; r < rows_; ++r) s += at(r, a) & at(r, b);
    return s;
}

double bdeuLocalScore(const BinaryTable& data, int node, const std::vector<int>& parents,
                      double ess, int maxIndegree) {
    if (static_cast<int>(parents.size()) > maxIndegree)
        throw ConfigError("local score: parent set of size " + std::to_string(parents.size()) +
                          " exceeds max in-degree " + std::to_string(maxIndegree));
    for (int p : parents)
        if (p == node) throw ConfigError("local score: node cannot be its own parent");

    const int q = 1 << parents.size();
    // counts[config][value]; config index packs parent bits in list order.
    std::vector<std::array<int, 2>> counts(static_cast<std::size_t>(q), {0, 0});
    for (int r = 0; r < data.rows(); ++r) {
        int cfg = 0;
        for (std::size_t k = 0; k < parents.size(); ++k)
            cfg |= data.at(r, parents[k]) << k;
        ++counts[static_cast<std::size_t>(cfg)][data.at(r, node)];
    }

    const double alphaJ = ess / q;
    const double alphaJk = ess / (2.0 * q);
    double score = 0.0;
    for (int j = 0; j < q; ++j) {
        const int n0 = counts[static_cast<std::size_t>(j)][0];
        const int n1 = counts[static_cast<std::size_t>(j)][1];
        if (n0 + n1 == 0) continue;
        score += std::lgamma(alphaJ) - std::lgamma(alphaJ + n0 + n1);
        score += std::lgamma(alphaJk + n0) - std::lgamma(alphaJk);
        score += std::lgamma(alphaJk + n1) - std::lgamma(alphaJk);
    }
    return score;
}

double ScoreCache::local(int node, const std::vector<int>& parents) {
    std::string key;
    key.reserve(4 + 4 * parents.size());
    auto append = [&key](int v) {
        key.push_back(static_cast<char>(v & 0xff));
        key.push_back(static_cast<char>((v >> 8) & 0xff));
        key.push_back(static_cast<char>((v >> 16) & 0xff));
    };
    append(node);
    std::vector<int> sorted = parents;
    std::sort(sorted.begin(), sorted.end());
    for (int p : sorted) append(p);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double s = bdeuLocalScore(*data_, node, sorted, ess_, maxIndegree_);
    memo_.emplace(std::move(key), s);
    return s;
}

double ScoreCache::total(const CausalGraph& graph) {
    if (!graph.acyclic()) throw DataError("total score: graph contains a cycle");
    double sum = 0.0;
    for (int v = 0; v < graph.nodeCount(); ++v) sum += local(v, graph.parentsOf(v));
    return sum;
}

}  // namespace medrec
