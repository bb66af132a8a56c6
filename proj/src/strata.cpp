#include "medrec/causal/strata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"

namespace medrec {

namespace {

struct PairRow {
    int source;
    int med;
    double effect;
};

// Geometric layer sizes that sum exactly to `count`. Rounding runs from the
// narrow top downward so the strongest layers keep their ideal size; the
// base absorbs the residual.
std::vector<int> pyramidSizes(int count, int layers, double decay) {
    const double r1 = count * (1.0 - decay) / (1.0 - std::pow(decay, layers));
    std::vector<int> sizes(static_cast<std::size_t>(layers), 0);
    double cumIdeal = 0.0;
    int cumInt = 0;
    for (int ell = layers; ell >= 2; --ell) {
        cumIdeal += r1 * std::pow(decay, ell - 1);
        int next = std::min(count, static_cast<int>(std::llround(cumIdeal)));
        sizes[static_cast<std::size_t>(ell - 1)] = next - cumInt;
        cumInt = next;
    }
    sizes[0] = count - cumInt;
    return sizes;
}

}  // namespace

RelevanceStrata stratify(const CausalEffectMatrix& effects, int layers, double decay) {
    if (layers < 2) throw ConfigError("stratify: layer count must be >= 2");
    if (decay <= 0.0 || decay >= 1.0) throw ConfigError("stratify: decay must be in (0, 1)");

    std::vector<PairRow> pairs;
    for (int s = 0; s < effects.values.rows(); ++s)
        for (int m = 0; m < effects.values.cols(); ++m)
            if (effects.values(s, m) != 0.0)
                pairs.push_back({s, m, effects.values(s, m)});
    // Stable on ties, so equal effects keep (source, medication) index order.
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const PairRow& a, const PairRow& b) { return a.effect > b.effect; });

    RelevanceStrata strata;
    strata.sourceKind = effects.sourceKind;
    strata.layers = layers;
    strata.decay = decay;
    strata.layerOf = Eigen::MatrixXi::Zero(effects.values.rows(), effects.values.cols());
    strata.layerSizes = pyramidSizes(static_cast<int>(pairs.size()), layers, decay);
    strata.layerRelevance.assign(static_cast<std::size_t>(layers), 0.0);
    if (static_cast<int>(pairs.size()) < layers) ++strata.warnings;

    std::size_t cursor = 0;
    for (int ell = layers; ell >= 1; --ell) {
        const int size = strata.layerSizes[static_cast<std::size_t>(ell - 1)];
        double sum = 0.0;
        for (int k = 0; k < size; ++k, ++cursor) {
            const PairRow& p = pairs[cursor];
            strata.layerOf(p.source, p.med) = ell;
            sum += p.effect;
        }
        if (size > 0) strata.layerRelevance[static_cast<std::size_t>(ell - 1)] = sum / size;
    }
    return strata;
}

void writeStrata(const std::string& path, const RelevanceStrata& strata,
                 const CausalEffectMatrix& effects, const Vocabulary& sourceVocab,
                 const Vocabulary& medVocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "source,medication,effect,layer\n";
    // Rows in descending layer order, then descending effect; mirrors the
    // assignment order so relevance recomputes identically on load.
    std::vector<PairRow> pairs;
    for (int s = 0; s < strata.layerOf.rows(); ++s)
        for (int m = 0; m < strata.layerOf.cols(); ++m)
            if (strata.layerOf(s, m) > 0) pairs.push_back({s, m, effects.values(s, m)});
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const PairRow& a, const PairRow& b) { return a.effect > b.effect; });
    for (const PairRow& p : pairs)
        out << sourceVocab.code(p.source) << ',' << medVocab.code(p.med) << ','
            << fmtDouble(p.effect) << ',' << strata.layerOf(p.source, p.med) << '\n';
}

RelevanceStrata loadStrata(const std::string& path, int layers, double decay,
                           const Vocabulary& sourceVocab, const Vocabulary& medVocab) {
    auto lines = readLines(path);
    if (lines.empty() || lines[0] != "source,medication,effect,layer")
        throw DataError("strata file '" + path + "' missing header");

    RelevanceStrata strata;
    strata.sourceKind = sourceVocab.kind();
    strata.layers = layers;
    strata.decay = decay;
    strata.layerOf = Eigen::MatrixXi::Zero(sourceVocab.size(), medVocab.size());
    strata.layerSizes.assign(static_cast<std::size_t>(layers), 0);
    strata.layerRelevance.assign(static_cast<std::size_t>(layers), 0.0);
    std::vector<double> sums(static_cast<std::size_t>(layers), 0.0);

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string ctx = "strata file '" + path + "' line " + std::to_string(i + 1);
        auto c1 = lines[i].find(',');
        auto c2 = c1 == std::string::npos ? std::string::npos : lines[i].find(',', c1 + 1);
        auto c3 = c2 == std::string::npos ? std::string::npos : lines[i].find(',', c2 + 1);
        if (c3 == std::string::npos) throw DataError(ctx + ": expected four columns");
        int s = sourceVocab.find(lines[i].substr(0, c1));
        int m = medVocab.find(lines[i].substr(c1 + 1, c2 - c1 - 1));
        if (s < 0 || m < 0) throw DataError(ctx + ": unknown code");
        double effect = parseDouble(lines[i].substr(c2 + 1, c3 - c2 - 1), ctx);
        int ell = static_cast<int>(parseDouble(lines[i].substr(c3 + 1), ctx));
        if (ell < 1 || ell > layers) throw DataError(ctx + ": layer index out of range");
        strata.layerOf(s, m) = ell;
        ++strata.layerSizes[static_cast<std::size_t>(ell - 1)];
        sums[static_cast<std::size_t>(ell - 1)] += effect;
    }
    for (int ell = 1; ell <= layers; ++ell) {
        int size = strata.layerSizes[static_cast<std::size_t>(ell - 1)];
        if (size > 0)
            strata.layerRelevance[static_cast<std::size_t>(ell - 1)] =
                sums[static_cast<std::size_t>(ell - 1)] / size;
    }
    return strata;
}

}  // namespace medrec
