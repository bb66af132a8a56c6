#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medrec/causal/effects.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Pyramid layering of nonzero effect pairs. Layer 1 is the wide base of
// weak pairs; layer n is the narrow top of the strongest pairs. Layer sizes
// follow a geometric series with ratio `decay`.
struct RelevanceStrata {
    EntityKind sourceKind = EntityKind::Disease;
    int layers = 0;
    double decay = 0.0;
    Eigen::MatrixXi layerOf;             // |source| x |M|; 0 = unassigned
    std::vector<int> layerSizes;         // index ell-1
    std::vector<double> layerRelevance;  // mean effect per layer, index ell-1
    int warnings = 0;

    int layer(int source, int med) const { return layerOf(source, med); }
};

RelevanceStrata stratify(const CausalEffectMatrix& effects, int layers, double decay);

void writeStrata(const std::string& path, const RelevanceStrata& strata,
                 const CausalEffectMatrix& effects, const Vocabulary& sourceVocab,
                 const Vocabulary& medVocab);
RelevanceStrata loadStrata(const std::string& path, int layers, double decay,
                           const Vocabulary& sourceVocab, const Vocabulary& medVocab);

}  // namespace medrec
