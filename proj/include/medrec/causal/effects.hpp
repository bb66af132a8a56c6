#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medrec/causal/score.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Source-entity -> medication effect sizes in [0,1]. Entry (s, m) is the
// logistic-regression response probability for medication m with only
// source s active; pairs without co-occurrence support stay exactly 0.
struct CausalEffectMatrix {
    EntityKind sourceKind = EntityKind::Disease;
    Eigen::MatrixXd values;                     // |source| x |M|
    std::vector<double> intercepts;             // per medication
    std::vector<std::vector<int>> candidates;   // per medication, source indices
    std::vector<Eigen::VectorXd> coefficients;  // per medication, aligned with candidates
    int separationWarnings = 0;

    double effect(int source, int med) const { return values(source, med); }
};

struct EffectConfig {
    int minSupport = 5;
    int maxIterations = 50;
    double ridge = 1e-8;
    double convergenceTol = 1e-10;
    // Coefficients beyond this magnitude indicate separation; affected
    // effects are clamped into [separationEps, 1 - separationEps].
    double separationBound = 25.0;
    double separationEps = 1e-4;
};

// Fits one logistic GLM per medication: occurrence regressed on indicator
// covariates of co-occurring source entities.
CausalEffectMatrix estimateCausalEffects(const BinaryTable& sources, const BinaryTable& meds,
                                         EntityKind sourceKind, const EffectConfig& config);

void writeEffects(const std::string& csvPath, const CausalEffectMatrix& effects,
                  const Vocabulary& sourceVocab, const Vocabulary& medVocab);
CausalEffectMatrix loadEffects(const std::string& csvPath, const Vocabulary& sourceVocab,
                               const Vocabulary& medVocab);

}  // namespace medrec
