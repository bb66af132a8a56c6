#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "medrec/ddi.hpp"
#include "medrec/molecules.hpp"
#include "medrec/records.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Knobs for the synthetic EHR corpus. Prevalences and densities are
// probabilities; sizes are vocabulary cardinalities.
struct SyntheticSpec {
    int patients = 2000;
    int diseases = 30;
    int procedures = 10;
    int medications = 20;
    int molecules = 15;
    int maxVisits = 4;
    // Vocabulary entries that never occur in any visit; they exercise the
    // zero-effect path for pairs with no co-occurrence support.
    int inertDiseases = 1;
    double dagDensity = 0.12;
    double basePrevalence = 0.08;
    double parentBoost = 0.65;     // presence probability given an active parent
    double procRate = 0.22;
    double medBaseRate = 0.04;     // spurious prescription probability
    double ddiDensity = 0.08;
    int molsPerMedMax = 3;
    // Planted response probabilities; each entry pairs one fresh source
    // entity with one fresh medication.
    std::vector<double> plantedDisease = {0.98, 0.98, 0.95, 0.95, 0.85, 0.85,
                                          0.80, 0.80, 0.75, 0.70, 0.70};
    std::vector<double> plantedProcedure = {0.98, 0.95};
    std::uint64_t seed = 7;
};

struct PlantedPair {
    EntityKind sourceKind = EntityKind::Disease;
    int source = 0;
    int medication = 0;
    double rho = 0.0;
};

struct SyntheticGroundTruth {
    std::vector<std::pair<int, int>> diseaseDagEdges;  // parent -> child, acyclic
    std::vector<PlantedPair> effectPairs;
    std::vector<std::pair<int, int>> ddiPairs;
};

struct SyntheticData {
    std::vector<PatientRecord> records;
    VocabSet vocabs;
    DdiMatrix ddi;
    MoleculeMap molecules;
    SyntheticGroundTruth truth;
};

SyntheticData generateSynthetic(const SyntheticSpec& spec);

}  // namespace medrec
