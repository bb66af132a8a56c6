#include "medrec/synthetic.hpp"

#include <algorithm>
#include <string>

#include "medrec/errors.hpp"
#include "medrec/rng.hpp"

namespace medrec {

namespace {

std::string paddedCode(char prefix, int i) {
    std::string n = std::to_string(i);
    while (n.size() < 3) n.insert(n.begin(), '0');
    return prefix + n;
}

void checkProbability(double v, const char* name) {
    if (v < 0.0 || v > 1.0)
        throw ConfigError(std::string("generator: ") + name + " must be in [0,1], got " +
                          std::to_string(v));
}

}  // namespace

SyntheticData generateSynthetic(const SyntheticSpec& spec) {
    if (spec.diseases < 2 || spec.procedures < 2 || spec.medications < 2 || spec.molecules < 2)
        throw ConfigError("generator: vocabulary sizes must all be >= 2");
    if (spec.patients < 1) throw ConfigError("generator: patients must be >= 1");
    if (spec.maxVisits < 1) throw ConfigError("generator: max visits must be >= 1");
    if (spec.inertDiseases < 0 || spec.inertDiseases >= spec.diseases)
        throw ConfigError("generator: inert diseases must leave at least one active disease");
    if (spec.molsPerMedMax < 1 || spec.molsPerMedMax > spec.molecules)
        throw ConfigError("generator: molecules per medication out of range");
    checkProbability(spec.dagDensity, "dag density");
    checkProbability(spec.basePrevalence, "base prevalence");
    checkProbability(spec.parentBoost, "parent boost");
    checkProbability(spec.procRate, "procedure rate");
    checkProbability(spec.medBaseRate, "medication base rate");
    checkProbability(spec.ddiDensity, "ddi density");
    for (double r : spec.plantedDisease) checkProbability(r, "planted response");
    for (double r : spec.plantedProcedure) checkProbability(r, "planted response");

    const int nPlanted =
        static_cast<int>(spec.plantedDisease.size() + spec.plantedProcedure.size());
    if (nPlanted > spec.medications)
        throw ConfigError("generator: more planted pairs than medications");
    const int activeDiseases = spec.diseases - spec.inertDiseases;
    if (static_cast<int>(spec.plantedDisease.size()) > activeDiseases)
        throw ConfigError("generator: more disease plants than active diseases");
    if (static_cast<int>(spec.plantedProcedure.size()) > spec.procedures)
        throw ConfigError("generator: more procedure plants than procedures");

    SyntheticData data;
    for (int i = 0; i < spec.diseases; ++i) data.vocabs.diseases.add(paddedCode('d', i));
    for (int i = 0; i < spec.procedures; ++i) data.vocabs.procedures.add(paddedCode('p', i));
    for (int i = 0; i < spec.medications; ++i) data.vocabs.medications.add(paddedCode('m', i));
    for (int i = 0; i < spec.molecules; ++i) data.vocabs.molecules.add(paddedCode('s', i));

    Rng rng(spec.seed);

    // Disease DAG over the active prefix; edges respect index order, so the
    // index order is a topological order.
    for (int child = 1; child < activeDiseases; ++child)
        for (int parent = 0; parent < child; ++parent)
            if (rng.bernoulli(spec.dagDensity))
                data.truth.diseaseDagEdges.emplace_back(parent, child);
    std::vector<std::vector<int>> parentsOf(static_cast<std::size_t>(spec.diseases));
    for (auto [p, c] : data.truth.diseaseDagEdges)
        parentsOf[static_cast<std::size_t>(c)].push_back(p);

    // Molecule membership, 1..molsPerMedMax distinct molecules each.
    data.molecules.membership.assign(static_cast<std::size_t>(spec.medications), {});
    for (int med = 0; med < spec.medications; ++med) {
        int k = rng.intIn(1, spec.molsPerMedMax);
        std::vector<int>& mols = data.molecules.membership[static_cast<std::size_t>(med)];
        while (static_cast<int>(mols.size()) < k) {
            int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.molecules)));
            if (std::find(mols.begin(), mols.end(), s) == mols.end()) mols.push_back(s);
        }
        std::sort(mols.begin(), mols.end());
    }

    // Planted responses: fresh source and fresh medication per pair.
    std::vector<int> diseasePool(static_cast<std::size_t>(activeDiseases));
    for (int i = 0; i < activeDiseases; ++i) diseasePool[static_cast<std::size_t>(i)] = i;
    std::vector<int> procPool(static_cast<std::size_t>(spec.procedures));
    for (int i = 0; i < spec.procedures; ++i) procPool[static_cast<std::size_t>(i)] = i;
    std::vector<int> medPool(static_cast<std::size_t>(spec.medications));
    for (int i = 0; i < spec.medications; ++i) medPool[static_cast<std::size_t>(i)] = i;
    rng.shuffle(diseasePool);
    rng.shuffle(procPool);
    rng.shuffle(medPool);
    std::size_t medCursor = 0;
    for (std::size_t i = 0; i < spec.plantedDisease.size(); ++i)
        data.truth.effectPairs.push_back(
            {EntityKind::Disease, diseasePool[i], medPool[medCursor++], spec.plantedDisease[i]});
    for (std::size_t i = 0; i < spec.plantedProcedure.size(); ++i)
        data.truth.effectPairs.push_back(
            {EntityKind::Procedure, procPool[i], medPool[medCursor++], spec.plantedProcedure[i]});

    std::vector<bool> medPlanted(static_cast<std::size_t>(spec.medications), false);
    for (const auto& pp : data.truth.effectPairs)
        medPlanted[static_cast<std::size_t>(pp.medication)] = true;

    // Interaction pairs avoid planted-planted combinations: interacting
    // medications should rarely be co-prescribed in the ground truth.
    data.ddi = DdiMatrix(spec.medications);
    for (int a = 0; a < spec.medications; ++a)
        for (int b = a + 1; b < spec.medications; ++b) {
            if (medPlanted[static_cast<std::size_t>(a)] &&
                medPlanted[static_cast<std::size_t>(b)])
                continue;
            if (rng.bernoulli(spec.ddiDensity)) {
                data.ddi.set(a, b);
                data.truth.ddiPairs.emplace_back(a, b);
            }
        }

    // Patient visits. Diseases are sampled ancestrally down the DAG;
    // medications respond to their planted source when it is present.
    for (int pi = 0; pi < spec.patients; ++pi) {
        PatientRecord rec;
        rec.patientId = "pt" + std::to_string(100000 + pi);
        int nVisits = rng.intIn(1, spec.maxVisits);
        for (int vi = 0; vi < nVisits; ++vi) {
            Visit visit;
            std::vector<bool> present(static_cast<std::size_t>(spec.diseases), false);
            for (int d = 0; d < activeDiseases; ++d) {
                bool parentActive = false;
                for (int p : parentsOf[static_cast<std::size_t>(d)])
                    if (present[static_cast<std::size_t>(p)]) parentActive = true;
                double prob = parentActive ? spec.parentBoost : spec.basePrevalence;
                if (rng.bernoulli(prob)) {
                    present[static_cast<std::size_t>(d)] = true;
                    visit.diseases.push_back(d);
                }
            }
            if (visit.diseases.empty())
                visit.diseases.push_back(
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(activeDiseases))));

            for (int p = 0; p < spec.procedures; ++p)
                if (rng.bernoulli(spec.procRate)) visit.procedures.push_back(p);
            if (visit.procedures.empty())
                visit.procedures.push_back(
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.procedures))));

            std::vector<bool> medIn(static_cast<std::size_t>(spec.medications), false);
            for (const auto& pp : data.truth.effectPairs) {
                const std::vector<int>& src = pp.sourceKind == EntityKind::Disease
                                                  ? visit.diseases
                                                  : visit.procedures;
                bool hit = std::find(src.begin(), src.end(), pp.source) != src.end();
                if (hit && rng.bernoulli(pp.rho))
                    medIn[static_cast<std::size_t>(pp.medication)] = true;
            }
            for (int m = 0; m < spec.medications; ++m)
                if (rng.bernoulli(spec.medBaseRate)) medIn[static_cast<std::size_t>(m)] = true;
            for (int m = 0; m < spec.medications; ++m)
                if (medIn[static_cast<std::size_t>(m)]) visit.medications.push_back(m);
            if (visit.medications.empty()) {
                // Prefer the strongest planted medication whose source is in
                // the visit, so the fallback never weakens a planted signal.
                int best = -1;
                double bestRho = -1.0;
                for (const auto& pp : data.truth.effectPairs) {
                    const std::vector<int>& src = pp.sourceKind == EntityKind::Disease
                                                      ? visit.diseases
                                                      : visit.procedures;
                    if (std::find(src.begin(), src.end(), pp.source) != src.end() &&
                        pp.rho > bestRho) {
                        best = pp.medication;
                        bestRho = pp.rho;
                    }
                }
                if (best < 0)
                    best = static_cast<int>(
                        rng.below(static_cast<std::uint64_t>(spec.medications)));
                visit.medications.push_back(best);
            }
            rec.visits.push_back(std::move(visit));
        }
        data.records.push_back(std::move(rec));
    }
    return data;
}

}  // namespace medrec
