#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "medrec/causal/effects.hpp"
#include "medrec/config.hpp"
#include "medrec/ddi.hpp"
#include "medrec/metrics.hpp"
#include "medrec/model/network.hpp"
#include "medrec/molecules.hpp"
#include "medrec/records.hpp"
#include "medrec/sampling.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Stage outputs live in directories addressed by the fingerprint of the
// config keys that stage depends on; a config change relocates exactly the
// stages it invalidates.
std::string hex16(std::uint64_t v);
std::filesystem::path stageDir(const RunConfig& cfg, ConfigScope scope);

struct LoadedData {
    std::vector<PatientRecord> records;
    VocabSet vocabs;
    DdiMatrix ddi;
    MoleculeMap molecules;
};

struct MinedArtifacts {
    MiningArtifacts mining;
    CausalEffectMatrix diseaseMed;
    CausalEffectMatrix procedureMed;
};

// Conditional-rate matrix rate(s, m) = P(med m in visit | source s in
// visit) over the chosen patients; the relation strata used when mined
// relations are ablated away.
CausalEffectMatrix cooccurrenceEffects(const std::vector<PatientRecord>& records,
                                       const std::vector<int>& patientIndices, EntityKind kind,
                                       const VocabSet& vocabs);

void cmdGenerate(const RunConfig& cfg, std::ostream& log);
LoadedData loadData(const RunConfig& cfg);
DatasetSplit splitFor(const RunConfig& cfg, int nPatients);

void cmdMine(const RunConfig& cfg, std::ostream& log);

// Assembles the model-facing artifacts for the current flags: mined or
// co-occurrence strata, mined or empty role graphs, and the effect
// matrices when wanted (needEffects). Missing files raise
// MissingArtifactError naming the stage to run.
MinedArtifacts assembleArtifacts(const RunConfig& cfg, const LoadedData& data,
                                 const DatasetSplit& split, bool needEffects);

void cmdTrain(const RunConfig& cfg, std::ostream& log);
MetricReport runEvaluation(const RunConfig& cfg, const std::string& checkpointOverride,
                           std::ostream& log);
void cmdEvaluate(const RunConfig& cfg, const std::string& checkpointOverride, std::ostream& log);
void cmdExplain(const RunConfig& cfg, const std::string& checkpointOverride,
                const std::string& patientId, std::ostream& log);
void cmdAblate(const RunConfig& cfg, std::ostream& log);

// Artifact file names within their stage directories.
inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kDdiFile = "ddi.csv";
inline constexpr const char* kMoleculesFile = "molecule_map.csv";
inline constexpr const char* kVocabFile = "vocab.json";
inline constexpr const char* kGroundTruthFile = "ground_truth.json";
inline constexpr const char* kGraphDiseaseFile = "graph_disease.csv";
inline constexpr const char* kGraphProcedureFile = "graph_procedure.csv";
inline constexpr const char* kGraphMedicationFile = "graph_medication.csv";
inline constexpr const char* kEffectsDmFile = "effects_dm.csv";
inline constexpr const char* kEffectsPmFile = "effects_pm.csv";
inline constexpr const char* kStrataDmFile = "strata_dm.csv";
inline constexpr const char* kStrataPmFile = "strata_pm.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kRunLogFile = "run_log.csv";
inline constexpr const char* kMetricReportFile = "metric_report.csv";
inline constexpr const char* kAuditFile = "correction_audit.csv";
inline constexpr const char* kAblationFile = "ablation_table.csv";
inline constexpr const char* kConfigStampFile = "config.txt";

}  // namespace medrec
