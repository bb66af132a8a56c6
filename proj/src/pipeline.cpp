#include "medrec/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "medrec/causal/graph.hpp"
#include "medrec/causal/score.hpp"
#include "medrec/causal/search.hpp"
#include "medrec/causal/strata.hpp"
#include "medrec/correction.hpp"
#include "medrec/errors.hpp"
#include "medrec/evaluate.hpp"
#include "medrec/io.hpp"
#include "medrec/model/model.hpp"
#include "medrec/synthetic.hpp"
#include "medrec/train.hpp"

namespace medrec {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex16(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::filesystem::path stageDir(const RunConfig& cfg, ConfigScope scope) {
    const char* names[] = {"data", "mine", "train", "eval"};
    const std::string name = names[static_cast<int>(scope)];
    return fs::path(cfg.out) / (name + "-" + hex16(cfg.fingerprint(scope)));
}

namespace {

void requireFile(const fs::path& p, const std::string& stage, const std::string& command) {
    if (!fs::exists(p)) {
        throw MissingArtifactError(stage + " artifact missing: " + p.string() + " (run '" +
                                   command + "' first)");
    }
}

void stampConfig(const RunConfig& cfg, ConfigScope scope, const fs::path& dir) {
    std::ofstream out(dir / kConfigStampFile, std::ios::binary);
    out << cfg.canonicalText(scope);
}

}  // namespace

CausalEffectMatrix cooccurrenceEffects(const std::vector<PatientRecord>& records,
                                       const std::vector<int>& patientIndices, EntityKind kind,
                                       const VocabSet& vocabs) {
    const int nSrc = kind == EntityKind::Disease ? vocabs.diseases.size()
                                                 : vocabs.procedures.size();
    const int nMed = vocabs.medications.size();
    BinaryTable src = BinaryTable::fromVisits(records, patientIndices, kind, nSrc);
    BinaryTable med =
        BinaryTable::fromVisits(records, patientIndices, EntityKind::Medication, nMed);

    CausalEffectMatrix out;
    out.sourceKind = kind;
    out.values = Eigen::MatrixXd::Zero(nSrc, nMed);
    for (int s = 0; s < nSrc; ++s) {
        int srcCount = src.columnSum(s);
        if (srcCount == 0) continue;
        for (int m = 0; m < nMed; ++m) {
            int both = 0;
            for (int r = 0; r < src.rows(); ++r)
                if (src.at(r, s) && med.at(r, m)) ++both;
            out.values(s, m) = static_cast<double>(both) / static_cast<double>(srcCount);
        }
    }
    return out;
}

void cmdGenerate(const RunConfig& cfg, std::ostream& log) {
    SyntheticSpec spec = cfg.gen;
    spec.seed = stageSeed(cfg.seed, kStreamGenerate);
    SyntheticData data = generateSynthetic(spec);

    const fs::path dir = stageDir(cfg, ConfigScope::Data);
    fs::create_directories(dir);
    writeRecords((dir / kRecordsFile).string(), data.records, data.vocabs);
    writeDdi((dir / kDdiFile).string(), data.ddi, data.vocabs.medications);
    writeMoleculeMap((dir / kMoleculesFile).string(), data.molecules, data.vocabs.medications,
                     data.vocabs.molecules);
    writeVocabs((dir / kVocabFile).string(), data.vocabs);

    json truth;
    truth["dag_edges"] = json::array();
    for (auto [a, b] : data.truth.diseaseDagEdges) {
        truth["dag_edges"].push_back(
            {data.vocabs.diseases.code(a), data.vocabs.diseases.code(b)});
    }
    truth["effect_pairs"] = json::array();
    for (const PlantedPair& p : data.truth.effectPairs) {
        const Vocabulary& srcVocab = p.sourceKind == EntityKind::Disease
                                         ? data.vocabs.diseases
                                         : data.vocabs.procedures;
        truth["effect_pairs"].push_back({{"kind", kindName(p.sourceKind)},
                                         {"source", srcVocab.code(p.source)},
                                         {"medication", data.vocabs.medications.code(p.medication)},
                                         {"rho", p.rho}});
    }
    truth["ddi_pairs"] = json::array();
    for (auto [a, b] : data.truth.ddiPairs) {
        truth["ddi_pairs"].push_back(
            {data.vocabs.medications.code(a), data.vocabs.medications.code(b)});
    }
    {
        std::ofstream out(dir / kGroundTruthFile, std::ios::binary);
        if (!out) throw DataError("cannot write ground truth file");
        out << truth.dump(2) << '\n';
    }
    stampConfig(cfg, ConfigScope::Data, dir);

    long long visits = 0;
    for (const auto& r : data.records) visits += static_cast<long long>(r.visits.size());
    log << "generated " << data.records.size() << " patients, " << visits << " visits\n"
        << "vocabulary: " << data.vocabs.diseases.size() << " diseases, "
        << data.vocabs.procedures.size() << " procedures, " << data.vocabs.medications.size()
        << " medications, " << data.vocabs.molecules.size() << " molecules\n"
        << "planted effect pairs: " << data.truth.effectPairs.size()
        << ", interaction pairs: " << data.truth.ddiPairs.size() << '\n'
        << "wrote " << dir.string() << '\n';
}

LoadedData loadData(const RunConfig& cfg) {
    std::string recordsPath, ddiPath, molPath, vocabPath;
    if (!cfg.dataRecords.empty()) {
        if (cfg.dataDdi.empty() || cfg.dataMolecules.empty()) {
            throw ConfigError(
                "external data needs data.records, data.ddi and data.molecules together");
        }
        recordsPath = cfg.dataRecords;
        ddiPath = cfg.dataDdi;
        molPath = cfg.dataMolecules;
        vocabPath = cfg.dataVocab;
        if (!fs::exists(recordsPath)) throw MissingArtifactError("records file not found: " + recordsPath);
    } else {
        const fs::path dir = stageDir(cfg, ConfigScope::Data);
        requireFile(dir / kRecordsFile, "data", "generate");
        requireFile(dir / kDdiFile, "data", "generate");
        requireFile(dir / kMoleculesFile, "data", "generate");
        requireFile(dir / kVocabFile, "data", "generate");
        recordsPath = (dir / kRecordsFile).string();
        ddiPath = (dir / kDdiFile).string();
        molPath = (dir / kMoleculesFile).string();
        vocabPath = (dir / kVocabFile).string();
    }

    LoadOptions opts;
    opts.strict = cfg.strict;

    LoadedData data;
    if (!vocabPath.empty()) {
        VocabSet fixed = loadVocabs(vocabPath);
        auto res = loadRecords(recordsPath, &fixed, opts);
        data.records = std::move(res.records);
        data.vocabs = std::move(fixed);
    } else {
        auto res = loadRecords(recordsPath, nullptr, opts);
        data.records = std::move(res.records);
        data.vocabs = std::move(res.vocabs);
    }
    if (data.records.empty()) throw DataError("no usable patients in " + recordsPath);

    data.ddi = loadDdi(ddiPath, data.vocabs.medications, opts).matrix;
    auto mol = loadMoleculeMap(molPath, data.vocabs.medications, opts);
    data.molecules = std::move(mol.map);
    data.vocabs.molecules = std::move(mol.moleculeVocab);
    return data;
}

DatasetSplit splitFor(const RunConfig& cfg, int nPatients) {
    return splitDataset(nPatients, cfg.split, stageSeed(cfg.seed, kStreamSplit));
}

void cmdMine(const RunConfig& cfg, std::ostream& log) {
    LoadedData data = loadData(cfg);
    DatasetSplit split = splitFor(cfg, static_cast<int>(data.records.size()));
    if (split.train.empty()) throw DataError("training split is empty");

    const VocabSet& v = data.vocabs;
    BinaryTable dT = BinaryTable::fromVisits(data.records, split.train, EntityKind::Disease,
                                             v.diseases.size());
    BinaryTable pT = BinaryTable::fromVisits(data.records, split.train, EntityKind::Procedure,
                                             v.procedures.size());
    BinaryTable mT = BinaryTable::fromVisits(data.records, split.train, EntityKind::Medication,
                                             v.medications.size());

    const fs::path dir = stageDir(cfg, ConfigScope::Mine);
    fs::create_directories(dir);

    struct KindJob {
        const char* file;
        EntityKind kind;
        const BinaryTable* table;
        const Vocabulary* vocab;
    };
    const KindJob jobs[] = {
        {kGraphDiseaseFile, EntityKind::Disease, &dT, &v.diseases},
        {kGraphProcedureFile, EntityKind::Procedure, &pT, &v.procedures},
        {kGraphMedicationFile, EntityKind::Medication, &mT, &v.medications},
    };
    for (const KindJob& job : jobs) {
        SearchResult res = greedyEquivalenceSearch(*job.table, job.kind, cfg.mine);
        writeCausalGraph((dir / job.file).string(), res.graph, *job.vocab);
        log << kindName(job.kind) << " graph: " << res.graph.edgeCount() << " edges, score "
            << fmtDouble(res.score) << ", " << res.acceptedMoves << " moves"
            << (res.hitMoveBound ? " (move bound hit)" : "") << '\n';
    }

    CausalEffectMatrix dm =
        estimateCausalEffects(dT, mT, EntityKind::Disease, cfg.effectConfig());
    CausalEffectMatrix pm =
        estimateCausalEffects(pT, mT, EntityKind::Procedure, cfg.effectConfig());
    writeEffects((dir / kEffectsDmFile).string(), dm, v.diseases, v.medications);
    writeEffects((dir / kEffectsPmFile).string(), pm, v.procedures, v.medications);

    RelevanceStrata sdm = stratify(dm, cfg.strataLayers, cfg.strataDecay);
    RelevanceStrata spm = stratify(pm, cfg.strataLayers, cfg.strataDecay);
    writeStrata((dir / kStrataDmFile).string(), sdm, dm, v.diseases, v.medications);
    writeStrata((dir / kStrataPmFile).string(), spm, pm, v.procedures, v.medications);
    stampConfig(cfg, ConfigScope::Mine, dir);

    auto describe = [&](const char* name, const CausalEffectMatrix& m,
                        const RelevanceStrata& s) {
        int nonzero = 0;
        for (int i = 0; i < m.values.rows(); ++i)
            for (int j = 0; j < m.values.cols(); ++j)
                if (m.values(i, j) != 0.0) ++nonzero;
        log << name << ": " << nonzero << " scored pairs";
        if (m.separationWarnings > 0) log << ", " << m.separationWarnings << " separation clamps";
        log << "; layer sizes";
        for (int ell = s.layers; ell >= 1; --ell)
            log << ' ' << s.layerSizes[static_cast<std::size_t>(ell - 1)];
        log << " (top to base)\n";
    };
    describe("disease-medication effects", dm, sdm);
    describe("procedure-medication effects", pm, spm);
    log << "wrote " << dir.string() << '\n';
}

MinedArtifacts assembleArtifacts(const RunConfig& cfg, const LoadedData& data,
                                 const DatasetSplit& split, bool needEffects) {
    const VocabSet& v = data.vocabs;
    MinedArtifacts out;
    const fs::path dir = stageDir(cfg, ConfigScope::Mine);

    if (cfg.woC) {
        out.mining.diseaseGraph = CausalGraph(EntityKind::Disease, v.diseases.size());
        out.mining.procedureGraph = CausalGraph(EntityKind::Procedure, v.procedures.size());
        out.mining.medicationGraph = CausalGraph(EntityKind::Medication, v.medications.size());
        out.mining.diseaseMed = stratify(
            cooccurrenceEffects(data.records, split.train, EntityKind::Disease, v),
            cfg.strataLayers, cfg.strataDecay);
        out.mining.procedureMed = stratify(
            cooccurrenceEffects(data.records, split.train, EntityKind::Procedure, v),
            cfg.strataLayers, cfg.strataDecay);
    } else {
        requireFile(dir / kGraphDiseaseFile, "mining", "mine");
        out.mining.diseaseGraph = loadCausalGraph((dir / kGraphDiseaseFile).string(), v.diseases);
        out.mining.procedureGraph =
            loadCausalGraph((dir / kGraphProcedureFile).string(), v.procedures);
        out.mining.medicationGraph =
            loadCausalGraph((dir / kGraphMedicationFile).string(), v.medications);
        out.mining.diseaseMed = loadStrata((dir / kStrataDmFile).string(), cfg.strataLayers,
                                           cfg.strataDecay, v.diseases, v.medications);
        out.mining.procedureMed = loadStrata((dir / kStrataPmFile).string(), cfg.strataLayers,
                                             cfg.strataDecay, v.procedures, v.medications);
    }

    if (needEffects) {
        requireFile(dir / kEffectsDmFile, "mining", "mine");
        out.diseaseMed = loadEffects((dir / kEffectsDmFile).string(), v.diseases, v.medications);
        out.procedureMed =
            loadEffects((dir / kEffectsPmFile).string(), v.procedures, v.medications);
    }
    return out;
}

void cmdTrain(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    LoadedData data = loadData(cfg);
    DatasetSplit split = splitFor(cfg, static_cast<int>(data.records.size()));

    // Mining artifacts must exist before training unless both structure
    // ablations are active.
    if (!(cfg.woC && cfg.woF)) {
        requireFile(stageDir(cfg, ConfigScope::Mine) / kConfigStampFile, "mining", "mine");
    }
    const bool needEffects = cfg.loss.correctInLoss;
    MinedArtifacts mined = assembleArtifacts(cfg, data, split, needEffects);

    Model model(cfg.modelConfig(), data.vocabs, data.molecules, std::move(mined.mining));
    model.initParams();

    const fs::path dir = stageDir(cfg, ConfigScope::Model);
    fs::create_directories(dir);
    std::ofstream runLog(dir / kRunLogFile, std::ios::binary);
    if (!runLog) throw DataError("cannot open run log for writing");

    TrainResult res = train(model, data.records, split, data.ddi, cfg,
                            needEffects ? &mined.diseaseMed : nullptr,
                            needEffects ? &mined.procedureMed : nullptr, &runLog);

    writeCheckpoint((dir / kCheckpointFile).string(), model.params(),
                    cfg.fingerprint(ConfigScope::Model));
    stampConfig(cfg, ConfigScope::Model, dir);

    log << "trained " << cfg.epochs << " epochs on " << split.train.size() << " patients\n";
    log << "epoch loss first/last: " << fmtDouble(res.epochLoss.front()) << " / "
        << fmtDouble(res.epochLoss.back()) << '\n';
    log << "best validation jaccard " << fmtDouble(res.bestValJaccard) << " at epoch "
        << res.bestEpoch << '\n';
    for (const std::string& w : model.warnings()) log << "warning: " << w << '\n';
    log << "wrote " << dir.string() << '\n';
}

MetricReport runEvaluation(const RunConfig& cfg, const std::string& checkpointOverride,
                           std::ostream& log) {
    cfg.validate();
    LoadedData data = loadData(cfg);
    DatasetSplit split = splitFor(cfg, static_cast<int>(data.records.size()));
    if (split.test.empty()) throw DataError("test split is empty");

    const bool needEffects = !cfg.woBC || cfg.loss.correctInLoss;
    MinedArtifacts mined = assembleArtifacts(cfg, data, split, needEffects);

    Model model(cfg.modelConfig(), data.vocabs, data.molecules, std::move(mined.mining));
    model.initParams();

    fs::path ckpt = checkpointOverride.empty()
                        ? stageDir(cfg, ConfigScope::Model) / kCheckpointFile
                        : fs::path(checkpointOverride);
    requireFile(ckpt, "training", "train");
    loadCheckpoint(ckpt.string(), model.params(), cfg.fingerprint(ConfigScope::Model));

    EvalOptions opts;
    opts.applyCorrection = !cfg.woBC;
    opts.correction = cfg.correction;
    opts.diseaseMed = needEffects ? &mined.diseaseMed : nullptr;
    opts.procedureMed = needEffects ? &mined.procedureMed : nullptr;
    opts.threshold = cfg.correction.selectionThreshold;

    std::vector<CorrectionAuditRow> audit;
    MetricReport report = bootstrapEvaluate(
        model, data.records, split.test, data.ddi, opts, cfg.evalRounds, cfg.evalFraction,
        cfg.evalReplacement, stageSeed(cfg.seed, kStreamBootstrap), &data.vocabs.medications,
        opts.applyCorrection ? &audit : nullptr);

    const fs::path dir = stageDir(cfg, ConfigScope::Eval);
    fs::create_directories(dir);
    writeMetricReport((dir / kMetricReportFile).string(), report);
    if (opts.applyCorrection) writeAuditCsv((dir / kAuditFile).string(), audit);
    stampConfig(cfg, ConfigScope::Eval, dir);

    auto cell = [](double m, double s) { return fmtDouble(m) + "+-" + fmtDouble(s); };
    log << "test metrics over " << cfg.evalRounds << " rounds (mean+-stderr):\n"
        << "  jaccard " << cell(report.mean.jaccard, report.stderrOfMean.jaccard) << '\n'
        << "  ddi     " << cell(report.mean.ddi, report.stderrOfMean.ddi) << '\n'
        << "  f1      " << cell(report.mean.f1, report.stderrOfMean.f1) << '\n'
        << "  prauc   " << cell(report.mean.prauc, report.stderrOfMean.prauc) << '\n'
        << "  avg_med " << cell(report.mean.avgMed, report.stderrOfMean.avgMed) << '\n'
        << "wrote " << dir.string() << '\n';
    return report;
}

void cmdEvaluate(const RunConfig& cfg, const std::string& checkpointOverride,
                 std::ostream& log) {
    runEvaluation(cfg, checkpointOverride, log);
}

void cmdExplain(const RunConfig& cfg, const std::string& checkpointOverride,
                const std::string& patientId, std::ostream& log) {
    cfg.validate();
    LoadedData data = loadData(cfg);
    DatasetSplit split = splitFor(cfg, static_cast<int>(data.records.size()));

    const PatientRecord* patient = nullptr;
    for (const auto& r : data.records) {
        if (r.patientId == patientId) {
            patient = &r;
            break;
        }
    }
    if (!patient) throw DataError("unknown patient '" + patientId + "'");

    MinedArtifacts mined = assembleArtifacts(cfg, data, split, true);
    Model model(cfg.modelConfig(), data.vocabs, data.molecules, std::move(mined.mining));
    model.initParams();
    fs::path ckpt = checkpointOverride.empty()
                        ? stageDir(cfg, ConfigScope::Model) / kCheckpointFile
                        : fs::path(checkpointOverride);
    requireFile(ckpt, "training", "train");
    loadCheckpoint(ckpt.string(), model.params(), cfg.fingerprint(ConfigScope::Model));

    Tape tape;
    std::vector<Var> probs = model.forwardPatient(tape, *patient);
    for (std::size_t t = 0; t < patient->visits.size(); ++t) {
        const Eigen::MatrixXd& p = tape.value(probs[t]);
        std::vector<double> raw(static_cast<std::size_t>(p.rows()));
        for (Eigen::Index i = 0; i < p.rows(); ++i) raw[static_cast<std::size_t>(i)] = p(i, 0);
        RecommendationResult res = correct(raw, patient->visits[t], mined.diseaseMed,
                                           mined.procedureMed, cfg.correction);
        log << "patient " << patientId << " visit " << t + 1 << ":\n";
        log << "  medication      raw   effect  branch     corrected\n";
        for (std::size_t m = 0; m < raw.size(); ++m) {
            std::ostringstream row;
            row << "  " << std::left << std::setw(12)
                << data.vocabs.medications.code(static_cast<int>(m)) << std::right << std::fixed
                << std::setprecision(4) << std::setw(8) << res.raw[m] << ' ' << std::setw(8)
                << res.maxEffect[m] << "  " << std::left << std::setw(9)
                << branchName(res.branch[m]) << std::right << std::setw(10) << res.corrected[m];
            log << row.str() << '\n';
        }
        log << "  selected:";
        for (int m : res.selected) log << ' ' << data.vocabs.medications.code(m);
        log << '\n';
    }
}

void cmdAblate(const RunConfig& cfg, std::ostream& log) {
    struct Variant {
        const char* name;
        bool woC, woF, woBC;
    };
    const Variant variants[] = {
        {"full", false, false, false}, {"wo_C", true, false, false},
        {"wo_F", false, true, false},  {"wo_BC", false, false, true},
        {"wo_C+F+BC", true, true, true},
    };

    const fs::path dir =
        fs::path(cfg.out) / ("ablate-" + hex16(cfg.fingerprint(ConfigScope::Eval)));
    fs::create_directories(dir);
    std::ofstream table(dir / kAblationFile, std::ios::binary);
    if (!table) throw DataError("cannot open ablation table for writing");
    table << "variant,wo_c,wo_f,wo_bc,jaccard,ddi,f1,prauc,avg_med\n";

    for (const Variant& var : variants) {
        RunConfig vc = cfg;
        vc.woC = var.woC;
        vc.woF = var.woF;
        vc.woBC = var.woBC;

        log << "=== variant " << var.name << " ===\n";
        if (!fs::exists(stageDir(vc, ConfigScope::Data) / kRecordsFile)) {
            cmdGenerate(vc, log);
        }
        const bool needMine = !(vc.woC && vc.woF) || !vc.woBC;
        if (needMine && !fs::exists(stageDir(vc, ConfigScope::Mine) / kConfigStampFile)) {
            cmdMine(vc, log);
        }
        if (!fs::exists(stageDir(vc, ConfigScope::Model) / kCheckpointFile)) {
            cmdTrain(vc, log);
        }
        MetricReport rep = runEvaluation(vc, "", log);
        table << var.name << ',' << (var.woC ? 1 : 0) << ',' << (var.woF ? 1 : 0) << ','
              << (var.woBC ? 1 : 0) << ',' << fmtDouble(rep.mean.jaccard) << ','
              << fmtDouble(rep.mean.ddi) << ',' << fmtDouble(rep.mean.f1) << ','
              << fmtDouble(rep.mean.prauc) << ',' << fmtDouble(rep.mean.avgMed) << '\n';
    }
    log << "wrote " << (dir / kAblationFile).string() << '\n';
}

}  // namespace medrec
