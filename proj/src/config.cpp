#include "medrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"
#include "medrec/model/tape.hpp"

namespace medrec {

namespace {

enum class KeyType { I32, U64, Dbl, Bool, Str };

struct Binding {
    const char* key;
    int level;  // first ConfigScope needing the key; 4 = never fingerprinted
    KeyType type;
    void* p;
};

constexpr int kNoScope = 4;

std::vector<Binding> bindings(RunConfig& c) {
    return {
        {"seed", 0, KeyType::U64, &c.seed},
        {"out", kNoScope, KeyType::Str, &c.out},
        {"strict", kNoScope, KeyType::Bool, &c.strict},
        {"data.records", 0, KeyType::Str, &c.dataRecords},
        {"data.ddi", 0, KeyType::Str, &c.dataDdi},
        {"data.molecules", 0, KeyType::Str, &c.dataMolecules},
        {"data.vocab", 0, KeyType::Str, &c.dataVocab},
        {"gen.patients", 0, KeyType::I32, &c.gen.patients},
        {"gen.diseases", 0, KeyType::I32, &c.gen.diseases},
        {"gen.procedures", 0, KeyType::I32, &c.gen.procedures},
        {"gen.medications", 0, KeyType::I32, &c.gen.medications},
        {"gen.molecules", 0, KeyType::I32, &c.gen.molecules},
        {"gen.max_visits", 0, KeyType::I32, &c.gen.maxVisits},
        {"gen.inert_diseases", 0, KeyType::I32, &c.gen.inertDiseases},
        {"gen.dag_density", 0, KeyType::Dbl, &c.gen.dagDensity},
        {"gen.base_prevalence", 0, KeyType::Dbl, &c.gen.basePrevalence},
        {"gen.parent_boost", 0, KeyType::Dbl, &c.gen.parentBoost},
        {"gen.proc_rate", 0, KeyType::Dbl, &c.gen.procRate},
        {"gen.med_base_rate", 0, KeyType::Dbl, &c.gen.medBaseRate},
        {"gen.ddi_density", 0, KeyType::Dbl, &c.gen.ddiDensity},
        {"gen.mols_per_med_max", 0, KeyType::I32, &c.gen.molsPerMedMax},
        {"split.train", 1, KeyType::Dbl, &c.split.train},
        {"split.val", 1, KeyType::Dbl, &c.split.val},
        {"split.test", 1, KeyType::Dbl, &c.split.test},
        {"mine.ess", 1, KeyType::Dbl, &c.mine.ess},
        {"mine.max_indegree", 1, KeyType::I32, &c.mine.maxIndegree},
        {"mine.min_support", 1, KeyType::I32, &c.mine.minSupport},
        {"mine.max_moves", 1, KeyType::I32, &c.mine.maxMoves},
        {"strata.layers", 1, KeyType::I32, &c.strataLayers},
        {"strata.decay", 1, KeyType::Dbl, &c.strataDecay},
        {"model.dim", 2, KeyType::I32, &c.modelDim},
        {"model.fine_layers", 2, KeyType::I32, &c.fineLayers},
        {"model.coarse_layers", 2, KeyType::I32, &c.coarseLayers},
        {"model.relation_types", 2, KeyType::I32, &c.relationTypes},
        {"model.cycles", 2, KeyType::I32, &c.cycles},
        {"model.mlp_hidden", 2, KeyType::I32, &c.mlpHidden},
        {"model.activation", 2, KeyType::Str, &c.activation},
        {"correct.delta1", 2, KeyType::Dbl, &c.correction.delta1},
        {"correct.delta2", 2, KeyType::Dbl, &c.correction.delta2},
        {"correct.tau1", 2, KeyType::Dbl, &c.correction.tau1},
        {"correct.tau2", 2, KeyType::Dbl, &c.correction.tau2},
        {"correct.threshold", 2, KeyType::Dbl, &c.correction.selectionThreshold},
        {"loss.beta", 2, KeyType::Dbl, &c.loss.beta},
        {"loss.gamma", 2, KeyType::Dbl, &c.loss.gamma},
        {"loss.kp", 2, KeyType::Dbl, &c.loss.kp},
        {"loss.correct_in_loss", 2, KeyType::Bool, &c.loss.correctInLoss},
        {"train.epochs", 2, KeyType::I32, &c.epochs},
        {"train.lr", 2, KeyType::Dbl, &c.lr},
        {"train.reg", 2, KeyType::Dbl, &c.reg},
        {"ablate.wo_c", 2, KeyType::Bool, &c.woC},
        {"ablate.wo_f", 2, KeyType::Bool, &c.woF},
        {"eval.rounds", 3, KeyType::I32, &c.evalRounds},
        {"eval.fraction", 3, KeyType::Dbl, &c.evalFraction},
        {"eval.replacement", 3, KeyType::Bool, &c.evalReplacement},
        {"ablate.wo_bc", 3, KeyType::Bool, &c.woBC},
    };
}

std::string formatValue(const Binding& b) {
    switch (b.type) {
        case KeyType::I32: return std::to_string(*static_cast<int*>(b.p));
        case KeyType::U64: return std::to_string(*static_cast<std::uint64_t*>(b.p));
        case KeyType::Dbl: return fmtDouble(*static_cast<double*>(b.p));
        case KeyType::Bool: return *static_cast<bool*>(b.p) ? "true" : "false";
        case KeyType::Str: return *static_cast<std::string*>(b.p);
    }
    return "";
}

void parseInto(const Binding& b, const std::string& key, const std::string& value) {
    switch (b.type) {
        case KeyType::I32: {
            int v = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || ptr != value.data() + value.size())
                throw ConfigError("key " + key + ": '" + value + "' is not an integer");
            *static_cast<int*>(b.p) = v;
            return;
        }
        case KeyType::U64: {
            std::uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || ptr != value.data() + value.size())
                throw ConfigError("key " + key + ": '" + value + "' is not an unsigned integer");
            *static_cast<std::uint64_t*>(b.p) = v;
            return;
        }
        case KeyType::Dbl:
            try {
                *static_cast<double*>(b.p) = parseDouble(value, "config key " + key);
            } catch (const DataError&) {
                throw ConfigError("key " + key + ": '" + value + "' is not a number");
            }
            return;
        case KeyType::Bool:
            if (value == "true" || value == "1") {
                *static_cast<bool*>(b.p) = true;
            } else if (value == "false" || value == "0") {
                *static_cast<bool*>(b.p) = false;
            } else {
                throw ConfigError("key " + key + ": '" + value + "' is not a boolean");
            }
            return;
        case KeyType::Str: *static_cast<std::string*>(b.p) = value; return;
    }
}

std::string trimmed(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::setValue(const std::string& key, const std::string& value) {
    for (const Binding& b : bindings(*this)) {
        if (key == b.key) {
            parseInto(b, key, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::applyAssignment(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("expected key=value, got '" + assignment + "'");
    setValue(trimmed(assignment.substr(0, eq)), trimmed(assignment.substr(eq + 1)));
}

void RunConfig::applyFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trimmed(line);
        if (t.empty() || t[0] == '#') continue;
        try {
            applyAssignment(t);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
}

void RunConfig::validate() const {
    correction.validate();
    loss.validate();
    if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
    if (lr <= 0.0) throw ConfigError("train.lr must be positive");
    if (reg < 0.0) throw ConfigError("train.reg must be non-negative");
    if (modelDim < 1 || mlpHidden < 1) throw ConfigError("model widths must be positive");
    if (fineLayers < 1 || coarseLayers < 1 || cycles < 1)
        throw ConfigError("model depth settings must be positive");
    if (strataLayers < 2) throw ConfigError("strata.layers must be at least 2");
    if (strataDecay <= 0.0 || strataDecay >= 1.0)
        throw ConfigError("strata.decay must lie in (0,1)");
    if (relationTypes < strataLayers)
        throw ConfigError("model.relation_types must cover strata.layers");
    if (evalRounds < 1) throw ConfigError("eval.rounds must be at least 1");
    if (evalFraction <= 0.0 || evalFraction > 1.0)
        throw ConfigError("eval.fraction must lie in (0,1]");
    activationFromName(activation);  // throws on unknown names
}

std::string RunConfig::canonicalText(ConfigScope scope) const {
    auto& self = const_cast<RunConfig&>(*this);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const Binding& b : bindings(self)) {
        if (b.level <= static_cast<int>(scope)) rows.emplace_back(b.key, formatValue(b));
    }
    std::sort(rows.begin(), rows.end());
    std::string text;
    for (const auto& [k, v] : rows) {
        text += k;
        text += '=';
        text += v;
        text += '\n';
    }
    return text;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t RunConfig::fingerprint(ConfigScope scope) const {
    return fnv1a64(canonicalText(scope));
}

std::uint64_t stageSeed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 of the stream-tagged seed
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

EffectConfig RunConfig::effectConfig() const {
    EffectConfig ec;
    ec.minSupport = mine.minSupport;
    return ec;
}

ModelConfig RunConfig::modelConfig() const {
    ModelConfig mc;
    mc.dim = modelDim;
    mc.fineLayers = fineLayers;
    mc.coarseLayers = coarseLayers;
    mc.relationTypes = relationTypes;
    mc.cycles = cycles;
    mc.gruHidden = modelDim;
    mc.mlpHidden = mlpHidden;
    mc.activation = activationFromName(activation);
    mc.woCausalRelations = woC;
    mc.woMolecules = woF;
    mc.initSeed = stageSeed(seed, kStreamInit);
    return mc;
}

AdamConfig RunConfig::adamConfig() const {
    AdamConfig ac;
    ac.lr = lr;
    ac.weightDecay = reg;
    return ac;
}

}  // namespace medrec
