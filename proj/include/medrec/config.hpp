#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medrec/causal/effects.hpp"
#include "medrec/causal/search.hpp"
#include "medrec/correction.hpp"
#include "medrec/losses.hpp"
#include "medrec/model/network.hpp"
#include "medrec/model/params.hpp"
#include "medrec/sampling.hpp"
#include "medrec/synthetic.hpp"

namespace medrec {

// Pipeline stages in dependency order; each owns the config keys first
// needed at that stage, and a stage's fingerprint covers its own keys plus
// everything upstream.
enum class ConfigScope { Data = 0, Mine = 1, Model = 2, Eval = 3 };

// Flat key=value configuration for the whole pipeline. Precedence:
// command-line assignments over file entries over built-in defaults.
struct RunConfig {
    std::uint64_t seed = 7;
    std::string out = "runs";
    bool strict = false;

    // Optional external data files; empty means the generated stage output.
    std::string dataRecords;
    std::string dataDdi;
    std::string dataMolecules;
    std::string dataVocab;

    SyntheticSpec gen;
    SplitRatios split;
    SearchConfig mine;
    int strataLayers = 5;
    double strataDecay = 1.0 / 3.0;

    int modelDim = 64;
    int fineLayers = 1;
    int coarseLayers = 2;
    int relationTypes = 5;
    int cycles = 1;
    int mlpHidden = 64;
    std::string activation = "tanh";

    CorrectionConfig correction;
    LossConfig loss;
    int epochs = 20;
    double lr = 0.0005;
    double reg = 0.05;

    int evalRounds = 10;
    double evalFraction = 0.8;
    bool evalReplacement = true;

    bool woC = false;
    bool woF = false;
    bool woBC = false;

    void applyFile(const std::string& path);
    // "key=value" as given on the command line.
    void applyAssignment(const std::string& assignment);
    void setValue(const std::string& key, const std::string& value);

    void validate() const;

    // Sorted key=value lines over all keys at or before the scope.
    std::string canonicalText(ConfigScope scope) const;
    std::uint64_t fingerprint(ConfigScope scope) const;

    EffectConfig effectConfig() const;
    ModelConfig modelConfig() const;
    AdamConfig adamConfig() const;
};

std::uint64_t fnv1a64(const std::string& text);

// Stage-decoupled seeds: every pipeline stage draws from its own stream so
// extra draws in one stage never shift another stage's sequence.
inline constexpr std::uint64_t kStreamGenerate = 1;
inline constexpr std::uint64_t kStreamSplit = 2;
inline constexpr std::uint64_t kStreamInit = 3;
inline constexpr std::uint64_t kStreamTrain = 4;
inline constexpr std::uint64_t kStreamBootstrap = 5;
std::uint64_t stageSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace medrec
