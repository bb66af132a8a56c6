#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "medrec/molecules.hpp"
#include "medrec/model/network.hpp"
#include "medrec/model/params.hpp"
#include "medrec/model/sequence.hpp"
#include "medrec/records.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Dual-granularity recommendation model: per visit, molecule vectors are
// refined by clique message passing and composed into medication vectors,
// visit entities exchange messages over relevance-typed relations, causal
// roles pool each entity kind into one vector, and a GRU over the visit
// sequence feeds an MLP plus a per-medication logistic head.
class Model {
  public:
    Model(const ModelConfig& cfg, const VocabSet& vocabs, const MoleculeMap& molecules,
          MiningArtifacts artifacts);

    // Seeded draw in parameter creation order; reproducible bit for bit.
    void initParams();

    // Probabilities for every visit of one patient, each a (|M| x 1) Var on
    // the tape. Parameters are bound as tape leaves on each call.
    std::vector<Var> forwardPatient(Tape& tape, const PatientRecord& patient);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }
    const MiningArtifacts& artifacts() const { return artifacts_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

  private:
    struct Leaves {
        std::unordered_map<std::string, Var> byName;
        Var of(const std::string& name) const;
    };
    Leaves bind(Tape& tape);
    Var composeMedication(Tape& tape, const Leaves& leaves, int med,
                          const std::unordered_map<int, int>& molPos,
                          const std::vector<Var>& molVecs);

    ModelConfig cfg_;
    int nDiseases_ = 0;
    int nProcedures_ = 0;
    int nMedications_ = 0;
    int nMolecules_ = 0;
    MoleculeMap molecules_;
    MiningArtifacts artifacts_;
    ParamStore params_;
    std::vector<std::string> warnings_;
    std::set<int> warnedZeroRows_;
};

}  // namespace medrec
