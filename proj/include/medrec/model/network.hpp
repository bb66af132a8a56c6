#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medrec/causal/graph.hpp"
#include "medrec/causal/strata.hpp"
#include "medrec/model/tape.hpp"

namespace medrec {

struct ModelConfig {
    int dim = 64;
    int fineLayers = 1;
    int coarseLayers = 2;
    int relationTypes = 5;  // must equal the strata layer count
    int cycles = 1;
    int gruHidden = 64;
    int mlpHidden = 64;
    Activation activation = Activation::Tanh;
    // Ablation switches: coarse edges fall back to co-occurrence strata and
    // causal-role graphs go empty (woCausalRelations); medication vectors
    // come from a free table instead of molecule composition (woMolecules).
    bool woCausalRelations = false;
    bool woMolecules = false;
    std::uint64_t initSeed = 1;
};

// Frozen mining outputs the model consumes. Under the co-occurrence
// ablation the graphs are empty and the strata derive from co-occurrence
// rates; the model code is agnostic to the difference.
struct MiningArtifacts {
    CausalGraph diseaseGraph;
    CausalGraph procedureGraph;
    CausalGraph medicationGraph;
    RelevanceStrata diseaseMed;
    RelevanceStrata procedureMed;
};

enum class CausalRole { Cause, Effect, Middle, Independent };
constexpr int kRoleCount = 4;
const char* roleName(CausalRole r);

// Degree rule on the induced visit subgraph: sources are causes, sinks are
// effects, pass-through nodes are middles, isolated nodes independent.
std::vector<CausalRole> classifyRoles(const VisitCausalSubgraph& subgraph);

// Undirected typed edge between positions a and b of one visit's entity
// list. type is the 0-based stratum layer; relevance is that layer's mean
// effect and scales the relation matrix.
struct CoarseEdge {
    int a = 0;
    int b = 0;
    int type = 0;
    double relevance = 0.0;
};

// One round of clique message passing over molecule vectors:
// h_i' = act((1 + eps) h_i + sum of neighbor vectors).
std::vector<Var> finePropagate(Tape& tape, const std::vector<Var>& molVecs,
                               const std::vector<std::vector<int>>& neighbors, Var eps,
                               Activation act);

// Typed-relation convolution, all layers. deltaW[layer][type] are square
// matrices; norm[layer] is a (types x 1) vector of normalizer scalars.
// Nodes without incident edges pass through unchanged.
std::vector<Var> coarsePropagate(Tape& tape, const std::vector<Var>& nodeVecs,
                                 const std::vector<CoarseEdge>& edges,
                                 const std::vector<std::vector<Var>>& deltaW,
                                 const std::vector<Var>& norm, Activation act);

// Role-weighted pooling: softmax over non-empty role means scores each
// role, every entity contributes its vector scaled by its role's weight.
Var roleAggregate(Tape& tape, const std::vector<Var>& vectors,
                  const std::vector<CausalRole>& roles, Var weight, Var bias);

}  // namespace medrec
