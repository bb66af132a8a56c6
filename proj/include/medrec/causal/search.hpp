#pragma once

#include "medrec/causal/graph.hpp"
#include "medrec/causal/score.hpp"

namespace medrec {

struct SearchConfig {
    double ess = 1.0;
    int maxIndegree = 4;
    // Edges are only considered between entity pairs co-occurring at least
    // this many times; keeps structure search tractable on wide vocabularies.
    int minSupport = 5;
    // 0 selects an automatic bound proportional to the node count squared.
    int maxMoves = 0;
};

struct SearchResult {
    CausalGraph graph;
    double score = 0.0;
    int acceptedMoves = 0;
    bool hitMoveBound = false;
};

// Greedy score ascent from the empty graph using insert / delete / turn
// moves, best strictly-improving move first. Deterministic: moves are
// enumerated in a fixed order and ties keep the earliest candidate.
SearchResult greedyEquivalenceSearch(const BinaryTable& data, EntityKind kind,
                                     const SearchConfig& config);

}  // namespace medrec
