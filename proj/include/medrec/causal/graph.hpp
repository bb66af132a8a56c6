#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "medrec/vocab.hpp"

namespace medrec {

// Directed acyclic graph over one entity kind. Nodes are the dense
// vocabulary indices 0..n-1; entities without edges are isolated nodes.
class CausalGraph {
  public:
    CausalGraph() = default;
    CausalGraph(EntityKind kind, int n)
        : kind_(kind),
          n_(n),
          parents_(static_cast<std::size_t>(n)),
          children_(static_cast<std::size_t>(n)) {}

    EntityKind kind() const { return kind_; }
    int nodeCount() const { return n_; }

    bool hasEdge(int parent, int child) const {
        const auto& ps = parents_[static_cast<std::size_t>(child)];
        return std::find(ps.begin(), ps.end(), parent) != ps.end();
    }
    const std::vector<int>& parentsOf(int node) const {
        return parents_[static_cast<std::size_t>(node)];
    }
    const std::vector<int>& childrenOf(int node) const {
        return children_[static_cast<std::size_t>(node)];
    }
    int inDegree(int node) const { return static_cast<int>(parentsOf(node).size()); }
    int outDegree(int node) const { return static_cast<int>(childrenOf(node).size()); }

    void addEdge(int parent, int child);
    void removeEdge(int parent, int child);

    // True when a directed path from -> to exists.
    bool reachable(int from, int to) const;
    bool wouldCreateCycle(int parent, int child) const { return reachable(child, parent); }
    bool acyclic() const;

    int edgeCount() const;
    // Sorted (parent, child) pairs; the canonical order for persistence.
    std::vector<std::pair<int, int>> edges() const;

    bool operator==(const CausalGraph&) const = default;

  private:
    EntityKind kind_ = EntityKind::Disease;
    int n_ = 0;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

// Induced directed subgraph over one visit's entities; degrees drive the
// causal-role classification downstream.
struct VisitCausalSubgraph {
    std::vector<int> nodes;                      // visit entities, sorted
    std::vector<std::pair<int, int>> edges;      // restricted to nodes
    std::vector<int> inDegree;                   // aligned with nodes
    std::vector<int> outDegree;
};

VisitCausalSubgraph visitCausalSubgraph(const CausalGraph& global,
                                        const std::vector<int>& visitEntities);

void writeCausalGraph(const std::string& path, const CausalGraph& graph,
                      const Vocabulary& vocab);
CausalGraph loadCausalGraph(const std::string& path, const Vocabulary& vocab);

}  // namespace medrec
