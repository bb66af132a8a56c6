#include "medrec/causal/graph.hpp"

#include <algorithm>
#include <fstream>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"

namespace medrec {

void CausalGraph::addEdge(int parent, int child) {
    if (parent == child) throw DataError("graph self-loop rejected");
    if (hasEdge(parent, child)) return;
    parents_[static_cast<std::size_t>(child)].push_back(parent);
    children_[static_cast<std::size_t>(parent)].push_back(child);
    std::sort(parents_[static_cast<std::size_t>(child)].begin(),
              parents_[static_cast<std::size_t>(child)].end());
    std::sort(children_[static_cast<std::size_t>(parent)].begin(),
              children_[static_cast<std::size_t>(parent)].end());
}

void CausalGraph::removeEdge(int parent, int child) {
    auto& ps = parents_[static_cast<std::size_t>(child)];
    auto& cs = children_[static_cast<std::size_t>(parent)];
    ps.erase(std::remove(ps.begin(), ps.end(), parent), ps.end());
    cs.erase(std::remove(cs.begin(), cs.end(), child), cs.end());
}

bool CausalGraph::reachable(int from, int to) const {
    if (from == to) return true;
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : childrenOf(u)) {
            if (v == to) return true;
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    return false;
}

bool CausalGraph::acyclic() const {
    // Kahn peeling; any remainder is a cycle.
    std::vector<int> indeg(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) indeg[static_cast<std::size_t>(v)] = inDegree(v);
    std::vector<int> queue;
    for (int v = 0; v < n_; ++v)
        if (indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    int removed = 0;
    while (!queue.empty()) {
        int u = queue.back();
        queue.pop_back();
        ++removed;
        for (int v : childrenOf(u))
            if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    return removed == n_;
}

int CausalGraph::edgeCount() const {
    int c = 0;
    for (int v = 0; v < n_; ++v) c += inDegree(v);
    return c;
}

std::vector<std::pair<int, int>> CausalGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int p = 0; p < n_; ++p)
        for (int c : childrenOf(p)) out.emplace_back(p, c);
    std::sort(out.begin(), out.end());
    return out;
}

VisitCausalSubgraph visitCausalSubgraph(const CausalGraph& global,
                                        const std::vector<int>& visitEntities) {
    VisitCausalSubgraph sub;
    sub.nodes = visitEntities;
    std::sort(sub.nodes.begin(), sub.nodes.end());
    sub.inDegree.assign(sub.nodes.size(), 0);
    sub.outDegree.assign(sub.nodes.size(), 0);
    auto pos = [&](int e) {
        auto it = std::lower_bound(sub.nodes.begin(), sub.nodes.end(), e);
        return (it != sub.nodes.end() && *it == e)
                   ? static_cast<int>(it - sub.nodes.begin())
                   : -1;
    };
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
        int node = sub.nodes[i];
        if (node < 0 || node >= global.nodeCount()) continue;  // isolated by construction
        for (int child : global.childrenOf(node)) {
            int j = pos(child);
            if (j < 0) continue;
            sub.edges.emplace_back(node, child);
            ++sub.outDegree[i];
            ++sub.inDegree[static_cast<std::size_t>(j)];
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    return sub;
}

void writeCausalGraph(const std::string& path, const CausalGraph& graph,
                      const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "kind=" << kindName(graph.kind()) << '\n';
    for (auto [p, c] : graph.edges()) out << vocab.code(p) << ',' << vocab.code(c) << '\n';
}

CausalGraph loadCausalGraph(const std::string& path, const Vocabulary& vocab) {
    auto lines = readLines(path);
    if (lines.empty() || lines[0].rfind("kind=", 0) != 0)
        throw DataError("graph file '" + path + "' missing kind header");
    EntityKind kind = kindFromName(lines[0].substr(5));
    CausalGraph graph(kind, vocab.size());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto comma = lines[i].find(',');
        if (comma == std::string::npos)
            throw DataError("graph file '" + path + "' line " + std::to_string(i + 1) +
                            ": expected two columns");
        int p = vocab.find(lines[i].substr(0, comma));
        int c = vocab.find(lines[i].substr(comma + 1));
        if (p < 0 || c < 0)
            throw DataError("graph file '" + path + "' line " + std::to_string(i + 1) +
                            ": unknown code");
        graph.addEdge(p, c);
    }
    if (!graph.acyclic()) throw DataError("graph file '" + path + "' contains a cycle");
    return graph;
}

}  // namespace medrec
