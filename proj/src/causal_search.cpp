#include "medrec/causal/search.hpp"

#include <algorithm>

namespace medrec {

namespace {

// Minimal improvement to accept; guards against float-noise move loops.
constexpr double kAcceptEps = 1e-9;

std::vector<int> withParent(const std::vector<int>& parents, int extra) {
    std::vector<int> out = parents;
    out.push_back(extra);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> withoutParent(const std::vector<int>& parents, int removed) {
    std::vector<int> out = parents;
    out.erase(std::remove(out.begin(), out.end(), removed), out.end());
    return out;
}

}  // namespace

SearchResult greedyEquivalenceSearch(const BinaryTable& data, EntityKind kind,
                                     const SearchConfig& config) {
    if (data.rows() < 1) throw DataError("structure search needs at least one sample");
    const int n = data.cols();
    ScoreCache cache(data, config.ess, config.maxIndegree);

    std::vector<std::uint8_t> allowed(static_cast<std::size_t>(n) * n, 0);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (data.coOccurrence(a, b) >= config.minSupport) {
                allowed[static_cast<std::size_t>(a) * n + b] = 1;
                allowed[static_cast<std::size_t>(b) * n + a] = 1;
            }
    auto pairAllowed = [&](int a, int b) {
        return allowed[static_cast<std::size_t>(a) * n + b] != 0;
    };

    SearchResult result;
    result.graph = CausalGraph(kind, n);
    CausalGraph& g = result.graph;
    result.score = cache.total(g);

    const int maxMoves = config.maxMoves > 0 ? config.maxMoves : 50 * n * n + 100;
    enum class Op { Insert, Delete, Turn };

    while (true) {
        double bestDelta = kAcceptEps;
        Op bestOp = Op::Insert;
        int bestI = -1, bestJ = -1;

        for (int op = 0; op < 3; ++op) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (i == j || !pairAllowed(i, j)) continue;
                    double delta = 0.0;
                    if (op == 0) {  // insert i -> j
                        if (g.hasEdge(i, j) || g.hasEdge(j, i)) continue;
                        if (g.inDegree(j) >= config.maxIndegree) continue;
                        if (g.wouldCreateCycle(i, j)) continue;
                        delta = cache.local(j, withParent(g.parentsOf(j), i)) -
                                cache.local(j, g.parentsOf(j));
                    } else if (op == 1) {  // delete i -> j
                        if (!g.hasEdge(i, j)) continue;
                        delta = cache.local(j, withoutParent(g.parentsOf(j), i)) -
                                cache.local(j, g.parentsOf(j));
                    } else {  // turn i -> j into j -> i
                        if (!g.hasEdge(i, j)) continue;
                        if (g.inDegree(i) >= config.maxIndegree) continue;
                        // Reversal is cyclic iff another i ~> j path exists.
                        g.removeEdge(i, j);
                        bool cyclic = g.reachable(i, j);
                        g.addEdge(i, j);
                        if (cyclic) continue;
                        delta = cache.local(j, withoutParent(g.parentsOf(j), i)) -
                                cache.local(j, g.parentsOf(j)) +
                                cache.local(i, withParent(g.parentsOf(i), j)) -
                                cache.local(i, g.parentsOf(i));
                    }
                    if (delta > bestDelta) {
                        bestDelta = delta;
                        bestOp = static_cast<Op>(op);
                        bestI = i;
                        bestJ = j;
                    }
                }
            }
        }

        if (bestI < 0) break;
        switch (bestOp) {
            case Op::Insert: g.addEdge(bestI, bestJ); break;
            case Op::Delete: g.removeEdge(bestI, bestJ); break;
            case Op::Turn:
                g.removeEdge(bestI, bestJ);
                g.addEdge(bestJ, bestI);
                break;
        }
        result.score += bestDelta;
        if (++result.acceptedMoves >= maxMoves) {
            result.hitMoveBound = true;
            break;
        }
    }
    return result;
}

}  // namespace medrec
