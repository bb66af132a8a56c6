#include "medrec/model/network.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "medrec/errors.hpp"

namespace medrec {

const char* roleName(CausalRole r) {
    switch (r) {
        case CausalRole::Cause: return "cause";
        case CausalRole::Effect: return "effect";
        case CausalRole::Middle: return "middle";
        case CausalRole::Independent: return "independent";
    }
    return "independent";
}

std::vector<CausalRole> classifyRoles(const VisitCausalSubgraph& subgraph) {
    std::vector<CausalRole> roles(subgraph.nodes.size(), CausalRole::Independent);
    for (std::size_t i = 0; i < subgraph.nodes.size(); ++i) {
        const int in = subgraph.inDegree[i];
        const int out = subgraph.outDegree[i];
        if (in == 0 && out == 0) {
            roles[i] = CausalRole::Independent;
        } else if (in == 0) {
            roles[i] = CausalRole::Cause;
        } else if (out == 0) {
            roles[i] = CausalRole::Effect;
        } else {
            roles[i] = CausalRole::Middle;
        }
    }
    return roles;
}

std::vector<Var> finePropagate(Tape& tape, const std::vector<Var>& molVecs,
                               const std::vector<std::vector<int>>& neighbors, Var eps,
                               Activation act) {
    if (neighbors.size() != molVecs.size()) {
        throw ConfigError("fine propagation: neighbor lists do not match node count");
    }
    std::vector<Var> next;
    next.reserve(molVecs.size());
    for (std::size_t i = 0; i < molVecs.size(); ++i) {
        Var self = tape.scalarMul(tape.add(tape.constant(Eigen::MatrixXd::Ones(1, 1)), eps),
                                  molVecs[i]);
        if (!neighbors[i].empty()) {
            std::vector<Var> terms;
            terms.reserve(neighbors[i].size() + 1);
            terms.push_back(self);
            for (int j : neighbors[i]) {
                if (j < 0 || static_cast<std::size_t>(j) >= molVecs.size()) {
                    throw ConfigError("fine propagation: neighbor index out of range");
                }
                terms.push_back(molVecs[static_cast<std::size_t>(j)]);
            }
            self = tape.addMany(terms);
        }
        next.push_back(tape.act(self, act));
    }
    return next;
}

std::vector<Var> coarsePropagate(Tape& tape, const std::vector<Var>& nodeVecs,
                                 const std::vector<CoarseEdge>& edges,
                                 const std::vector<std::vector<Var>>& deltaW,
                                 const std::vector<Var>& norm, Activation act) {
    if (deltaW.size() != norm.size()) {
        throw ConfigError("coarse propagation: layer parameter lists disagree");
    }
    const int types = deltaW.empty() ? 0 : static_cast<int>(deltaW.front().size());
    for (const CoarseEdge& e : edges) {
        const bool aOk = e.a >= 0 && static_cast<std::size_t>(e.a) < nodeVecs.size();
        const bool bOk = e.b >= 0 && static_cast<std::size_t>(e.b) < nodeVecs.size();
        if (!aOk || !bOk || e.a == e.b) {
            throw ConfigError("coarse propagation: edge endpoint out of range");
        }
        if (e.type < 0 || e.type >= types) {
            throw ConfigError("coarse propagation: edge relation type out of range");
        }
    }

    // neighborsByType[i][t] lists (neighbor, relevance) pairs; both edge
    // directions contribute since relations are symmetric here.
    const std::size_t n = nodeVecs.size();
    std::vector<std::vector<std::vector<std::pair<int, double>>>> neighborsByType(
        n, std::vector<std::vector<std::pair<int, double>>>(static_cast<std::size_t>(types)));
    for (const CoarseEdge& e : edges) {
        neighborsByType[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.type)]
            .emplace_back(e.b, e.relevance);
        neighborsByType[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(e.type)]
            .emplace_back(e.a, e.relevance);
    }

    std::vector<Var> current = nodeVecs;
    for (std::size_t layer = 0; layer < deltaW.size(); ++layer) {
        std::vector<Var> next;
        next.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Var> typeTerms;
            for (int t = 0; t < types; ++t) {
                const auto& nare = neighborsByType[i][static_cast<std::size_t>(t)];
                if (nare.empty()) continue;
                // W h = relevance * h + deltaW h, summed over neighbors of
                // this type, then divided by the type's normalizer.
                std::vector<Var> scaled;
                std::vector<Var> plain;
                scaled.reserve(nare.size());
                plain.reserve(nare.size());
                for (const auto& [j, relevance] : nare) {
                    scaled.push_back(tape.scale(current[static_cast<std::size_t>(j)], relevance));
                    plain.push_back(current[static_cast<std::size_t>(j)]);
                }
                Var sumScaled = tape.addMany(scaled);
                Var sumPlain = tape.addMany(plain);
                Var contribution =
                    tape.add(sumScaled, tape.matmul(deltaW[layer][static_cast<std::size_t>(t)],
                                                    sumPlain));
                Var q = tape.elem(norm[layer], t, 0);
                typeTerms.push_back(tape.divByScalar(contribution, q));
            }
            if (typeTerms.empty()) {
                next.push_back(current[i]);  // isolated nodes keep their vector
                continue;
            }
            next.push_back(tape.act(tape.addMany(typeTerms), act));
        }
        current = std::move(next);
    }
    return current;
}

Var roleAggregate(Tape& tape, const std::vector<Var>& vectors,
                  const std::vector<CausalRole>& roles, Var weight, Var bias) {
    if (vectors.size() != roles.size()) {
        throw ConfigError("role aggregation: role list does not match vector count");
    }
    if (vectors.empty()) {
        throw ConfigError("role aggregation: empty entity set");
    }

    std::vector<std::vector<Var>> byRole(kRoleCount);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        byRole[static_cast<std::size_t>(roles[i])].push_back(vectors[i]);
    }

    // Score each occupied role from the mean of its members, softmax the
    // scores, then weight every member vector by its role's share.
    std::vector<int> present;
    std::vector<Var> scores;
    for (int r = 0; r < kRoleCount; ++r) {
        if (byRole[static_cast<std::size_t>(r)].empty()) continue;
        Var mean = tape.meanOf(byRole[static_cast<std::size_t>(r)]);
        present.push_back(r);
        scores.push_back(tape.add(tape.dot(weight, mean), bias));
    }

    // Shift by the running max before exponentiating; the shift cancels in
    // the softmax ratio and keeps exp in range.
    double maxScore = tape.value(scores.front())(0, 0);
    for (Var s : scores) maxScore = std::max(maxScore, tape.value(s)(0, 0));
    Var shift = tape.constant(Eigen::MatrixXd::Constant(1, 1, maxScore));
    std::vector<Var> expScores;
    expScores.reserve(scores.size());
    for (Var s : scores) expScores.push_back(tape.expOf(tape.sub(s, shift)));
    Var denom = tape.addMany(expScores);

    std::vector<Var> weighted;
    for (std::size_t k = 0; k < present.size(); ++k) {
        const auto& members = byRole[static_cast<std::size_t>(present[k])];
        std::vector<Var> memberSum;
        memberSum.reserve(members.size());
        for (Var m : members) memberSum.push_back(m);
        Var sum = tape.addMany(memberSum);
        weighted.push_back(tape.divByScalar(tape.scalarMul(expScores[k], sum), denom));
    }
    return tape.addMany(weighted);
}

}  // namespace medrec
