#include "medrec/model/model.hpp"

#include <cmath>
#include <utility>

#include "medrec/errors.hpp"
#include "medrec/rng.hpp"

namespace medrec {

namespace {

void fillUniform(Eigen::MatrixXd& m, Rng& rng, double bound) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
}

double xavierBound(Eigen::Index rows, Eigen::Index cols) {
    return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

}  // namespace

Model::Model(const ModelConfig& cfg, const VocabSet& vocabs, const MoleculeMap& molecules,
             MiningArtifacts artifacts)
    : cfg_(cfg),
      nDiseases_(vocabs.diseases.size()),
      nProcedures_(vocabs.procedures.size()),
      nMedications_(vocabs.medications.size()),
      nMolecules_(vocabs.molecules.size()),
      molecules_(molecules),
      artifacts_(std::move(artifacts)) {
    if (cfg_.dim < 1 || cfg_.gruHidden < 1 || cfg_.mlpHidden < 1) {
        throw ConfigError("model dimensions must be positive");
    }
    if (cfg_.cycles < 1 || cfg_.fineLayers < 1 || cfg_.coarseLayers < 1) {
        throw ConfigError("model layer and cycle counts must be positive");
    }
    if (cfg_.relationTypes < 1) {
        throw ConfigError("relation type count must be positive");
    }
    if (!cfg_.woMolecules && molecules_.medicationCount() != nMedications_) {
        throw DataError("molecule map covers " + std::to_string(molecules_.medicationCount()) +
                        " medications, vocabulary has " + std::to_string(nMedications_));
    }
    if (artifacts_.diseaseMed.layers > cfg_.relationTypes ||
        artifacts_.procedureMed.layers > cfg_.relationTypes) {
        throw ConfigError("strata use more layers than the model has relation types");
    }
}

void Model::initParams() {
    Rng rng(cfg_.initSeed);
    const int dim = cfg_.dim;

    // Creation order is the reproducibility contract: tensors are created
    // and filled one at a time, draws in row-major element order.
    fillUniform(params_.create("embed.disease", nDiseases_, dim), rng, 0.1);
    fillUniform(params_.create("embed.procedure", nProcedures_, dim), rng, 0.1);
    if (cfg_.woMolecules) {
        fillUniform(params_.create("embed.medication", nMedications_, dim), rng, 0.1);
    } else {
        fillUniform(params_.create("embed.molecule", nMolecules_, dim), rng, 0.1);
        Eigen::MatrixXd& compose = params_.create("compose.weights", nMedications_, nMolecules_);
        for (int m = 0; m < nMedications_; ++m) {
            const auto& mols = molecules_.moleculesOf(m);
            if (mols.empty()) throw DataError("medication " + std::to_string(m) + " has no molecules");
            const double w = 1.0 / static_cast<double>(mols.size());
            for (int s : mols) compose(m, s) = w;
        }
        params_.create("fine.eps", 1, 1);  // starts at zero
    }

    for (int l = 0; l < cfg_.coarseLayers; ++l) {
        for (int t = 0; t < cfg_.relationTypes; ++t) {
            const std::string name =
                "coarse.delta.l" + std::to_string(l) + ".r" + std::to_string(t);
            fillUniform(params_.create(name, dim, dim), rng, 0.05);
        }
        Eigen::MatrixXd& norm = params_.create("coarse.norm.l" + std::to_string(l),
                                               cfg_.relationTypes, 1);
        norm.setOnes();
    }

    fillUniform(params_.create("role.weight", dim, 1), rng, 1.0 / std::sqrt(double(dim)));
    params_.create("role.bias", 1, 1);

    const int xdim = 3 * dim;
    const int hid = cfg_.gruHidden;
    const char* gates[] = {"z", "r", "n"};
    for (const char* g : gates) {
        Eigen::MatrixXd& w = params_.create(std::string("gru.w") + g, hid, xdim);
        fillUniform(w, rng, xavierBound(hid, xdim));
        Eigen::MatrixXd& u = params_.create(std::string("gru.u") + g, hid, hid);
        fillUniform(u, rng, xavierBound(hid, hid));
        params_.create(std::string("gru.b") + g, hid, 1);
    }

    Eigen::MatrixXd& w1 = params_.create("mlp.w1", cfg_.mlpHidden, hid);
    fillUniform(w1, rng, xavierBound(cfg_.mlpHidden, hid));
    params_.create("mlp.b1", cfg_.mlpHidden, 1);
    Eigen::MatrixXd& w2 = params_.create("mlp.w2", dim, cfg_.mlpHidden);
    fillUniform(w2, rng, xavierBound(dim, cfg_.mlpHidden));
    params_.create("mlp.b2", dim, 1);

    Eigen::MatrixXd& hw = params_.create("head.weight", nMedications_, dim);
    fillUniform(hw, rng, xavierBound(nMedications_, dim));
    params_.create("head.bias", nMedications_, 1);
}

Var Model::Leaves::of(const std::string& name) const {
    auto it = byName.find(name);
    if (it == byName.end()) throw NumericError("unbound parameter " + name);
    return it->second;
}

Model::Leaves Model::bind(Tape& tape) {
    Leaves leaves;
    for (auto& e : params_.entries()) {
        leaves.byName.emplace(e.name, tape.param(e.value, &e.grad));
    }
    return leaves;
}

Var Model::composeMedication(Tape& tape, const Leaves& leaves, int med,
                             const std::unordered_map<int, int>& molPos,
                             const std::vector<Var>& molVecs) {
    Var table = leaves.of("compose.weights");
    const auto& mols = molecules_.moleculesOf(med);
    bool allZero = true;
    std::vector<Var> terms;
    terms.reserve(mols.size());
    for (int s : mols) {
        const double w = tape.value(table)(med, s);
        if (w != 0.0) allZero = false;
        Var a = tape.elem(table, med, s);
        terms.push_back(tape.scalarMul(a, molVecs[static_cast<std::size_t>(molPos.at(s))]));
    }
    if (allZero && warnedZeroRows_.insert(med).second) {
        warnings_.push_back("composition weights for medication " + std::to_string(med) +
                            " are all zero");
    }
    return tape.addMany(terms);
}

std::vector<Var> Model::forwardPatient(Tape& tape, const PatientRecord& patient) {
    if (params_.entries().empty()) throw NumericError("model parameters not initialized");
    Leaves leaves = bind(tape);
    const int dim = cfg_.dim;

    std::vector<std::vector<Var>> deltaW(static_cast<std::size_t>(cfg_.coarseLayers));
    std::vector<Var> norm;
    for (int l = 0; l < cfg_.coarseLayers; ++l) {
        for (int t = 0; t < cfg_.relationTypes; ++t) {
            deltaW[static_cast<std::size_t>(l)].push_back(
                leaves.of("coarse.delta.l" + std::to_string(l) + ".r" + std::to_string(t)));
        }
        norm.push_back(leaves.of("coarse.norm.l" + std::to_string(l)));
    }
    GruVars gru{leaves.of("gru.wz"), leaves.of("gru.uz"), leaves.of("gru.bz"),
                leaves.of("gru.wr"), leaves.of("gru.ur"), leaves.of("gru.br"),
                leaves.of("gru.wn"), leaves.of("gru.un"), leaves.of("gru.bn")};
    MlpVars mlp{leaves.of("mlp.w1"), leaves.of("mlp.b1"), leaves.of("mlp.w2"),
                leaves.of("mlp.b2")};
    HeadVars head{leaves.of("head.weight"), leaves.of("head.bias")};
    Var roleW = leaves.of("role.weight");
    Var roleB = leaves.of("role.bias");

    Var hState = tape.constant(Eigen::MatrixXd::Zero(cfg_.gruHidden, 1));
    Var zeroEntity = tape.constant(Eigen::MatrixXd::Zero(dim, 1));

    std::vector<Var> visitProbs;
    visitProbs.reserve(patient.visits.size());

    for (std::size_t t = 0; t < patient.visits.size(); ++t) {
        const Visit& visit = patient.visits[t];
        const std::vector<int> prevMeds =
            t > 0 ? patient.visits[t - 1].medications : std::vector<int>{};

        // Molecule workspace for the previous visit's medications.
        std::vector<int> molIds;
        std::unordered_map<int, int> molPos;
        std::vector<Var> molVecs;
        std::vector<std::vector<int>> molNeighbors;
        if (!cfg_.woMolecules && !prevMeds.empty()) {
            for (int m : prevMeds)
                for (int s : molecules_.moleculesOf(m)) molIds.push_back(s);
            sortUnique(molIds);
            for (std::size_t i = 0; i < molIds.size(); ++i)
                molPos.emplace(molIds[i], static_cast<int>(i));
            for (int s : molIds) molVecs.push_back(tape.row(leaves.of("embed.molecule"), s));
            // Shared-medication molecules form a clique; overlapping
            // cliques merge by set union.
            std::vector<std::set<int>> nbr(molIds.size());
            for (int m : prevMeds) {
                const auto& mols = molecules_.moleculesOf(m);
                for (int a : mols)
                    for (int b : mols)
                        if (a != b) nbr[static_cast<std::size_t>(molPos.at(a))].insert(molPos.at(b));
            }
            for (const auto& s : nbr) molNeighbors.emplace_back(s.begin(), s.end());
        }

        // Entity node layout: diseases, then procedures, then prior meds.
        const int nD = static_cast<int>(visit.diseases.size());
        const int nP = static_cast<int>(visit.procedures.size());
        const int nM = static_cast<int>(prevMeds.size());

        std::vector<CoarseEdge> edges;
        for (int i = 0; i < nD; ++i) {
            for (int k = 0; k < nM; ++k) {
                const int ell = artifacts_.diseaseMed.layer(visit.diseases[static_cast<std::size_t>(i)],
                                                            prevMeds[static_cast<std::size_t>(k)]);
                if (ell > 0) {
                    edges.push_back({i, nD + nP + k, ell - 1,
                                     artifacts_.diseaseMed.layerRelevance[static_cast<std::size_t>(ell - 1)]});
                }
            }
        }
        for (int i = 0; i < nP; ++i) {
            for (int k = 0; k < nM; ++k) {
                const int ell = artifacts_.procedureMed.layer(
                    visit.procedures[static_cast<std::size_t>(i)], prevMeds[static_cast<std::size_t>(k)]);
                if (ell > 0) {
                    edges.push_back({nD + i, nD + nP + k, ell - 1,
                                     artifacts_.procedureMed.layerRelevance[static_cast<std::size_t>(ell - 1)]});
                }
            }
        }

        std::vector<Var> nodeVecs;
        nodeVecs.reserve(static_cast<std::size_t>(nD + nP + nM));
        for (int d : visit.diseases) nodeVecs.push_back(tape.row(leaves.of("embed.disease"), d));
        for (int p : visit.procedures)
            nodeVecs.push_back(tape.row(leaves.of("embed.procedure"), p));
        for (int k = 0; k < nM; ++k) nodeVecs.push_back(zeroEntity);  // filled per cycle

        for (int cycle = 0; cycle < cfg_.cycles; ++cycle) {
            if (!cfg_.woMolecules && nM > 0) {
                for (int f = 0; f < cfg_.fineLayers; ++f) {
                    molVecs = finePropagate(tape, molVecs, molNeighbors, leaves.of("fine.eps"),
                                            cfg_.activation);
                }
                for (int k = 0; k < nM; ++k) {
                    nodeVecs[static_cast<std::size_t>(nD + nP + k)] = composeMedication(
                        tape, leaves, prevMeds[static_cast<std::size_t>(k)], molPos, molVecs);
                }
            } else if (cfg_.woMolecules) {
                if (cycle == 0) {
                    for (int k = 0; k < nM; ++k) {
                        nodeVecs[static_cast<std::size_t>(nD + nP + k)] =
                            tape.row(leaves.of("embed.medication"),
                                     prevMeds[static_cast<std::size_t>(k)]);
                    }
                }
            }
            nodeVecs = coarsePropagate(tape, nodeVecs, edges, deltaW, norm, cfg_.activation);
        }

        // Role pooling per entity kind over the visit-induced subgraphs.
        const auto diseaseRoles =
            classifyRoles(visitCausalSubgraph(artifacts_.diseaseGraph, visit.diseases));
        const auto procRoles =
            classifyRoles(visitCausalSubgraph(artifacts_.procedureGraph, visit.procedures));

        std::vector<Var> dVecs(nodeVecs.begin(), nodeVecs.begin() + nD);
        std::vector<Var> pVecs(nodeVecs.begin() + nD, nodeVecs.begin() + nD + nP);
        std::vector<Var> mVecs(nodeVecs.begin() + nD + nP, nodeVecs.end());

        Var hD = roleAggregate(tape, dVecs, diseaseRoles, roleW, roleB);
        Var hP = roleAggregate(tape, pVecs, procRoles, roleW, roleB);
        Var hM = zeroEntity;
        if (nM > 0) {
            const auto medRoles =
                classifyRoles(visitCausalSubgraph(artifacts_.medicationGraph, prevMeds));
            hM = roleAggregate(tape, mVecs, medRoles, roleW, roleB);
        }

        Var hv = tape.vconcat({hD, hP, hM});
        hState = gruStep(tape, gru, hv, hState);
        Var hidden = mlpForward(tape, mlp, hState);
        visitProbs.push_back(headForward(tape, head, hidden));
    }
    return visitProbs;
}

}  // namespace medrec
