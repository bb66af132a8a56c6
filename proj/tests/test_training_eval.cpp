#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "medrec/causal/strata.hpp"
#include "medrec/config.hpp"
#include "medrec/evaluate.hpp"
#include "medrec/io.hpp"
#include "medrec/losses.hpp"
#include "medrec/metrics.hpp"
#include "medrec/model/model.hpp"
#include "medrec/rng.hpp"
#include "medrec/train.hpp"

using namespace medrec;

namespace {

double bceRef(const std::vector<double>& p, const MultiHotVector& truth) {
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], kBceClampEps, 1.0 - kBceClampEps);
        loss -= truth[i] ? std::log(q) : std::log(1.0 - q);
    }
    return loss;
}

double marginRef(const std::vector<double>& p, const MultiHotVector& truth) {
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!truth[i]) continue;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (truth[j]) continue;
            loss += std::max(0.0, 1.0 - (p[i] - p[j]));
        }
    }
    return loss / static_cast<double>(truth.size());
}

double interactionRef(const std::vector<double>& p, const DdiMatrix& ddi) {
    double loss = 0.0;
    for (int i = 0; i < ddi.size(); ++i)
        for (int j = 0; j < ddi.size(); ++j)
            if (ddi.interacts(i, j)) loss += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)];
    return loss;
}

double prAucRef(const std::vector<double>& probs, const MultiHotVector& truth) {
    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)])
            return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
        return a < b;
    });
    int positives = 0;
    for (auto t : truth) positives += t ? 1 : 0;
    if (positives == 0) return 0.0;
    double auc = 0.0;
    int tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (truth[static_cast<std::size_t>(order[k])]) {
            ++tp;
            auc += static_cast<double>(tp) / static_cast<double>(k + 1);
        }
    }
    return auc / static_cast<double>(positives);
}

Eigen::MatrixXd colOf(const std::vector<double>& xs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = xs[i];
    return m;
}

struct TrainFixture {
    VocabSet vocabs;
    MoleculeMap molecules;
    MiningArtifacts artifacts;
    CausalEffectMatrix diseaseEffects;
    CausalEffectMatrix procedureEffects;
    DdiMatrix ddi;
    std::vector<PatientRecord> records;
    DatasetSplit split;

    TrainFixture() : ddi(3) {
        vocabs.diseases = Vocabulary(EntityKind::Disease, {"d0", "d1", "d2"});
        vocabs.procedures = Vocabulary(EntityKind::Procedure, {"p0", "p1"});
        vocabs.medications = Vocabulary(EntityKind::Medication, {"m0", "m1", "m2"});
        vocabs.molecules = Vocabulary(EntityKind::Molecule, {"s0", "s1", "s2"});
        molecules.membership = {{0}, {1, 2}, {0, 2}};

        artifacts.diseaseGraph = CausalGraph(EntityKind::Disease, 3);
        artifacts.diseaseGraph.addEdge(0, 1);
        artifacts.procedureGraph = CausalGraph(EntityKind::Procedure, 2);
        artifacts.medicationGraph = CausalGraph(EntityKind::Medication, 3);

        diseaseEffects.sourceKind = EntityKind::Disease;
        diseaseEffects.values = Eigen::MatrixXd::Zero(3, 3);
        for (int d = 0; d < 3; ++d)
            for (int m = 0; m < 3; ++m) diseaseEffects.values(d, m) = d == m ? 0.9 : 0.2;
        artifacts.diseaseMed = stratify(diseaseEffects, 2, 1.0 / 3.0);
        procedureEffects.sourceKind = EntityKind::Procedure;
        procedureEffects.values = Eigen::MatrixXd::Zero(2, 3);
        procedureEffects.values(0, 0) = 0.7;
        procedureEffects.values(1, 2) = 0.6;
        artifacts.procedureMed = stratify(procedureEffects, 2, 1.0 / 3.0);

        ddi.set(0, 1);

        // Planted rule: the medication set mirrors the disease set.
        Rng rng(77);
        for (int i = 0; i < 30; ++i) {
            PatientRecord rec;
            rec.patientId = "p" + std::to_string(i);
            for (int t = 0; t < 2; ++t) {
                Visit v;
                for (int d = 0; d < 3; ++d)
                    if (rng.bernoulli(0.5)) v.diseases.push_back(d);
                if (v.diseases.empty()) v.diseases.push_back(static_cast<int>(rng.below(3)));
                v.procedures.push_back(static_cast<int>(rng.below(2)));
                v.medications = v.diseases;
                rec.visits.push_back(std::move(v));
            }
            records.push_back(std::move(rec));
        }
        for (int i = 0; i < 20; ++i) split.train.push_back(i);
        for (int i = 20; i < 25; ++i) split.val.push_back(i);
        for (int i = 25; i < 30; ++i) split.test.push_back(i);
    }

    ModelConfig modelConfig() const {
        ModelConfig cfg;
        cfg.dim = 4;
        cfg.gruHidden = 4;
        cfg.mlpHidden = 3;
        cfg.relationTypes = 2;
        cfg.initSeed = 99;
        return cfg;
    }

    RunConfig runConfig() const {
        RunConfig cfg;
        cfg.epochs = 5;
        cfg.lr = 0.01;
        cfg.seed = 7;
        return cfg;
    }
};

}  // namespace

TEST_SUITE("training-eval") {

TEST_CASE("loss kernels agree with naive reference loops") {
    Rng rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(6));
        std::vector<double> p(static_cast<std::size_t>(n));
        MultiHotVector truth(static_cast<std::size_t>(n), 0);
        DdiMatrix ddi(n);
        for (int i = 0; i < n; ++i) {
            p[static_cast<std::size_t>(i)] = rng.uniform(0.05, 0.95);
            truth[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
            for (int j = i + 1; j < n; ++j)
                if (rng.bernoulli(0.2)) ddi.set(i, j);
        }

        Tape tape;
        Var probs = tape.constant(colOf(p));
        CHECK(tape.value(tape.bceLoss(probs, truth, kBceClampEps))(0, 0) ==
              doctest::Approx(bceRef(p, truth)).epsilon(1e-9));
        CHECK(tape.value(tape.marginLoss(probs, truth))(0, 0) ==
              doctest::Approx(marginRef(p, truth)).epsilon(1e-9));
        CHECK(tape.value(tape.pairInteractionLoss(probs, ddi))(0, 0) ==
              doctest::Approx(interactionRef(p, ddi)).epsilon(1e-9));
    }

    SUBCASE("hand anchors") {
        Tape tape;
        Var p2 = tape.constant(colOf({0.5, 0.5}));
        CHECK(tape.value(tape.bceLoss(p2, {1, 0}, kBceClampEps))(0, 0) ==
              doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

        Var pm = tape.constant(colOf({0.2, 0.9}));
        CHECK(tape.value(tape.marginLoss(pm, {1, 0}))(0, 0) ==
              doctest::Approx(0.85).epsilon(1e-12));

        DdiMatrix one(2);
        one.set(0, 1);
        CHECK(tape.value(tape.pairInteractionLoss(p2, one))(0, 0) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("cross-entropy clamp keeps saturated probabilities finite and flat") {
    Tape tape;
    Eigen::MatrixXd val = colOf({0.0, 1.0, 0.5});
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(3, 1);
    Var probs = tape.param(val, &grad);
    Var loss = tape.bceLoss(probs, {1, 0, 1}, kBceClampEps);

    const double expected = -2.0 * std::log(kBceClampEps) - std::log(0.5);
    CHECK(std::isfinite(tape.value(loss)(0, 0)));
    CHECK(tape.value(loss)(0, 0) == doctest::Approx(expected).epsilon(1e-9));

    tape.backward(loss);
    CHECK(grad(0, 0) == 0.0);  // clamped at the floor
    CHECK(grad(1, 0) == 0.0);  // clamped at the ceiling
    CHECK(grad(2, 0) != 0.0);
}

TEST_CASE("interaction tolerance schedule ramps linearly to zero") {
    const double gamma = 0.06;
    const double kp = 0.05;
    CHECK(alphaSchedule(0.0, gamma, kp) == 1.0);
    CHECK(alphaSchedule(0.05, gamma, kp) == 1.0);
    CHECK(alphaSchedule(gamma, gamma, kp) == 1.0);
    CHECK(alphaSchedule(0.085, gamma, kp) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(alphaSchedule(gamma + kp, gamma, kp) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(alphaSchedule(0.12, gamma, kp) == 0.0);
    CHECK(alphaSchedule(1.0, gamma, kp) == 0.0);
    // Continuity just past the tolerance.
    CHECK(alphaSchedule(gamma + 1e-12, gamma, kp) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predicted interaction rate counts pairs above the threshold") {
    DdiMatrix ddi(3);
    ddi.set(0, 1);
    CHECK(predictedDdiRate({0.6, 0.7, 0.2}, ddi, 0.5) == 1.0);
    CHECK(predictedDdiRate({0.6, 0.7, 0.8}, ddi, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(predictedDdiRate({0.6, 0.7, 0.2}, ddi, 0.65) == 0.0);  // one medication only
    CHECK(predictedDdiRate({0.1, 0.2, 0.3}, ddi, 0.5) == 0.0);
    DdiMatrix none(3);
    CHECK(predictedDdiRate({0.9, 0.9, 0.9}, none, 0.5) == 0.0);
}

TEST_CASE("combined loss is the alpha blend of accuracy and interaction terms") {
    std::vector<double> p{0.7, 0.6, 0.2, 0.4};
    MultiHotVector truth{1, 0, 1, 0};
    DdiMatrix ddi(4);
    ddi.set(0, 1);
    LossConfig cfg;

    Tape tape;
    Var probs = tape.constant(colOf(p));
    const double bce = bceRef(p, truth);
    const double margin = marginRef(p, truth);
    const double inter = interactionRef(p, ddi);
    const double accuracy = cfg.beta * bce + (1.0 - cfg.beta) * margin;

    VisitLoss full = combinedLossFixedAlpha(tape, probs, truth, ddi, cfg, 1.0);
    CHECK(tape.value(full.total)(0, 0) == doctest::Approx(accuracy).epsilon(1e-12));
    VisitLoss pen = combinedLossFixedAlpha(tape, probs, truth, ddi, cfg, 0.0);
    CHECK(tape.value(pen.total)(0, 0) == doctest::Approx(inter).epsilon(1e-12));
    VisitLoss mid = combinedLossFixedAlpha(tape, probs, truth, ddi, cfg, 0.6);
    CHECK(tape.value(mid.total)(0, 0) ==
          doctest::Approx(0.6 * accuracy + 0.4 * inter).epsilon(1e-12));
    CHECK(mid.bce == doctest::Approx(bce).epsilon(1e-12));
    CHECK(mid.multi == doctest::Approx(margin).epsilon(1e-12));
    CHECK(mid.ddi == doctest::Approx(inter).epsilon(1e-12));

    SUBCASE("automatic alpha comes from the thresholded rate") {
        // Both selected medications interact: rate 1, alpha 0.
        VisitLoss autoLoss = combinedLoss(tape, probs, truth, ddi, cfg);
        CHECK(autoLoss.rate == 1.0);
        CHECK(autoLoss.alpha == alphaSchedule(1.0, cfg.gamma, cfg.kp));
        CHECK(autoLoss.alpha == 0.0);
        CHECK(tape.value(autoLoss.total)(0, 0) == doctest::Approx(inter).epsilon(1e-12));

        DdiMatrix safe(4);
        VisitLoss calm = combinedLoss(tape, probs, truth, safe, cfg);
        CHECK(calm.rate == 0.0);
        CHECK(calm.alpha == 1.0);
    }

    SUBCASE("invalid settings are rejected") {
        LossConfig bad;
        bad.beta = 1.5;
        CHECK_THROWS_AS(combinedLossFixedAlpha(tape, probs, truth, ddi, bad, 0.5), ConfigError);
        CHECK_THROWS_AS(combinedLossFixedAlpha(tape, probs, truth, ddi, cfg, 1.5), ConfigError);
        LossConfig badKp;
        badKp.kp = 0.0;
        CHECK_THROWS_AS(combinedLossFixedAlpha(tape, probs, truth, ddi, badKp, 0.5), ConfigError);
    }
}

TEST_CASE("set metrics match hand-computed examples") {
    CHECK(jaccardIndex({1, 2, 3}, {2, 3, 4}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(jaccardIndex({1, 2}, {1, 2}) == 1.0);
    CHECK(jaccardIndex({}, {1}) == 0.0);
    CHECK(jaccardIndex({}, {}) == 0.0);
    CHECK(f1Score({1, 2, 3}, {2, 3, 4}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(f1Score({1}, {2}) == 0.0);
    CHECK(f1Score({5}, {5}) == 1.0);

    SUBCASE("ranking area hand case") {
        MultiHotVector truth{1, 0, 1, 0};
        CHECK(prAuc({0.9, 0.8, 0.3, 0.1}, truth) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
        CHECK(prAuc({0.9, 0.8, 0.3, 0.1}, {0, 0, 0, 0}) == 0.0);
        CHECK(prAuc({0.9, 0.8, 0.3, 0.1}, {1, 1, 1, 1}) == 1.0);
        CHECK_THROWS_AS(prAuc({0.9}, truth), DataError);
    }

    SUBCASE("ranking area agrees with a brute-force oracle") {
        Rng rng(555);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + static_cast<int>(rng.below(7));
            std::vector<double> probs(static_cast<std::size_t>(n));
            MultiHotVector truth(static_cast<std::size_t>(n), 0);
            for (int i = 0; i < n; ++i) {
                // Coarse grid keeps deliberate ties in play.
                probs[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(5)) / 4.0;
                truth[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
            }
            const double got = prAuc(probs, truth);
            CHECK(got == doctest::Approx(prAucRef(probs, truth)).epsilon(1e-12));
            CHECK(got >= 0.0);
            CHECK(got <= 1.0);
        }
    }
}

TEST_CASE("metric summary averages visits within a patient first") {
    DdiMatrix ddi(4);
    ddi.set(0, 1);

    PatientEval a;
    a.visits.push_back({{0}, {0}, {0.9, 0.1, 0.1, 0.1}});      // jaccard 1
    a.visits.push_back({{0}, {1}, {0.9, 0.1, 0.1, 0.1}});      // jaccard 0
    PatientEval b;
    b.visits.push_back({{2}, {2}, {0.1, 0.1, 0.9, 0.1}});      // jaccard 1

    MetricSummary s = summarize({a, b}, ddi, 4);
    // Patient means 0.5 and 1.0; pooling visits directly would give 2/3.
    CHECK(s.jaccard == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s.avgMed == 1.0);
    CHECK(s.ddi == 0.0);  // singleton predictions carry no pairs

    SUBCASE("interaction rates pool pairs across all visits") {
        PatientEval c;
        c.visits.push_back({{0, 1, 2}, {0, 1}, {0.9, 0.9, 0.9, 0.1}});
        c.visits.push_back({{2, 3}, {2, 3}, {0.1, 0.1, 0.9, 0.9}});
        MetricSummary t = summarize({c}, ddi, 4);
        // Predicted pairs: C(3,2) + C(2,2) = 4, one of them interacting.
        CHECK(t.ddi == doctest::Approx(0.25).epsilon(1e-12));
        // Ground-truth pair denominator: 1 + 1 = 2.
        CHECK(t.ddiAlt == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(t.avgMed == doctest::Approx(2.5).epsilon(1e-12));
    }

    SUBCASE("degenerate inputs are rejected") {
        CHECK_THROWS_AS(summarize({}, ddi, 4), DataError);
        PatientEval empty;
        CHECK_THROWS_AS(summarize({empty}, ddi, 4), DataError);
        PatientEval bad;
        bad.visits.push_back({{0}, {7}, {0.5, 0.5, 0.5, 0.5}});
        CHECK_THROWS_AS(summarize({bad}, ddi, 4), DataError);
    }
}

TEST_CASE("round aggregation reports the sample mean and its standard error") {
    MetricSummary r1;
    r1.jaccard = 0.4;
    MetricSummary r2;
    r2.jaccard = 0.6;
    MetricReport rep = aggregateRounds({r1, r2});
    CHECK(rep.mean.jaccard == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.stderrOfMean.jaccard == doctest::Approx(0.1).epsilon(1e-12));

    MetricReport single = aggregateRounds({r1});
    CHECK(single.mean.jaccard == 0.4);
    CHECK(single.stderrOfMean.jaccard == 0.0);
    CHECK_THROWS_AS(aggregateRounds({}), DataError);

    SUBCASE("report file carries one labeled row per round plus mean and stderr") {
        auto dir = std::filesystem::temp_directory_path() / "medrec_train_tests";
        std::filesystem::create_directories(dir);
        auto path = (dir / "report.csv").string();
        writeMetricReport(path, rep);

        std::ifstream in(path);
        REQUIRE(in.good());
        std::vector<std::string> lines;
        for (std::string line; std::getline(in, line);) lines.push_back(line);
        REQUIRE(lines.size() == 5);
        CHECK(lines[0] == "row,jaccard,ddi,f1,prauc,avg_med,ddi_alt");
        CHECK(lines[1].rfind("round1,", 0) == 0);
        CHECK(lines[2].rfind("round2,", 0) == 0);
        CHECK(lines[3].rfind("mean,0.5,", 0) == 0);
        CHECK(lines[4].rfind("stderr," + fmtDouble(rep.stderrOfMean.jaccard) + ",", 0) == 0);
    }
}

TEST_CASE("training lowers the loss and restores the best epoch") {
    TrainFixture fx;
    Model model(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
    model.initParams();

    RunConfig cfg = fx.runConfig();
    std::ostringstream log;
    TrainResult res = train(model, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, &log);

    REQUIRE(res.epochLoss.size() == 5);
    REQUIRE(res.epochValJaccard.size() == 5);
    CHECK(res.epochLoss.back() < res.epochLoss.front());
    CHECK(res.bestEpoch >= 1);
    CHECK(res.bestEpoch <= 5);
    CHECK(res.bestValJaccard ==
          *std::max_element(res.epochValJaccard.begin(), res.epochValJaccard.end()));
    CHECK(model.params().allFinite());
    CHECK(log.str().rfind(kRunLogHeader, 0) == 0);

    SUBCASE("identical seeds give bitwise-identical trajectories") {
        Model twinA(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
        twinA.initParams();
        Model twinB(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
        twinB.initParams();
        TrainResult ra = train(twinA, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, nullptr);
        TrainResult rb = train(twinB, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, nullptr);
        CHECK(ra.epochLoss == rb.epochLoss);
        CHECK(ra.epochValJaccard == rb.epochValJaccard);
        CHECK(ra.bestEpoch == rb.bestEpoch);
        for (std::size_t k = 0; k < twinA.params().entries().size(); ++k)
            CHECK(twinA.params().entries()[k].value == twinB.params().entries()[k].value);
    }

    SUBCASE("the correction ablation flag has no effect on training") {
        Model twinA(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
        twinA.initParams();
        Model twinB(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
        twinB.initParams();
        RunConfig cfgBc = cfg;
        cfgBc.woBC = true;
        TrainResult ra = train(twinA, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, nullptr);
        TrainResult rb =
            train(twinB, fx.records, fx.split, fx.ddi, cfgBc, nullptr, nullptr, nullptr);
        CHECK(ra.epochLoss == rb.epochLoss);
        for (std::size_t k = 0; k < twinA.params().entries().size(); ++k)
            CHECK(twinA.params().entries()[k].value == twinB.params().entries()[k].value);
    }

    SUBCASE("a poisoned parameter aborts with the offending patient named") {
        Model sick(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
        sick.initParams();
        sick.params().at("head.bias").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
        bool thrown = false;
        try {
            train(sick, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, nullptr);
        } catch (const NumericError& e) {
            thrown = true;
            CHECK(std::string(e.what()).find("patient p") != std::string::npos);
        }
        CHECK(thrown);
    }

    SUBCASE("empty training split is rejected") {
        DatasetSplit empty;
        empty.val = fx.split.val;
        CHECK_THROWS_AS(train(model, fx.records, empty, fx.ddi, cfg, nullptr, nullptr, nullptr),
                        DataError);
    }

    SUBCASE("in-loss correction requires the effect matrices") {
        RunConfig cl = cfg;
        cl.loss.correctInLoss = true;
        CHECK_THROWS_AS(train(model, fx.records, fx.split, fx.ddi, cl, nullptr, nullptr, nullptr),
                        MissingArtifactError);
    }
}

TEST_CASE("bootstrap evaluation resamples cached patient outcomes") {
    TrainFixture fx;
    Model model(fx.modelConfig(), fx.vocabs, fx.molecules, fx.artifacts);
    model.initParams();
    RunConfig cfg = fx.runConfig();
    train(model, fx.records, fx.split, fx.ddi, cfg, nullptr, nullptr, nullptr);

    EvalOptions opts;
    MetricSummary direct = evaluateSubset(model, fx.records, fx.split.test, fx.ddi, opts);

    SUBCASE("one full round without replacement equals the direct pass") {
        MetricReport rep = bootstrapEvaluate(model, fx.records, fx.split.test, fx.ddi, opts, 1,
                                             1.0, false, 42, nullptr, nullptr);
        REQUIRE(rep.rounds.size() == 1);
        CHECK(rep.rounds[0].jaccard == doctest::Approx(direct.jaccard).epsilon(1e-12));
        CHECK(rep.rounds[0].f1 == doctest::Approx(direct.f1).epsilon(1e-12));
        CHECK(rep.rounds[0].prauc == doctest::Approx(direct.prauc).epsilon(1e-12));
        CHECK(rep.rounds[0].avgMed == doctest::Approx(direct.avgMed).epsilon(1e-12));
        CHECK(rep.rounds[0].ddi == doctest::Approx(direct.ddi).epsilon(1e-12));
        CHECK(rep.stderrOfMean.jaccard == 0.0);
    }

    SUBCASE("same seed reproduces the report exactly") {
        MetricReport a = bootstrapEvaluate(model, fx.records, fx.split.test, fx.ddi, opts, 8, 0.8,
                                           true, 42, nullptr, nullptr);
        MetricReport b = bootstrapEvaluate(model, fx.records, fx.split.test, fx.ddi, opts, 8, 0.8,
                                           true, 42, nullptr, nullptr);
        REQUIRE(a.rounds.size() == 8);
        for (std::size_t i = 0; i < a.rounds.size(); ++i) {
            CHECK(a.rounds[i].jaccard == b.rounds[i].jaccard);
            CHECK(a.rounds[i].prauc == b.rounds[i].prauc);
        }
        CHECK(a.mean.jaccard == b.mean.jaccard);
        CHECK(a.stderrOfMean.jaccard == b.stderrOfMean.jaccard);
    }

    SUBCASE("more rounds tighten the standard error") {
        MetricReport few = bootstrapEvaluate(model, fx.records, fx.split.test, fx.ddi, opts, 4,
                                             0.8, true, 42, nullptr, nullptr);
        MetricReport many = bootstrapEvaluate(model, fx.records, fx.split.test, fx.ddi, opts, 64,
                                              0.8, true, 42, nullptr, nullptr);
        CHECK(few.stderrOfMean.jaccard > 0.0);
        CHECK(many.stderrOfMean.jaccard < few.stderrOfMean.jaccard);
    }

    SUBCASE("correction path produces audit rows for every medication") {
        EvalOptions corr;
        corr.applyCorrection = true;
        corr.diseaseMed = &fx.diseaseEffects;
        corr.procedureMed = &fx.procedureEffects;
        std::vector<CorrectionAuditRow> audit;
        auto evals =
            evalPatients(model, fx.records, fx.split.test, corr, &fx.vocabs.medications, &audit);
        CHECK(evals.size() == 5);
        // 5 patients x 2 visits x 3 medications.
        CHECK(audit.size() == 30);
        for (const auto& row : audit) {
            CHECK(row.corrected >= 0.0);
            CHECK(row.corrected <= 1.0);
            if (row.branch == CorrectionBranch::Boost)
                CHECK(row.effect >= corr.correction.delta1);
            if (row.branch == CorrectionBranch::Penalize)
                CHECK(row.effect < corr.correction.delta2);
        }

        // The uncorrected path ignores the audit sink entirely.
        std::vector<CorrectionAuditRow> none;
        evalPatients(model, fx.records, fx.split.test, EvalOptions{}, &fx.vocabs.medications,
                     &none);
        CHECK(none.empty());
    }
}

TEST_CASE("frequency baseline recommends the top training medications") {
    DdiMatrix none(3);
    auto visitWith = [](std::vector<int> meds) {
        Visit v;
        v.diseases = {0};
        v.procedures = {0};
        v.medications = std::move(meds);
        return v;
    };
    std::vector<PatientRecord> recs{
        {"t0", {visitWith({0, 1})}},
        {"t1", {visitWith({0, 2})}},
        {"e0", {visitWith({0, 1})}},
        {"e1", {visitWith({2})}},
    };
    DatasetSplit split;
    split.train = {0, 1};
    split.test = {2, 3};

    MetricSummary s = frequencyBaseline(recs, split, none, 3);
    // Training frequencies 1.0/0.5/0.5 and two medications per visit mean
    // the predictor is always {0, 1}.
    CHECK(s.jaccard == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.avgMed == 2.0);
    CHECK(s.prauc == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(s.ddi == 0.0);

    SUBCASE("interacting prediction sets are charged to the rate") {
        DdiMatrix pair(3);
        pair.set(0, 1);
        MetricSummary t = frequencyBaseline(recs, split, pair, 3);
        CHECK(t.ddi == 1.0);  // the predicted pair interacts in every visit
    }

    SUBCASE("empty training split is rejected") {
        DatasetSplit empty;
        empty.test = {2, 3};
        CHECK_THROWS_AS(frequencyBaseline(recs, empty, none, 3), DataError);
    }

    SUBCASE("the set size clamps to at least one medication") {
        std::vector<PatientRecord> sparse{
            {"t0", {visitWith({})}},
            {"e0", {visitWith({0})}},
        };
        DatasetSplit sp;
        sp.train = {0};
        sp.test = {1};
        MetricSummary u = frequencyBaseline(sparse, sp, none, 3);
        CHECK(u.avgMed == 1.0);
    }
}

}  // TEST_SUITE
