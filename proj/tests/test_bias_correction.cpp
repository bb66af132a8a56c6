#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "medrec/correction.hpp"
#include "medrec/errors.hpp"
#include "medrec/io.hpp"
#include "medrec/rng.hpp"

using namespace medrec;

namespace {

struct CorrectionFixture {
    CausalEffectMatrix diseaseMed;
    CausalEffectMatrix procedureMed;
    Visit visit;

    CorrectionFixture() {
        diseaseMed.sourceKind = EntityKind::Disease;
        diseaseMed.values = Eigen::MatrixXd::Zero(3, 4);
        procedureMed.sourceKind = EntityKind::Procedure;
        procedureMed.values = Eigen::MatrixXd::Zero(2, 4);

        diseaseMed.values(0, 0) = 0.98;
        diseaseMed.values(1, 1) = 0.93;
        diseaseMed.values(2, 2) = 0.99;  // disease 2 is absent from the visit
        diseaseMed.values(0, 3) = 0.50;
        procedureMed.values(0, 3) = 0.91;
        procedureMed.values(1, 0) = 0.97;  // procedure 1 is absent too

        visit.diseases = {0, 1};
        visit.procedures = {0};
        visit.medications = {0};
    }
};

}  // namespace

TEST_SUITE("bias-correction") {

TEST_CASE("maximum relevant effect scans only the visit's entities") {
    CorrectionFixture fx;
    CHECK(maxRelevantEffect(0, fx.visit, fx.diseaseMed, fx.procedureMed) == 0.98);
    CHECK(maxRelevantEffect(1, fx.visit, fx.diseaseMed, fx.procedureMed) == 0.93);
    // Its only strong pair hangs off an entity the visit does not have.
    CHECK(maxRelevantEffect(2, fx.visit, fx.diseaseMed, fx.procedureMed) == 0.0);
    // Larger of the disease and procedure pathways wins.
    CHECK(maxRelevantEffect(3, fx.visit, fx.diseaseMed, fx.procedureMed) == 0.91);
}

TEST_CASE("three-branch adjustment with the default thresholds") {
    CorrectionFixture fx;
    CorrectionConfig cfg;  // delta1=0.97 delta2=0.90 tau=0.10 threshold=0.5
    std::vector<double> raw{0.40, 0.40, 0.05, 0.62};
    RecommendationResult res = correct(raw, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);

    REQUIRE(res.corrected.size() == 4);
    CHECK(res.branch[0] == CorrectionBranch::Boost);
    CHECK(res.corrected[0] == doctest::Approx(0.50).epsilon(1e-12));
    CHECK(res.branch[1] == CorrectionBranch::Keep);
    CHECK(res.corrected[1] == 0.40);
    CHECK(res.branch[2] == CorrectionBranch::Penalize);
    CHECK(res.corrected[2] == 0.0);  // 0.05 - 0.10 clamps at zero
    CHECK(res.branch[3] == CorrectionBranch::Keep);
    CHECK(res.corrected[3] == 0.62);

    CHECK(res.maxEffect == std::vector<double>{0.98, 0.93, 0.0, 0.91});
    CHECK(res.raw == raw);
    CHECK(res.selected == std::vector<int>{0, 3});

    SUBCASE("boost clamps at one") {
        std::vector<double> high{0.95, 0.1, 0.1, 0.1};
        RecommendationResult r2 = correct(high, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);
        CHECK(r2.corrected[0] == 1.0);
    }

    SUBCASE("threshold boundaries are inclusive for boost and keep") {
        CausalEffectMatrix dm;
        dm.values = Eigen::MatrixXd::Zero(1, 3);
        dm.values(0, 0) = 0.97;     // exactly delta1
        dm.values(0, 1) = 0.90;     // exactly delta2
        dm.values(0, 2) = 0.8999;   // just below delta2
        CausalEffectMatrix pm;
        pm.values = Eigen::MatrixXd::Zero(1, 3);
        Visit v;
        v.diseases = {0};
        v.procedures = {0};
        RecommendationResult r3 = correct({0.5, 0.5, 0.5}, v, dm, pm, cfg);
        CHECK(r3.branch[0] == CorrectionBranch::Boost);
        CHECK(r3.branch[1] == CorrectionBranch::Keep);
        CHECK(r3.branch[2] == CorrectionBranch::Penalize);
    }
}

TEST_CASE("every medication takes exactly one branch and stays in range") {
    Rng rng(1234);
    CorrectionConfig cfg;
    const int meds = 200;

    CausalEffectMatrix dm;
    dm.values = Eigen::MatrixXd::Zero(1, meds);
    CausalEffectMatrix pm;
    pm.values = Eigen::MatrixXd::Zero(1, meds);
    Visit v;
    v.diseases = {0};
    v.procedures = {0};

    std::vector<double> raw(meds);
    for (int m = 0; m < meds; ++m) {
        raw[static_cast<std::size_t>(m)] = rng.uniform();
        dm.values(0, m) = rng.uniform();
        pm.values(0, m) = rng.uniform();
    }

    RecommendationResult res = correct(raw, v, dm, pm, cfg);
    for (int m = 0; m < meds; ++m) {
        const auto i = static_cast<std::size_t>(m);
        const double e = std::max(dm.values(0, m), pm.values(0, m));
        CHECK(res.maxEffect[i] == e);
        CorrectionBranch want = e >= cfg.delta1   ? CorrectionBranch::Boost
                                : e >= cfg.delta2 ? CorrectionBranch::Keep
                                                  : CorrectionBranch::Penalize;
        CHECK(res.branch[i] == want);
        double adjusted = raw[i];
        if (want == CorrectionBranch::Boost) adjusted += cfg.tau1;
        if (want == CorrectionBranch::Penalize) adjusted -= cfg.tau2;
        CHECK(res.corrected[i] == std::clamp(adjusted, 0.0, 1.0));
        CHECK(res.corrected[i] >= 0.0);
        CHECK(res.corrected[i] <= 1.0);
    }
    CHECK(res.selected == selectSet(res.corrected, cfg.selectionThreshold));
}

TEST_CASE("correction is monotone in the raw probability") {
    CorrectionFixture fx;
    CorrectionConfig cfg;
    std::vector<double> lo{0.10, 0.20, 0.30, 0.40};
    std::vector<double> hi{0.15, 0.55, 0.30, 0.95};
    RecommendationResult a = correct(lo, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);
    RecommendationResult b = correct(hi, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);
    for (std::size_t i = 0; i < lo.size(); ++i) CHECK(a.corrected[i] <= b.corrected[i]);
}

TEST_CASE("zero offsets leave the probabilities untouched") {
    CorrectionFixture fx;
    CorrectionConfig cfg;
    cfg.tau1 = 0.0;
    cfg.tau2 = 0.0;
    std::vector<double> raw{0.12, 0.34, 0.56, 0.78};
    RecommendationResult res = correct(raw, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);
    CHECK(res.corrected == raw);
    // Branches are still reported even though they change nothing.
    CHECK(res.branch[0] == CorrectionBranch::Boost);
    CHECK(res.branch[2] == CorrectionBranch::Penalize);
}

TEST_CASE("correction config rejects inconsistent settings") {
    auto withCfg = [](auto mutate) {
        CorrectionConfig cfg;
        mutate(cfg);
        return cfg;
    };
    CHECK_NOTHROW(CorrectionConfig{}.validate());
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.delta2 = 0.97; }).validate(),
                    ConfigError);  // delta2 == delta1
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.delta2 = 0.99; }).validate(),
                    ConfigError);  // reversed
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.delta1 = 1.2; }).validate(), ConfigError);
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.delta2 = -0.1; }).validate(), ConfigError);
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.tau1 = -0.01; }).validate(), ConfigError);
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.tau2 = -1.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.selectionThreshold = 0.0; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(withCfg([](CorrectionConfig& c) { c.selectionThreshold = 1.0; }).validate(),
                    ConfigError);

    CorrectionFixture fx;
    CorrectionConfig bad;
    bad.delta2 = 0.99;
    CHECK_THROWS_AS(correct({0.5}, fx.visit, fx.diseaseMed, fx.procedureMed, bad), ConfigError);
}

TEST_CASE("selection keeps indices at or above the threshold") {
    CHECK(selectSet({0.6, 0.4, 0.5}, 0.5) == std::vector<int>{0, 2});
    CHECK(selectSet({0.1, 0.2, 0.3}, 0.5).empty());
    CHECK(selectSet({}, 0.5).empty());
    CHECK(selectSet({0.5}, 0.5) == std::vector<int>{0});

    SUBCASE("raising the threshold never adds medications") {
        Rng rng(9);
        std::vector<double> probs(50);
        for (auto& p : probs) p = rng.uniform();
        std::vector<int> wide = selectSet(probs, 0.3);
        std::vector<int> narrow = selectSet(probs, 0.7);
        for (int m : narrow)
            CHECK(std::find(wide.begin(), wide.end(), m) != wide.end());
    }
}

TEST_CASE("audit rows and csv mirror the correction outcome") {
    CorrectionFixture fx;
    CorrectionConfig cfg;
    std::vector<double> raw{0.40, 0.40, 0.05, 0.62};
    RecommendationResult res = correct(raw, fx.visit, fx.diseaseMed, fx.procedureMed, cfg);

    Vocabulary meds(EntityKind::Medication, {"M_a", "M_b", "M_c", "M_d"});
    auto rows = auditRows("p7", 1, res, meds);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].patientId == "p7");
    CHECK(rows[0].visitIndex == 1);
    CHECK(rows[0].medication == "M_a");
    CHECK(rows[0].raw == 0.40);
    CHECK(rows[0].effect == 0.98);
    CHECK(rows[0].branch == CorrectionBranch::Boost);
    CHECK(rows[0].corrected == res.corrected[0]);
    CHECK(rows[2].medication == "M_c");
    CHECK(rows[2].branch == CorrectionBranch::Penalize);

    auto dir = std::filesystem::temp_directory_path() / "medrec_correction_tests";
    std::filesystem::create_directories(dir);
    auto path = (dir / "audit.csv").string();
    writeAuditCsv(path, rows);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "patient,visit,medication,raw,effect,branch,corrected");
    CHECK(lines[1] == "p7,1,M_a," + fmtDouble(0.40) + "," + fmtDouble(0.98) + ",boost," +
                          fmtDouble(res.corrected[0]));
    CHECK(lines[3].find(",penalize,") != std::string::npos);
    CHECK(lines[4].find("M_d") != std::string::npos);
}

}  // TEST_SUITE
