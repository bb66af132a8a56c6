#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "medrec/io.hpp"
#include "medrec/records.hpp"
#include "medrec/rng.hpp"
#include "medrec/sampling.hpp"
#include "medrec/synthetic.hpp"
#include "medrec/vocab.hpp"

using namespace medrec;

namespace {

std::filesystem::path tempFile(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "medrec_ehr_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void writeText(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

Vocabulary vocabOf(EntityKind kind, std::vector<std::string> codes) {
    return Vocabulary(kind, std::move(codes));
}

// Frequency of med given source over all generated visits.
double empiricalRate(const SyntheticData& data, EntityKind kind, int source, int med,
                     long long* qualifying = nullptr) {
    long long hits = 0, total = 0;
    for (const auto& rec : data.records) {
        for (const auto& v : rec.visits) {
            const auto& src = kind == EntityKind::Disease ? v.diseases : v.procedures;
            if (!std::binary_search(src.begin(), src.end(), source)) continue;
            ++total;
            if (std::binary_search(v.medications.begin(), v.medications.end(), med)) ++hits;
        }
    }
    if (qualifying) *qualifying = total;
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_SUITE("ehr-core") {

TEST_CASE("multi-hot encodes subsets over the vocabulary") {
    Vocabulary v = vocabOf(EntityKind::Medication, {"m0", "m1", "m2", "m3", "m4"});

    CHECK(encodeMultiHot({}, v) == MultiHotVector{0, 0, 0, 0, 0});
    CHECK(encodeMultiHot({0, 4}, v) == MultiHotVector{1, 0, 0, 0, 1});
    CHECK_THROWS_AS(encodeMultiHot({5}, v), DataError);
    CHECK_THROWS_AS(encodeMultiHot({-1}, v), DataError);
}

TEST_CASE("multi-hot round trip is identity on random subsets") {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = rng.intIn(1, 40);
        Vocabulary v(EntityKind::Disease);
        for (int i = 0; i < n; ++i) v.add("c" + std::to_string(i));

        std::vector<int> subset;
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(0.3)) subset.push_back(i);

        CHECK(decodeMultiHot(encodeMultiHot(subset, v)) == subset);
    }
}

TEST_CASE("records load a minimal two-visit file") {
    auto p = tempFile("minimal.jsonl");
    writeText(p,
              "{\"patient_id\":\"p1\",\"visits\":[{\"diseases\":[\"d1\",\"d2\"],"
              "\"procedures\":[\"pr1\"],\"medications\":[\"m1\"]},"
              "{\"diseases\":[\"d2\"],\"procedures\":[\"pr2\"],\"medications\":[\"m1\",\"m2\"]}]}\n");

    auto res = loadRecords(p.string(), nullptr, LoadOptions{});
    REQUIRE(res.records.size() == 1);
    const PatientRecord& rec = res.records[0];
    CHECK(rec.patientId == "p1");
    REQUIRE(rec.visits.size() == 2);
    CHECK(res.vocabs.diseases.size() == 2);
    CHECK(res.vocabs.procedures.size() == 2);
    CHECK(res.vocabs.medications.size() == 2);
    // Codes resolve through the built vocabulary, not file order.
    CHECK(rec.visits[0].diseases.size() == 2);
    CHECK(rec.visits[1].medications.size() == 2);
    for (const auto& v : rec.visits) CHECK(v.complete());
}

TEST_CASE("retention drops visits missing any code set, then short patients") {
    auto p = tempFile("retention.jsonl");
    writeText(p,
              "{\"patient_id\":\"p1\",\"visits\":[{\"diseases\":[\"d1\"],"
              "\"procedures\":[\"pr1\"],\"medications\":[]}]}\n");

    auto res = loadRecords(p.string(), nullptr, LoadOptions{});
    CHECK(res.records.empty());
    CHECK(res.stats.droppedVisits == 1);
    CHECK(res.stats.droppedPatients == 1);
}

TEST_CASE("malformed record line reports its line number") {
    auto p = tempFile("broken.jsonl");
    writeText(p,
              "{\"patient_id\":\"p1\",\"visits\":[{\"diseases\":[\"d1\"],"
              "\"procedures\":[\"pr1\"],\"medications\":[\"m1\"]}]}\n"
              "{not json\n");

    try {
        loadRecords(p.string(), nullptr, LoadOptions{});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("unknown codes against fixed vocabularies: warn by default, throw when strict") {
    auto p = tempFile("unknown.jsonl");
    writeText(p,
              "{\"patient_id\":\"p1\",\"visits\":[{\"diseases\":[\"d1\",\"dX\"],"
              "\"procedures\":[\"pr1\"],\"medications\":[\"m1\"]}]}\n");

    VocabSet fixed;
    fixed.diseases = vocabOf(EntityKind::Disease, {"d1"});
    fixed.procedures = vocabOf(EntityKind::Procedure, {"pr1"});
    fixed.medications = vocabOf(EntityKind::Medication, {"m1"});

    LoadOptions lenient;
    auto res = loadRecords(p.string(), &fixed, lenient);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].visits[0].diseases == std::vector<int>{0});
    CHECK(res.stats.unknownCodes == 1);

    LoadOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(loadRecords(p.string(), &fixed, strict), DataError);
}

TEST_CASE("records round trip through write and load") {
    SyntheticSpec spec;
    spec.patients = 40;
    spec.diseases = 12;
    spec.procedures = 5;
    spec.medications = 8;
    spec.molecules = 6;
    spec.plantedDisease = {0.95, 0.85};
    spec.plantedProcedure = {0.9};
    spec.seed = 3;
    SyntheticData data = generateSynthetic(spec);

    auto p = tempFile("roundtrip.jsonl");
    writeRecords(p.string(), data.records, data.vocabs);
    auto res = loadRecords(p.string(), &data.vocabs, LoadOptions{});
    CHECK(res.records == data.records);
}

TEST_CASE("ddi file loads symmetric pairs") {
    Vocabulary meds = vocabOf(EntityKind::Medication, {"m1", "m2", "m3"});

    auto p = tempFile("ddi.csv");
    writeText(p, "m1,m2\n");
    auto res = loadDdi(p.string(), meds, LoadOptions{});
    CHECK(res.matrix.interacts(0, 1));
    CHECK(res.matrix.interacts(1, 0));
    CHECK_FALSE(res.matrix.interacts(0, 2));
    CHECK(res.matrix.pairCount() == 1);

    SUBCASE("duplicate and reversed rows are idempotent") {
        writeText(p, "m1,m2\nm2,m1\nm1,m2\n");
        auto dup = loadDdi(p.string(), meds, LoadOptions{});
        CHECK(dup.matrix == res.matrix);
    }

    SUBCASE("empty file gives an all-clear matrix") {
        writeText(p, "");
        auto none = loadDdi(p.string(), meds, LoadOptions{});
        CHECK(none.matrix.pairCount() == 0);
        CHECK(none.matrix.size() == 3);
    }

    SUBCASE("self pair is rejected") {
        writeText(p, "m1,m1\n");
        CHECK_THROWS_AS(loadDdi(p.string(), meds, LoadOptions{}), DataError);
    }

    SUBCASE("unknown code skipped unless strict") {
        writeText(p, "m1,mX\n");
        auto skip = loadDdi(p.string(), meds, LoadOptions{});
        CHECK(skip.matrix.pairCount() == 0);
        CHECK(skip.stats.unknownCodes == 1);
        LoadOptions strict;
        strict.strict = true;
        CHECK_THROWS_AS(loadDdi(p.string(), meds, strict), DataError);
    }
}

TEST_CASE("molecule map loads memberships and backfills missing medications") {
    Vocabulary meds = vocabOf(EntityKind::Medication, {"mA", "mB", "mC"});
    auto p = tempFile("mols.csv");
    writeText(p, "mA,s1\nmA,s2\nmB,s2\n");

    auto res = loadMoleculeMap(p.string(), meds, LoadOptions{});
    REQUIRE(res.map.medicationCount() == 3);

    int s1 = res.moleculeVocab.find("s1");
    int s2 = res.moleculeVocab.find("s2");
    REQUIRE(s1 >= 0);
    REQUIRE(s2 >= 0);
    CHECK(res.map.moleculesOf(0) == std::vector<int>{s1, s2});
    CHECK(res.map.moleculesOf(1) == std::vector<int>{s2});

    // mC was absent from the file: it gets a private molecule shared with
    // no other medication.
    REQUIRE(res.map.moleculesOf(2).size() == 1);
    int priv = res.map.moleculesOf(2)[0];
    CHECK(priv != s1);
    CHECK(priv != s2);
    CHECK(res.map.syntheticCount == 1);
    CHECK(res.moleculeVocab.size() == 3);

    SUBCASE("shared molecule appears in both memberships") {
        bool inA = std::find(res.map.moleculesOf(0).begin(), res.map.moleculesOf(0).end(), s2) !=
                   res.map.moleculesOf(0).end();
        CHECK(inA);
    }

    SUBCASE("map round trips through write and load") {
        auto p2 = tempFile("mols_rt.csv");
        writeMoleculeMap(p2.string(), res.map, meds, res.moleculeVocab);
        auto again = loadMoleculeMap(p2.string(), meds, LoadOptions{});
        // The rewrite spells out the backfilled molecule, so nothing is
        // synthesized on reload; memberships must survive unchanged.
        CHECK(again.map.membership == res.map.membership);
        CHECK(again.map.syntheticCount == 0);
        CHECK(again.moleculeVocab == res.moleculeVocab);
    }
}

TEST_CASE("vocab file round trips all four vocabularies") {
    VocabSet vs;
    vs.diseases = vocabOf(EntityKind::Disease, {"d1", "d0"});
    vs.procedures = vocabOf(EntityKind::Procedure, {"pr1"});
    vs.medications = vocabOf(EntityKind::Medication, {"m2", "m1"});
    vs.molecules = vocabOf(EntityKind::Molecule, {"s1"});

    auto p = tempFile("vocab.json");
    writeVocabs(p.string(), vs);
    VocabSet back = loadVocabs(p.string());
    CHECK(back.diseases == vs.diseases);
    CHECK(back.procedures == vs.procedures);
    CHECK(back.medications == vs.medications);
    CHECK(back.molecules == vs.molecules);
}

TEST_CASE("generator is deterministic per seed") {
    SyntheticSpec spec;
    spec.patients = 150;
    spec.seed = 7;

    SyntheticData a = generateSynthetic(spec);
    SyntheticData b = generateSynthetic(spec);
    CHECK(a.records == b.records);
    CHECK(a.ddi == b.ddi);
    CHECK(a.molecules == b.molecules);
    CHECK(a.vocabs.diseases == b.vocabs.diseases);
    CHECK(a.truth.effectPairs.size() == b.truth.effectPairs.size());

    spec.seed = 8;
    SyntheticData c = generateSynthetic(spec);
    CHECK(a.records != c.records);
}

TEST_CASE("generator plants response rates that show up empirically") {
    SyntheticSpec spec;
    spec.patients = 2000;
    spec.seed = 7;
    SyntheticData data = generateSynthetic(spec);

    REQUIRE_FALSE(data.truth.effectPairs.empty());
    for (const PlantedPair& pp : data.truth.effectPairs) {
        long long qualifying = 0;
        double rate = empiricalRate(data, pp.sourceKind, pp.source, pp.medication, &qualifying);
        if (pp.rho >= 0.9 && qualifying >= 200) {
            INFO("pair source=" << pp.source << " med=" << pp.medication << " rho=" << pp.rho);
            CHECK(rate >= pp.rho - 0.05);
            CHECK(rate <= pp.rho + 0.05);
        }
    }

    SUBCASE("an unplanted pair stays at background rate") {
        std::set<std::pair<int, int>> planted;
        for (const PlantedPair& pp : data.truth.effectPairs)
            if (pp.sourceKind == EntityKind::Disease)
                planted.insert({pp.source, pp.medication});

        // Both planted sources and planted medications are freshly added
        // entities, so (d0, planted-free med) is untouched by construction.
        int freeMed = -1;
        for (int m = 0; m < data.vocabs.medications.size(); ++m) {
            bool used = false;
            for (const auto& pr : planted)
                if (pr.second == m) used = true;
            if (!used) {
                freeMed = m;
                break;
            }
        }
        REQUIRE(freeMed >= 0);
        double rate = empiricalRate(data, EntityKind::Disease, 0, freeMed);
        CHECK(rate <= 0.10);
    }

    SUBCASE("inert vocabulary entries never occur") {
        // The last disease index is reserved as inert.
        int inert = data.vocabs.diseases.size() - 1;
        long long qualifying = 0;
        empiricalRate(data, EntityKind::Disease, inert, 0, &qualifying);
        CHECK(qualifying == 0);
    }
}

TEST_CASE("generator rejects out-of-range densities") {
    SyntheticSpec spec;
    spec.patients = 10;
    spec.dagDensity = 1.4;
    CHECK_THROWS_AS(generateSynthetic(spec), ConfigError);

    SyntheticSpec neg;
    neg.patients = 10;
    neg.medBaseRate = -0.1;
    CHECK_THROWS_AS(generateSynthetic(neg), ConfigError);

    SyntheticSpec zero;
    zero.patients = 0;
    CHECK_THROWS_AS(generateSynthetic(zero), ConfigError);
}

TEST_CASE("generated visits always carry all three code sets") {
    SyntheticSpec spec;
    spec.patients = 300;
    spec.seed = 12;
    SyntheticData data = generateSynthetic(spec);

    for (const auto& rec : data.records) {
        CHECK_FALSE(rec.visits.empty());
        for (const auto& v : rec.visits) CHECK(v.complete());
    }
}

TEST_CASE("split produces the documented sizes") {
    DatasetSplit s = splitDataset(600, SplitRatios{}, 99);
    CHECK(s.train.size() == 400);
    CHECK(s.val.size() == 100);
    CHECK(s.test.size() == 100);
}

TEST_CASE("split is a seed-deterministic disjoint exhaustive partition") {
    const int n = 137;
    DatasetSplit a = splitDataset(n, SplitRatios{}, 5);
    DatasetSplit b = splitDataset(n, SplitRatios{}, 5);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    DatasetSplit c = splitDataset(n, SplitRatios{}, 6);
    CHECK(a.train != c.train);

    std::set<int> seen;
    for (int i : a.train) seen.insert(i);
    for (int i : a.val) seen.insert(i);
    for (int i : a.test) seen.insert(i);
    CHECK(seen.size() == static_cast<std::size_t>(n));
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == n - 1);
    CHECK(a.train.size() + a.val.size() + a.test.size() == static_cast<std::size_t>(n));
}

TEST_CASE("split rejects ratios that do not sum to one") {
    SplitRatios bad;
    bad.train = 0.5;
    bad.val = 0.2;
    bad.test = 0.2;
    CHECK_THROWS_AS(splitDataset(100, bad, 1), ConfigError);
}

TEST_CASE("bootstrap rounds draw the documented sizes") {
    auto rounds = bootstrapRounds(100, 10, 0.8, 42, true);
    REQUIRE(rounds.size() == 10);
    for (const auto& r : rounds) {
        CHECK(r.size() == 80);
        for (int i : r) {
            CHECK(i >= 0);
            CHECK(i < 100);
        }
    }

    auto again = bootstrapRounds(100, 10, 0.8, 42, true);
    CHECK(rounds == again);
    auto other = bootstrapRounds(100, 10, 0.8, 43, true);
    CHECK(rounds != other);
}

TEST_CASE("single full round without replacement is a permutation prefix") {
    auto rounds = bootstrapRounds(50, 1, 1.0, 9, false);
    REQUIRE(rounds.size() == 1);
    REQUIRE(rounds[0].size() == 50);
    std::set<int> unique(rounds[0].begin(), rounds[0].end());
    CHECK(unique.size() == 50);
}

TEST_CASE("bootstrap rejects an empty test set") {
    CHECK_THROWS_AS(bootstrapRounds(0, 10, 0.8, 1, true), DataError);
}

}  // TEST_SUITE
