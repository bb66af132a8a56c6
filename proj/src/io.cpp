#include "medrec/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "medrec/errors.hpp"

namespace medrec {

using nlohmann::json;

std::string fmtDouble(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parseDouble(const std::string& s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError(context + ": bad number '" + s + "'");
    return v;
}

std::vector<std::string> readLines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

namespace {

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::ofstream openOut(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

// Resolves a code against a fixed vocabulary; returns -1 for a skippable
// unknown code in lenient mode.
int resolveCode(const std::string& code, const Vocabulary& vocab, const LoadOptions& opts,
                LoadStats& stats, int lineNo) {
    int id = vocab.find(code);
    if (id < 0) {
        if (opts.strict)
            throw DataError("line " + std::to_string(lineNo) + ": unknown " +
                            kindName(vocab.kind()) + " code '" + code + "'");
        ++stats.unknownCodes;
        ++stats.warnings;
    }
    return id;
}

std::vector<std::string> stringArray(const json& j, const char* key, int lineNo) {
    if (!j.contains(key) || !j[key].is_array())
        throw DataError("records parse error at line " + std::to_string(lineNo) +
                        ": visit missing code array '" + key + "'");
    std::vector<std::string> out;
    for (const auto& v : j[key]) {
        if (!v.is_string())
            throw DataError("records parse error at line " + std::to_string(lineNo) +
                            ": non-string code in '" + key + "'");
        out.push_back(v.get<std::string>());
    }
    return out;
}

struct RawVisit {
    std::vector<std::string> diseases, procedures, medications;
};

struct RawPatient {
    std::string id;
    std::vector<RawVisit> visits;
    int lineNo = 0;
};

}  // namespace

RecordsLoadResult loadRecords(const std::string& path, const VocabSet* fixedVocabs,
                              const LoadOptions& opts) {
    auto lines = readLines(path);
    std::vector<RawPatient> raw;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int lineNo = static_cast<int>(i) + 1;
        if (lines[i].empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw DataError("records parse error at line " + std::to_string(lineNo) + ": " +
                            e.what());
        }
        if (!j.is_object() || !j.contains("patient_id") || !j["patient_id"].is_string() ||
            !j.contains("visits") || !j["visits"].is_array())
            throw DataError("records parse error at line " + std::to_string(lineNo) +
                            ": expected object with patient_id and visits");
        RawPatient p;
        p.id = j["patient_id"].get<std::string>();
        p.lineNo = lineNo;
        for (const auto& jv : j["visits"]) {
            RawVisit v;
            v.diseases = stringArray(jv, "diseases", lineNo);
            v.procedures = stringArray(jv, "procedures", lineNo);
            v.medications = stringArray(jv, "medications", lineNo);
            p.visits.push_back(std::move(v));
        }
        raw.push_back(std::move(p));
    }

    RecordsLoadResult result;
    if (fixedVocabs) {
        result.vocabs = *fixedVocabs;
    } else {
        std::set<std::string> d, pr, m;
        for (const auto& p : raw)
            for (const auto& v : p.visits) {
                d.insert(v.diseases.begin(), v.diseases.end());
                pr.insert(v.procedures.begin(), v.procedures.end());
                m.insert(v.medications.begin(), v.medications.end());
            }
        for (const auto& c : d) result.vocabs.diseases.add(c);
        for (const auto& c : pr) result.vocabs.procedures.add(c);
        for (const auto& c : m) result.vocabs.medications.add(c);
    }

    std::set<std::string> seenIds;
    for (const auto& p : raw) {
        if (!seenIds.insert(p.id).second) {
            if (opts.strict)
                throw DataError("line " + std::to_string(p.lineNo) + ": duplicate patient id '" +
                                p.id + "'");
            ++result.stats.warnings;
        }
        PatientRecord rec;
        rec.patientId = p.id;
        for (const auto& rv : p.visits) {
            Visit visit;
            auto fill = [&](const std::vector<std::string>& codes, const Vocabulary& vocab,
                            std::vector<int>& out) {
                for (const auto& c : codes) {
                    int id = resolveCode(c, vocab, opts, result.stats, p.lineNo);
                    if (id >= 0) out.push_back(id);
                }
            };
            fill(rv.diseases, result.vocabs.diseases, visit.diseases);
            fill(rv.procedures, result.vocabs.procedures, visit.procedures);
            fill(rv.medications, result.vocabs.medications, visit.medications);
            sortUnique(visit.diseases);
            sortUnique(visit.procedures);
            sortUnique(visit.medications);
            if (visit.complete())
                rec.visits.push_back(std::move(visit));
            else
                ++result.stats.droppedVisits;
        }
        if (static_cast<int>(rec.visits.size()) >= std::max(1, opts.minVisits))
            result.records.push_back(std::move(rec));
        else
            ++result.stats.droppedPatients;
    }
    return result;
}

void writeRecords(const std::string& path, const std::vector<PatientRecord>& records,
                  const VocabSet& vocabs) {
    auto out = openOut(path);
    for (const auto& rec : records) {
        json jv = json::array();
        for (const auto& v : rec.visits) {
            auto codes = [&](const std::vector<int>& ids, const Vocabulary& vocab) {
                json a = json::array();
                for (int id : ids) a.push_back(vocab.code(id));
                return a;
            };
            jv.push_back({{"diseases", codes(v.diseases, vocabs.diseases)},
                          {"procedures", codes(v.procedures, vocabs.procedures)},
                          {"medications", codes(v.medications, vocabs.medications)}});
        }
        json j{{"patient_id", rec.patientId}, {"visits", jv}};
        out << j.dump() << '\n';
    }
}

DdiLoadResult loadDdi(const std::string& path, const Vocabulary& medVocab,
                      const LoadOptions& opts) {
    auto lines = readLines(path);
    DdiLoadResult result;
    result.matrix = DdiMatrix(medVocab.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int lineNo = static_cast<int>(i) + 1;
        if (lines[i].empty()) continue;
        auto fields = splitCsv(lines[i]);
        if (fields.size() != 2)
            throw DataError("ddi parse error at line " + std::to_string(lineNo) +
                            ": expected two columns");
        if (fields[0] == fields[1])
            throw DataError("ddi parse error at line " + std::to_string(lineNo) +
                            ": self-pair '" + fields[0] + "'");
        int a = resolveCode(fields[0], medVocab, opts, result.stats, lineNo);
        int b = resolveCode(fields[1], medVocab, opts, result.stats, lineNo);
        if (a >= 0 && b >= 0) result.matrix.set(a, b);
    }
    return result;
}

void writeDdi(const std::string& path, const DdiMatrix& ddi, const Vocabulary& medVocab) {
    auto out = openOut(path);
    for (int a = 0; a < ddi.size(); ++a)
        for (int b = a + 1; b < ddi.size(); ++b)
            if (ddi.interacts(a, b)) out << medVocab.code(a) << ',' << medVocab.code(b) << '\n';
}

MoleculeLoadResult loadMoleculeMap(const std::string& path, const Vocabulary& medVocab,
                                   const LoadOptions& opts) {
    auto lines = readLines(path);
    std::vector<std::pair<int, std::string>> rows;  // medication id, molecule code
    std::set<std::string> molCodes;
    MoleculeLoadResult result;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int lineNo = static_cast<int>(i) + 1;
        if (lines[i].empty()) continue;
        auto fields = splitCsv(lines[i]);
        if (fields.size() != 2)
            throw DataError("molecule map parse error at line " + std::to_string(lineNo) +
                            ": expected two columns");
        int med = resolveCode(fields[0], medVocab, opts, result.stats, lineNo);
        if (med < 0) continue;
        rows.emplace_back(med, fields[1]);
        molCodes.insert(fields[1]);
    }
    for (const auto& c : molCodes) result.moleculeVocab.add(c);

    result.map.membership.assign(static_cast<std::size_t>(medVocab.size()), {});
    for (const auto& [med, code] : rows)
        result.map.membership[static_cast<std::size_t>(med)].push_back(
            result.moleculeVocab.find(code));
    for (int med = 0; med < medVocab.size(); ++med) {
        auto& mols = result.map.membership[static_cast<std::size_t>(med)];
        if (mols.empty()) {
            mols.push_back(result.moleculeVocab.add("syn:" + medVocab.code(med)));
            ++result.map.syntheticCount;
            ++result.stats.warnings;
        }
        sortUnique(mols);
    }
    return result;
}

void writeMoleculeMap(const std::string& path, const MoleculeMap& map,
                      const Vocabulary& medVocab, const Vocabulary& molVocab) {
    auto out = openOut(path);
    for (int med = 0; med < map.medicationCount(); ++med)
        for (int mol : map.moleculesOf(med))
            out << medVocab.code(med) << ',' << molVocab.code(mol) << '\n';
}

VocabSet loadVocabs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError("vocabulary parse error in '" + path + "': " + e.what());
    }
    VocabSet v;
    auto fill = [&](const char* key, Vocabulary& vocab) {
        if (!j.contains(key) || !j[key].is_array())
            throw DataError("vocabulary file '" + path + "' missing array '" + key + "'");
        for (const auto& c : j[key]) vocab.add(c.get<std::string>());
    };
    fill("diseases", v.diseases);
    fill("procedures", v.procedures);
    fill("medications", v.medications);
    fill("molecules", v.molecules);
    return v;
}

void writeVocabs(const std::string& path, const VocabSet& vocabs) {
    auto out = openOut(path);
    json j{{"diseases", vocabs.diseases.codes()},
           {"procedures", vocabs.procedures.codes()},
           {"medications", vocabs.medications.codes()},
           {"molecules", vocabs.molecules.codes()}};
    out << j.dump(2) << '\n';
}

}  // namespace medrec
