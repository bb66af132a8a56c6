#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medrec/ddi.hpp"
#include "medrec/molecules.hpp"
#include "medrec/records.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// Shortest text form that parses back to the identical double.
std::string fmtDouble(double v);
double parseDouble(const std::string& s, const std::string& context);

struct LoadOptions {
    bool strict = false;  // unknown-code warnings become errors
    int minVisits = 1;    // patients with fewer retained visits are dropped
};

struct LoadStats {
    int unknownCodes = 0;
    int droppedVisits = 0;
    int droppedPatients = 0;
    int warnings = 0;
};

struct RecordsLoadResult {
    std::vector<PatientRecord> records;
    VocabSet vocabs;  // molecule vocabulary stays empty here
    LoadStats stats;
};

// Records file: one JSON object per line with patient_id and visits, each
// visit holding three code arrays. Vocabularies are built from the data
// (codes sorted) when fixedVocabs is null; otherwise codes must resolve
// against the given vocabularies.
RecordsLoadResult loadRecords(const std::string& path, const VocabSet* fixedVocabs,
                              const LoadOptions& opts);
void writeRecords(const std::string& path, const std::vector<PatientRecord>& records,
                  const VocabSet& vocabs);

struct DdiLoadResult {
    DdiMatrix matrix;
    LoadStats stats;
};

// Two-column CSV of medication code pairs. Self-pairs are rejected; unknown
// codes are skipped with a warning (error when strict).
DdiLoadResult loadDdi(const std::string& path, const Vocabulary& medVocab,
                      const LoadOptions& opts);
void writeDdi(const std::string& path, const DdiMatrix& ddi, const Vocabulary& medVocab);

struct MoleculeLoadResult {
    MoleculeMap map;
    Vocabulary moleculeVocab{EntityKind::Molecule};
    LoadStats stats;
};

// Two-column CSV (medication code, molecule code). Medications missing from
// the file receive a private synthetic molecule.
MoleculeLoadResult loadMoleculeMap(const std::string& path, const Vocabulary& medVocab,
                                   const LoadOptions& opts);
void writeMoleculeMap(const std::string& path, const MoleculeMap& map,
                      const Vocabulary& medVocab, const Vocabulary& molVocab);

VocabSet loadVocabs(const std::string& path);
void writeVocabs(const std::string& path, const VocabSet& vocabs);

std::vector<std::string> readLines(const std::string& path);

}  // namespace medrec
