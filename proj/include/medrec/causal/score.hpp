#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "medrec/causal/graph.hpp"
#include "medrec/records.hpp"

namespace medrec {

// Binary occurrence table: one row per visit, one column per entity.
class BinaryTable {
  public:
    BinaryTable() = default;
    BinaryTable(int rows, int cols)
        : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols, 0) {}

    static BinaryTable fromVisits(const std::vector<PatientRecord>& records,
                                  const std::vector<int>& patientIndices, EntityKind kind,
                                  int vocabSize);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::uint8_t at(int r, int c) const {
        return cells_[static_cast<std::size_t>(r) * cols_ + c];
    }
    void set(int r, int c, std::uint8_t v) {
        cells_[static_cast<std::size_t>(r) * cols_ + c] = v;
    }

    int columnSum(int c) const;
    // Rows where both columns are 1.
    int coOccurrence(int a, int b) const;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> cells_;
};

// Bayesian-Dirichlet equivalent-uniform local score of a node given its
// parent set, on binary data. Deterministic; higher is better.
double bdeuLocalScore(const BinaryTable& data, int node, const std::vector<int>& parents,
                      double ess, int maxIndegree);

// Memoizes local scores by (node, parent set); decomposability makes the
// graph total a plain sum of cached locals.
class ScoreCache {
  public:
    ScoreCache(const BinaryTable& data, double ess, int maxIndegree)
        : data_(&data), ess_(ess), maxIndegree_(maxIndegree) {}

    double local(int node, const std::vector<int>& parents);
    double total(const CausalGraph& graph);
    std::size_t entries() const { return memo_.size(); }

  private:
    const BinaryTable* data_;
    double ess_;
    int maxIndegree_;
    std::unordered_map<std::string, double> memo_;
};

}  // namespace medrec
