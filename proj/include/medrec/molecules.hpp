#pragma once

#include <vector>

namespace medrec {

// Medication -> molecule membership. Every medication has at least one
// molecule; medications absent from the source file get a private synthetic
// molecule so that composition stays total without inventing shared
// chemistry.
struct MoleculeMap {
    std::vector<std::vector<int>> membership;  // indexed by medication
    int syntheticCount = 0;                    // molecules invented as fallbacks

    int medicationCount() const { return static_cast<int>(membership.size()); }
    const std::vector<int>& moleculesOf(int med) const {
        return membership[static_cast<std::size_t>(med)];
    }
    bool operator==(const MoleculeMap&) const = default;
};

}  // namespace medrec
