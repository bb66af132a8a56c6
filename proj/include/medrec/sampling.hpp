#pragma once

#include <cstdint>
#include <vector>

namespace medrec {

struct SplitRatios {
    double train = 2.0 / 3.0;
    double val = 1.0 / 6.0;
    double test = 1.0 / 6.0;
};

// Patient-level disjoint partition, expressed as indices into the loaded
// record list.
struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

DatasetSplit splitDataset(int nPatients, const SplitRatios& ratios, std::uint64_t seed);

// Each round holds ceil(fraction * n) indices into the test set, drawn with
// replacement unless withReplacement is false (then a shuffled prefix).
std::vector<std::vector<int>> bootstrapRounds(int nTest, int rounds, double fraction,
                                              std::uint64_t seed, bool withReplacement);

}  // namespace medrec
