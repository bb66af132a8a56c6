#include "medrec/sampling.hpp"

#include <cmath>
#include <numeric>

#include "medrec/errors.hpp"
#include "medrec/rng.hpp"

namespace medrec {

DatasetSplit splitDataset(int nPatients, const SplitRatios& ratios, std::uint64_t seed) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios sum to " + std::to_string(sum) + ", expected 1");
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
        throw ConfigError("split ratios must be non-negative");
    if (nPatients < 1) throw ConfigError("cannot split an empty dataset");

    std::vector<int> order(static_cast<std::size_t>(nPatients));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    int nTrain = static_cast<int>(std::llround(nPatients * ratios.train));
    int nVal = static_cast<int>(std::llround(nPatients * ratios.val));
    if (nTrain > nPatients) nTrain = nPatients;
    if (nTrain + nVal > nPatients) nVal = nPatients - nTrain;

    DatasetSplit split;
    split.train.assign(order.begin(), order.begin() + nTrain);
    split.val.assign(order.begin() + nTrain, order.begin() + nTrain + nVal);
    split.test.assign(order.begin() + nTrain + nVal, order.end());
    return split;
}

std::vector<std::vector<int>> bootstrapRounds(int nTest, int rounds, double fraction,
                                              std::uint64_t seed, bool withReplacement) {
    if (nTest < 1) throw DataError("bootstrap requires a non-empty test set");
    if (rounds < 1) throw ConfigError("bootstrap rounds must be >= 1");
    if (fraction <= 0.0 || fraction > 1.0)
        throw ConfigError("bootstrap fraction must be in (0, 1]");

    const int k = static_cast<int>(std::ceil(fraction * nTest));
    Rng rng(seed);
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r) {
        std::vector<int> sample;
        sample.reserve(static_cast<std::size_t>(k));
        if (withReplacement) {
            for (int i = 0; i < k; ++i)
                sample.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(nTest))));
        } else {
            std::vector<int> order(static_cast<std::size_t>(nTest));
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            sample.assign(order.begin(), order.begin() + k);
        }
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace medrec
