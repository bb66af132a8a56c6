#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "medrec/errors.hpp"
#include "medrec/vocab.hpp"

namespace medrec {

// One hospital visit. Index sets are kept sorted ascending; a retained visit
// has all three sets non-empty.
struct Visit {
    std::vector<int> diseases;
    std::vector<int> procedures;
    std::vector<int> medications;

    bool complete() const {
        return !diseases.empty() && !procedures.empty() && !medications.empty();
    }
    bool operator==(const Visit&) const = default;
};

struct PatientRecord {
    std::string patientId;
    std::vector<Visit> visits;  // chronological
    bool operator==(const PatientRecord&) const = default;
};

using MultiHotVector = std::vector<std::uint8_t>;

inline MultiHotVector encodeMultiHot(const std::vector<int>& codes, const Vocabulary& vocab) {
    MultiHotVector bits(static_cast<std::size_t>(vocab.size()), 0);
    for (int c : codes) {
        if (c < 0 || c >= vocab.size())
            throw DataError("multi-hot index " + std::to_string(c) + " out of range for " +
                            std::string(kindName(vocab.kind())) + " vocabulary of size " +
                            std::to_string(vocab.size()));
        bits[static_cast<std::size_t>(c)] = 1;
    }
    return bits;
}

inline std::vector<int> decodeMultiHot(const MultiHotVector& bits) {
    std::vector<int> out;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out.push_back(static_cast<int>(i));
    return out;
}

inline void sortUnique(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace medrec
