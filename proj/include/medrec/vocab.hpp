#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "medrec/errors.hpp"

namespace medrec {

enum class EntityKind { Disease, Procedure, Medication, Molecule };

inline const char* kindName(EntityKind k) {
    switch (k) {
        case EntityKind::Disease: return "disease";
        case EntityKind::Procedure: return "procedure";
        case EntityKind::Medication: return "medication";
        case EntityKind::Molecule: return "molecule";
    }
    return "?";
}

inline EntityKind kindFromName(const std::string& s) {
    if (s == "disease") return EntityKind::Disease;
    if (s == "procedure") return EntityKind::Procedure;
    if (s == "medication") return EntityKind::Medication;
    if (s == "molecule") return EntityKind::Molecule;
    throw DataError("unknown entity kind '" + s + "'");
}

// Code strings and their dense integer positions. Codes are unique and index
// is the inverse of codes[].
class Vocabulary {
  public:
    Vocabulary() = default;
    explicit Vocabulary(EntityKind kind) : kind_(kind) {}
    Vocabulary(EntityKind kind, std::vector<std::string> codes) : kind_(kind) {
        for (auto& c : codes) add(c);
    }

    int add(const std::string& code) {
        auto it = index_.find(code);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(codes_.size());
        codes_.push_back(code);
        index_.emplace(code, id);
        return id;
    }

    // Returns -1 when absent.
    int find(const std::string& code) const {
        auto it = index_.find(code);
        return it == index_.end() ? -1 : it->second;
    }

    const std::string& code(int id) const { return codes_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(codes_.size()); }
    bool empty() const { return codes_.empty(); }
    EntityKind kind() const { return kind_; }
    const std::vector<std::string>& codes() const { return codes_; }

    bool operator==(const Vocabulary& o) const { return kind_ == o.kind_ && codes_ == o.codes_; }

  private:
    EntityKind kind_ = EntityKind::Disease;
    std::vector<std::string> codes_;
    std::unordered_map<std::string, int> index_;
};

// The four vocabularies a dataset carries.
struct VocabSet {
    Vocabulary diseases{EntityKind::Disease};
    Vocabulary procedures{EntityKind::Procedure};
    Vocabulary medications{EntityKind::Medication};
    Vocabulary molecules{EntityKind::Molecule};
};

}  // namespace medrec
