#pragma once

#include <cstdint>
#include <vector>

namespace medrec {

// Symmetric 0/1 interaction matrix over the medication vocabulary with a
// zero diagonal.
class DdiMatrix {
  public:
    DdiMatrix() = default;
    explicit DdiMatrix(int nMeds) : n_(nMeds), bits_(static_cast<std::size_t>(nMeds) * nMeds, 0) {}

    void set(int a, int b) {
        if (a == b) return;
        bits_[idx(a, b)] = 1;
        bits_[idx(b, a)] = 1;
    }
    bool interacts(int a, int b) const { return a != b && bits_[idx(a, b)] != 0; }
    int size() const { return n_; }

    int pairCount() const {
        int c = 0;
        for (int a = 0; a < n_; ++a)
            for (int b = a + 1; b < n_; ++b)
                if (interacts(a, b)) ++c;
        return c;
    }

    bool operator==(const DdiMatrix&) const = default;

  private:
    std::size_t idx(int a, int b) const {
        return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
    }
    int n_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace medrec
