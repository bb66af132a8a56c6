#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "medrec/rng.hpp"

namespace medrec {

// Named parameter tensors with gradients and optimizer state. Entry order
// is creation order and fixes both initialization and update order, which
// keeps training bitwise reproducible.
class ParamStore {
  public:
    struct Entry {
        std::string name;
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        Eigen::MatrixXd adamM;
        Eigen::MatrixXd adamV;
        bool trainable = true;
    };

    Eigen::MatrixXd& create(const std::string& name, int rows, int cols, bool trainable = true);
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zeroGrads();
    std::size_t coordinateCount() const;
    bool allFinite() const;

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double lr = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weightDecay = 0.05;  // decoupled, applied to trainable entries
};

class AdamOptimizer {
  public:
    explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}
    void step(ParamStore& params);
    int steps() const { return t_; }

  private:
    AdamConfig cfg_;
    int t_ = 0;
};

// Self-describing binary tensor archive with the config fingerprint baked
// in; loading refuses a fingerprint mismatch.
void writeCheckpoint(const std::string& path, const ParamStore& params,
                     std::uint64_t configFingerprint);
std::uint64_t readCheckpointFingerprint(const std::string& path);
void loadCheckpoint(const std::string& path, ParamStore& params,
                    std::uint64_t expectedFingerprint);

}  // namespace medrec
