#include "medrec/model/params.hpp"

#include <cmath>
#include <fstream>

#include "medrec/errors.hpp"

namespace medrec {

Eigen::MatrixXd& ParamStore::create(const std::string& name, int rows, int cols,
                                    bool trainable) {
    if (index_.count(name)) throw NumericError("parameter '" + name + "' already exists");
    Entry e;
    e.name = name;
    e.value = Eigen::MatrixXd::Zero(rows, cols);
    e.grad = Eigen::MatrixXd::Zero(rows, cols);
    e.adamM = Eigen::MatrixXd::Zero(rows, cols);
    e.adamV = Eigen::MatrixXd::Zero(rows, cols);
    e.trainable = trainable;
    entries_.push_back(std::move(e));
    index_.emplace(name, entries_.size() - 1);
    return entries_.back().value;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw NumericError("unknown parameter '" + name + "'");
    return entries_[it->second];
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw NumericError("unknown parameter '" + name + "'");
    return entries_[it->second];
}

void ParamStore::zeroGrads() {
    for (Entry& e : entries_) e.grad.setZero();
}

std::size_t ParamStore::coordinateCount() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
}

bool ParamStore::allFinite() const {
    for (const Entry& e : entries_)
        if (!e.value.allFinite()) return false;
    return true;
}

void AdamOptimizer::step(ParamStore& params) {
    ++t_;
    const double correction1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double correction2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (ParamStore::Entry& e : params.entries()) {
        if (!e.trainable) continue;
        e.adamM = cfg_.beta1 * e.adamM + (1.0 - cfg_.beta1) * e.grad;
        e.adamV = cfg_.beta2 * e.adamV.array().matrix() +
                  (1.0 - cfg_.beta2) * e.grad.cwiseProduct(e.grad);
        Eigen::MatrixXd mHat = e.adamM / correction1;
        Eigen::MatrixXd vHat = e.adamV / correction2;
        // Decoupled weight decay: shrink before the adaptive step.
        e.value -= cfg_.lr * cfg_.weightDecay * e.value;
        e.value -= cfg_.lr * (mHat.array() / (vHat.array().sqrt() + cfg_.eps)).matrix();
    }
}

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'R', 'M', 'O', 'D', 'L', '0', '1'};

template <typename T>
void writeRaw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T readRaw(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint '" + path + "' truncated");
    return v;
}

}  // namespace

void writeCheckpoint(const std::string& path, const ParamStore& params,
                     std::uint64_t configFingerprint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    writeRaw(out, configFingerprint);
    writeRaw(out, static_cast<std::uint32_t>(params.entries().size()));
    for (const auto& e : params.entries()) {
        writeRaw(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        writeRaw(out, static_cast<std::uint32_t>(e.value.rows()));
        writeRaw(out, static_cast<std::uint32_t>(e.value.cols()));
        writeRaw(out, static_cast<std::uint8_t>(e.trainable ? 1 : 0));
        for (Eigen::Index r = 0; r < e.value.rows(); ++r)
            for (Eigen::Index c = 0; c < e.value.cols(); ++c) writeRaw(out, e.value(r, c));
    }
}

std::uint64_t readCheckpointFingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("checkpoint '" + path + "' not found");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
        throw DataError("checkpoint '" + path + "' has an unrecognized header");
    return readRaw<std::uint64_t>(in, path);
}

void loadCheckpoint(const std::string& path, ParamStore& params,
                    std::uint64_t expectedFingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("checkpoint '" + path + "' not found");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
        throw DataError("checkpoint '" + path + "' has an unrecognized header");
    const auto fingerprint = readRaw<std::uint64_t>(in, path);
    if (fingerprint != expectedFingerprint)
        throw ConfigError("checkpoint '" + path + "' was trained under a different config " +
                          "(fingerprint mismatch)");
    const auto count = readRaw<std::uint32_t>(in, path);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto nameLen = readRaw<std::uint32_t>(in, path);
        std::string name(nameLen, '\0');
        in.read(name.data(), nameLen);
        if (!in) throw DataError("checkpoint '" + path + "' truncated");
        const auto rows = readRaw<std::uint32_t>(in, path);
        const auto cols = readRaw<std::uint32_t>(in, path);
        readRaw<std::uint8_t>(in, path);  // trainable flag, informational
        if (!params.has(name))
            throw DataError("checkpoint '" + path + "' holds unknown tensor '" + name + "'");
        auto& entry = params.at(name);
        if (entry.value.rows() != static_cast<Eigen::Index>(rows) ||
            entry.value.cols() != static_cast<Eigen::Index>(cols))
            throw DataError("checkpoint '" + path + "' tensor '" + name + "' has shape " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", expected " + std::to_string(entry.value.rows()) + "x" +
                            std::to_string(entry.value.cols()));
        for (Eigen::Index r = 0; r < entry.value.rows(); ++r)
            for (Eigen::Index c = 0; c < entry.value.cols(); ++c)
                entry.value(r, c) = readRaw<double>(in, path);
        if (!entry.value.allFinite())
            throw NumericError("checkpoint '" + path + "' tensor '" + name +
                               "' holds non-finite values");
    }
}

}  // namespace medrec
