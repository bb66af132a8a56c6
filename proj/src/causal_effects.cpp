#include "medrec/causal/effects.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "medrec/errors.hpp"
#include "medrec/io.hpp"

namespace medrec {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

CausalEffectMatrix estimateCausalEffects(const BinaryTable& sources, const BinaryTable& meds,
                                         EntityKind sourceKind, const EffectConfig& config) {
    if (sources.rows() != meds.rows())
        throw DataError("effect estimation: source and medication tables disagree on rows");
    const int nRows = sources.rows();
    const int nSrc = sources.cols();
    const int nMed = meds.cols();

    CausalEffectMatrix out;
    out.sourceKind = sourceKind;
    out.values = Eigen::MatrixXd::Zero(nSrc, nMed);
    out.intercepts.assign(static_cast<std::size_t>(nMed), 0.0);
    out.candidates.resize(static_cast<std::size_t>(nMed));
    out.coefficients.resize(static_cast<std::size_t>(nMed));

    for (int m = 0; m < nMed; ++m) {
        std::vector<int>& cand = out.candidates[static_cast<std::size_t>(m)];
        for (int s = 0; s < nSrc; ++s) {
            int support = 0;
            for (int r = 0; r < nRows; ++r) support += sources.at(r, s) & meds.at(r, m);
            if (support >= config.minSupport) cand.push_back(s);
        }
        if (cand.empty()) continue;

        const int p = static_cast<int>(cand.size());
        Eigen::MatrixXd X(nRows, p + 1);
        Eigen::VectorXd y(nRows);
        for (int r = 0; r < nRows; ++r) {
            X(r, 0) = 1.0;
            for (int k = 0; k < p; ++k)
                X(r, k + 1) = sources.at(r, cand[static_cast<std::size_t>(k)]);
            y(r) = meds.at(r, m);
        }

        // Iteratively reweighted least squares with a tiny ridge for
        // numerical safety.
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
        for (int iter = 0; iter < config.maxIterations; ++iter) {
            Eigen::VectorXd eta = X * beta;
            Eigen::VectorXd mu = eta.unaryExpr([](double e) { return logistic(e); });
            Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
            w = w.cwiseMax(1e-12);
            Eigen::VectorXd z = eta + (y - mu).cwiseQuotient(w);
            Eigen::MatrixXd Xw = X.array().colwise() * w.array();
            Eigen::MatrixXd A = X.transpose() * Xw;
            A.diagonal().array() += config.ridge;
            Eigen::VectorXd rhs = Xw.transpose() * z;
            Eigen::VectorXd next = A.ldlt().solve(rhs);
            double step = (next - beta).cwiseAbs().maxCoeff();
            beta = next;
            if (!beta.allFinite()) break;
            if (step < config.convergenceTol) break;
        }

        bool degenerate = !beta.allFinite() ||
                          beta.cwiseAbs().maxCoeff() > config.separationBound;
        out.intercepts[static_cast<std::size_t>(m)] = beta(0);
        out.coefficients[static_cast<std::size_t>(m)] = beta.tail(p);
        for (int k = 0; k < p; ++k) {
            double e = logistic(beta(0) + beta(k + 1));
            if (!std::isfinite(e)) e = degenerate ? 1.0 : 0.0;
            if (degenerate) {
                e = std::clamp(e, config.separationEps, 1.0 - config.separationEps);
                ++out.separationWarnings;
            }
            out.values(cand[static_cast<std::size_t>(k)], m) = std::clamp(e, 0.0, 1.0);
        }
    }
    return out;
}

void writeEffects(const std::string& csvPath, const CausalEffectMatrix& effects,
                  const Vocabulary& sourceVocab, const Vocabulary& medVocab) {
    std::ofstream csv(csvPath, std::ios::binary);
    if (!csv) throw DataError("cannot write '" + csvPath + "'");
    csv << "source,medication,effect\n";
    for (int s = 0; s < effects.values.rows(); ++s)
        for (int m = 0; m < effects.values.cols(); ++m)
            if (effects.values(s, m) != 0.0)
                csv << sourceVocab.code(s) << ',' << medVocab.code(m) << ','
                    << fmtDouble(effects.values(s, m)) << '\n';

    // Dense sidecar: exact doubles, row-major.
    std::ofstream bin(csvPath + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot write '" + csvPath + ".bin'");
    const char magic[8] = {'M', 'R', 'E', 'F', 'F', 'B', '1', '\0'};
    bin.write(magic, 8);
    std::uint32_t dims[2] = {static_cast<std::uint32_t>(effects.values.rows()),
                             static_cast<std::uint32_t>(effects.values.cols())};
    bin.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (int s = 0; s < effects.values.rows(); ++s)
        for (int m = 0; m < effects.values.cols(); ++m) {
            double v = effects.values(s, m);
            bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

CausalEffectMatrix loadEffects(const std::string& csvPath, const Vocabulary& sourceVocab,
                               const Vocabulary& medVocab) {
    auto lines = readLines(csvPath);
    if (lines.empty() || lines[0] != "source,medication,effect")
        throw DataError("effects file '" + csvPath + "' missing header");
    CausalEffectMatrix out;
    out.sourceKind = sourceVocab.kind();
    out.values = Eigen::MatrixXd::Zero(sourceVocab.size(), medVocab.size());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto c1 = lines[i].find(',');
        auto c2 = c1 == std::string::npos ? std::string::npos : lines[i].find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw DataError("effects file '" + csvPath + "' line " + std::to_string(i + 1) +
                            ": expected three columns");
        int s = sourceVocab.find(lines[i].substr(0, c1));
        int m = medVocab.find(lines[i].substr(c1 + 1, c2 - c1 - 1));
        if (s < 0 || m < 0)
            throw DataError("effects file '" + csvPath + "' line " + std::to_string(i + 1) +
                            ": unknown code");
        out.values(s, m) = parseDouble(lines[i].substr(c2 + 1),
                                       "effects file '" + csvPath + "' line " +
                                           std::to_string(i + 1));
    }
    return out;
}

}  // namespace medrec
