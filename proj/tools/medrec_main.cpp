#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medrec/config.hpp"
#include "medrec/errors.hpp"
#include "medrec/pipeline.hpp"

namespace {

struct CliState {
    std::string configPath;
    bool seedSet = false;
    std::uint64_t seed = 0;
    std::string out;
    bool strict = false;
    std::vector<std::string> assignments;
    bool woC = false, woF = false, woBC = false;
    std::string checkpoint;
    std::string patient;
};

// Precedence: command-line values override file entries override defaults.
medrec::RunConfig buildConfig(const CliState& s) {
    medrec::RunConfig cfg;
    if (!s.configPath.empty()) cfg.applyFile(s.configPath);
    for (const std::string& a : s.assignments) cfg.applyAssignment(a);
    if (s.seedSet) cfg.seed = s.seed;
    if (!s.out.empty()) cfg.out = s.out;
    if (s.strict) cfg.strict = true;
    if (s.woC) cfg.woC = true;
    if (s.woF) cfg.woF = true;
    if (s.woBC) cfg.woBC = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal-mining medication recommendation pipeline"};
    app.require_subcommand(1);

    CliState s;
    app.add_option("--config", s.configPath, "flat key=value config file");
    app.add_option("--seed", s.seed, "master seed for every pipeline stage")
        ->each([&s](const std::string&) { s.seedSet = true; });
    app.add_option("--out", s.out, "output root directory");
    app.add_flag("--strict", s.strict, "turn data warnings into errors");
    app.add_option("--set", s.assignments, "config override as key=value (repeatable)");
    app.add_flag("--wo-c", s.woC, "ablation: co-occurrence relations instead of mined ones");
    app.add_flag("--wo-f", s.woF, "ablation: free medication embeddings, no molecules");
    app.add_flag("--wo-bc", s.woBC, "ablation: skip probability correction at evaluation");

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic data set");
    CLI::App* mine = app.add_subcommand("mine", "learn graphs, effects and strata");
    CLI::App* trainCmd = app.add_subcommand("train", "train the recommendation model");
    CLI::App* evaluate = app.add_subcommand("evaluate", "bootstrap-evaluate a checkpoint");
    evaluate->add_option("--checkpoint", s.checkpoint, "checkpoint file to evaluate");
    CLI::App* explain = app.add_subcommand("explain", "per-medication correction audit");
    explain->add_option("--checkpoint", s.checkpoint, "checkpoint file to load");
    explain->add_option("--patient", s.patient, "patient id to explain")->required();
    CLI::App* ablate = app.add_subcommand("ablate", "run the full ablation matrix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        medrec::RunConfig cfg = buildConfig(s);
        if (generate->parsed()) {
            medrec::cmdGenerate(cfg, std::cout);
        } else if (mine->parsed()) {
            medrec::cmdMine(cfg, std::cout);
        } else if (trainCmd->parsed()) {
            medrec::cmdTrain(cfg, std::cout);
        } else if (evaluate->parsed()) {
            medrec::cmdEvaluate(cfg, s.checkpoint, std::cout);
        } else if (explain->parsed()) {
            medrec::cmdExplain(cfg, s.checkpoint, s.patient, std::cout);
        } else if (ablate->parsed()) {
            medrec::cmdAblate(cfg, std::cout);
        }
        return 0;
    } catch (const medrec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const medrec::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const medrec::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return 3;
    } catch (const medrec::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
