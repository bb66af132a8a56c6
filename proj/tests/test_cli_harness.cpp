#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr combined
};

fs::path scratchRoot() {
    return fs::temp_directory_path() / "medrec_cli_tests";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult runCli(const std::string& args) {
    static int counter = 0;
    fs::create_directories(scratchRoot());
    const fs::path capture = scratchRoot() / ("capture_" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(MEDREC_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.output = slurp(capture);
    fs::remove(capture);
    return res;
}

CliResult mustSucceed(const std::string& args) {
    CliResult res = runCli(args);
    if (res.code != 0)
        throw std::runtime_error("command '" + args + "' exited " + std::to_string(res.code) +
                                 "\n" + res.output);
    return res;
}

fs::path freshDir(const std::string& name) {
    const fs::path dir = scratchRoot() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Stage directories are fingerprint-addressed; find them by prefix.
std::vector<fs::path> stageDirs(const fs::path& out, const std::string& prefix) {
    std::vector<fs::path> found;
    if (!fs::exists(out)) return found;
    for (const auto& entry : fs::directory_iterator(out)) {
        if (entry.is_directory() && entry.path().filename().string().rfind(prefix + "-", 0) == 0)
            found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    return found;
}

fs::path onlyStageDir(const fs::path& out, const std::string& prefix) {
    auto dirs = stageDirs(out, prefix);
    if (dirs.size() != 1)
        throw std::runtime_error("expected one " + prefix + " directory under " + out.string() +
                                 ", found " + std::to_string(dirs.size()));
    return dirs[0];
}

// Small-but-real settings shared by every pipeline invocation in this suite.
std::string baseFlags(const fs::path& out) {
    return "--seed 7 --out " + out.string() +
           " --set gen.patients=120 --set train.epochs=2 --set model.dim=8"
           " --set model.mlp_hidden=8 --set eval.rounds=3";
}

// One fully built pipeline workspace, constructed on first use and shared
// read-only by the cases below.
struct Workspace {
    fs::path out;
    fs::path dataDir, mineDir, trainDir, evalDir;
    std::string generateLog, mineLog, trainLog, evalLog;
};

const Workspace& sharedWs() {
    static Workspace ws = [] {
        Workspace w;
        w.out = freshDir("shared");
        const std::string base = baseFlags(w.out);
        w.generateLog = mustSucceed(base + " generate").output;
        w.mineLog = mustSucceed(base + " mine").output;
        w.trainLog = mustSucceed(base + " train").output;
        w.evalLog = mustSucceed(base + " evaluate").output;
        w.dataDir = onlyStageDir(w.out, "data");
        w.mineDir = onlyStageDir(w.out, "mine");
        w.trainDir = onlyStageDir(w.out, "train");
        w.evalDir = onlyStageDir(w.out, "eval");
        return w;
    }();
    return ws;
}

}  // namespace

TEST_SUITE("cli-harness") {

TEST_CASE("generate writes the complete data set deterministically") {
    const fs::path outA = freshDir("gen_a");
    const fs::path outB = freshDir("gen_b");

    CliResult a = runCli(baseFlags(outA) + " generate");
    REQUIRE(a.code == 0);
    CHECK(a.output.find("generated 120 patients") != std::string::npos);

    const fs::path dirA = onlyStageDir(outA, "data");
    const char* files[] = {"records.jsonl", "ddi.csv", "molecule_map.csv",
                           "vocab.json",    "ground_truth.json", "config.txt"};
    for (const char* f : files) {
        INFO(f);
        CHECK(fs::exists(dirA / f));
    }

    REQUIRE(runCli(baseFlags(outB) + " generate").code == 0);
    const fs::path dirB = onlyStageDir(outB, "data");
    CHECK(dirA.filename() == dirB.filename());  // same config, same address
    for (const char* f : files) {
        INFO(f);
        CHECK(slurp(dirA / f) == slurp(dirB / f));
    }

    SUBCASE("a different seed relocates and changes the corpus") {
        const fs::path outC = freshDir("gen_c");
        REQUIRE(runCli("--seed 8 --out " + outC.string() +
                       " --set gen.patients=120 generate")
                    .code == 0);
        const fs::path dirC = onlyStageDir(outC, "data");
        CHECK(dirC.filename() != dirA.filename());
        CHECK(slurp(dirC / "records.jsonl") != slurp(dirA / "records.jsonl"));
    }
}

TEST_CASE("configuration mistakes exit with code 2") {
    const fs::path out = freshDir("badcfg");
    CHECK(runCli("--out " + out.string() + " --set nosuch=1 generate").code == 2);
    CHECK(runCli("--out " + out.string() + " --set gen.patients=abc generate").code == 2);
    CHECK(runCli("--out " + out.string() + " --set gen.patients generate").code == 2);
    CHECK(runCli("--config " + (out / "missing.cfg").string() + " generate").code == 2);
    // Validation failures surface before any artifact is touched.
    CliResult v = runCli("--out " + out.string() + " --set strata.layers=9 train");
    CHECK(v.code == 2);
    CHECK(v.output.find("relation_types") != std::string::npos);
    // Unknown command-line flags are parse errors.
    CHECK(runCli("--no-such-flag generate").code == 2);

    SUBCASE("config files report the offending line") {
        const fs::path cfg = out / "broken.cfg";
        std::ofstream f(cfg);
        f << "# comment\n\ntrain.epochs=oops\n";
        f.close();
        CliResult r = runCli("--config " + cfg.string() + " generate");
        CHECK(r.code == 2);
        CHECK(r.output.find(":3:") != std::string::npos);
    }
}

TEST_CASE("each stage demands its upstream artifacts by name") {
    const fs::path out = freshDir("stages");
    const std::string base = baseFlags(out);

    CliResult mine = runCli(base + " mine");
    CHECK(mine.code == 3);
    CHECK(mine.output.find("run 'generate' first") != std::string::npos);

    REQUIRE(runCli(base + " generate").code == 0);
    CliResult trainRes = runCli(base + " train");
    CHECK(trainRes.code == 3);
    CHECK(trainRes.output.find("run 'mine' first") != std::string::npos);

    REQUIRE(runCli(base + " mine").code == 0);
    CliResult evalRes = runCli(base + " evaluate");
    CHECK(evalRes.code == 3);
    CHECK(evalRes.output.find("run 'train' first") != std::string::npos);

    CliResult explainRes = runCli(base + " explain --patient pt100000");
    CHECK(explainRes.code == 3);
    CHECK(explainRes.output.find("run 'train' first") != std::string::npos);
}

TEST_CASE("the full pipeline round trips and reproduces bit for bit") {
    const Workspace& ws = sharedWs();

    CHECK(ws.mineLog.find("disease graph:") != std::string::npos);
    CHECK(ws.trainLog.find("best validation jaccard") != std::string::npos);
    CHECK(ws.evalLog.find("test metrics over 3 rounds") != std::string::npos);

    CHECK(fs::exists(ws.trainDir / "checkpoint.bin"));
    CHECK(fs::exists(ws.trainDir / "run_log.csv"));
    CHECK(fs::exists(ws.trainDir / "config.txt"));
    CHECK(fs::exists(ws.evalDir / "metric_report.csv"));
    CHECK(fs::exists(ws.evalDir / "correction_audit.csv"));

    const std::string runLog = slurp(ws.trainDir / "run_log.csv");
    CHECK(runLog.rfind("epoch,step,patient,loss,bce,multi,ddi,alpha,rate,val_jaccard", 0) == 0);

    const std::string report = slurp(ws.evalDir / "metric_report.csv");
    CHECK(report.rfind("row,jaccard,ddi,f1,prauc,avg_med,ddi_alt", 0) == 0);
    // Header, three rounds, mean, stderr.
    CHECK(std::count(report.begin(), report.end(), '\n') == 6);
    CHECK(report.find("round3,") != std::string::npos);
    CHECK(report.find("mean,") != std::string::npos);
    CHECK(report.find("stderr,") != std::string::npos);

    SUBCASE("an independent replay matches byte for byte") {
        const fs::path outB = freshDir("replay");
        const std::string base = baseFlags(outB);
        mustSucceed(base + " generate");
        mustSucceed(base + " mine");
        mustSucceed(base + " train");
        mustSucceed(base + " evaluate");
        CHECK(slurp(onlyStageDir(outB, "data") / "records.jsonl") ==
              slurp(ws.dataDir / "records.jsonl"));
        CHECK(slurp(onlyStageDir(outB, "mine") / "effects_dm.csv") ==
              slurp(ws.mineDir / "effects_dm.csv"));
        CHECK(slurp(onlyStageDir(outB, "train") / "checkpoint.bin") ==
              slurp(ws.trainDir / "checkpoint.bin"));
        CHECK(slurp(onlyStageDir(outB, "eval") / "metric_report.csv") == report);
    }

    SUBCASE("re-running evaluation overwrites with identical content") {
        mustSucceed(baseFlags(ws.out) + " evaluate");
        CHECK(slurp(ws.evalDir / "metric_report.csv") == report);
    }
}

TEST_CASE("checkpoints refuse to load under a drifted model config") {
    const Workspace& ws = sharedWs();
    const fs::path ckpt = ws.trainDir / "checkpoint.bin";

    CliResult drift = runCli(baseFlags(ws.out) + " --set model.cycles=2 evaluate --checkpoint " +
                             ckpt.string());
    CHECK(drift.code == 2);
    CHECK(drift.output.find("fingerprint mismatch") != std::string::npos);

    // The same override under the matching config is accepted.
    CliResult match = runCli(baseFlags(ws.out) + " evaluate --checkpoint " + ckpt.string());
    CHECK(match.code == 0);
}

TEST_CASE("ablation switches run end to end on their own artifact paths") {
    const Workspace& ws = sharedWs();
    const std::string base = baseFlags(ws.out);

    SUBCASE("evaluation-only ablation reuses the trained checkpoint") {
        const auto trainDirsBefore = stageDirs(ws.out, "train").size();
        const auto evalDirsBefore = stageDirs(ws.out, "eval").size();
        CliResult res = runCli(base + " --wo-bc evaluate");
        CHECK(res.code == 0);
        CHECK(stageDirs(ws.out, "train").size() == trainDirsBefore);  // no new training
        const auto evalDirs = stageDirs(ws.out, "eval");
        CHECK(evalDirs.size() == evalDirsBefore + 1);
        for (const auto& dir : evalDirs) {
            if (dir == ws.evalDir) continue;
            // Without correction there is nothing to audit.
            CHECK(fs::exists(dir / "metric_report.csv"));
            CHECK_FALSE(fs::exists(dir / "correction_audit.csv"));
        }
    }

    SUBCASE("model ablations train their own checkpoints") {
        const auto before = stageDirs(ws.out, "train").size();
        CHECK(runCli(base + " --wo-f train").code == 0);
        CHECK(stageDirs(ws.out, "train").size() == before + 1);
        CHECK(runCli(base + " --wo-f evaluate").code == 0);

        CHECK(runCli(base + " --wo-c train").code == 0);
        CHECK(stageDirs(ws.out, "train").size() == before + 2);
        CHECK(runCli(base + " --wo-c evaluate").code == 0);
    }
}

TEST_CASE("explain prints the correction audit for one patient") {
    const Workspace& ws = sharedWs();
    CliResult res = runCli(baseFlags(ws.out) + " explain --patient pt100000");
    REQUIRE(res.code == 0);
    CHECK(res.output.find("patient pt100000 visit 1:") != std::string::npos);
    CHECK(res.output.find("medication") != std::string::npos);
    CHECK(res.output.find("branch") != std::string::npos);
    CHECK(res.output.find("selected:") != std::string::npos);

    CliResult missing = runCli(baseFlags(ws.out) + " explain --patient nobody");
    CHECK(missing.code == 2);
    CHECK(missing.output.find("unknown patient") != std::string::npos);

    // --patient is mandatory.
    CHECK(runCli(baseFlags(ws.out) + " explain").code == 2);
}

TEST_CASE("command line assignments override file entries and defaults") {
    const fs::path out = freshDir("precedence");
    const fs::path cfgFile = out / "run.ated.cfg";
    {
        std::ofstream f(cfgFile);
        f << "# corpus size from the file\n";
        f << "gen.patients = 60\n";
        f << "seed=9\n";
    }

    // File beats defaults.
    CliResult fromFile =
        runCli("--config " + cfgFile.string() + " --out " + out.string() + " generate");
    REQUIRE(fromFile.code == 0);
    CHECK(fromFile.output.find("generated 60 patients") != std::string::npos);
    bool sawSeed9 = false;
    for (const auto& dir : stageDirs(out, "data"))
        if (slurp(dir / "config.txt").find("seed=9\n") != std::string::npos) sawSeed9 = true;
    CHECK(sawSeed9);

    // Command line beats the file.
    CliResult fromCli = runCli("--config " + cfgFile.string() + " --out " + out.string() +
                               " --set gen.patients=40 --seed 7 generate");
    REQUIRE(fromCli.code == 0);
    CHECK(fromCli.output.find("generated 40 patients") != std::string::npos);
    bool sawOverride = false;
    for (const auto& dir : stageDirs(out, "data")) {
        const std::string stamp = slurp(dir / "config.txt");
        if (stamp.find("gen.patients=40") != std::string::npos &&
            stamp.find("seed=7\n") != std::string::npos)
            sawOverride = true;
    }
    CHECK(sawOverride);

    SUBCASE("defaults fill whatever neither source names") {
        bool sawDefault = false;
        for (const auto& dir : stageDirs(out, "data"))
            if (slurp(dir / "config.txt").find("gen.medications=20") != std::string::npos)
                sawDefault = true;
        CHECK(sawDefault);
    }

    SUBCASE("strict mode is accepted end to end") {
        CHECK(runCli("--out " + out.string() + " --set gen.patients=40 --seed 7 --strict generate")
                  .code == 0);
    }
}

}  // TEST_SUITE
