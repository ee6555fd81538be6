#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#ifndef ZSKG_CLI_PATH
#error "ZSKG_CLI_PATH must point at the zskg binary"
#endif

namespace fs = std::filesystem;

namespace {

const std::string cli = ZSKG_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() / ("zskg_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    std::string dir(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream ifs(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(ifs)), std::istreambuf_iterator<char>());
}

const std::string kTinyGen =
    "--seen 4 --unseen 2 --samples 8 --text-dim 16 --visual-dim 16 --seed 11";
const std::string kTinyTrain =
    "--rounds 80 --batch-size 16 --teacher-hidden 16 --gcn-hidden 8 --gcn-out 8 --n-synth 8";

} // namespace

TEST_CASE("no arguments prints usage and exits 1") {
    CHECK(run("") == 1);
    CHECK(run("--help") == 0);
    CHECK(run("frobnicate") == 1);
}

TEST_CASE("unknown flags are errors, never ignored") {
    Workspace ws;
    CHECK(run("gen-data --out " + ws.dir("b") + " --does-not-exist 1") == 1);
    CHECK(run("sweep --data x --param layers --out y") == 1);
}

TEST_CASE("gen-data, train, eval round trip with exit 0") {
    Workspace ws;
    CHECK(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    CHECK(fs::exists(ws.root / "bundle" / "manifest.json"));
    CHECK(run("train --data " + ws.dir("bundle") + " --out " + ws.dir("model") + " " + kTinyTrain +
              " --seed 42") == 0);
    CHECK(fs::exists(ws.root / "model" / "model.json"));
    CHECK(fs::exists(ws.root / "model" / "report.json"));
    CHECK(run("eval --data " + ws.dir("bundle") + " --model " + ws.dir("model") + " --out " +
              ws.dir("report.json")) == 0);

    const nlohmann::json report = nlohmann::json::parse(slurp(ws.dir("report.json")));
    CHECK(report.contains("partitions"));
    CHECK(report.at("partitions").contains("all"));
    CHECK(report.at("config").at("seed") == 42);
}

TEST_CASE("identical train invocations produce byte-identical reports") {
    Workspace ws;
    REQUIRE(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    REQUIRE(run("train --data " + ws.dir("bundle") + " --out " + ws.dir("m1") + " " + kTinyTrain +
                " --seed 42") == 0);
    REQUIRE(run("train --data " + ws.dir("bundle") + " --out " + ws.dir("m2") + " " + kTinyTrain +
                " --seed 42") == 0);
    CHECK(slurp(ws.dir("m1") + "/report.json") == slurp(ws.dir("m2") + "/report.json"));
    CHECK(slurp(ws.dir("m1") + "/model.json") == slurp(ws.dir("m2") + "/model.json"));
}

TEST_CASE("gen-data accepts a spec file with inline overrides") {
    Workspace ws;
    const std::string spec_path = ws.dir("spec.json");
    std::ofstream(spec_path) << R"({"seen_classes":4,"unseen_classes":2,"samples_per_class":5,)"
                             << R"("text_dim":16,"visual_dim":16,"noise_sigma":0.05,)"
                             << R"("topology":"ring","seed":3})";
    CHECK(run("gen-data --spec " + spec_path + " --out " + ws.dir("bundle") + " --seed 9") == 0);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(ws.dir("bundle") + "/manifest.json"));
    CHECK(manifest.at("seed") == 9); // inline flag wins
    CHECK(manifest.at("generator").at("topology") == "ring");
}

TEST_CASE("data errors exit 2") {
    Workspace ws;
    CHECK(run("train --data " + ws.dir("missing") + " --out " + ws.dir("model")) == 2);
    CHECK(run("eval --data " + ws.dir("missing") + " --model " + ws.dir("model")) == 2);

    // corrupt bundle: truncated features file
    REQUIRE(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    std::string body = slurp(ws.dir("bundle") + "/features.ndjson");
    std::ofstream(ws.dir("bundle") + "/features.ndjson", std::ios::trunc)
        << body.substr(0, body.size() / 2);
    CHECK(run("train --data " + ws.dir("bundle") + " --out " + ws.dir("model")) == 2);
}

TEST_CASE("http provider without an api key fails fast with exit 3") {
    Workspace ws;
    REQUIRE(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    unsetenv("ZSKG_API_KEY");
    // enormous round count: the key check must fire before any training work
    CHECK(run("train --data " + ws.dir("bundle") + " --out " + ws.dir("model") +
              " --rounds 100000000 --provider http --endpoint http://127.0.0.1:1") == 3);
}

TEST_CASE("ablate emits the three entries") {
    Workspace ws;
    REQUIRE(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    CHECK(run("ablate --data " + ws.dir("bundle") + " " + kTinyTrain + " --out " +
              ws.dir("ablation.json")) == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(ws.dir("ablation.json")));
    CHECK(report.at("ablation").size() == 3);
}

TEST_CASE("sweep with explicit values writes a curve") {
    Workspace ws;
    REQUIRE(run("gen-data " + kTinyGen + " --out " + ws.dir("bundle")) == 0);
    CHECK(run("sweep --data " + ws.dir("bundle") + " --param temperature --values 2.0,3.0 " +
              kTinyTrain + " --out " + ws.dir("sweep.json")) == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(ws.dir("sweep.json")));
    CHECK(report.at("sweep").at("points").size() == 2);
    CHECK(report.at("sweep").at("parameter") == "temperature");
}
