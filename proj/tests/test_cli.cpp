// Copyright 2026-present the scd project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "scd/embedding_store.hpp"
#include "test_util.hpp"

using scd::test::TempDir;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Runs the CLI with the given arguments, capturing stdout and stderr.
Run scd_cli(const TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = quote(SCD_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = scd::read_file_text(out);
    r.err = scd::read_file_text(err);
    return r;
}

/// Two pairs of duplicated points plus metadata.
void write_four_points(const TempDir& dir) {
    scd::save_embeddings(dir / "points.emb", scd::EmbeddingMatrix(4, 2, {0, 0, 5, 5, 0, 0, 5, 5}));
    std::vector<scd::InstanceMeta> meta;
    for (std::size_t i = 0; i < 4; ++i) {
        meta.push_back({"p" + std::to_string(i), i, std::nullopt, false});
    }
    scd::save_meta(dir / "meta.jsonl", meta);
}

std::string planted_args(const TempDir& dir) {
    const auto d = dir.path().string();
    return "--clip-visual " + quote(d + "/data/visual.emb") + " --clip-names " + quote(d + "/data/names.emb") +
           " --vocab " + quote(d + "/data/vocab.jsonl") + " --meta " + quote(d + "/data/meta.jsonl");
}

void make_planted(const TempDir& dir) {
    const auto r = scd_cli(dir, "--seed 5 synth planted --k 4 --n 30 --dim 16 --per-class 10 --sigma 0.1 --out " +
                                    quote((dir / "data").string()));
    REQUIRE(r.status == 0);
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("cluster separates duplicated points") {
        TempDir dir("cli_cluster");
        write_four_points(dir);
        const auto r = scd_cli(dir, "cluster --features " + quote((dir / "points.emb").string()) + " --meta " +
                                        quote((dir / "meta.jsonl").string()) + " --k 2 --no-normalize --out " +
                                        quote((dir / "out").string()));
        REQUIRE(r.status == 0);
        const auto summary = json::parse(r.out);
        CHECK(summary["objective"] == 0.0);
        CHECK(summary["cluster_sizes"] == json::array({2, 2}));
        CHECK(fs::exists(dir / "out" / "clusters.jsonl"));
    }

    TEST_CASE("infeasible size constraint exits 3 and names tau, K and M") {
        TempDir dir("cli_infeasible");
        write_four_points(dir);
        const auto r = scd_cli(dir, "cluster --features " + quote((dir / "points.emb").string()) + " --meta " +
                                        quote((dir / "meta.jsonl").string()) +
                                        " --k 2 --algo csskm --tau 3 --no-normalize --out " + quote((dir / "out").string()));
        CHECK(r.status == 3);
        const auto err = json::parse(r.err.substr(r.err.rfind('{')));
        CHECK(err["code"] == "InfeasibleSizeConstraint");
        const auto msg = err["message"].get<std::string>();
        CHECK(msg.find("tau=3") != std::string::npos);
        CHECK(msg.find("K=2") != std::string::npos);
        CHECK(msg.find("M=4") != std::string::npos);
    }

    TEST_CASE("missing input file exits 2") {
        TempDir dir("cli_missing");
        const auto r = scd_cli(dir, "cluster --features " + quote((dir / "nope.emb").string()) + " --meta " +
                                        quote((dir / "nope.jsonl").string()) + " --k 2");
        CHECK(r.status == 2);
        CHECK(r.err.find("InvalidArgument") != std::string::npos);
    }

    TEST_CASE("bad flags exit 2") {
        TempDir dir("cli_flags");
        CHECK(scd_cli(dir, "cluster --k 0").status == 2);
        CHECK(scd_cli(dir, "cluster --algo spectral").status == 2);
        CHECK(scd_cli(dir, "frobnicate").status == 2);
        CHECK(scd_cli(dir, "").status == 2);
        CHECK(scd_cli(dir, "--help").status == 0);
    }

    TEST_CASE("same seed gives byte-identical pipeline outputs") {
        TempDir dir("cli_determinism");
        make_planted(dir);
        const auto a = scd_cli(dir, "--seed 1 pipeline " + planted_args(dir) + " --k 4 --out " + quote((dir / "a").string()));
        const auto b = scd_cli(dir, "--seed 1 --threads 3 pipeline " + planted_args(dir) + " --k 4 --out " +
                                        quote((dir / "b").string()));
        REQUIRE(a.status == 0);
        REQUIRE(b.status == 0);
        for (const char* f : {"clusters.jsonl", "naming.jsonl", "report.json", "manifest.json", "summary.txt"}) {
            CHECK(scd::read_file_text(dir / "a" / f) == scd::read_file_text(dir / "b" / f));
        }
        CHECK(a.out.find("sACC") != std::string::npos);
    }

    TEST_CASE("existing outputs need --force") {
        TempDir dir("cli_force");
        make_planted(dir);
        const std::string zs = "zeroshot " + planted_args(dir) + " --out " + quote((dir / "z").string());
        CHECK(scd_cli(dir, zs).status == 0);
        const auto again = scd_cli(dir, zs);
        CHECK(again.status == 2);
        CHECK(again.err.find("ManifestConflict") != std::string::npos);
        CHECK(scd_cli(dir, "--force " + zs).status == 0);
    }

    TEST_CASE("stepwise commands and eval without a taxonomy") {
        TempDir dir("cli_steps");
        make_planted(dir);
        const auto out = quote((dir / "s").string());
        REQUIRE(scd_cli(dir, "cluster --clip-visual " + quote((dir / "data/visual.emb").string()) + " --meta " +
                                 quote((dir / "data/meta.jsonl").string()) + " --k 4 --out " + out)
                    .status == 0);
        REQUIRE(scd_cli(dir, "name " + planted_args(dir) + " --clusters " + quote((dir / "s/clusters.jsonl").string()) +
                                 " --out " + out)
                    .status == 0);
        const auto e = scd_cli(dir, "eval --vocab " + quote((dir / "data/vocab.jsonl").string()) + " --meta " +
                                        quote((dir / "data/meta.jsonl").string()) + " --predictions " +
                                        quote((dir / "s/naming.jsonl").string()) + " --out " + out);
        REQUIRE(e.status == 0);
        const auto report = json::parse(scd::read_file_text(dir / "s" / "report.json"));
        CHECK_FALSE(report.contains("soft_sacc"));
        CHECK(report["sacc"].get<double>() > 0.9);
    }

    TEST_CASE("config file fills options the command line leaves out") {
        TempDir dir("cli_config");
        write_four_points(dir);
        const json config = {{"k", 2}, {"no-normalize", true}, {"restarts", 2}, {"unrelated", 1},
                             {"features", (dir / "points.emb").string()}};
        scd::write_file_text(dir / "config.json", config.dump());
        const auto r = scd_cli(dir, "--config " + quote((dir / "config.json").string()) + " cluster --meta " +
                                        quote((dir / "meta.jsonl").string()) + " --out " + quote((dir / "out").string()));
        REQUIRE(r.status == 0);
        CHECK(json::parse(r.out)["K"] == 2);
        CHECK(r.err.find("config.ignored") != std::string::npos);
        // The command line wins over the config file.
        const auto r3 = scd_cli(dir, "--force --config " + quote((dir / "config.json").string()) + " cluster --meta " +
                                         quote((dir / "meta.jsonl").string()) + " --k 3 --out " +
                                         quote((dir / "out").string()));
        REQUIRE(r3.status == 0);
        CHECK(json::parse(r3.out)["K"] == 3);
        scd::write_file_text(dir / "bad.json", "[1, 2]");
        CHECK(scd_cli(dir, "--config " + quote((dir / "bad.json").string()) + " cluster").status == 2);
    }

    TEST_CASE("synthetic taxonomy and export") {
        TempDir dir("cli_tax");
        const auto t = quote((dir / "t").string());
        REQUIRE(scd_cli(dir, "synth taxonomy --depth 3 --branching 2 --out " + t).status == 0);
        const auto r = scd_cli(dir, "taxonomy export --taxonomy " + quote((dir / "t/data.noun").string()) + " --out " +
                                        quote((dir / "x").string()));
        REQUIRE(r.status == 0);
        CHECK(r.out.find("7 synsets") != std::string::npos);
        CHECK(fs::exists(dir / "x" / "taxonomy_lemmas.tsv"));
    }
}
