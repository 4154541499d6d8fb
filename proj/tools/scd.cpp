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

// scd: batch command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "scd/embedding_store.hpp"
#include "scd/error.hpp"
#include "scd/pipeline.hpp"
#include "scd/synthgen.hpp"

namespace {

namespace fs = std::filesystem;

struct CliValues {
    std::string features, clip_visual, clip_names, vocab, meta, taxonomy, taxonomy_edges,
        taxonomy_lemmas, clusters, predictions;
    std::string out = ".";
    std::size_t k = 0;
    std::string algo;
    std::size_t tau = 0;
    std::size_t m = 10;
    std::size_t revote_m = 1;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    double tol = 1e-6;
    std::size_t max_refine_iter = 50;
    std::string mode = "unsupervised";
    std::string strategy = "refine";
    bool no_normalize = false;
    bool unknown_as_zero = false;
    std::size_t max_classes = 2000;
    std::size_t threads = 1;
    bool force = false;
    std::string config;

    // synth
    std::size_t n = 200;
    std::size_t dim = 64;
    std::size_t per_class = 30;
    double sigma = 0.05;
    double labeled_fraction = 0.5;
    std::size_t depth = 3;
    std::size_t branching = 2;
};

const std::vector<std::string> kAlgos = {"kmeans", "sskm", "csskm"};
const std::vector<std::string> kModes = {"unsupervised", "partial"};
const std::vector<std::string> kStrategies = {"voting", "iterate", "refine"};

void add_out(CLI::App* sub, CliValues& v) { sub->add_option("--out", v.out, "Output directory"); }

void add_naming_inputs(CLI::App* sub, CliValues& v) {
    sub->add_option("--clip-visual", v.clip_visual, "CLIP image embeddings (EMB1)");
    sub->add_option("--clip-names", v.clip_names, "CLIP name embeddings (EMB1), vocabulary order");
    sub->add_option("--vocab", v.vocab, "Vocabulary JSONL");
    sub->add_option("--meta", v.meta, "Instance metadata JSONL");
    sub->add_flag("--no-normalize", v.no_normalize, "Use embeddings as stored, without L2 normalization");
}

void add_cluster_options(CLI::App* sub, CliValues& v) {
    sub->add_option("--features", v.features, "Clustering features (EMB1); defaults to --clip-visual");
    sub->add_option("--k", v.k, "Number of clusters")->check(CLI::PositiveNumber);
    sub->add_option("--algo", v.algo, "kmeans, sskm or csskm")->check(CLI::IsMember(kAlgos));
    sub->add_option("--min-size,--tau", v.tau, "Minimum cluster size for csskm");
    sub->add_option("--restarts", v.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", v.max_iter, "Lloyd iterations per restart")->check(CLI::PositiveNumber);
    sub->add_option("--tol", v.tol, "Relative objective change that stops Lloyd iterations")
        ->check(CLI::NonNegativeNumber);
}

void add_mode(CLI::App* sub, CliValues& v) {
    sub->add_option("--mode", v.mode, "unsupervised or partial")->check(CLI::IsMember(kModes));
}

void add_naming_options(CLI::App* sub, CliValues& v) {
    sub->add_option("--m", v.m, "Nearest names per instance in top-m voting")->check(CLI::PositiveNumber);
    sub->add_option("--revote-m", v.revote_m, "Nearest names per instance in votes after the first round")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-refine-iter", v.max_refine_iter, "Refinement round cap");
    sub->add_option("--strategy", v.strategy, "voting, iterate or refine")->check(CLI::IsMember(kStrategies));
}

void add_eval_options(CLI::App* sub, CliValues& v) {
    sub->add_option("--taxonomy", v.taxonomy, "WordNet data.noun for Soft-sACC");
    sub->add_option("--taxonomy-edges", v.taxonomy_edges, "child<TAB>parent edge list");
    sub->add_option("--taxonomy-lemmas", v.taxonomy_lemmas, "lemma<TAB>synset map");
    sub->add_flag("--unknown-as-zero", v.unknown_as_zero, "Score names missing from the taxonomy as 0");
    sub->add_option("--max-classes", v.max_classes, "Distinct predictions above which ACC is omitted");
}

template <typename T>
std::optional<T> if_given(const CLI::App* sub, const std::string& name, const T& value) {
    const auto* opt = sub->get_option_no_throw(name);
    if (opt == nullptr || opt->count() == 0) {
        return std::nullopt;
    }
    return value;
}

std::optional<fs::path> path_if_given(const CLI::App* sub, const std::string& name, const std::string& value) {
    auto v = if_given(sub, name, value);
    return v ? std::optional<fs::path>(*v) : std::nullopt;
}

scd::RunConfig to_run_config(const CLI::App* sub, const CliValues& v) {
    scd::RunConfig c;
    c.features = path_if_given(sub, "--features", v.features);
    c.clip_visual = path_if_given(sub, "--clip-visual", v.clip_visual);
    c.clip_names = path_if_given(sub, "--clip-names", v.clip_names);
    c.vocab = path_if_given(sub, "--vocab", v.vocab);
    c.meta = path_if_given(sub, "--meta", v.meta);
    c.taxonomy = path_if_given(sub, "--taxonomy", v.taxonomy);
    c.taxonomy_edges = path_if_given(sub, "--taxonomy-edges", v.taxonomy_edges);
    c.taxonomy_lemmas = path_if_given(sub, "--taxonomy-lemmas", v.taxonomy_lemmas);
    c.clusters = path_if_given(sub, "--clusters", v.clusters);
    c.predictions = path_if_given(sub, "--predictions", v.predictions);
    c.out = v.out;
    c.k = if_given(sub, "--k", v.k);
    if (const auto a = if_given(sub, "--algo", v.algo)) {
        c.algo = scd::parse_algo(*a);
    }
    c.tau = if_given(sub, "--min-size", v.tau);
    c.m = v.m;
    c.revote_m = v.revote_m;
    c.seed = v.seed;
    c.restarts = v.restarts;
    c.max_iter = v.max_iter;
    c.tol = v.tol;
    c.max_refine_iter = v.max_refine_iter;
    c.mode = scd::parse_mode(v.mode);
    c.strategy = scd::parse_strategy(v.strategy);
    c.normalize = !v.no_normalize;
    c.unknown_as_zero = v.unknown_as_zero;
    c.max_classes = v.max_classes;
    c.threads = v.threads;
    c.force = v.force;
    return c;
}

/// Fills options not given on the command line from a flat JSON object whose
/// keys are long option names without the leading dashes.
void apply_config(const fs::path& path, CLI::App& root, CLI::App* leaf) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(scd::read_file_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw scd::Error(scd::ErrorCode::InvalidArgument, "config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw scd::Error(scd::ErrorCode::InvalidArgument, "config " + path.string() + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "config") {
            continue;
        }
        CLI::Option* opt = leaf->get_option_no_throw("--" + key);
        if (opt == nullptr) {
            opt = root.get_option_no_throw("--" + key);
        }
        if (opt == nullptr) {
            scd::log_event("config.ignored", {{"key", key}});
            continue;
        }
        if (opt->count() > 0) {
            continue;
        }
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_boolean() || value.is_number()) {
            text = value.dump();
        } else {
            throw scd::Error(scd::ErrorCode::InvalidArgument, "config key \"" + key + "\" must be a scalar");
        }
        try {
            opt->add_result(text);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw scd::Error(scd::ErrorCode::InvalidArgument, "config key \"" + key + "\": " + e.what());
        }
    }
}

CLI::App* active_leaf(CLI::App* app) {
    for (auto* sub : app->get_subcommands()) {
        return active_leaf(sub);
    }
    return app;
}

std::string synth_planted(const CLI::App* sub, const CliValues& v) {
    scd::PlantedSpec spec;
    if (sub->count("--k") > 0) {
        spec.k = v.k;
    }
    spec.n = v.n;
    spec.dim = v.dim;
    spec.per_class = v.per_class;
    spec.sigma = v.sigma;
    spec.labeled_fraction = v.labeled_fraction;
    spec.seed = v.seed;
    scd::check_outputs(v.out, {"visual.emb", "names.emb", "vocab.jsonl", "meta.jsonl", "truth.json"}, v.force);
    const auto data = scd::gen_planted(spec);
    nlohmann::ordered_json truth;
    truth["class_names"] = data.class_names;
    scd::write_planted(data, v.out);
    scd::write_file_text(fs::path(v.out) / "truth.json", truth.dump(2) + "\n");
    scd::log_event("synth.planted", {{"instances", data.meta.size()}, {"vocabulary", data.vocab.size()}});
    return "wrote planted dataset to " + v.out + "\n";
}

std::string synth_taxonomy(const CliValues& v) {
    scd::check_outputs(v.out, {"data.noun", "lemmas.tsv"}, v.force);
    const auto fx = scd::gen_taxonomy_fixture(v.depth, v.branching);
    scd::write_taxonomy_fixture(fx, v.out);
    return "wrote " + std::to_string(fx.offsets.size()) + "-synset taxonomy to " + v.out + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CliValues v;
    CLI::App app{"Semantic category discovery: cluster, name and evaluate image collections"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", v.seed, "Random seed");
    app.add_option("--threads", v.threads, "Worker threads (0 = one per hardware thread)");
    app.add_flag("--force", v.force, "Overwrite existing outputs");
    app.add_option("--config", v.config, "JSON file of option defaults");

    auto* cluster = app.add_subcommand("cluster", "Cluster instances (kmeans, sskm, csskm)");
    add_cluster_options(cluster, v);
    cluster->add_option("--clip-visual", v.clip_visual, "CLIP image embeddings, used when --features is absent");
    cluster->add_option("--meta", v.meta, "Instance metadata JSONL");
    cluster->add_option("--vocab", v.vocab, "Vocabulary JSONL, checks gt_name_id range");
    cluster->add_flag("--no-normalize", v.no_normalize, "Cluster raw features");
    add_mode(cluster, v);
    add_out(cluster, v);

    auto* zeroshot = app.add_subcommand("zeroshot", "Nearest-name baseline per instance");
    add_naming_inputs(zeroshot, v);
    add_out(zeroshot, v);

    auto* name = app.add_subcommand("name", "Name clusters by voting and refinement");
    add_naming_inputs(name, v);
    name->add_option("--clusters", v.clusters, "Cluster JSONL from `scd cluster`");
    name->add_option("--k", v.k, "Number of clusters (default: largest cluster id + 1)");
    add_naming_options(name, v);
    add_mode(name, v);
    add_out(name, v);

    auto* eval = app.add_subcommand("eval", "Score predicted names against ground truth");
    eval->add_option("--predictions", v.predictions, "Naming or zero-shot JSONL");
    eval->add_option("--vocab", v.vocab, "Vocabulary JSONL");
    eval->add_option("--meta", v.meta, "Instance metadata JSONL");
    add_eval_options(eval, v);
    add_mode(eval, v);
    add_out(eval, v);

    auto* pipeline = app.add_subcommand("pipeline", "cluster, zeroshot, name and eval with a manifest");
    add_naming_inputs(pipeline, v);
    add_cluster_options(pipeline, v);
    add_naming_options(pipeline, v);
    add_eval_options(pipeline, v);
    add_mode(pipeline, v);
    add_out(pipeline, v);

    auto* taxonomy = app.add_subcommand("taxonomy", "Taxonomy utilities");
    taxonomy->require_subcommand(1);
    auto* tax_export = taxonomy->add_subcommand("export", "Write the parsed hypernym graph as TSV");
    tax_export->add_option("--taxonomy", v.taxonomy, "WordNet data.noun");
    tax_export->add_option("--taxonomy-edges", v.taxonomy_edges, "child<TAB>parent edge list");
    tax_export->add_option("--taxonomy-lemmas", v.taxonomy_lemmas, "lemma<TAB>synset map");
    add_out(tax_export, v);

    auto* synth = app.add_subcommand("synth", "Generate synthetic datasets");
    synth->require_subcommand(1);
    auto* planted = synth->add_subcommand("planted", "Planted-truth embeddings and metadata");
    planted->add_option("--k", v.k, "Classes")->check(CLI::PositiveNumber);
    planted->add_option("--n", v.n, "Vocabulary size")->check(CLI::PositiveNumber);
    planted->add_option("--dim", v.dim, "Embedding dimension")->check(CLI::PositiveNumber);
    planted->add_option("--per-class", v.per_class, "Instances per class")->check(CLI::PositiveNumber);
    planted->add_option("--sigma", v.sigma, "Per-coordinate noise scale")->check(CLI::NonNegativeNumber);
    planted->add_option("--labeled-fraction", v.labeled_fraction, "Labeled share in labeled classes")
        ->check(CLI::Range(0.0, 1.0));
    add_out(planted, v);
    auto* synth_tax = synth->add_subcommand("taxonomy", "Complete b-ary hypernym tree in data.noun syntax");
    synth_tax->add_option("--depth", v.depth, "Tree depth")->check(CLI::PositiveNumber);
    synth_tax->add_option("--branching", v.branching, "Children per node")->check(CLI::PositiveNumber);
    add_out(synth_tax, v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* leaf = active_leaf(&app);
    try {
        if (!v.config.empty()) {
            apply_config(v.config, app, leaf);
        }
        std::string output;
        if (leaf == planted) {
            output = synth_planted(planted, v);
        } else if (leaf == synth_tax) {
            output = synth_taxonomy(v);
        } else {
            const auto cfg = to_run_config(leaf, v);
            if (leaf == cluster) {
                output = scd::cmd_cluster(cfg);
            } else if (leaf == zeroshot) {
                output = scd::cmd_zeroshot(cfg);
            } else if (leaf == name) {
                output = scd::cmd_name(cfg);
            } else if (leaf == eval) {
                output = scd::cmd_eval(cfg);
            } else if (leaf == pipeline) {
                output = scd::cmd_pipeline(cfg);
            } else if (leaf == tax_export) {
                output = scd::cmd_taxonomy_export(cfg);
            }
        }
        std::cout << output;
        return 0;
    } catch (const scd::Error& e) {
        nlohmann::ordered_json j;
        j["level"] = "error";
        j["code"] = scd::to_string(e.code());
        j["message"] = e.what();
        std::cerr << j.dump() << '\n';
        return scd::exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << nlohmann::ordered_json{{"level", "error"}, {"code", "Io"}, {"message", e.what()}}.dump()
                  << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::ordered_json{{"level", "error"}, {"code", "Internal"}, {"message", e.what()}}.dump()
                  << '\n';
        return 2;
    }
}
