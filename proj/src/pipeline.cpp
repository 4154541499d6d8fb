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

#include "scd/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "scd/clustering.hpp"
#include "scd/embedding_store.hpp"
#include "scd/metrics.hpp"
#include "scd/naming.hpp"
#include "scd/taxonomy.hpp"

namespace scd {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::atomic<bool> g_logging{true};

const fs::path& need(const std::optional<fs::path>& p, const char* flag) {
    if (!p) {
        throw Error(ErrorCode::InvalidArgument, std::string("missing required input ") + flag);
    }
    std::error_code ec;
    if (!fs::is_regular_file(*p, ec)) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string(flag) + " file not found: " + p->string());
    }
    return *p;
}

EmbeddingMatrix load_matrix(const fs::path& path, bool normalize) {
    auto m = load_embeddings(path);
    return normalize ? normalize_rows(m) : m;
}

std::string jsonl(const std::vector<ojson>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::string document(const ojson& j) { return j.dump(2) + "\n"; }

struct NamingInputs {
    EmbeddingMatrix visual;
    EmbeddingMatrix names;
    Vocabulary vocab;
    std::vector<InstanceMeta> meta;
};

NamingInputs load_naming_inputs(const RunConfig& cfg) {
    NamingInputs in;
    const auto& visual_path = need(cfg.clip_visual, "--clip-visual");
    const auto& names_path = need(cfg.clip_names, "--clip-names");
    const auto& vocab_path = need(cfg.vocab, "--vocab");
    const auto& meta_path = need(cfg.meta, "--meta");
    in.visual = load_matrix(visual_path, cfg.normalize);
    in.names = load_matrix(names_path, cfg.normalize);
    in.vocab = load_vocabulary(vocab_path);
    in.meta = load_meta(meta_path);
    if (in.names.rows() != in.vocab.size()) {
        throw Error(ErrorCode::DimMismatch, std::to_string(in.names.rows()) + " name embeddings for a " +
                                                std::to_string(in.vocab.size()) + "-entry vocabulary");
    }
    if (in.visual.dim() != in.names.dim()) {
        throw Error(ErrorCode::DimMismatch, "visual dim " + std::to_string(in.visual.dim()) +
                                                " differs from name dim " + std::to_string(in.names.dim()));
    }
    validate_meta(in.meta, in.visual.rows(), in.vocab.size());
    return in;
}

void check_mode(const RunConfig& cfg, Algo algo, std::span<const InstanceMeta> meta) {
    if (cfg.mode != Mode::Partial) {
        return;
    }
    if (algo == Algo::KMeans) {
        throw Error(ErrorCode::InvalidArgument, "partial mode needs --algo sskm or csskm");
    }
    if (std::none_of(meta.begin(), meta.end(), [](const InstanceMeta& m) { return m.labeled; })) {
        throw Error(ErrorCode::InvalidArgument, "partial mode needs labeled instances in the metadata");
    }
}

std::map<std::string, std::size_t> parse_id_jsonl(const std::string& text, const char* field) {
    std::map<std::string, std::size_t> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto bad = [&](const std::string& why) {
            return Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + why);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw bad(e.what());
        }
        if (!j.is_object() || !j.contains("instance_id") || !j["instance_id"].is_string() ||
            !j.contains(field) || !j[field].is_number_unsigned()) {
            throw bad(std::string("expected {\"instance_id\": str, \"") + field + "\": int}");
        }
        const auto id = j["instance_id"].get<std::string>();
        if (!out.emplace(id, j[field].get<std::size_t>()).second) {
            throw bad("duplicate instance_id \"" + id + "\"");
        }
    }
    return out;
}

/// Per-row value for every instance in meta; throws when an instance is missing.
std::vector<std::size_t> per_row(const std::map<std::string, std::size_t>& by_id,
                                 std::span<const InstanceMeta> meta, const char* what) {
    if (by_id.size() != meta.size()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " lists " + std::to_string(by_id.size()) +
                                                    " instances, metadata has " + std::to_string(meta.size()));
    }
    std::vector<std::size_t> out(meta.size());
    for (const auto& m : meta) {
        const auto it = by_id.find(m.instance_id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::InvalidArgument,
                        std::string(what) + " has no entry for instance \"" + m.instance_id + "\"");
        }
        out[m.row] = it->second;
    }
    return out;
}

/// Reserved cluster per labeled class, recovered from a semi-supervised
/// clustering: class c (ascending id order) owns cluster c.
ClusterAssignment reserved_from_labels(std::span<const std::size_t> cluster_of, std::size_t k,
                                       std::span<const InstanceMeta> meta) {
    ClusterAssignment a;
    a.assignment.assign(cluster_of.begin(), cluster_of.end());
    a.k = k;
    std::set<std::size_t> classes;
    for (const auto& m : meta) {
        if (m.labeled) {
            classes.insert(*m.gt_name_id);
        }
    }
    a.reserved.assign(classes.begin(), classes.end());
    for (const auto& m : meta) {
        if (!m.labeled) {
            continue;
        }
        const auto c = static_cast<std::size_t>(
            std::lower_bound(a.reserved.begin(), a.reserved.end(), *m.gt_name_id) - a.reserved.begin());
        if (cluster_of[m.row] != c) {
            throw Error(ErrorCode::InvalidArgument,
                        "labeled instance \"" + m.instance_id + "\" is not in reserved cluster " +
                            std::to_string(c) + "; cluster with sskm or csskm");
        }
    }
    return a;
}

struct Taxonomy {
    std::unique_ptr<TaxonomyGraph> graph;
    std::unique_ptr<LcsScorer> scorer;
};

Taxonomy load_taxonomy(const RunConfig& cfg) {
    Taxonomy t;
    if (cfg.taxonomy) {
        t.graph = std::make_unique<TaxonomyGraph>(parse_wordnet_noun(need(cfg.taxonomy, "--taxonomy")));
    } else if (cfg.taxonomy_edges || cfg.taxonomy_lemmas) {
        t.graph = std::make_unique<TaxonomyGraph>(load_taxonomy_tsv(
            need(cfg.taxonomy_edges, "--taxonomy-edges"), need(cfg.taxonomy_lemmas, "--taxonomy-lemmas")));
    }
    if (t.graph) {
        t.scorer = std::make_unique<LcsScorer>(*t.graph);
    }
    return t;
}

struct EvalData {
    Vocabulary vocab;
    std::vector<InstanceMeta> meta;
    Taxonomy taxonomy;
};

EvalData load_eval_data(const RunConfig& cfg) {
    EvalData d;
    d.vocab = load_vocabulary(need(cfg.vocab, "--vocab"));
    d.meta = load_meta(need(cfg.meta, "--meta"));
    validate_meta(d.meta, d.meta.size(), d.vocab.size());
    d.taxonomy = load_taxonomy(cfg);
    return d;
}

ojson evaluate_predictions(const RunConfig& cfg, const EvalData& d, const std::string& predictions,
                           std::string* table) {
    const auto pred_by_id = parse_naming_jsonl(predictions);
    std::set<std::size_t> old_classes;
    for (const auto& m : d.meta) {
        if (m.labeled) {
            old_classes.insert(*m.gt_name_id);
        }
    }
    std::vector<std::size_t> pred;
    std::vector<std::size_t> gt;
    std::vector<char> old_mask;
    std::size_t skipped_no_gt = 0;
    for (const auto& m : d.meta) {
        if (cfg.mode == Mode::Partial && m.labeled) {
            continue;
        }
        if (!m.gt_name_id) {
            ++skipped_no_gt;
            continue;
        }
        const auto it = pred_by_id.find(m.instance_id);
        if (it == pred_by_id.end()) {
            throw Error(ErrorCode::InvalidArgument, "no prediction for instance \"" + m.instance_id + "\"");
        }
        if (it->second >= d.vocab.size()) {
            throw Error(ErrorCode::InvalidArgument, "prediction for \"" + m.instance_id +
                                                        "\" is outside the vocabulary");
        }
        pred.push_back(it->second);
        gt.push_back(*m.gt_name_id);
        old_mask.push_back(old_classes.count(*m.gt_name_id) != 0 ? 1 : 0);
    }
    EvalInputs in;
    in.pred = pred;
    in.gt = gt;
    if (cfg.mode == Mode::Partial) {
        in.old_mask = old_mask;
    }
    in.scorer = d.taxonomy.scorer.get();
    in.vocab = &d.vocab;
    in.soft.unknown_as_zero = cfg.unknown_as_zero;
    in.max_classes = cfg.max_classes;
    auto report = evaluate(in);
    if (skipped_no_gt > 0) {
        report.notes.push_back(std::to_string(skipped_no_gt) + " instances without ground truth skipped");
    }
    if (table != nullptr) {
        *table = report.to_table(std::string(to_string(cfg.mode)));
    }
    ojson j;
    j["mode"] = to_string(cfg.mode);
    const ojson body = report.to_json();
    for (auto it = body.begin(); it != body.end(); ++it) {
        j[it.key()] = it.value();
    }
    return j;
}

std::string hash_file(const fs::path& p) {
    const auto bytes = read_file_bytes(p);
    return sha256_hex({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace

Algo parse_algo(std::string_view s) {
    if (s == "kmeans") {
        return Algo::KMeans;
    }
    if (s == "sskm") {
        return Algo::SSKMeans;
    }
    if (s == "csskm") {
        return Algo::CSSKMeans;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown algo \"" + std::string(s) + "\"");
}

Mode parse_mode(std::string_view s) {
    if (s == "unsupervised") {
        return Mode::Unsupervised;
    }
    if (s == "partial") {
        return Mode::Partial;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown mode \"" + std::string(s) + "\"");
}

Strategy parse_strategy(std::string_view s) {
    if (s == "voting") {
        return Strategy::Voting;
    }
    if (s == "iterate") {
        return Strategy::Iterate;
    }
    if (s == "refine") {
        return Strategy::Refine;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown strategy \"" + std::string(s) + "\"");
}

std::string_view to_string(Algo a) {
    switch (a) {
        case Algo::KMeans:
            return "kmeans";
        case Algo::SSKMeans:
            return "sskm";
        case Algo::CSSKMeans:
            return "csskm";
    }
    return "?";
}

std::string_view to_string(Mode m) { return m == Mode::Partial ? "partial" : "unsupervised"; }

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Voting:
            return "voting";
        case Strategy::Iterate:
            return "iterate";
        case Strategy::Refine:
            return "refine";
    }
    return "?";
}

Algo effective_algo(const RunConfig& cfg) {
    if (cfg.algo) {
        return *cfg.algo;
    }
    return cfg.mode == Mode::Partial ? Algo::CSSKMeans : Algo::KMeans;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Infeasible:
        case ErrorCode::InfeasibleSizeConstraint:
            return 3;
        case ErrorCode::Io:
            return 4;
        default:
            return 2;
    }
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Io, "SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[md[i] >> 4U];
        out += kHex[md[i] & 0xFU];
    }
    return out;
}

void check_outputs(const fs::path& dir, const std::vector<std::string>& names, bool force) {
    if (force) {
        return;
    }
    std::error_code ec;
    for (const auto& n : names) {
        if (fs::exists(dir / n, ec)) {
            throw Error(ErrorCode::ManifestConflict,
                        (dir / n).string() + " already exists; pass --force to overwrite");
        }
    }
}

void write_artifacts(const fs::path& dir, const Artifacts& files, bool force) {
    std::vector<std::string> names;
    for (const auto& [name, _] : files) {
        names.push_back(name);
    }
    check_outputs(dir, names, force);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
    for (const auto& [name, text] : files) {
        write_file_text(dir / name, text);
    }
}

void set_logging(bool enabled) { g_logging = enabled; }

void log_event(const std::string& event, const ojson& fields) {
    if (!g_logging) {
        return;
    }
    ojson j;
    j["level"] = "info";
    j["event"] = event;
    if (fields.is_object()) {
        for (const auto& [key, value] : fields.items()) {
            j[key] = value;
        }
    }
    std::cerr << j.dump() << '\n';
}

std::map<std::string, std::size_t> parse_cluster_jsonl(const std::string& text) {
    return parse_id_jsonl(text, "cluster");
}

std::map<std::string, std::size_t> parse_naming_jsonl(const std::string& text) {
    return parse_id_jsonl(text, "name_id");
}

Artifacts run_cluster(const RunConfig& cfg) {
    const auto& features_path = cfg.features ? need(cfg.features, "--features")
                                             : need(cfg.clip_visual, "--features or --clip-visual");
    const auto& meta_path = need(cfg.meta, "--meta");
    if (!cfg.k) {
        throw Error(ErrorCode::InvalidArgument, "missing required --k");
    }
    const auto z = load_matrix(features_path, cfg.normalize);
    const auto meta = load_meta(meta_path);
    std::optional<std::size_t> vocab_size;
    if (cfg.vocab) {
        vocab_size = load_vocabulary(need(cfg.vocab, "--vocab")).size();
    }
    validate_meta(meta, z.rows(), vocab_size);
    const Algo algo = effective_algo(cfg);
    check_mode(cfg, algo, meta);

    ClusterConfig cc;
    cc.k = *cfg.k;
    cc.seed = cfg.seed;
    cc.max_iter = cfg.max_iter;
    cc.tol = cfg.tol;
    cc.restarts = cfg.restarts;
    cc.min_size = cfg.tau;
    cc.threads = cfg.threads;
    ClusterAssignment a;
    switch (algo) {
        case Algo::KMeans:
            a = kmeans(z, cc);
            break;
        case Algo::SSKMeans:
            a = ss_kmeans(z, meta, cc);
            break;
        case Algo::CSSKMeans:
            a = css_kmeans(z, meta, cc);
            break;
    }
    log_event("cluster.done", {{"algo", to_string(algo)},
                               {"k", a.k},
                               {"objective", a.objective},
                               {"iterations_run", a.iterations_run}});

    std::vector<ojson> lines;
    lines.reserve(meta.size());
    for (const auto& m : meta) {
        lines.push_back({{"instance_id", m.instance_id}, {"cluster", a.assignment[m.row]}});
    }
    ojson summary;
    summary["algo"] = to_string(algo);
    summary["objective"] = a.objective;
    summary["iterations_run"] = a.iterations_run;
    summary["K"] = a.k;
    summary["tau"] = a.min_size ? ojson(*a.min_size) : ojson();
    summary["seed"] = cfg.seed;
    summary["reserved"] = a.reserved;
    summary["cluster_sizes"] = a.cluster_sizes();
    return {{"clusters.jsonl", jsonl(lines)}, {"clusters_summary.json", document(summary)}};
}

Artifacts run_zeroshot(const RunConfig& cfg) {
    const auto in = load_naming_inputs(cfg);
    const auto names = zero_shot_assign(in.visual, in.names, cfg.threads);
    std::vector<ojson> lines;
    lines.reserve(in.meta.size());
    for (const auto& m : in.meta) {
        const auto id = names[m.row];
        lines.push_back({{"instance_id", m.instance_id}, {"name_id", id}, {"lemma", in.vocab[id].lemma}});
    }
    log_event("zeroshot.done", {{"instances", in.meta.size()}});
    return {{"zeroshot.jsonl", jsonl(lines)}};
}

Artifacts run_name(const RunConfig& cfg, const std::optional<std::string>& clusters_jsonl) {
    const auto in = load_naming_inputs(cfg);
    const std::string clusters_text =
        clusters_jsonl ? *clusters_jsonl : read_file_text(need(cfg.clusters, "--clusters"));
    const auto cluster_of = per_row(parse_cluster_jsonl(clusters_text), in.meta, "cluster file");
    const std::size_t max_cluster = *std::max_element(cluster_of.begin(), cluster_of.end());
    const std::size_t k = cfg.k.value_or(max_cluster + 1);
    if (max_cluster >= k) {
        throw Error(ErrorCode::InvalidArgument, "cluster id " + std::to_string(max_cluster) +
                                                    " is out of range for K = " + std::to_string(k));
    }

    std::vector<std::optional<std::size_t>> pins;
    if (cfg.mode == Mode::Partial) {
        check_mode(cfg, effective_algo(cfg), in.meta);
        pins = partially_supervised_pin(reserved_from_labels(cluster_of, k, in.meta), in.meta, in.vocab);
    }

    NamingResult result;
    if (cfg.strategy == Strategy::Voting) {
        result = initial_voting(in.visual, in.names, cluster_of, k, cfg.threads);
        for (std::size_t c = 0; c < pins.size(); ++c) {
            if (pins[c]) {
                result.cluster_names[c] = *pins[c];
            }
        }
        for (std::size_t i = 0; i < cluster_of.size(); ++i) {
            result.instance_names[i] = result.cluster_names[cluster_of[i]];
        }
    } else {
        RefineConfig rc;
        rc.m = cfg.m;
        rc.revote_m = cfg.revote_m;
        rc.max_refine_iter = cfg.max_refine_iter;
        rc.linear_assignment = cfg.strategy == Strategy::Refine;
        rc.threads = cfg.threads;
        result = refine_loop(in.visual, in.names, cluster_of, k, rc, pins);
    }
    log_event("name.done", {{"strategy", to_string(cfg.strategy)},
                            {"iterations", result.iterations},
                            {"converged", result.converged}});

    std::vector<ojson> lines;
    lines.reserve(in.meta.size());
    for (const auto& m : in.meta) {
        const auto id = result.instance_names[m.row];
        lines.push_back({{"instance_id", m.instance_id}, {"name_id", id}, {"lemma", in.vocab[id].lemma}});
    }
    ojson summary;
    summary["strategy"] = to_string(cfg.strategy);
    summary["K"] = k;
    summary["cluster_names"] = result.cluster_names;
    std::vector<std::string> lemmas;
    for (auto id : result.cluster_names) {
        lemmas.push_back(in.vocab[id].lemma);
    }
    summary["cluster_lemmas"] = lemmas;
    summary["iterations"] = result.iterations;
    summary["converged"] = result.converged;
    summary["m"] = result.trace.empty() ? cfg.m : result.trace.back().m;
    std::vector<std::size_t> pinned;
    for (std::size_t c = 0; c < pins.size(); ++c) {
        if (pins[c]) {
            pinned.push_back(c);
        }
    }
    summary["pinned"] = pinned;
    auto trace = ojson::array();
    for (const auto& it : result.trace) {
        trace.push_back({{"change_count", it.change_count}, {"m", it.m}, {"energy", it.energy}});
    }
    summary["trace"] = trace;
    return {{"naming.jsonl", jsonl(lines)}, {"naming_summary.json", document(summary)}};
}

Artifacts run_eval(const RunConfig& cfg, const std::optional<std::string>& predictions_jsonl,
                   const std::string& report_name) {
    const auto data = load_eval_data(cfg);
    const std::string text =
        predictions_jsonl ? *predictions_jsonl : read_file_text(need(cfg.predictions, "--predictions"));
    const auto report = evaluate_predictions(cfg, data, text, nullptr);
    return {{report_name, document(report)}};
}

Artifacts run_pipeline(const RunConfig& cfg) {
    Artifacts all = run_cluster(cfg);
    const auto zeroshot = run_zeroshot(cfg);
    all.insert(zeroshot.begin(), zeroshot.end());
    const auto naming = run_name(cfg, all.at("clusters.jsonl"));
    all.insert(naming.begin(), naming.end());

    const auto data = load_eval_data(cfg);
    std::string table;
    all["report.json"] = document(evaluate_predictions(cfg, data, all.at("naming.jsonl"), &table));
    std::string zs_table;
    all["report_zeroshot.json"] = document(evaluate_predictions(cfg, data, all.at("zeroshot.jsonl"), &zs_table));

    ojson manifest;
    manifest["command"] = "pipeline";
    ojson config;
    config["k"] = cfg.k ? ojson(*cfg.k) : ojson();
    config["algo"] = to_string(effective_algo(cfg));
    config["tau"] = cfg.tau ? ojson(*cfg.tau) : ojson();
    config["m"] = cfg.m;
    config["revote_m"] = cfg.revote_m;
    config["seed"] = cfg.seed;
    config["restarts"] = cfg.restarts;
    config["max_iter"] = cfg.max_iter;
    config["tol"] = cfg.tol;
    config["max_refine_iter"] = cfg.max_refine_iter;
    config["mode"] = to_string(cfg.mode);
    config["strategy"] = to_string(cfg.strategy);
    config["normalize"] = cfg.normalize;
    manifest["config"] = config;
    ojson inputs = ojson::object();
    const std::pair<const char*, const std::optional<fs::path>*> named_inputs[] = {
        {"features", &cfg.features},         {"clip_visual", &cfg.clip_visual},
        {"clip_names", &cfg.clip_names},     {"vocab", &cfg.vocab},
        {"meta", &cfg.meta},                 {"taxonomy", &cfg.taxonomy},
        {"taxonomy_edges", &cfg.taxonomy_edges}, {"taxonomy_lemmas", &cfg.taxonomy_lemmas}};
    for (const auto& [key, path] : named_inputs) {
        if (*path) {
            inputs[key] = hash_file(**path);
        }
    }
    manifest["inputs"] = inputs;
    auto artifacts = ojson::array();
    for (const auto& [name, text] : all) {
        artifacts.push_back({{"path", name}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
    }
    manifest["artifacts"] = artifacts;
    all["manifest.json"] = document(manifest);
    all["summary.txt"] = "naming\n" + table + "zero-shot baseline\n" + zs_table;
    return all;
}

std::string cmd_cluster(const RunConfig& cfg) {
    check_outputs(cfg.out, {"clusters.jsonl", "clusters_summary.json"}, cfg.force);
    const auto files = run_cluster(cfg);
    write_artifacts(cfg.out, files, cfg.force);
    return files.at("clusters_summary.json");
}

std::string cmd_zeroshot(const RunConfig& cfg) {
    check_outputs(cfg.out, {"zeroshot.jsonl"}, cfg.force);
    const auto files = run_zeroshot(cfg);
    write_artifacts(cfg.out, files, cfg.force);
    return "wrote " + (cfg.out / "zeroshot.jsonl").string() + "\n";
}

std::string cmd_name(const RunConfig& cfg) {
    check_outputs(cfg.out, {"naming.jsonl", "naming_summary.json"}, cfg.force);
    const auto files = run_name(cfg);
    write_artifacts(cfg.out, files, cfg.force);
    return files.at("naming_summary.json");
}

std::string cmd_eval(const RunConfig& cfg) {
    check_outputs(cfg.out, {"report.json"}, cfg.force);
    const auto data = load_eval_data(cfg);
    const auto text = read_file_text(need(cfg.predictions, "--predictions"));
    std::string table;
    const auto report = evaluate_predictions(cfg, data, text, &table);
    write_artifacts(cfg.out, {{"report.json", document(report)}}, cfg.force);
    return table;
}

std::string cmd_pipeline(const RunConfig& cfg) {
    check_outputs(cfg.out,
                  {"clusters.jsonl", "clusters_summary.json", "zeroshot.jsonl", "naming.jsonl",
                   "naming_summary.json", "report.json", "report_zeroshot.json", "manifest.json",
                   "summary.txt"},
                  cfg.force);
    const auto files = run_pipeline(cfg);
    write_artifacts(cfg.out, files, cfg.force);
    return files.at("summary.txt");
}

std::string cmd_taxonomy_export(const RunConfig& cfg) {
    check_outputs(cfg.out, {"taxonomy_edges.tsv", "taxonomy_lemmas.tsv"}, cfg.force);
    const auto t = load_taxonomy(cfg);
    if (!t.graph) {
        throw Error(ErrorCode::InvalidArgument, "missing --taxonomy or --taxonomy-edges/--taxonomy-lemmas");
    }
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) {
        throw Error(ErrorCode::Io, "cannot create " + cfg.out.string() + ": " + ec.message());
    }
    export_taxonomy_tsv(*t.graph, cfg.out / "taxonomy_edges.tsv", cfg.out / "taxonomy_lemmas.tsv");
    log_event("taxonomy.exported", {{"synsets", t.graph->synset_count()}, {"edges", t.graph->edge_count()}});
    return std::to_string(t.graph->synset_count()) + " synsets, " + std::to_string(t.graph->edge_count()) +
           " edges, depth " + std::to_string(t.graph->depth()) + "\n";
}

}  // namespace scd
