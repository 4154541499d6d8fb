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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scd/error.hpp"

namespace scd {

enum class Algo { KMeans, SSKMeans, CSSKMeans };
enum class Mode { Unsupervised, Partial };
/// voting: cluster-level 1-NN vote only. iterate: refinement with 1-NN
/// voting and no de-duplication. refine: top-m voting, Hungarian
/// de-duplication and iterative refinement.
enum class Strategy { Voting, Iterate, Refine };

struct RunConfig {
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> clip_visual;
    std::optional<std::filesystem::path> clip_names;
    std::optional<std::filesystem::path> vocab;
    std::optional<std::filesystem::path> meta;
    std::optional<std::filesystem::path> taxonomy;
    std::optional<std::filesystem::path> taxonomy_edges;
    std::optional<std::filesystem::path> taxonomy_lemmas;
    std::optional<std::filesystem::path> clusters;
    std::optional<std::filesystem::path> predictions;
    std::filesystem::path out = ".";

    std::optional<std::size_t> k;
    std::optional<Algo> algo;
    std::optional<std::size_t> tau;
    std::size_t m = 10;
    std::size_t revote_m = 1;
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    double tol = 1e-6;
    std::size_t max_refine_iter = 50;
    Mode mode = Mode::Unsupervised;
    Strategy strategy = Strategy::Refine;
    bool normalize = true;
    bool unknown_as_zero = false;
    std::size_t max_classes = 2000;
    std::size_t threads = 1;
    bool force = false;
};

Algo parse_algo(std::string_view s);
Mode parse_mode(std::string_view s);
Strategy parse_strategy(std::string_view s);
std::string_view to_string(Algo a);
std::string_view to_string(Mode m);
std::string_view to_string(Strategy s);

/// Algorithm used when none is given: kmeans unsupervised, csskm partial.
Algo effective_algo(const RunConfig& cfg);

/// Process exit status for an error: 3 infeasible, 4 I/O, else 2.
int exit_code_for(ErrorCode code);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Relative file name -> file contents, written together.
using Artifacts = std::map<std::string, std::string>;

/// Throws ManifestConflict if any artifact already exists in dir and force
/// is off.
void check_outputs(const std::filesystem::path& dir, const std::vector<std::string>& names, bool force);

void write_artifacts(const std::filesystem::path& dir, const Artifacts& files, bool force);

/// Enables or silences log_event (on by default).
void set_logging(bool enabled);

/// Line-oriented JSON log record on standard error.
void log_event(const std::string& event, const nlohmann::ordered_json& fields = {});

/// Each command validates every input, computes in memory, then writes its
/// artifacts into cfg.out. The returned text is meant for standard output.
std::string cmd_cluster(const RunConfig& cfg);
std::string cmd_zeroshot(const RunConfig& cfg);
std::string cmd_name(const RunConfig& cfg);
std::string cmd_eval(const RunConfig& cfg);
/// cluster, zeroshot, name and eval in sequence plus manifest.json.
std::string cmd_pipeline(const RunConfig& cfg);
/// Parses the taxonomy and writes taxonomy_edges.tsv and taxonomy_lemmas.tsv.
std::string cmd_taxonomy_export(const RunConfig& cfg);

/// In-memory variants used by the commands above.
Artifacts run_cluster(const RunConfig& cfg);
Artifacts run_zeroshot(const RunConfig& cfg);
Artifacts run_name(const RunConfig& cfg, const std::optional<std::string>& clusters_jsonl = {});
Artifacts run_eval(const RunConfig& cfg, const std::optional<std::string>& predictions_jsonl = {},
                   const std::string& report_name = "report.json");
Artifacts run_pipeline(const RunConfig& cfg);

/// {"instance_id": cluster} / {"instance_id": name_id} from JSONL text.
std::map<std::string, std::size_t> parse_cluster_jsonl(const std::string& text);
std::map<std::string, std::size_t> parse_naming_jsonl(const std::string& text);

}  // namespace scd
