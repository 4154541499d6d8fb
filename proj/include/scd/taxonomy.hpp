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
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace scd {

/// Hypernym DAG over noun synsets. Node indices are dense; ids are the
/// 8-digit synset offsets of the source file. When the source has several
/// roots a virtual root (id "*root*", no lemmas) is placed above them.
class TaxonomyGraph {
public:
    static constexpr const char* kVirtualRootId = "*root*";

    struct Node {
        std::string id;
        std::vector<std::string> lemmas;
        std::vector<std::size_t> parents;
        std::vector<std::size_t> children;
        std::size_t depth = 0;  // 1 at a root
    };

    /// Builds from explicit nodes and (child, parent) edges. Checks
    /// acyclicity, then adds the virtual root if requested and computes
    /// depths.
    TaxonomyGraph(std::vector<std::pair<std::string, std::vector<std::string>>> synsets,
                  const std::vector<std::pair<std::string, std::string>>& edges,
                  bool connect_roots = true);

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    /// Synsets from the source, excluding any virtual root.
    [[nodiscard]] std::size_t synset_count() const noexcept {
        return nodes_.size() - (has_virtual_root_ ? 1 : 0);
    }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }
    [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
    [[nodiscard]] bool has_virtual_root() const noexcept { return has_virtual_root_; }
    [[nodiscard]] const Node& node(std::size_t i) const { return nodes_.at(i); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& synset_id) const;
    /// Synsets listing the lemma, lowest offset first.
    [[nodiscard]] const std::vector<std::size_t>* synsets_of(const std::string& lemma) const;

    /// Edges as (child id, parent id), excluding virtual-root edges, in node order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> edges() const;

private:
    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
    std::size_t edge_count_ = 0;
    std::size_t depth_ = 0;
    bool has_virtual_root_ = false;
};

/// Lowercases and turns spaces into underscores, the data.noun lemma form.
std::string canonical_lemma(const std::string& lemma);

/// WordNet 3.x data.noun: license lines (two leading spaces) are skipped,
/// `@` and `@i` pointers become hypernym edges. Throws ParseError or
/// CyclicTaxonomy.
TaxonomyGraph parse_wordnet_noun(const std::filesystem::path& path, bool connect_roots = true);
TaxonomyGraph parse_wordnet_noun_text(const std::string& text, bool connect_roots = true);

/// `child<TAB>parent` edges plus `lemma<TAB>synset` map.
TaxonomyGraph load_taxonomy_tsv(const std::filesystem::path& edges, const std::filesystem::path& lemmas,
                                bool connect_roots = true);
void export_taxonomy_tsv(const TaxonomyGraph& g, const std::filesystem::path& edges,
                         const std::filesystem::path& lemmas);

/// Edges on the shortest undirected hypernym path, plus one (so p(a, a) = 1).
/// Bidirectional breadth-first search. Throws Disconnected.
std::size_t shortest_path_len(const TaxonomyGraph& g, std::size_t a, std::size_t b);

/// Leacock-Chodorow similarity rescaled to [0, 1]:
/// -log(p / 2d) / -log(1 / 2d). Disconnected pairs score 0.
double lcs_similarity(const TaxonomyGraph& g, std::size_t a, std::size_t b);

/// Explicit synset id wins; otherwise the lowest-offset synset of the lemma.
std::size_t resolve_lemma(const TaxonomyGraph& g, const std::string& lemma,
                          const std::optional<std::string>& synset_id = std::nullopt);

/// Thread-safe similarity lookups with a bounded memo keyed by unordered pair.
class LcsScorer {
public:
    explicit LcsScorer(const TaxonomyGraph& g, std::size_t memo_capacity = 1U << 16U)
        : graph_(g), capacity_(memo_capacity) {}

    double operator()(std::size_t a, std::size_t b) const;
    [[nodiscard]] const TaxonomyGraph& graph() const noexcept { return graph_; }

private:
    const TaxonomyGraph& graph_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace scd
