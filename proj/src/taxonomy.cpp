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

#include "scd/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include "scd/embedding_store.hpp"
#include "scd/error.hpp"

namespace scd {

namespace {

bool id_before(const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
}

std::string cycle_witness(const std::vector<TaxonomyGraph::Node>& nodes,
                          const std::vector<std::size_t>& pending) {
    // Every leftover node has a leftover parent, so walking parents must loop.
    std::vector<char> left(nodes.size(), 0);
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        left[v] = pending[v] > 0 ? 1 : 0;
    }
    std::size_t start = 0;
    while (!left[start]) {
        ++start;
    }
    std::vector<std::size_t> position(nodes.size(), std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> walk;
    std::size_t v = start;
    while (position[v] == std::numeric_limits<std::size_t>::max()) {
        position[v] = walk.size();
        walk.push_back(v);
        for (auto parent : nodes[v].parents) {
            if (left[parent]) {
                v = parent;
                break;
            }
        }
    }
    std::string out;
    for (std::size_t i = position[v]; i < walk.size(); ++i) {
        out += nodes[walk[i]].id + " -> ";
    }
    return out + nodes[v].id;
}

}  // namespace

std::string canonical_lemma(const std::string& lemma) {
    std::string out = lemma;
    for (auto& ch : out) {
        if (ch == ' ') {
            ch = '_';
        } else {
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
    }
    return out;
}

TaxonomyGraph::TaxonomyGraph(std::vector<std::pair<std::string, std::vector<std::string>>> synsets,
                             const std::vector<std::pair<std::string, std::string>>& edges,
                             bool connect_roots) {
    nodes_.reserve(synsets.size() + 1);
    for (auto& [id, lemmas] : synsets) {
        if (!by_id_.emplace(id, nodes_.size()).second) {
            throw Error(ErrorCode::ParseError, "synset " + id + " defined twice");
        }
        Node n;
        n.id = id;
        n.lemmas = std::move(lemmas);
        nodes_.push_back(std::move(n));
    }
    if (nodes_.empty()) {
        throw Error(ErrorCode::ParseError, "taxonomy has no synsets");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [child, parent] : edges) {
        const auto c = by_id_.find(child);
        const auto p = by_id_.find(parent);
        if (c == by_id_.end() || p == by_id_.end()) {
            throw Error(ErrorCode::ParseError, "edge " + child + " -> " + parent +
                                                   " references an unknown synset");
        }
        if (!seen.emplace(c->second, p->second).second) {
            continue;
        }
        nodes_[c->second].parents.push_back(p->second);
        nodes_[p->second].children.push_back(c->second);
        ++edge_count_;
    }

    // Kahn's order from roots downward; leftovers sit on a cycle.
    std::vector<std::size_t> pending(nodes_.size());
    std::deque<std::size_t> ready;
    std::vector<std::size_t> roots;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        pending[v] = nodes_[v].parents.size();
        if (pending[v] == 0) {
            roots.push_back(v);
        }
    }
    std::vector<std::size_t> order;
    order.reserve(nodes_.size());
    ready.assign(roots.begin(), roots.end());
    while (!ready.empty()) {
        const std::size_t v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (auto child : nodes_[v].children) {
            if (--pending[child] == 0) {
                ready.push_back(child);
            }
        }
    }
    if (order.size() != nodes_.size()) {
        throw Error(ErrorCode::CyclicTaxonomy, cycle_witness(nodes_, pending));
    }

    if (connect_roots && roots.size() > 1) {
        const std::size_t top = nodes_.size();
        Node virtual_root;
        virtual_root.id = kVirtualRootId;
        for (auto r : roots) {
            virtual_root.children.push_back(r);
            nodes_[r].parents.push_back(top);
        }
        nodes_.push_back(std::move(virtual_root));
        by_id_.emplace(kVirtualRootId, top);
        order.insert(order.begin(), top);
        has_virtual_root_ = true;
    }
    for (auto v : order) {
        std::size_t d = 1;
        for (auto parent : nodes_[v].parents) {
            d = std::max(d, nodes_[parent].depth + 1);
        }
        nodes_[v].depth = d;
        depth_ = std::max(depth_, d);
    }

    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        for (const auto& lemma : nodes_[v].lemmas) {
            auto& list = by_lemma_[canonical_lemma(lemma)];
            if (std::find(list.begin(), list.end(), v) == list.end()) {
                list.push_back(v);
            }
        }
    }
    for (auto& [lemma, list] : by_lemma_) {
        std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
            return id_before(nodes_[a].id, nodes_[b].id);
        });
    }
}

std::optional<std::size_t> TaxonomyGraph::find(const std::string& synset_id) const {
    auto it = by_id_.find(synset_id);
    if (it == by_id_.end() && synset_id.size() == 9 && synset_id[0] == 'n') {
        it = by_id_.find(synset_id.substr(1));  // ImageNet-style "n01234567"
    }
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::vector<std::size_t>* TaxonomyGraph::synsets_of(const std::string& lemma) const {
    const auto it = by_lemma_.find(canonical_lemma(lemma));
    return it == by_lemma_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, std::string>> TaxonomyGraph::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(edge_count_);
    for (const auto& n : nodes_) {
        if (n.id == kVirtualRootId) {
            continue;
        }
        for (auto parent : n.parents) {
            if (nodes_[parent].id != kVirtualRootId) {
                out.emplace_back(n.id, nodes_[parent].id);
            }
        }
    }
    return out;
}

TaxonomyGraph parse_wordnet_noun_text(const std::string& text, bool connect_roots) {
    std::vector<std::pair<std::string, std::vector<std::string>>> synsets;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::pair<std::string, std::size_t>> noun_targets;  // (offset, line)
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        return Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.rfind("  ", 0) == 0 || line.find_first_not_of(' ') == std::string::npos) {
            continue;
        }
        const auto bar = line.find(" | ");
        std::istringstream fields(bar == std::string::npos ? line : line.substr(0, bar));
        std::string offset;
        std::string lex_filenum;
        std::string ss_type;
        std::string w_cnt_hex;
        if (!(fields >> offset >> lex_filenum >> ss_type >> w_cnt_hex)) {
            throw fail("truncated synset header");
        }
        if (offset.size() != 8 || !std::all_of(offset.begin(), offset.end(), ::isdigit)) {
            throw fail("bad synset offset \"" + offset + "\"");
        }
        if (ss_type != "n") {
            throw fail("synset type \"" + ss_type + "\" is not a noun");
        }
        std::size_t w_cnt = 0;
        try {
            w_cnt = std::stoul(w_cnt_hex, nullptr, 16);
        } catch (const std::exception&) {
            throw fail("bad word count \"" + w_cnt_hex + "\"");
        }
        if (w_cnt == 0) {
            throw fail("synset without words");
        }
        std::vector<std::string> words;
        for (std::size_t w = 0; w < w_cnt; ++w) {
            std::string word;
            std::string lex_id;
            if (!(fields >> word >> lex_id)) {
                throw fail("fewer words than declared");
            }
            words.push_back(canonical_lemma(word));
        }
        std::string p_cnt_str;
        if (!(fields >> p_cnt_str) || !std::all_of(p_cnt_str.begin(), p_cnt_str.end(), ::isdigit)) {
            throw fail("bad pointer count");
        }
        const std::size_t p_cnt = std::stoul(p_cnt_str);
        for (std::size_t p = 0; p < p_cnt; ++p) {
            std::string symbol;
            std::string target;
            std::string pos;
            std::string source_target;
            if (!(fields >> symbol >> target >> pos >> source_target)) {
                throw fail("fewer pointers than declared");
            }
            if (pos != "n") {
                continue;
            }
            noun_targets.emplace_back(target, line_no);
            if (symbol == "@" || symbol == "@i") {
                edges.emplace_back(offset, target);
            }
        }
        synsets.emplace_back(offset, std::move(words));
    }
    std::set<std::string> known;
    for (const auto& [id, words] : synsets) {
        known.insert(id);
    }
    for (const auto& [target, at] : noun_targets) {
        if (known.count(target) == 0) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(at) +
                                                   ": pointer to nonexistent synset " + target);
        }
    }
    return TaxonomyGraph(std::move(synsets), edges, connect_roots);
}

TaxonomyGraph parse_wordnet_noun(const std::filesystem::path& path, bool connect_roots) {
    return parse_wordnet_noun_text(read_file_text(path), connect_roots);
}

TaxonomyGraph load_taxonomy_tsv(const std::filesystem::path& edges_path,
                                const std::filesystem::path& lemmas_path, bool connect_roots) {
    std::vector<std::pair<std::string, std::vector<std::string>>> synsets;
    std::unordered_map<std::string, std::size_t> index;
    auto node = [&](const std::string& id) -> std::vector<std::string>& {
        auto [it, inserted] = index.emplace(id, synsets.size());
        if (inserted) {
            synsets.emplace_back(id, std::vector<std::string>{});
        }
        return synsets[it->second].second;
    };
    auto read_pairs = [](const std::filesystem::path& path) {
        std::vector<std::pair<std::string, std::string>> out;
        std::istringstream in(read_file_text(path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            const auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
                line.find('\t', tab + 1) != std::string::npos) {
                throw Error(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) +
                                                       ": expected two tab-separated fields");
            }
            out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
        }
        return out;
    };
    for (const auto& [lemma, synset] : read_pairs(lemmas_path)) {
        node(synset).push_back(canonical_lemma(lemma));
    }
    const auto edges = read_pairs(edges_path);
    for (const auto& [child, parent] : edges) {
        node(child);
        node(parent);
    }
    return TaxonomyGraph(std::move(synsets), edges, connect_roots);
}

void export_taxonomy_tsv(const TaxonomyGraph& g, const std::filesystem::path& edges_path,
                         const std::filesystem::path& lemmas_path) {
    std::string edges;
    for (const auto& [child, parent] : g.edges()) {
        edges += child + "\t" + parent + "\n";
    }
    std::string lemmas;
    for (std::size_t v = 0; v < g.size(); ++v) {
        for (const auto& lemma : g.node(v).lemmas) {
            lemmas += lemma + "\t" + g.node(v).id + "\n";
        }
    }
    write_file_text(edges_path, edges);
    write_file_text(lemmas_path, lemmas);
}

std::size_t shortest_path_len(const TaxonomyGraph& g, std::size_t a, std::size_t b) {
    if (a >= g.size() || b >= g.size()) {
        throw Error(ErrorCode::InvalidArgument, "synset index out of range");
    }
    if (a == b) {
        return 1;
    }
    std::unordered_map<std::size_t, std::size_t> dist_a{{a, 0}};
    std::unordered_map<std::size_t, std::size_t> dist_b{{b, 0}};
    std::vector<std::size_t> front_a{a};
    std::vector<std::size_t> front_b{b};
    std::size_t best = std::numeric_limits<std::size_t>::max();

    auto expand = [&](std::vector<std::size_t>& front, std::unordered_map<std::size_t, std::size_t>& mine,
                      const std::unordered_map<std::size_t, std::size_t>& other) {
        std::vector<std::size_t> next;
        auto visit = [&](std::size_t from, std::size_t to) {
            if (mine.count(to) != 0) {
                return;
            }
            const std::size_t d = mine[from] + 1;
            mine[to] = d;
            next.push_back(to);
            const auto hit = other.find(to);
            if (hit != other.end()) {
                best = std::min(best, d + hit->second);
            }
        };
        for (auto u : front) {
            const auto& n = g.node(u);
            for (auto v : n.parents) {
                visit(u, v);
            }
            for (auto v : n.children) {
                visit(u, v);
            }
        }
        front = std::move(next);
    };

    while (!front_a.empty() && !front_b.empty()) {
        if (front_a.size() <= front_b.size()) {
            expand(front_a, dist_a, dist_b);
        } else {
            expand(front_b, dist_b, dist_a);
        }
        if (best != std::numeric_limits<std::size_t>::max()) {
            return best + 1;
        }
    }
    throw Error(ErrorCode::Disconnected,
                "no hypernym path between " + g.node(a).id + " and " + g.node(b).id);
}

double lcs_similarity(const TaxonomyGraph& g, std::size_t a, std::size_t b) {
    std::size_t p = 0;
    try {
        p = shortest_path_len(g, a, b);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Disconnected) {
            return 0.0;
        }
        throw;
    }
    const double two_d = 2.0 * static_cast<double>(g.depth());
    const double raw = -std::log(static_cast<double>(p) / two_d);
    const double top = -std::log(1.0 / two_d);
    return std::clamp(raw / top, 0.0, 1.0);
}

std::size_t resolve_lemma(const TaxonomyGraph& g, const std::string& lemma,
                          const std::optional<std::string>& synset_id) {
    if (synset_id) {
        const auto idx = g.find(*synset_id);
        if (!idx) {
            throw Error(ErrorCode::UnknownSynset, "\"" + *synset_id + "\" (lemma \"" + lemma + "\")");
        }
        return *idx;
    }
    const auto* list = g.synsets_of(lemma);
    if (list == nullptr || list->empty()) {
        throw Error(ErrorCode::UnknownLemma, "\"" + lemma + "\"");
    }
    return list->front();
}

double LcsScorer::operator()(std::size_t a, std::size_t b) const {
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32U) |
                              static_cast<std::uint64_t>(std::max(a, b));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = memo_.find(key);
        if (it != memo_.end()) {
            return it->second;
        }
    }
    const double score = lcs_similarity(graph_, a, b);
    std::lock_guard<std::mutex> lock(mutex_);
    if (memo_.size() >= capacity_) {
        memo_.clear();
    }
    memo_.emplace(key, score);
    return score;
}

}  // namespace scd
