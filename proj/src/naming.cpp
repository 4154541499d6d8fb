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

#include "scd/naming.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "scd/error.hpp"
#include "scd/parallel.hpp"
#include "scd/solvers.hpp"

namespace scd {

namespace {

// Secondary weight for the first-choice share inside the assignment cost;
// small enough that it only separates equal vote fractions.
constexpr double kTop1Weight = 1e-9;

void check_dims(const EmbeddingMatrix& visual, const EmbeddingMatrix& names) {
    if (visual.dim() != names.dim()) {
        throw Error(ErrorCode::DimMismatch, "visual dim " + std::to_string(visual.dim()) +
                                                " vs name dim " + std::to_string(names.dim()));
    }
}

bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.fraction != b.fraction) {
        return a.fraction > b.fraction;
    }
    if (a.top1_fraction != b.top1_fraction) {
        return a.top1_fraction > b.top1_fraction;
    }
    return a.name_id < b.name_id;
}

}  // namespace

std::vector<std::size_t> zero_shot_assign(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                                          std::size_t threads) {
    check_dims(visual, names);
    std::vector<std::size_t> out(visual.rows(), 0);
    parallel_for(visual.rows(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto v = visual.row(i);
            double best = dot(v, names.row(0));
            std::size_t arg = 0;
            for (std::size_t j = 1; j < names.rows(); ++j) {
                const double s = dot(v, names.row(j));
                if (s > best) {
                    best = s;
                    arg = j;
                }
            }
            out[i] = arg;
        }
    });
    return out;
}

std::vector<std::vector<std::size_t>> nearest_names(const EmbeddingMatrix& visual,
                                                    const EmbeddingMatrix& names, std::size_t m,
                                                    std::size_t threads) {
    check_dims(visual, names);
    if (m == 0 || m > names.rows()) {
        throw Error(ErrorCode::InvalidArgument, "m must lie in [1, " + std::to_string(names.rows()) + "]");
    }
    std::vector<std::vector<std::size_t>> out(visual.rows());
    parallel_for(visual.rows(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores(names.rows());
        std::vector<std::size_t> order(names.rows());
        for (std::size_t i = begin; i < end; ++i) {
            const auto v = visual.row(i);
            for (std::size_t j = 0; j < names.rows(); ++j) {
                scores[j] = dot(v, names.row(j));
            }
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                              [&](std::size_t a, std::size_t b) {
                                  return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                              });
            out[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
        }
    });
    return out;
}

std::vector<std::size_t> vote_cluster_names(std::span<const std::size_t> cluster_of, std::size_t k,
                                            std::span<const std::size_t> nn) {
    if (cluster_of.size() != nn.size()) {
        throw Error(ErrorCode::LengthMismatch, "cluster and name vectors differ in length");
    }
    std::vector<std::map<std::size_t, std::size_t>> counts(k);
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        ++counts.at(cluster_of[i])[nn[i]];
    }
    std::vector<std::size_t> out(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c].empty()) {
            throw Error(ErrorCode::InvalidArgument, "cluster " + std::to_string(c) + " is empty");
        }
        std::size_t best_count = 0;
        // std::map iterates ascending, so the first maximum is the smallest id.
        for (const auto& [name, count] : counts[c]) {
            if (count > best_count) {
                best_count = count;
                out[c] = name;
            }
        }
    }
    return out;
}

VoteTable tally_votes(std::span<const std::size_t> cluster_of, std::size_t k,
                      const std::vector<std::vector<std::size_t>>& neighbours, std::size_t m,
                      std::span<const char> active, std::span<const std::size_t> excluded) {
    if (neighbours.size() != cluster_of.size()) {
        throw Error(ErrorCode::LengthMismatch, "one neighbour list per instance required");
    }
    if (m == 0) {
        throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
    }
    VoteTable table;
    table.m = m;
    table.clusters.resize(k);
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        const std::size_t c = cluster_of[i];
        if (c >= k) {
            throw Error(ErrorCode::InvalidArgument, "cluster index " + std::to_string(c) + " >= K");
        }
        if (!active.empty() && !active[c]) {
            continue;
        }
        const auto& nn = neighbours[i];
        if (nn.size() < m) {
            throw Error(ErrorCode::InvalidArgument, "neighbour list shorter than m");
        }
        auto& votes = table.clusters[c];
        ++votes.size;
        for (std::size_t r = 0; r < m; ++r) {
            ++votes.counts[nn[r]];
        }
        ++votes.top1_counts[nn[0]];
    }
    const std::set<std::size_t> skip(excluded.begin(), excluded.end());
    for (auto& votes : table.clusters) {
        if (votes.size == 0) {
            continue;
        }
        const auto size = static_cast<double>(votes.size);
        for (const auto& [name, count] : votes.counts) {
            if (skip.count(name) != 0) {
                continue;
            }
            const auto top1 = votes.top1_counts.find(name);
            const double top1_share =
                top1 == votes.top1_counts.end() ? 0.0 : static_cast<double>(top1->second) / size;
            votes.candidates.push_back({name, static_cast<double>(count) / size, top1_share});
        }
        std::sort(votes.candidates.begin(), votes.candidates.end(), candidate_before);
        if (votes.candidates.size() > m) {
            votes.candidates.resize(m);
        }
    }
    return table;
}

VoteTable topm_vote(std::span<const std::size_t> cluster_of, std::size_t k,
                    const EmbeddingMatrix& visual, const EmbeddingMatrix& names, std::size_t m,
                    std::size_t threads) {
    if (cluster_of.size() != visual.rows()) {
        throw Error(ErrorCode::LengthMismatch, "one cluster index per visual row required");
    }
    return tally_votes(cluster_of, k, nearest_names(visual, names, m, threads), m);
}

std::vector<std::size_t> dedup_assign(const VoteTable& votes, std::span<const std::size_t> clusters) {
    std::vector<std::size_t> pool;
    for (auto c : clusters) {
        for (const auto& cand : votes.clusters.at(c).candidates) {
            pool.push_back(cand.name_id);
        }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    if (pool.size() < clusters.size()) {
        throw Error(ErrorCode::CandidatePoolTooSmall,
                    std::to_string(pool.size()) + " candidate names for " +
                        std::to_string(clusters.size()) + " clusters at m=" + std::to_string(votes.m));
    }
    CostMatrix cost(clusters.size(), pool.size(), 1.0);
    for (std::size_t r = 0; r < clusters.size(); ++r) {
        for (const auto& cand : votes.clusters[clusters[r]].candidates) {
            const auto col = static_cast<std::size_t>(
                std::lower_bound(pool.begin(), pool.end(), cand.name_id) - pool.begin());
            cost(r, col) = -cand.fraction - kTop1Weight * cand.top1_fraction;
        }
    }
    const auto solved = hungarian(cost);
    std::vector<std::size_t> out(clusters.size());
    for (std::size_t r = 0; r < clusters.size(); ++r) {
        out[r] = pool[solved.column_of_row[r]];
    }
    return out;
}

std::vector<std::size_t> dedup_assign(const VoteTable& votes) {
    std::vector<std::size_t> all(votes.clusters.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return dedup_assign(votes, all);
}

Classifier build_classifier(std::span<const std::size_t> cluster_names, const EmbeddingMatrix& names) {
    if (cluster_names.empty()) {
        throw Error(ErrorCode::InvalidArgument, "classifier needs at least one name");
    }
    std::vector<std::size_t> ids(cluster_names.begin(), cluster_names.end());
    for (auto id : ids) {
        if (id >= names.rows()) {
            throw Error(ErrorCode::InvalidArgument, "name id " + std::to_string(id) + " out of range");
        }
    }
    return {ids, normalize_rows(names.select_rows(ids))};
}

std::vector<std::size_t> Classifier::classify(const EmbeddingMatrix& visual, std::size_t threads) const {
    return zero_shot_assign(visual, weights, threads);
}

NamingResult initial_voting(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                            std::span<const std::size_t> init_clusters, std::size_t k,
                            std::size_t threads) {
    const auto nn = zero_shot_assign(visual, names, threads);
    NamingResult out;
    out.cluster_names = vote_cluster_names(init_clusters, k, nn);
    out.instance_clusters.assign(init_clusters.begin(), init_clusters.end());
    out.instance_names.resize(init_clusters.size());
    for (std::size_t i = 0; i < init_clusters.size(); ++i) {
        out.instance_names[i] = out.cluster_names[init_clusters[i]];
    }
    return out;
}

NamingResult refine_loop(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                         std::span<const std::size_t> init_clusters, std::size_t k,
                         const RefineConfig& cfg, std::span<const std::optional<std::size_t>> pinned) {
    check_dims(visual, names);
    if (init_clusters.size() != visual.rows()) {
        throw Error(ErrorCode::LengthMismatch, "one initial cluster per visual row required");
    }
    if (k == 0) {
        throw Error(ErrorCode::InvalidArgument, "K must be at least 1");
    }
    if (!pinned.empty() && pinned.size() != k) {
        throw Error(ErrorCode::InvalidArgument, "pins must cover all K clusters");
    }
    if (cfg.m == 0) {
        throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
    }
    std::vector<std::optional<std::size_t>> pins(k);
    std::set<std::size_t> pinned_names;
    for (std::size_t c = 0; c < pinned.size(); ++c) {
        pins[c] = pinned[c];
        if (pins[c]) {
            if (*pins[c] >= names.rows()) {
                throw Error(ErrorCode::InvalidArgument, "pinned name out of range");
            }
            if (!pinned_names.insert(*pins[c]).second) {
                throw Error(ErrorCode::InvalidArgument, "pinned names must be distinct");
            }
        }
    }
    std::vector<std::size_t> cluster_of(init_clusters.begin(), init_clusters.end());
    {
        std::vector<std::size_t> sizes(k, 0);
        for (auto c : cluster_of) {
            if (c >= k) {
                throw Error(ErrorCode::InvalidArgument, "initial cluster index >= K");
            }
            ++sizes[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0 && !pins[c]) {
                throw Error(ErrorCode::InvalidArgument,
                            "initial cluster " + std::to_string(c) + " is empty");
            }
        }
    }

    const std::size_t first_m = std::min(cfg.m, names.rows());
    if (cfg.revote_m == 0) {
        throw Error(ErrorCode::InvalidArgument, "revote_m must be at least 1");
    }
    const std::size_t later_m = std::min(cfg.revote_m, names.rows());
    std::size_t m = first_m;
    std::vector<std::vector<std::size_t>> neighbours;
    std::vector<std::size_t> nn;
    if (cfg.linear_assignment) {
        neighbours = nearest_names(visual, names, std::max(first_m, later_m), cfg.threads);
    } else {
        nn = zero_shot_assign(visual, names, cfg.threads);
    }

    NamingResult out;
    std::vector<std::size_t> cluster_names(k, 0);
    std::vector<std::size_t> previous_instance_names;
    const std::size_t rounds = std::max<std::size_t>(cfg.max_refine_iter, 1);

    for (std::size_t round = 1; round <= rounds; ++round) {
        std::vector<std::size_t> sizes(k, 0);
        for (auto c : cluster_of) {
            ++sizes[c];
        }
        std::vector<char> active(k, 0);
        std::vector<std::size_t> voters;
        std::vector<std::size_t> reserved(pinned_names.begin(), pinned_names.end());
        for (std::size_t c = 0; c < k; ++c) {
            if (pins[c]) {
                cluster_names[c] = *pins[c];
            } else if (sizes[c] == 0) {
                reserved.push_back(cluster_names[c]);  // kept from the previous round
            } else {
                active[c] = 1;
                voters.push_back(c);
            }
        }

        if (!voters.empty() && cfg.linear_assignment) {
            if (round > 1) {
                m = later_m;
            }
            std::vector<std::size_t> chosen;
            while (true) {
                if (neighbours.front().size() < m) {
                    neighbours = nearest_names(visual, names, m, cfg.threads);
                }
                const auto table = tally_votes(cluster_of, k, neighbours, m, active, reserved);
                try {
                    chosen = dedup_assign(table, voters);
                    break;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::CandidatePoolTooSmall || m >= names.rows()) {
                        throw;
                    }
                }
                m = std::min(2 * m, names.rows());
            }
            for (std::size_t r = 0; r < voters.size(); ++r) {
                cluster_names[voters[r]] = chosen[r];
            }
        } else if (!voters.empty()) {
            std::vector<std::map<std::size_t, std::size_t>> counts(k);
            for (std::size_t i = 0; i < cluster_of.size(); ++i) {
                if (active[cluster_of[i]]) {
                    ++counts[cluster_of[i]][nn[i]];
                }
            }
            for (auto c : voters) {
                std::size_t best_count = 0;
                for (const auto& [name, count] : counts[c]) {
                    if (count > best_count) {
                        best_count = count;
                        cluster_names[c] = name;
                    }
                }
            }
        }

        const Classifier classifier = build_classifier(cluster_names, names);
        auto next = classifier.classify(visual, cfg.threads);

        RefineIteration rec;
        rec.cluster_names = cluster_names;
        rec.m = cfg.linear_assignment ? m : 1;
        std::vector<std::size_t> instance_names(next.size());
        for (std::size_t i = 0; i < next.size(); ++i) {
            if (next[i] != cluster_of[i]) {
                ++rec.change_count;
            }
            rec.energy += dot(visual.row(i), classifier.weights.row(next[i]));
            instance_names[i] = cluster_names[next[i]];
        }
        out.trace.push_back(rec);
        out.iterations = round;

        const bool same_partition = rec.change_count == 0;
        const bool same_names = instance_names == previous_instance_names;
        cluster_of = std::move(next);
        previous_instance_names = std::move(instance_names);
        if (same_partition || same_names) {
            out.converged = true;
            break;
        }
    }

    out.cluster_names = cluster_names;
    out.instance_clusters = cluster_of;
    out.instance_names = previous_instance_names;
    return out;
}

std::vector<std::optional<std::size_t>> partially_supervised_pin(const ClusterAssignment& assign,
                                                                 std::span<const InstanceMeta> meta,
                                                                 const Vocabulary& vocab) {
    for (const auto& m : meta) {
        if (!m.labeled) {
            continue;
        }
        if (!m.gt_name_id || *m.gt_name_id >= vocab.size()) {
            throw Error(ErrorCode::MissingGroundTruthName,
                        "labeled instance \"" + m.instance_id + "\" has no usable gt_name_id");
        }
        if (std::find(assign.reserved.begin(), assign.reserved.end(), *m.gt_name_id) ==
            assign.reserved.end()) {
            throw Error(ErrorCode::MissingGroundTruthName,
                        "labeled class " + std::to_string(*m.gt_name_id) +
                            " has no reserved cluster; cluster with sskm or csskm");
        }
    }
    if (assign.reserved.size() > assign.k) {
        throw Error(ErrorCode::InvalidArgument, "more reserved clusters than K");
    }
    std::vector<std::optional<std::size_t>> pins(assign.k);
    for (std::size_t c = 0; c < assign.reserved.size(); ++c) {
        if (assign.reserved[c] >= vocab.size()) {
            throw Error(ErrorCode::MissingGroundTruthName,
                        "reserved cluster " + std::to_string(c) + " names class " +
                            std::to_string(assign.reserved[c]) + " outside the vocabulary");
        }
        pins[c] = assign.reserved[c];
    }
    return pins;
}

}  // namespace scd
