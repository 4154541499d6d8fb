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
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "scd/clustering.hpp"
#include "scd/embedding_store.hpp"

namespace scd {

/// Nearest name per instance by dot product; ties go to the smallest index.
std::vector<std::size_t> zero_shot_assign(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                                          std::size_t threads = 1);

/// The m best names per instance, best first (score desc, index asc).
std::vector<std::vector<std::size_t>> nearest_names(const EmbeddingMatrix& visual,
                                                    const EmbeddingMatrix& names, std::size_t m,
                                                    std::size_t threads = 1);

/// Modal name of each cluster; ties go to the smallest name id. Every
/// cluster in [0, k) must be non-empty.
std::vector<std::size_t> vote_cluster_names(std::span<const std::size_t> cluster_of, std::size_t k,
                                            std::span<const std::size_t> nn);

struct Candidate {
    std::size_t name_id = 0;
    /// Share of the cluster having this name among its m nearest names.
    double fraction = 0.0;
    /// Share of the cluster whose single nearest name is this one.
    double top1_fraction = 0.0;
};

struct ClusterVotes {
    std::size_t size = 0;
    std::map<std::size_t, std::size_t> counts;      // name -> instances voting it in m-NN
    std::map<std::size_t, std::size_t> top1_counts;  // name -> instances voting it first
    /// Up to m entries by (fraction desc, top1_fraction desc, name asc).
    std::vector<Candidate> candidates;
};

struct VoteTable {
    std::size_t m = 0;
    std::vector<ClusterVotes> clusters;
};

/// Tallies m-NN votes per cluster from precomputed neighbour lists. Clusters
/// with `active[c] == false` are left empty; names in `excluded` never
/// appear among the candidates (their votes are still counted).
VoteTable tally_votes(std::span<const std::size_t> cluster_of, std::size_t k,
                      const std::vector<std::vector<std::size_t>>& neighbours, std::size_t m,
                      std::span<const char> active = {}, std::span<const std::size_t> excluded = {});

/// tally_votes over the m nearest names of each instance.
VoteTable topm_vote(std::span<const std::size_t> cluster_of, std::size_t k,
                    const EmbeddingMatrix& visual, const EmbeddingMatrix& names, std::size_t m,
                    std::size_t threads = 1);

/// One distinct name per listed cluster maximizing total vote fraction:
/// Hungarian over clusters x candidate pool with cost -fraction, +1 for
/// names outside a cluster's list. Equal fractions prefer the higher
/// first-choice share. Throws CandidatePoolTooSmall.
std::vector<std::size_t> dedup_assign(const VoteTable& votes, std::span<const std::size_t> clusters);
std::vector<std::size_t> dedup_assign(const VoteTable& votes);

/// Zero-shot linear classifier: row c is the unit embedding of cluster c's name.
struct Classifier {
    std::vector<std::size_t> names;
    EmbeddingMatrix weights;

    /// Row index with the highest dot product; ties go to the smallest row.
    [[nodiscard]] std::vector<std::size_t> classify(const EmbeddingMatrix& visual,
                                                    std::size_t threads = 1) const;
};

Classifier build_classifier(std::span<const std::size_t> cluster_names, const EmbeddingMatrix& names);

struct RefineConfig {
    std::size_t m = 10;
    /// Nearest names per instance in the votes of rounds after the first.
    /// Set equal to m to keep top-m voting throughout.
    std::size_t revote_m = 1;
    std::size_t max_refine_iter = 50;
    /// false: plain 1-NN modal voting each round, duplicates allowed.
    bool linear_assignment = true;
    std::size_t threads = 1;
};

struct RefineIteration {
    std::vector<std::size_t> cluster_names;
    /// Instances whose cluster changed in this round's reassignment.
    std::size_t change_count = 0;
    /// m actually used after any pool expansion.
    std::size_t m = 0;
    /// Sum over instances of their similarity to the assigned classifier row.
    double energy = 0.0;
};

struct NamingResult {
    std::vector<std::size_t> cluster_names;
    std::vector<std::size_t> instance_names;
    std::vector<std::size_t> instance_clusters;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<RefineIteration> trace;
};

/// Alternates cluster naming and classifier reassignment until the partition
/// stops changing (or instance names repeat), up to max_refine_iter rounds.
/// The first round votes over each instance's m nearest names, later rounds
/// over its revote_m nearest; m doubles within a round while the candidate
/// pool is smaller than the number of voting clusters.
/// Pinned clusters keep their name and do not vote; a cluster that empties
/// keeps its previous name. Names stay pairwise distinct when
/// linear_assignment is on.
NamingResult refine_loop(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                         std::span<const std::size_t> init_clusters, std::size_t k,
                         const RefineConfig& cfg,
                         std::span<const std::optional<std::size_t>> pinned = {});

/// Cluster-level naming without refinement: vote_cluster_names, every
/// instance named after its cluster.
NamingResult initial_voting(const EmbeddingMatrix& visual, const EmbeddingMatrix& names,
                            std::span<const std::size_t> init_clusters, std::size_t k,
                            std::size_t threads = 1);

/// Pins each reserved cluster of a semi-supervised clustering to the ground
/// truth name of its labeled class.
std::vector<std::optional<std::size_t>> partially_supervised_pin(const ClusterAssignment& assign,
                                                                 std::span<const InstanceMeta> meta,
                                                                 const Vocabulary& vocab);

}  // namespace scd
