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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "scd/embedding_store.hpp"
#include "scd/solvers.hpp"

namespace scd {

struct ClusterConfig {
    std::size_t k = 1;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    double tol = 1e-6;
    std::size_t restarts = 10;
    /// Minimum cluster size tau for css_kmeans; nullopt means floor(0.5 * M / K).
    std::optional<std::size_t> min_size;
    std::size_t threads = 1;
};

struct ClusterAssignment {
    std::vector<std::size_t> assignment;
    std::size_t k = 0;
    std::size_t dim = 0;
    /// K x dim, row-major, 64-bit.
    std::vector<double> centroids;
    double objective = 0.0;
    std::size_t iterations_run = 0;
    /// Objective after each assignment step of the winning restart.
    std::vector<double> objective_trace;
    /// For the semi-supervised variants: gt_name_id owning each reserved
    /// cluster, in cluster-id order (cluster c < reserved.size()).
    std::vector<std::size_t> reserved;
    /// Effective minimum size (css_kmeans only).
    std::optional<std::size_t> min_size;

    [[nodiscard]] std::span<const double> centroid(std::size_t c) const {
        return {centroids.data() + c * dim, dim};
    }
    [[nodiscard]] std::vector<std::size_t> cluster_sizes() const;
};

/// Squared Euclidean distance, double accumulation.
double squared_distance(std::span<const float> point, std::span<const double> centroid);

/// Sum of squared distances of each point to its assigned centroid.
double clustering_objective(const EmbeddingMatrix& z, const ClusterAssignment& a);

/// Lloyd's algorithm with k-means++ seeding, best of cfg.restarts by
/// objective. Restart r draws from Pcg32(seed + r). Empty clusters are
/// reseeded with the point farthest from its centroid.
ClusterAssignment kmeans(const EmbeddingMatrix& z, const ClusterConfig& cfg);

/// Observer invoked after every assignment step (restart, iteration, labels).
using IterationObserver =
    std::function<void(std::size_t restart, std::size_t iteration, std::span<const std::size_t>)>;

/// Semi-supervised k-means: labeled instances of class c are pinned to the
/// cluster reserved for c (reserved ids follow ascending gt_name_id);
/// unlabeled instances go to their nearest centroid.
ClusterAssignment ss_kmeans(const EmbeddingMatrix& z, std::span<const InstanceMeta> meta,
                            const ClusterConfig& cfg, const IterationObserver& observer = {});

/// ss_kmeans whose unlabeled assignment step is a minimum cost flow that
/// keeps every cluster (labeled + unlabeled members) at size >= tau.
ClusterAssignment css_kmeans(const EmbeddingMatrix& z, std::span<const InstanceMeta> meta,
                             const ClusterConfig& cfg, const IterationObserver& observer = {});

/// Network for one constrained assignment step. Nodes: one per point
/// (supply 1), one per cluster, then a sink (supply -points). Point->cluster
/// arcs (capacity 1, cost = squared distance) come first in row-major
/// order; cluster->sink arcs carry lower bound deficits[c].
FlowNetwork build_flow_network(const CostMatrix& distances, std::span<const std::size_t> deficits);

/// Reads the point->cluster choice back out of a solved build_flow_network.
std::vector<std::size_t> decode_flow_assignment(const FlowSolution& sol, std::size_t points,
                                                std::size_t clusters);

/// Minimum total squared distance assignment of the rows of `distances`
/// such that cluster c receives at least deficits[c] of them.
std::vector<std::size_t> constrained_assignment(const CostMatrix& distances,
                                                std::span<const std::size_t> deficits);

/// floor(0.5 * M / K).
std::size_t default_min_size(std::size_t instances, std::size_t k);

}  // namespace scd
