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

#include "scd/clustering.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "scd/error.hpp"
#include "scd/parallel.hpp"
#include "scd/random.hpp"

namespace scd {

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto c : assignment) {
        ++sizes[c];
    }
    return sizes;
}

double squared_distance(std::span<const float> point, std::span<const double> centroid) {
    double s = 0.0;
    for (std::size_t d = 0; d < point.size(); ++d) {
        const double diff = static_cast<double>(point[d]) - centroid[d];
        s += diff * diff;
    }
    return s;
}

double clustering_objective(const EmbeddingMatrix& z, const ClusterAssignment& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        total += squared_distance(z.row(i), a.centroid(a.assignment[i]));
    }
    return total;
}

std::size_t default_min_size(std::size_t instances, std::size_t k) {
    return k == 0 ? 0 : instances / (2 * k);
}

FlowNetwork build_flow_network(const CostMatrix& distances, std::span<const std::size_t> deficits) {
    const std::size_t points = distances.rows();
    const std::size_t clusters = distances.cols();
    if (deficits.size() != clusters) {
        throw Error(ErrorCode::InvalidArgument, "one deficit per cluster required");
    }
    FlowNetwork net;
    for (std::size_t i = 0; i < points; ++i) {
        net.add_node(1);
    }
    for (std::size_t c = 0; c < clusters; ++c) {
        net.add_node(0);
    }
    const std::size_t sink = net.add_node(-static_cast<std::int64_t>(points));
    for (std::size_t i = 0; i < points; ++i) {
        for (std::size_t c = 0; c < clusters; ++c) {
            net.add_arc(i, points + c, 1, distances(i, c));
        }
    }
    for (std::size_t c = 0; c < clusters; ++c) {
        net.add_arc(points + c, sink, static_cast<std::int64_t>(points), 0.0,
                    static_cast<std::int64_t>(deficits[c]));
    }
    return net;
}

std::vector<std::size_t> decode_flow_assignment(const FlowSolution& sol, std::size_t points,
                                                std::size_t clusters) {
    std::vector<std::size_t> out(points, clusters);
    for (std::size_t i = 0; i < points; ++i) {
        for (std::size_t c = 0; c < clusters; ++c) {
            if (sol.flow[i * clusters + c] > 0) {
                out[i] = c;
            }
        }
        if (out[i] == clusters) {
            throw Error(ErrorCode::InvalidNetwork, "point " + std::to_string(i) + " carries no flow");
        }
    }
    return out;
}

std::vector<std::size_t> constrained_assignment(const CostMatrix& distances,
                                                std::span<const std::size_t> deficits) {
    std::size_t needed = 0;
    for (auto d : deficits) {
        needed += d;
    }
    if (needed > distances.rows()) {
        throw Error(ErrorCode::InfeasibleSizeConstraint,
                    "cluster minimums need " + std::to_string(needed) + " points but only " +
                        std::to_string(distances.rows()) + " are free");
    }
    const auto net = build_flow_network(distances, deficits);
    const auto sol = solve_mcf(net);
    return decode_flow_assignment(sol, distances.rows(), distances.cols());
}

namespace {

// Everything the three k-means variants share. `fixed[i]` is the reserved
// cluster of a labeled point; free points are assigned each iteration.
struct Problem {
    const EmbeddingMatrix& z;
    std::size_t k;
    std::vector<std::optional<std::size_t>> fixed;
    std::vector<std::size_t> reserved;                   // class per reserved cluster
    std::vector<std::vector<std::size_t>> reserved_rows;  // labeled rows per reserved cluster
    std::vector<std::size_t> free_rows;
    std::optional<std::size_t> min_size;  // constrained assignment when set
};

using Centroids = std::vector<double>;

void k_means_pp_fill(const Problem& p, Centroids& centroids, std::size_t already, Pcg32& rng) {
    const std::size_t dim = p.z.dim();
    const auto& rows = p.free_rows;
    std::vector<double> best(rows.size(), std::numeric_limits<double>::infinity());
    auto absorb = [&](std::size_t c) {
        const std::span<const double> cen(centroids.data() + c * dim, dim);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            best[r] = std::min(best[r], squared_distance(p.z.row(rows[r]), cen));
        }
    };
    auto place = [&](std::size_t c, std::size_t row) {
        const auto src = p.z.row(row);
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[c * dim + d] = src[d];
        }
        absorb(c);
    };
    for (std::size_t c = 0; c < already; ++c) {
        absorb(c);
    }
    for (std::size_t c = already; c < p.k; ++c) {
        if (c == 0) {
            place(c, rows[rng.below(rows.size())]);
            continue;
        }
        double total = 0.0;
        for (double b : best) {
            total += b;
        }
        std::size_t pick = rows.size();
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                cum += best[r];
                if (best[r] > 0.0 && cum > target) {
                    pick = r;
                    break;
                }
            }
            if (pick == rows.size()) {
                // Rounding left target past the last positive weight.
                for (std::size_t r = rows.size(); r-- > 0;) {
                    if (best[r] > 0.0) {
                        pick = r;
                        break;
                    }
                }
            }
        } else {
            pick = rng.below(rows.size());
        }
        place(c, rows[pick]);
    }
}

Centroids initial_centroids(const Problem& p, Pcg32& rng) {
    const std::size_t dim = p.z.dim();
    Centroids centroids(p.k * dim, 0.0);
    for (std::size_t c = 0; c < p.reserved.size(); ++c) {
        const auto& members = p.reserved_rows[c];
        for (auto row : members) {
            const auto src = p.z.row(row);
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[c * dim + d] += src[d];
            }
        }
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[c * dim + d] /= static_cast<double>(members.size());
        }
    }
    k_means_pp_fill(p, centroids, p.reserved.size(), rng);
    return centroids;
}

void update_means(const Problem& p, const std::vector<std::size_t>& assign, Centroids& centroids) {
    const std::size_t dim = p.z.dim();
    Centroids sums(p.k * dim, 0.0);
    std::vector<std::size_t> counts(p.k, 0);
    // Fixed index order keeps the sums independent of the worker count.
    for (std::size_t i = 0; i < assign.size(); ++i) {
        const auto src = p.z.row(i);
        const std::size_t c = assign[i];
        for (std::size_t d = 0; d < dim; ++d) {
            sums[c * dim + d] += src[d];
        }
        ++counts[c];
    }
    for (std::size_t c = 0; c < p.k; ++c) {
        if (counts[c] == 0) {
            continue;  // repaired before the next use
        }
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
        }
    }
}

std::vector<std::size_t> assign_step(const Problem& p, const Centroids& centroids,
                                     std::size_t threads) {
    const std::size_t dim = p.z.dim();
    const std::size_t m = p.z.rows();
    std::vector<std::size_t> assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (p.fixed[i]) {
            assign[i] = *p.fixed[i];
        }
    }
    const auto& rows = p.free_rows;
    CostMatrix dist(rows.size(), p.k);
    parallel_for(rows.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto point = p.z.row(rows[r]);
            for (std::size_t c = 0; c < p.k; ++c) {
                dist(r, c) = squared_distance(point, {centroids.data() + c * dim, dim});
            }
        }
    });
    if (p.min_size) {
        std::vector<std::size_t> labeled(p.k, 0);
        for (std::size_t c = 0; c < p.reserved.size(); ++c) {
            labeled[c] = p.reserved_rows[c].size();
        }
        std::vector<std::size_t> deficits(p.k, 0);
        for (std::size_t c = 0; c < p.k; ++c) {
            deficits[c] = *p.min_size > labeled[c] ? *p.min_size - labeled[c] : 0;
        }
        const auto chosen = constrained_assignment(dist, deficits);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            assign[rows[r]] = chosen[r];
        }
        return assign;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.k; ++c) {
            if (dist(r, c) < dist(r, best)) {
                best = c;
            }
        }
        assign[rows[r]] = best;
    }
    return assign;
}

// Moves the free point farthest from its centroid (taken from a cluster of
// size >= 2) into each empty cluster and centres the cluster on it.
void repair_empty(const Problem& p, std::vector<std::size_t>& assign, Centroids& centroids) {
    const std::size_t dim = p.z.dim();
    std::vector<std::size_t> sizes(p.k, 0);
    for (auto c : assign) {
        ++sizes[c];
    }
    for (std::size_t c = 0; c < p.k; ++c) {
        if (sizes[c] != 0) {
            continue;
        }
        std::size_t pick = p.z.rows();
        double far = -1.0;
        for (auto row : p.free_rows) {
            const std::size_t owner = assign[row];
            if (sizes[owner] < 2) {
                continue;
            }
            const double d = squared_distance(p.z.row(row), {centroids.data() + owner * dim, dim});
            if (d > far) {
                far = d;
                pick = row;
            }
        }
        if (pick == p.z.rows()) {
            throw Error(ErrorCode::KTooLarge, "no point available to refill empty cluster " +
                                                  std::to_string(c));
        }
        --sizes[assign[pick]];
        assign[pick] = c;
        ++sizes[c];
        const auto src = p.z.row(pick);
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[c * dim + d] = src[d];
        }
    }
}

double objective_of(const Problem& p, const std::vector<std::size_t>& assign,
                    const Centroids& centroids) {
    const std::size_t dim = p.z.dim();
    double total = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
        total += squared_distance(p.z.row(i), {centroids.data() + assign[i] * dim, dim});
    }
    return total;
}

ClusterAssignment run_once(const Problem& p, const ClusterConfig& cfg, std::size_t restart,
                           const IterationObserver& observer) {
    Pcg32 rng(cfg.seed + restart);
    Centroids centroids = initial_centroids(p, rng);

    auto assign = assign_step(p, centroids, cfg.threads);
    repair_empty(p, assign, centroids);
    double objective = objective_of(p, assign, centroids);
    ClusterAssignment out;
    out.objective_trace.push_back(objective);
    if (observer) {
        observer(restart, 0, assign);
    }

    std::size_t iterations = 0;
    while (iterations < cfg.max_iter) {
        update_means(p, assign, centroids);
        auto next = assign_step(p, centroids, cfg.threads);
        repair_empty(p, next, centroids);
        const double next_objective = objective_of(p, next, centroids);
        ++iterations;
        out.objective_trace.push_back(next_objective);
        if (observer) {
            observer(restart, iterations, next);
        }
        const bool unchanged = next == assign;
        const double previous = objective;
        assign = std::move(next);
        objective = next_objective;
        if (unchanged || previous <= 0.0 || (previous - objective) / previous < cfg.tol) {
            break;
        }
    }
    update_means(p, assign, centroids);

    out.assignment = std::move(assign);
    out.k = p.k;
    out.dim = p.z.dim();
    out.centroids = std::move(centroids);
    out.objective = objective_of(p, out.assignment, out.centroids);
    out.iterations_run = iterations;
    out.reserved = p.reserved;
    out.min_size = p.min_size;
    return out;
}

ClusterAssignment best_of_restarts(const Problem& p, const ClusterConfig& cfg,
                                   const IterationObserver& observer) {
    const std::size_t restarts = std::max<std::size_t>(cfg.restarts, 1);
    std::optional<ClusterAssignment> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto candidate = run_once(p, cfg, r, observer);
        if (!best || candidate.objective < best->objective) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

void check_k(const EmbeddingMatrix& z, const ClusterConfig& cfg) {
    if (cfg.k == 0) {
        throw Error(ErrorCode::InvalidArgument, "K must be at least 1");
    }
    if (z.rows() < cfg.k) {
        throw Error(ErrorCode::KTooLarge, "K=" + std::to_string(cfg.k) + " exceeds the " +
                                              std::to_string(z.rows()) + " instances");
    }
}

Problem semi_supervised_problem(const EmbeddingMatrix& z, std::span<const InstanceMeta> meta,
                                const ClusterConfig& cfg) {
    check_k(z, cfg);
    validate_meta(meta, z.rows());
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (const auto& m : meta) {
        if (m.labeled) {
            by_class[*m.gt_name_id].push_back(m.row);
        }
    }
    if (by_class.size() > cfg.k) {
        throw Error(ErrorCode::TooManyLabeledClasses,
                    std::to_string(by_class.size()) + " labeled classes for K=" + std::to_string(cfg.k));
    }
    Problem p{z, cfg.k, std::vector<std::optional<std::size_t>>(z.rows()), {}, {}, {}, std::nullopt};
    for (auto& [cls, rows] : by_class) {
        const std::size_t cluster = p.reserved.size();
        p.reserved.push_back(cls);
        std::sort(rows.begin(), rows.end());
        for (auto row : rows) {
            p.fixed[row] = cluster;
        }
        p.reserved_rows.push_back(rows);
    }
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (!p.fixed[i]) {
            p.free_rows.push_back(i);
        }
    }
    if (p.free_rows.size() < cfg.k - p.reserved.size()) {
        throw Error(ErrorCode::KTooLarge, std::to_string(cfg.k - p.reserved.size()) +
                                              " unreserved clusters but only " +
                                              std::to_string(p.free_rows.size()) +
                                              " unlabeled instances");
    }
    return p;
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& z, const ClusterConfig& cfg) {
    check_k(z, cfg);
    Problem p{z, cfg.k, std::vector<std::optional<std::size_t>>(z.rows()), {}, {}, {}, std::nullopt};
    p.free_rows.resize(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        p.free_rows[i] = i;
    }
    return best_of_restarts(p, cfg, {});
}

ClusterAssignment ss_kmeans(const EmbeddingMatrix& z, std::span<const InstanceMeta> meta,
                            const ClusterConfig& cfg, const IterationObserver& observer) {
    const Problem p = semi_supervised_problem(z, meta, cfg);
    return best_of_restarts(p, cfg, observer);
}

ClusterAssignment css_kmeans(const EmbeddingMatrix& z, std::span<const InstanceMeta> meta,
                             const ClusterConfig& cfg, const IterationObserver& observer) {
    const std::size_t m = z.rows();
    const std::size_t tau = cfg.min_size.value_or(default_min_size(m, cfg.k));
    if (cfg.k == 0 || tau * cfg.k > m) {
        throw Error(ErrorCode::InfeasibleSizeConstraint,
                    "tau=" + std::to_string(tau) + " with K=" + std::to_string(cfg.k) +
                        " needs tau*K <= M but M=" + std::to_string(m));
    }
    Problem p = semi_supervised_problem(z, meta, cfg);
    std::size_t needed = 0;
    for (std::size_t c = 0; c < cfg.k; ++c) {
        const std::size_t labeled = c < p.reserved.size() ? p.reserved_rows[c].size() : 0;
        needed += tau > labeled ? tau - labeled : 0;
    }
    if (needed > p.free_rows.size()) {
        throw Error(ErrorCode::InfeasibleSizeConstraint,
                    "tau=" + std::to_string(tau) + " with K=" + std::to_string(cfg.k) + " and M=" +
                        std::to_string(m) + " needs " + std::to_string(needed) +
                        " unlabeled instances but only " + std::to_string(p.free_rows.size()) +
                        " exist");
    }
    p.min_size = tau;
    return best_of_restarts(p, cfg, observer);
}

}  // namespace scd
