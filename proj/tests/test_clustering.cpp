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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "scd/clustering.hpp"
#include "scd/random.hpp"
#include "test_util.hpp"

using namespace scd;
using scd::test::error_code_of;
using scd::test::error_message_of;

namespace {

EmbeddingMatrix matrix(std::size_t dim, std::vector<float> data) {
    const std::size_t rows = data.size() / dim;
    return EmbeddingMatrix(rows, dim, std::move(data));
}

/// Sum of squared deviations from per-cluster means, recomputed from scratch.
double partition_cost(const EmbeddingMatrix& z, const std::vector<std::size_t>& labels, std::size_t k) {
    std::vector<double> sum(k * z.dim(), 0.0);
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        count[labels[i]] += 1.0;
        for (std::size_t d = 0; d < z.dim(); ++d) {
            sum[labels[i] * z.dim() + d] += z.row(i)[d];
        }
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t d = 0; d < z.dim(); ++d) {
            const double diff = z.row(i)[d] - sum[labels[i] * z.dim() + d] / count[labels[i]];
            cost += diff * diff;
        }
    }
    return cost;
}

std::vector<InstanceMeta> meta_for(std::size_t rows, const std::vector<std::optional<std::size_t>>& labels) {
    std::vector<InstanceMeta> meta;
    for (std::size_t i = 0; i < rows; ++i) {
        InstanceMeta m{"i" + std::to_string(i), i, std::nullopt, false};
        if (i < labels.size() && labels[i]) {
            m.gt_name_id = labels[i];
            m.labeled = true;
        }
        meta.push_back(m);
    }
    return meta;
}

/// Checks Lloyd's fixed point: centroids are member means and every free
/// point sits at a nearest centroid.
void check_lloyd_fixed_point(const EmbeddingMatrix& z, const ClusterAssignment& a,
                             const std::vector<bool>& pinned) {
    for (std::size_t c = 0; c < a.k; ++c) {
        std::vector<double> mean(z.dim(), 0.0);
        std::size_t n = 0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            if (a.assignment[i] == c) {
                ++n;
                for (std::size_t d = 0; d < z.dim(); ++d) {
                    mean[d] += z.row(i)[d];
                }
            }
        }
        REQUIRE(n > 0);
        for (std::size_t d = 0; d < z.dim(); ++d) {
            CHECK(a.centroid(c)[d] == doctest::Approx(mean[d] / static_cast<double>(n)).epsilon(1e-9));
        }
    }
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (pinned[i]) {
            continue;
        }
        const double own = squared_distance(z.row(i), a.centroid(a.assignment[i]));
        for (std::size_t c = 0; c < a.k; ++c) {
            CHECK(own <= squared_distance(z.row(i), a.centroid(c)) + 1e-9);
        }
    }
}

/// Cheapest assignment of rows to clusters with cluster c receiving at least
/// deficits[c] rows, by enumerating all K^n labelings.
double brute_force_constrained(const CostMatrix& dist, const std::vector<std::size_t>& deficits) {
    const std::size_t n = dist.rows();
    const std::size_t k = dist.cols();
    std::vector<std::size_t> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<std::size_t> sizes(k, 0);
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ++sizes[label[i]];
            cost += dist(i, label[i]);
        }
        bool ok = true;
        for (std::size_t c = 0; c < k; ++c) {
            ok = ok && sizes[c] >= deficits[c];
        }
        if (ok) {
            best = std::min(best, cost);
        }
        std::size_t pos = 0;
        while (pos < n && ++label[pos] == k) {
            label[pos++] = 0;
        }
        if (pos == n) {
            break;
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("clustering") {
    TEST_CASE("default minimum size") {
        CHECK(default_min_size(100, 10) == 5);
        CHECK(default_min_size(10, 3) == 1);
        CHECK(default_min_size(5, 10) == 0);
    }

    TEST_CASE("squared distance") {
        const std::vector<float> p = {1.0F, 2.0F};
        const std::vector<double> c = {4.0, -2.0};
        CHECK(squared_distance(p, c) == 25.0);
    }

    TEST_CASE("kmeans with K=1 puts the centroid at the mean") {
        Pcg32 rng(5);
        const auto z = scd::test::random_matrix(rng, 20, 3);
        ClusterConfig cfg;
        cfg.k = 1;
        const auto a = kmeans(z, cfg);
        CHECK(std::all_of(a.assignment.begin(), a.assignment.end(), [](std::size_t c) { return c == 0; }));
        CHECK(a.objective == doctest::Approx(partition_cost(z, a.assignment, 1)).epsilon(1e-9));
        CHECK(a.cluster_sizes() == std::vector<std::size_t>{20});
    }

    TEST_CASE("kmeans separates duplicated points with zero objective") {
        const auto z = matrix(2, {0, 0, 5, 5, 0, 0, 5, 5});
        ClusterConfig cfg;
        cfg.k = 2;
        const auto a = kmeans(z, cfg);
        CHECK(a.objective == 0.0);
        CHECK(a.assignment[0] == a.assignment[2]);
        CHECK(a.assignment[1] == a.assignment[3]);
        CHECK(a.assignment[0] != a.assignment[1]);
    }

    TEST_CASE("kmeans restarts reach the best of all 31 bipartitions of 6 points") {
        Pcg32 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const auto z = scd::test::random_matrix(rng, 6, 2);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t mask = 1; mask < 32; ++mask) {
                std::vector<std::size_t> labels(6, 0);
                for (std::size_t i = 0; i < 5; ++i) {
                    labels[i] = (mask >> i) & 1U;
                }
                best = std::min(best, partition_cost(z, labels, 2));
            }
            ClusterConfig cfg;
            cfg.k = 2;
            cfg.seed = static_cast<std::uint64_t>(trial);
            cfg.restarts = 20;
            const auto a = kmeans(z, cfg);
            CHECK(a.objective >= best - 1e-9);
            CHECK(a.objective == doctest::Approx(partition_cost(z, a.assignment, 2)).epsilon(1e-9));
            check_lloyd_fixed_point(z, a, std::vector<bool>(6, false));
            // On six points twenty restarts virtually always find the optimum.
            CHECK(a.objective == doctest::Approx(best).epsilon(1e-9));
        }
    }

    TEST_CASE("kmeans objective trace never increases and seeds are reproducible") {
        Pcg32 rng(3);
        const auto z = scd::test::random_matrix(rng, 60, 4);
        ClusterConfig cfg;
        cfg.k = 4;
        cfg.seed = 9;
        const auto a = kmeans(z, cfg);
        for (std::size_t i = 1; i < a.objective_trace.size(); ++i) {
            CHECK(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-9);
        }
        cfg.threads = 4;
        const auto b = kmeans(z, cfg);
        CHECK(a.assignment == b.assignment);
        CHECK(a.objective == b.objective);
        CHECK(a.centroids == b.centroids);
    }

    TEST_CASE("kmeans K errors") {
        const auto z = matrix(1, {0, 1, 2});
        ClusterConfig cfg;
        cfg.k = 4;
        CHECK(error_code_of([&] { (void)kmeans(z, cfg); }) == ErrorCode::KTooLarge);
        cfg.k = 0;
        CHECK(error_code_of([&] { (void)kmeans(z, cfg); }) == ErrorCode::InvalidArgument);
    }

    TEST_CASE("ss_kmeans pins labeled instances to clusters reserved in class order") {
        // Class 7 labeled near x=10, class 2 labeled near x=0, one free blob at x=20.
        const auto z = matrix(1, {10, 0, 20, 0.5F, 10.5F, 20.5F, 1, 11, 21, 19.5F});
        const auto meta = meta_for(10, {7, 2, std::nullopt, std::nullopt, std::nullopt});
        ClusterConfig cfg;
        cfg.k = 3;
        const auto a = ss_kmeans(z, meta, cfg);
        CHECK(a.reserved == std::vector<std::size_t>{2, 7});
        CHECK(a.assignment[1] == 0);
        CHECK(a.assignment[0] == 1);
        CHECK(a.assignment[3] == 0);
        CHECK(a.assignment[6] == 0);
        CHECK(a.assignment[4] == 1);
        CHECK(a.assignment[7] == 1);
        for (std::size_t i : {2, 5, 8, 9}) {
            CHECK(a.assignment[i] == 2);
        }
    }

    TEST_CASE("ss_kmeans converges to a constrained Lloyd fixed point") {
        Pcg32 rng(12);
        const auto z = scd::test::random_matrix(rng, 12, 2);
        const auto meta = meta_for(12, {0, 0, 1, 1, 0});
        ClusterConfig cfg;
        cfg.k = 3;
        cfg.seed = 4;
        const auto a = ss_kmeans(z, meta, cfg);
        std::vector<bool> pinned(12, false);
        for (std::size_t i = 0; i < 5; ++i) {
            pinned[i] = true;
        }
        CHECK(a.assignment[0] == 0);
        CHECK(a.assignment[1] == 0);
        CHECK(a.assignment[4] == 0);
        CHECK(a.assignment[2] == 1);
        CHECK(a.assignment[3] == 1);
        check_lloyd_fixed_point(z, a, pinned);
    }

    TEST_CASE("ss_kmeans errors") {
        const auto z = matrix(1, {0, 1, 2, 3});
        ClusterConfig cfg;
        cfg.k = 2;
        CHECK(error_code_of([&] { (void)ss_kmeans(z, meta_for(4, {0, 1, 2}), cfg); }) ==
              ErrorCode::TooManyLabeledClasses);
        cfg.k = 3;
        CHECK(error_code_of([&] { (void)ss_kmeans(z, meta_for(4, {0, 0, 0}), cfg); }) == ErrorCode::KTooLarge);
        auto bad = meta_for(4, {});
        bad[0].labeled = true;
        CHECK(error_code_of([&] { (void)ss_kmeans(z, bad, cfg); }) == ErrorCode::InvalidMeta);
    }

    TEST_CASE("observer sees every assignment step") {
        Pcg32 rng(8);
        const auto z = scd::test::random_matrix(rng, 30, 2);
        ClusterConfig cfg;
        cfg.k = 3;
        cfg.restarts = 2;
        std::size_t calls = 0;
        std::set<std::size_t> restarts;
        const auto a = ss_kmeans(z, meta_for(30, {}), cfg, [&](std::size_t r, std::size_t, auto labels) {
            ++calls;
            restarts.insert(r);
            CHECK(labels.size() == 30);
        });
        CHECK(restarts == std::set<std::size_t>{0, 1});
        CHECK(calls >= 2 * 1);
        CHECK(a.assignment.size() == 30);
    }

    TEST_CASE("build_flow_network layout") {
        const CostMatrix d(2, 3, {1, 2, 3, 4, 5, 6});
        const std::vector<std::size_t> deficits = {0, 1, 0};
        const auto net = build_flow_network(d, deficits);
        CHECK(net.num_nodes == 6);
        CHECK(net.supply == std::vector<std::int64_t>{1, 1, 0, 0, 0, -2});
        REQUIRE(net.arcs.size() == 9);
        CHECK(net.arcs[4].from == 1);
        CHECK(net.arcs[4].to == 3);
        CHECK(net.arcs[4].cost == 5.0);
        CHECK(net.arcs[4].capacity == 1);
        CHECK(net.arcs[7].from == 3);
        CHECK(net.arcs[7].to == 5);
        CHECK(net.arcs[7].lower_bound == 1);
        CHECK(net.arcs[6].lower_bound == 0);
        CHECK(net.arcs[7].capacity == 2);
        net.validate();
        CHECK(error_code_of([&] { (void)build_flow_network(d, std::vector<std::size_t>{1}); }) ==
              ErrorCode::InvalidArgument);
    }

    TEST_CASE("constrained_assignment equals enumeration with tau=2 on 5 points") {
        Pcg32 rng(21);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t k = 2;
            CostMatrix d(5, k);
            for (std::size_t i = 0; i < 5; ++i) {
                for (std::size_t c = 0; c < k; ++c) {
                    d(i, c) = rng.uniform() * 4.0;
                }
            }
            const std::vector<std::size_t> deficits = {2, 2};
            const auto chosen = constrained_assignment(d, deficits);
            std::vector<std::size_t> sizes(k, 0);
            double cost = 0.0;
            for (std::size_t i = 0; i < 5; ++i) {
                ++sizes[chosen[i]];
                cost += d(i, chosen[i]);
            }
            CHECK(sizes[0] >= 2);
            CHECK(sizes[1] >= 2);
            CHECK(cost == doctest::Approx(brute_force_constrained(d, deficits)).epsilon(1e-12));
        }
    }

    TEST_CASE("constrained_assignment equals enumeration on random deficits") {
        Pcg32 rng(22);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + rng.below(7);
            const std::size_t k = 1 + rng.below(3);
            CostMatrix d(n, k);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < k; ++c) {
                    d(i, c) = rng.uniform();
                }
            }
            std::vector<std::size_t> deficits(k, 0);
            std::size_t left = n;
            for (auto& def : deficits) {
                def = rng.below(std::min<std::size_t>(left, 3) + 1);
                left -= def;
            }
            const auto chosen = constrained_assignment(d, deficits);
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cost += d(i, chosen[i]);
            }
            CHECK(std::fabs(cost - brute_force_constrained(d, deficits)) <= 1e-9);
        }
        CHECK(error_code_of([] {
                  (void)constrained_assignment(CostMatrix(2, 2), std::vector<std::size_t>{2, 1});
              }) == ErrorCode::InfeasibleSizeConstraint);
    }

    TEST_CASE("css_kmeans with tau=0 matches ss_kmeans") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Pcg32 rng(100 + seed);
            const auto z = scd::test::random_matrix(rng, 40, 3);
            const auto meta = meta_for(40, {0, 1, 0, 1, 2});
            ClusterConfig cfg;
            cfg.k = 4;
            cfg.seed = seed;
            cfg.restarts = 3;
            const auto ss = ss_kmeans(z, meta, cfg);
            cfg.min_size = 0;
            const auto css = css_kmeans(z, meta, cfg);
            CHECK(ss.assignment == css.assignment);
            CHECK(ss.objective == doctest::Approx(css.objective).epsilon(1e-12));
        }
    }

    TEST_CASE("css_kmeans keeps every cluster at or above tau") {
        // A 9-point blob and one outlier: unconstrained K=2 isolates the outlier.
        const auto z = matrix(1, {0, 0.1F, 0.2F, 0.3F, 0.4F, 0.5F, 0.6F, 0.7F, 0.8F, 100});
        ClusterConfig cfg;
        cfg.k = 2;
        cfg.min_size = 4;
        const auto meta = meta_for(10, {});
        const auto a = css_kmeans(z, meta, cfg);
        for (auto s : a.cluster_sizes()) {
            CHECK(s >= 4);
        }
        CHECK(a.min_size == std::optional<std::size_t>{4});
        const auto plain = ss_kmeans(z, meta, cfg);
        const auto sizes = plain.cluster_sizes();
        CHECK(std::min(sizes[0], sizes[1]) == 1);
    }

    TEST_CASE("css_kmeans counts labeled members toward tau") {
        const auto z = matrix(1, {0, 0.1F, 0.2F, 5, 5.1F, 5.2F, 5.3F, 5.4F});
        const auto meta = meta_for(8, {0, 0, 0});
        ClusterConfig cfg;
        cfg.k = 2;
        cfg.min_size = 3;
        const auto a = css_kmeans(z, meta, cfg);
        CHECK(a.cluster_sizes() == std::vector<std::size_t>{3, 5});
    }

    TEST_CASE("css_kmeans infeasible size constraint names tau, K and M") {
        const auto z = matrix(1, {0, 1, 2, 3, 4});
        ClusterConfig cfg;
        cfg.k = 2;
        cfg.min_size = 3;
        const auto meta = meta_for(5, {});
        CHECK(error_code_of([&] { (void)css_kmeans(z, meta, cfg); }) == ErrorCode::InfeasibleSizeConstraint);
        const auto msg = error_message_of([&] { (void)css_kmeans(z, meta, cfg); });
        CHECK(msg.find("tau=3") != std::string::npos);
        CHECK(msg.find("K=2") != std::string::npos);
        CHECK(msg.find("M=5") != std::string::npos);
        // Feasible by count but the labeled class already fills cluster 0.
        cfg.min_size = 2;
        const auto labeled = meta_for(5, {0, 0, 0, 0});
        CHECK(error_code_of([&] { (void)css_kmeans(z, labeled, cfg); }) == ErrorCode::InfeasibleSizeConstraint);
    }

    TEST_CASE("css_kmeans default tau is floor(M / 2K)") {
        Pcg32 rng(1);
        const auto z = scd::test::random_matrix(rng, 21, 2);
        ClusterConfig cfg;
        cfg.k = 4;
        const auto a = css_kmeans(z, meta_for(21, {}), cfg);
        CHECK(a.min_size == std::optional<std::size_t>{2});
        for (auto s : a.cluster_sizes()) {
            CHECK(s >= 2);
        }
    }
}
