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
#include "scd/naming.hpp"
#include "scd/random.hpp"
#include "scd/synthgen.hpp"
#include "test_util.hpp"

using namespace scd;
using scd::test::error_code_of;

namespace {

EmbeddingMatrix matrix(std::size_t dim, std::vector<float> data) {
    const std::size_t rows = data.size() / dim;
    return EmbeddingMatrix(rows, dim, std::move(data));
}

double dot_rows(const EmbeddingMatrix& a, std::size_t i, const EmbeddingMatrix& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.dim(); ++d) {
        s += static_cast<double>(a.row(i)[d]) * static_cast<double>(b.row(j)[d]);
    }
    return s;
}

ClusterVotes votes_of(std::size_t size, std::vector<Candidate> candidates) {
    ClusterVotes v;
    v.size = size;
    v.candidates = std::move(candidates);
    return v;
}

/// Best total fraction minus one per cluster given a name outside its list,
/// over injective cluster -> pool maps.
double best_injective_fraction(const VoteTable& t) {
    std::vector<std::size_t> pool;
    for (const auto& c : t.clusters) {
        for (const auto& cand : c.candidates) {
            pool.push_back(cand.name_id);
        }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    do {
        double total = 0.0;
        for (std::size_t c = 0; c < t.clusters.size(); ++c) {
            bool listed = false;
            for (const auto& cand : t.clusters[c].candidates) {
                if (cand.name_id == pool[order[c]]) {
                    total += cand.fraction;
                    listed = true;
                }
            }
            total -= listed ? 0.0 : 1.0;
        }
        best = std::max(best, total);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

double fraction_of(const VoteTable& t, std::size_t c, std::size_t name) {
    for (const auto& cand : t.clusters[c].candidates) {
        if (cand.name_id == name) {
            return cand.fraction;
        }
    }
    return 0.0;
}

PlantedDataset planted(std::size_t k, std::size_t n, double sigma, std::uint64_t seed) {
    PlantedSpec spec;
    spec.k = k;
    spec.n = n;
    spec.dim = 32;
    spec.per_class = 10;
    spec.sigma = sigma;
    spec.seed = seed;
    return gen_planted(spec);
}

/// Cluster id = planted class index.
std::vector<std::size_t> true_clusters(const PlantedDataset& d) {
    std::vector<std::size_t> out(d.meta.size());
    for (const auto& m : d.meta) {
        const auto it = std::find(d.class_names.begin(), d.class_names.end(), *m.gt_name_id);
        out[m.row] = static_cast<std::size_t>(it - d.class_names.begin());
    }
    return out;
}

}  // namespace

TEST_SUITE("naming") {
    TEST_CASE("zero-shot picks the highest dot product, ties to the smallest index") {
        const auto names = matrix(2, {1, 0, 0, 1, 1, 0});
        const auto visual = matrix(2, {0.9F, 0.1F, 0.2F, 0.8F, -1, 0});
        CHECK(zero_shot_assign(visual, names) == std::vector<std::size_t>{0, 1, 1});
        CHECK(error_code_of([&] { (void)zero_shot_assign(matrix(3, {1, 0, 0}), names); }) ==
              ErrorCode::DimMismatch);
    }

    TEST_CASE("zero-shot and nearest names agree with a full scan") {
        Pcg32 rng(31);
        const auto visual = scd::test::random_unit_matrix(rng, 40, 6);
        const auto names = scd::test::random_unit_matrix(rng, 25, 6);
        const auto zs = zero_shot_assign(visual, names);
        const auto nn = nearest_names(visual, names, 5);
        CHECK(zs == zero_shot_assign(visual, names, 4));
        CHECK(nn == nearest_names(visual, names, 5, 3));
        for (std::size_t i = 0; i < visual.rows(); ++i) {
            std::vector<std::pair<double, std::size_t>> scored;
            for (std::size_t j = 0; j < names.rows(); ++j) {
                scored.emplace_back(-dot_rows(visual, i, names, j), j);
            }
            std::sort(scored.begin(), scored.end());
            CHECK(zs[i] == scored[0].second);
            for (std::size_t r = 0; r < 5; ++r) {
                CHECK(nn[i][r] == scored[r].second);
            }
        }
        CHECK(error_code_of([&] { (void)nearest_names(visual, names, 0); }) == ErrorCode::InvalidArgument);
        CHECK(error_code_of([&] { (void)nearest_names(visual, names, 26); }) == ErrorCode::InvalidArgument);
    }

    TEST_CASE("cluster voting takes the mode, ties to the smallest name") {
        const std::vector<std::size_t> clusters = {0, 0, 0, 0, 0, 1, 1};
        const std::vector<std::size_t> nn = {4, 9, 4, 9, 4, 9, 4};
        CHECK(vote_cluster_names(clusters, 2, nn) == std::vector<std::size_t>{4, 4});
        CHECK(error_code_of([&] { (void)vote_cluster_names(clusters, 3, nn); }) == ErrorCode::InvalidArgument);
        CHECK(error_code_of([&] { (void)vote_cluster_names(clusters, 2, std::vector<std::size_t>{1}); }) ==
              ErrorCode::LengthMismatch);
    }

    TEST_CASE("tally with m=1 reproduces the 1-NN counts") {
        const std::vector<std::size_t> clusters = {0, 0, 0, 1};
        const std::vector<std::vector<std::size_t>> nn = {{3}, {3}, {5}, {5}};
        const auto t = tally_votes(clusters, 2, nn, 1);
        REQUIRE(t.clusters[0].candidates.size() == 1);
        CHECK(t.clusters[0].candidates[0].name_id == 3);
        CHECK(t.clusters[0].candidates[0].fraction == doctest::Approx(2.0 / 3.0));
        CHECK(t.clusters[0].counts.at(5) == 1);
        CHECK(t.clusters[1].candidates[0].fraction == 1.0);
    }

    TEST_CASE("tally with m=2 gives fraction 1 to a name every member lists") {
        const std::vector<std::size_t> clusters = {0, 0, 0};
        const std::vector<std::vector<std::size_t>> nn = {{1, 7}, {7, 2}, {3, 7}};
        const auto t = tally_votes(clusters, 1, nn, 2);
        REQUIRE(t.clusters[0].candidates.size() == 2);
        CHECK(t.clusters[0].candidates[0].name_id == 7);
        CHECK(t.clusters[0].candidates[0].fraction == 1.0);
        CHECK(t.clusters[0].candidates[0].top1_fraction == doctest::Approx(1.0 / 3.0));
        // 1, 2 and 3 tie at 1/3; 1 and 3 lead on first choices, 1 wins on id.
        CHECK(t.clusters[0].candidates[1].name_id == 1);
    }

    TEST_CASE("tally agrees with a direct count on random data") {
        Pcg32 rng(44);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 1 + rng.below(30);
            const std::size_t k = 1 + rng.below(4);
            const std::size_t m = 1 + rng.below(3);
            std::vector<std::size_t> clusters(n);
            std::vector<std::vector<std::size_t>> nn(n);
            for (std::size_t i = 0; i < n; ++i) {
                clusters[i] = rng.below(k);
                std::vector<std::size_t> names(8);
                std::iota(names.begin(), names.end(), std::size_t{0});
                for (std::size_t r = 0; r < m; ++r) {
                    std::swap(names[r], names[r + rng.below(8 - r)]);
                }
                nn[i].assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(m));
            }
            const auto t = tally_votes(clusters, k, nn, m);
            for (std::size_t c = 0; c < k; ++c) {
                std::size_t size = 0;
                for (auto x : clusters) {
                    size += x == c ? 1 : 0;
                }
                CHECK(t.clusters[c].size == size);
                CHECK(t.clusters[c].candidates.size() <= m);
                for (const auto& cand : t.clusters[c].candidates) {
                    std::size_t count = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (clusters[i] == c) {
                            count += static_cast<std::size_t>(std::count(nn[i].begin(), nn[i].end(), cand.name_id));
                        }
                    }
                    CHECK(cand.fraction == doctest::Approx(static_cast<double>(count) / static_cast<double>(size)));
                }
                // No unlisted name beats the weakest listed one.
                if (!t.clusters[c].candidates.empty()) {
                    const double floor = t.clusters[c].candidates.back().fraction;
                    for (const auto& [name, count] : t.clusters[c].counts) {
                        const bool listed = std::any_of(
                            t.clusters[c].candidates.begin(), t.clusters[c].candidates.end(),
                            [&](const Candidate& cand) { return cand.name_id == name; });
                        if (!listed) {
                            CHECK(static_cast<double>(count) / static_cast<double>(size) <= floor);
                        }
                    }
                }
            }
        }
    }

    TEST_CASE("tally skips inactive clusters and excluded names") {
        const std::vector<std::size_t> clusters = {0, 0, 1};
        const std::vector<std::vector<std::size_t>> nn = {{3, 4}, {3, 4}, {3, 4}};
        const std::vector<char> active = {1, 0};
        const std::vector<std::size_t> excluded = {3};
        const auto t = tally_votes(clusters, 2, nn, 2, active, excluded);
        CHECK(t.clusters[1].size == 0);
        REQUIRE(t.clusters[0].candidates.size() == 1);
        CHECK(t.clusters[0].candidates[0].name_id == 4);
        CHECK(t.clusters[0].counts.at(3) == 2);
    }

    TEST_CASE("topm_vote uses the m nearest names") {
        const auto names = matrix(2, {1, 0, 0, 1, -1, 0});
        const auto visual = matrix(2, {1, 0.1F, 1, -0.1F, 0.1F, 1});
        const std::vector<std::size_t> clusters = {0, 0, 1};
        const auto t = topm_vote(clusters, 2, visual, names, 2);
        CHECK(t.m == 2);
        CHECK(t.clusters[0].candidates[0].name_id == 0);
        CHECK(t.clusters[0].candidates[0].fraction == 1.0);
        CHECK(t.clusters[1].candidates[0].name_id == 1);
    }

    TEST_CASE("dedup resolves a shared favourite by total fraction") {
        VoteTable t;
        t.m = 2;
        t.clusters.push_back(votes_of(10, {{5, 1.0, 1.0}, {3, 0.5, 0.0}}));
        t.clusters.push_back(votes_of(10, {{5, 0.9, 0.9}, {7, 0.2, 0.1}}));
        // {5, 7} scores 1.2, {3, 5} scores 1.4.
        CHECK(dedup_assign(t) == std::vector<std::size_t>{3, 5});
        const std::vector<std::size_t> only_second = {1};
        CHECK(dedup_assign(t, only_second) == std::vector<std::size_t>{5});
    }

    TEST_CASE("dedup breaks equal fractions by first-choice share") {
        VoteTable t;
        t.m = 2;
        t.clusters.push_back(votes_of(4, {{2, 1.0, 0.25}, {8, 1.0, 0.75}}));
        CHECK(dedup_assign(t) == std::vector<std::size_t>{8});
    }

    TEST_CASE("dedup maximizes total fraction, using unlisted names only when unavoidable") {
        Pcg32 rng(55);
        for (int trial = 0; trial < 100; ++trial) {
            VoteTable t;
            t.m = 3;
            const std::size_t k = 1 + rng.below(4);
            for (std::size_t c = 0; c < k; ++c) {
                std::vector<Candidate> cands;
                std::set<std::size_t> used;
                for (std::size_t r = 0; r < 3; ++r) {
                    const std::size_t name = rng.below(6);
                    if (used.insert(name).second) {
                        cands.push_back({name, std::round(rng.uniform() * 10.0) / 10.0, 0.0});
                    }
                }
                t.clusters.push_back(votes_of(10, cands));
            }
            std::set<std::size_t> pool;
            for (const auto& c : t.clusters) {
                for (const auto& cand : c.candidates) {
                    pool.insert(cand.name_id);
                }
            }
            if (pool.size() < k) {
                CHECK(error_code_of([&] { (void)dedup_assign(t); }) == ErrorCode::CandidatePoolTooSmall);
                continue;
            }
            const auto names = dedup_assign(t);
            CHECK(std::set<std::size_t>(names.begin(), names.end()).size() == k);
            double total = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                CHECK(pool.count(names[c]) == 1);
                const bool listed = std::any_of(t.clusters[c].candidates.begin(), t.clusters[c].candidates.end(),
                                                [&](const Candidate& cand) { return cand.name_id == names[c]; });
                total += listed ? fraction_of(t, c, names[c]) : -1.0;
            }
            CHECK(total == doctest::Approx(best_injective_fraction(t)).epsilon(1e-9));
        }
    }

    TEST_CASE("classifier normalizes rows and breaks ties low") {
        const auto names = matrix(2, {3, 4, 0, 2, 0, 5});
        const std::vector<std::size_t> chosen = {2, 1, 0};
        const auto clf = build_classifier(chosen, names);
        CHECK(clf.names == chosen);
        CHECK(clf.weights.row(0)[1] == doctest::Approx(1.0));
        CHECK(clf.weights.row(2)[0] == doctest::Approx(0.6));
        const auto visual = matrix(2, {0, 1, 1, 0});
        CHECK(clf.classify(visual) == std::vector<std::size_t>{0, 2});
        CHECK(error_code_of([&] { (void)build_classifier(std::vector<std::size_t>{}, names); }) ==
              ErrorCode::InvalidArgument);
        CHECK(error_code_of([&] { (void)build_classifier(std::vector<std::size_t>{3}, names); }) ==
              ErrorCode::InvalidArgument);
    }

    TEST_CASE("initial voting names every instance after its cluster") {
        const auto d = planted(4, 30, 0.05, 2);
        const auto clusters = true_clusters(d);
        const auto r = initial_voting(d.visual, d.names, clusters, 4);
        CHECK(r.cluster_names == d.class_names);
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            CHECK(r.instance_names[i] == d.class_names[clusters[i]]);
        }
    }

    TEST_CASE("refinement from the true partition stops after one round") {
        const auto d = planted(5, 40, 0.0, 3);
        const auto clusters = true_clusters(d);
        const auto r = refine_loop(d.visual, d.names, clusters, 5, RefineConfig{});
        CHECK(r.iterations == 1);
        CHECK(r.converged);
        CHECK(r.cluster_names == d.class_names);
        CHECK(r.instance_clusters == clusters);
        REQUIRE(r.trace.size() == 1);
        CHECK(r.trace[0].change_count == 0);
        CHECK(r.trace[0].energy == doctest::Approx(static_cast<double>(clusters.size())).epsilon(1e-6));
    }

    TEST_CASE("refinement from k-means recovers planted names") {
        const auto d = planted(5, 50, 0.05, 4);
        ClusterConfig cc;
        cc.k = 5;
        const auto km = kmeans(d.visual, cc);
        const auto r = refine_loop(d.visual, d.names, km.assignment, 5, RefineConfig{});
        CHECK(r.converged);
        for (const auto& m : d.meta) {
            CHECK(r.instance_names[m.row] == *m.gt_name_id);
        }
        CHECK(std::set<std::size_t>(r.cluster_names.begin(), r.cluster_names.end()).size() == 5);
        CHECK(r.iterations == r.trace.size());
    }

    TEST_CASE("refinement keeps names distinct and pins fixed") {
        const auto d = planted(6, 60, 0.3, 5);
        ClusterConfig cc;
        cc.k = 6;
        const auto km = kmeans(d.visual, cc);
        std::vector<std::optional<std::size_t>> pins(6);
        pins[1] = 59;
        RefineConfig cfg;
        const auto r = refine_loop(d.visual, d.names, km.assignment, 6, cfg, pins);
        for (const auto& it : r.trace) {
            CHECK(it.cluster_names[1] == 59);
            CHECK(std::set<std::size_t>(it.cluster_names.begin(), it.cluster_names.end()).size() == 6);
        }
        CHECK(r.cluster_names[1] == 59);
        for (std::size_t i = 0; i < r.instance_clusters.size(); ++i) {
            CHECK(r.instance_names[i] == r.cluster_names[r.instance_clusters[i]]);
        }
        CHECK(r.iterations <= cfg.max_refine_iter);
    }

    TEST_CASE("refinement is independent of the thread count") {
        const auto d = planted(6, 60, 0.3, 6);
        ClusterConfig cc;
        cc.k = 6;
        const auto km = kmeans(d.visual, cc);
        RefineConfig one;
        RefineConfig many;
        many.threads = 4;
        const auto a = refine_loop(d.visual, d.names, km.assignment, 6, one);
        const auto b = refine_loop(d.visual, d.names, km.assignment, 6, many);
        CHECK(a.instance_names == b.instance_names);
        CHECK(a.cluster_names == b.cluster_names);
        CHECK(a.iterations == b.iterations);
    }

    TEST_CASE("refine_loop input errors") {
        const auto d = planted(2, 10, 0.1, 7);
        const auto clusters = true_clusters(d);
        CHECK(error_code_of([&] {
                  (void)refine_loop(d.visual, d.names, std::vector<std::size_t>{0}, 2, RefineConfig{});
              }) == ErrorCode::LengthMismatch);
        CHECK(error_code_of([&] { (void)refine_loop(d.visual, d.names, clusters, 0, RefineConfig{}); }) ==
              ErrorCode::InvalidArgument);
        std::vector<std::optional<std::size_t>> short_pins(1);
        CHECK(error_code_of([&] {
                  (void)refine_loop(d.visual, d.names, clusters, 2, RefineConfig{}, short_pins);
              }) == ErrorCode::InvalidArgument);
        RefineConfig bad;
        bad.revote_m = 0;
        CHECK(error_code_of([&] { (void)refine_loop(d.visual, d.names, clusters, 2, bad); }) ==
              ErrorCode::InvalidArgument);
    }

    TEST_CASE("partially supervised pins follow the reserved classes") {
        ClusterAssignment a;
        a.k = 3;
        a.reserved = {2, 7};
        Vocabulary vocab({{0, "a", std::nullopt}, {1, "b", std::nullopt}, {2, "c", std::nullopt},
                          {3, "d", std::nullopt}, {4, "e", std::nullopt}, {5, "f", std::nullopt},
                          {6, "g", std::nullopt}, {7, "h", std::nullopt}});
        std::vector<InstanceMeta> meta = {{"x", 0, 2, true}, {"y", 1, 7, true}, {"z", 2, 4, false}};
        const auto pins = partially_supervised_pin(a, meta, vocab);
        REQUIRE(pins.size() == 3);
        CHECK(pins[0] == std::optional<std::size_t>{2});
        CHECK(pins[1] == std::optional<std::size_t>{7});
        CHECK_FALSE(pins[2].has_value());
        meta.push_back({"w", 3, 4, true});
        CHECK(error_code_of([&] { (void)partially_supervised_pin(a, meta, vocab); }) ==
              ErrorCode::MissingGroundTruthName);
    }
}
