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
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scd/embedding_store.hpp"
#include "scd/taxonomy.hpp"

namespace scd {

/// Fraction of exact name matches.
double sacc(std::span<const std::size_t> pred, std::span<const std::size_t> gt);

struct SoftSaccOptions {
    /// Score instances whose names cannot be resolved as 0 instead of throwing.
    bool unknown_as_zero = false;
};

/// Mean rescaled Leacock-Chodorow similarity between predicted and true names.
double soft_sacc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                 const LcsScorer& scorer, const Vocabulary& vocab, const SoftSaccOptions& opts = {});

struct ClusteringAccuracy {
    double score = 0.0;
    std::size_t matched = 0;
    /// Predicted label -> ground-truth label under the best matching. Labels
    /// left unmatched on the larger side are absent.
    std::map<std::size_t, std::size_t> mapping;
};

inline constexpr std::size_t kDefaultMaxPredictedClasses = 2000;

/// Best-permutation accuracy via Hungarian matching on the confusion matrix.
/// Unequal label counts are matched rectangularly. Throws
/// ModelPredictsTooManyClasses beyond max_classes distinct predictions.
ClusteringAccuracy clustering_acc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                                  std::size_t max_classes = kDefaultMaxPredictedClasses);

struct SplitAccuracy {
    double all = 0.0;
    std::optional<double> old_classes;
    std::optional<double> new_classes;
    std::size_t matched_all = 0;
    std::size_t matched_old = 0;
    std::size_t matched_new = 0;
    std::size_t count_old = 0;
    std::size_t count_new = 0;
    std::map<std::size_t, std::size_t> mapping;
};

/// One Hungarian matching over every instance, then accuracy per subset.
SplitAccuracy split_acc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                        std::span<const char> old_mask,
                        std::size_t max_classes = kDefaultMaxPredictedClasses);

/// |A and B| / |A or B|; two empty sets give 1.
double name_set_iou(const std::set<std::size_t>& pred, const std::set<std::size_t>& gt);

struct EvalReport {
    std::size_t instances = 0;
    double sacc = 0.0;
    std::optional<double> soft_sacc;
    std::optional<double> acc_all;
    std::optional<double> acc_old;
    std::optional<double> acc_new;
    double name_iou = 0.0;
    std::size_t predicted_names = 0;
    std::size_t true_names = 0;
    /// Instances per ground-truth class.
    std::map<std::size_t, std::size_t> class_counts;
    std::map<std::size_t, std::size_t> permutation;
    std::vector<std::string> notes;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    /// Fixed-width table, one row per metric.
    [[nodiscard]] std::string to_table(const std::string& title) const;
};

struct EvalInputs {
    std::span<const std::size_t> pred;
    std::span<const std::size_t> gt;
    /// Per instance: ground-truth class seen in the labeled data. Empty: no split.
    std::span<const char> old_mask;
    const LcsScorer* scorer = nullptr;
    const Vocabulary* vocab = nullptr;
    SoftSaccOptions soft;
    std::size_t max_classes = kDefaultMaxPredictedClasses;
};

/// All metrics at once. Clustering accuracy is omitted (with a note) when
/// the prediction has too many distinct names.
EvalReport evaluate(const EvalInputs& in);

}  // namespace scd
