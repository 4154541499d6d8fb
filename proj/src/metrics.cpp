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

#include "scd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "scd/error.hpp"
#include "scd/solvers.hpp"

namespace scd {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " predictions for " +
                                                   std::to_string(b) + " ground-truth labels");
    }
    if (a == 0) {
        throw Error(ErrorCode::InvalidArgument, "no instances to evaluate");
    }
}

std::vector<std::size_t> distinct(std::span<const std::size_t> labels) {
    std::vector<std::size_t> out(labels.begin(), labels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t index_of(const std::vector<std::size_t>& sorted, std::size_t v) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

std::map<std::size_t, std::size_t> best_mapping(std::span<const std::size_t> pred,
                                                std::span<const std::size_t> gt,
                                                std::size_t max_classes) {
    const auto pred_labels = distinct(pred);
    const auto gt_labels = distinct(gt);
    if (pred_labels.size() > max_classes) {
        throw Error(ErrorCode::ModelPredictsTooManyClasses,
                    std::to_string(pred_labels.size()) + " distinct predictions exceed the limit of " +
                        std::to_string(max_classes));
    }
    const std::size_t p = pred_labels.size();
    const std::size_t g = gt_labels.size();
    std::vector<std::size_t> confusion(p * g, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++confusion[index_of(pred_labels, pred[i]) * g + index_of(gt_labels, gt[i])];
    }
    std::map<std::size_t, std::size_t> mapping;
    if (p <= g) {
        CostMatrix cost(p, g);
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < g; ++c) {
                cost(r, c) = -static_cast<double>(confusion[r * g + c]);
            }
        }
        const auto a = hungarian(cost);
        for (std::size_t r = 0; r < p; ++r) {
            mapping[pred_labels[r]] = gt_labels[a.column_of_row[r]];
        }
    } else {
        CostMatrix cost(g, p);
        for (std::size_t r = 0; r < g; ++r) {
            for (std::size_t c = 0; c < p; ++c) {
                cost(r, c) = -static_cast<double>(confusion[c * g + r]);
            }
        }
        const auto a = hungarian(cost);
        for (std::size_t r = 0; r < g; ++r) {
            mapping[pred_labels[a.column_of_row[r]]] = gt_labels[r];
        }
    }
    return mapping;
}

bool matches(const std::map<std::size_t, std::size_t>& mapping, std::size_t pred, std::size_t gt) {
    const auto it = mapping.find(pred);
    return it != mapping.end() && it->second == gt;
}

std::string percent(std::optional<double> v) {
    if (!v) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * *v);
    return buf;
}

}  // namespace

double sacc(std::span<const std::size_t> pred, std::span<const std::size_t> gt) {
    check_lengths(pred.size(), gt.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        hits += pred[i] == gt[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double soft_sacc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                 const LcsScorer& scorer, const Vocabulary& vocab, const SoftSaccOptions& opts) {
    check_lengths(pred.size(), gt.size());
    const auto& g = scorer.graph();
    std::map<std::size_t, std::optional<std::size_t>> resolved;
    auto resolve = [&](std::size_t name_id) -> std::optional<std::size_t> {
        const auto it = resolved.find(name_id);
        if (it != resolved.end()) {
            return it->second;
        }
        std::optional<std::size_t> node;
        try {
            const auto& entry = vocab[name_id];
            node = resolve_lemma(g, entry.lemma, entry.synset_id);
        } catch (const Error& e) {
            if (!opts.unknown_as_zero ||
                (e.code() != ErrorCode::UnknownLemma && e.code() != ErrorCode::UnknownSynset)) {
                throw;
            }
        } catch (const std::out_of_range&) {
            throw Error(ErrorCode::InvalidArgument, "name id " + std::to_string(name_id) +
                                                        " outside the vocabulary");
        }
        resolved.emplace(name_id, node);
        return node;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == gt[i]) {
            // Identical names are identical concepts even when unresolvable.
            total += 1.0;
            continue;
        }
        const auto a = resolve(pred[i]);
        const auto b = resolve(gt[i]);
        if (a && b) {
            total += scorer(*a, *b);
        }
    }
    return total / static_cast<double>(pred.size());
}

ClusteringAccuracy clustering_acc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                                  std::size_t max_classes) {
    check_lengths(pred.size(), gt.size());
    ClusteringAccuracy out;
    out.mapping = best_mapping(pred, gt, max_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        out.matched += matches(out.mapping, pred[i], gt[i]) ? 1 : 0;
    }
    out.score = static_cast<double>(out.matched) / static_cast<double>(pred.size());
    return out;
}

SplitAccuracy split_acc(std::span<const std::size_t> pred, std::span<const std::size_t> gt,
                        std::span<const char> old_mask, std::size_t max_classes) {
    check_lengths(pred.size(), gt.size());
    if (old_mask.size() != pred.size()) {
        throw Error(ErrorCode::LengthMismatch, "old/new mask length differs from predictions");
    }
    SplitAccuracy out;
    out.mapping = best_mapping(pred, gt, max_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool hit = matches(out.mapping, pred[i], gt[i]);
        out.matched_all += hit ? 1 : 0;
        if (old_mask[i]) {
            ++out.count_old;
            out.matched_old += hit ? 1 : 0;
        } else {
            ++out.count_new;
            out.matched_new += hit ? 1 : 0;
        }
    }
    out.all = static_cast<double>(out.matched_all) / static_cast<double>(pred.size());
    if (out.count_old > 0) {
        out.old_classes = static_cast<double>(out.matched_old) / static_cast<double>(out.count_old);
    }
    if (out.count_new > 0) {
        out.new_classes = static_cast<double>(out.matched_new) / static_cast<double>(out.count_new);
    }
    return out;
}

double name_set_iou(const std::set<std::size_t>& pred, const std::set<std::size_t>& gt) {
    std::size_t both = 0;
    for (auto v : pred) {
        both += gt.count(v);
    }
    const std::size_t either = pred.size() + gt.size() - both;
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

EvalReport evaluate(const EvalInputs& in) {
    EvalReport r;
    r.instances = in.pred.size();
    r.sacc = sacc(in.pred, in.gt);
    if (in.scorer != nullptr && in.vocab != nullptr) {
        r.soft_sacc = soft_sacc(in.pred, in.gt, *in.scorer, *in.vocab, in.soft);
    }
    const std::set<std::size_t> pred_names(in.pred.begin(), in.pred.end());
    const std::set<std::size_t> true_names(in.gt.begin(), in.gt.end());
    r.predicted_names = pred_names.size();
    r.true_names = true_names.size();
    r.name_iou = name_set_iou(pred_names, true_names);
    for (auto g : in.gt) {
        ++r.class_counts[g];
    }
    try {
        if (!in.old_mask.empty()) {
            const auto split = split_acc(in.pred, in.gt, in.old_mask, in.max_classes);
            r.acc_all = split.all;
            r.acc_old = split.old_classes;
            r.acc_new = split.new_classes;
            r.permutation = split.mapping;
        } else {
            const auto acc = clustering_acc(in.pred, in.gt, in.max_classes);
            r.acc_all = acc.score;
            r.permutation = acc.mapping;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ModelPredictsTooManyClasses) {
            throw;
        }
        r.notes.emplace_back(std::string("clustering accuracy omitted: ") + e.what());
    }
    return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
    };
    nlohmann::ordered_json j;
    j["instances"] = instances;
    j["sacc"] = sacc;
    if (soft_sacc) {
        j["soft_sacc"] = *soft_sacc;
    }
    j["acc_all"] = opt(acc_all);
    j["acc_old"] = opt(acc_old);
    j["acc_new"] = opt(acc_new);
    j["name_iou"] = name_iou;
    j["predicted_names"] = predicted_names;
    j["true_names"] = true_names;
    auto counts = nlohmann::ordered_json::object();
    for (const auto& [cls, n] : class_counts) {
        counts[std::to_string(cls)] = n;
    }
    j["class_counts"] = counts;
    auto perm = nlohmann::ordered_json::object();
    for (const auto& [p, g] : permutation) {
        perm[std::to_string(p)] = g;
    }
    j["permutation"] = perm;
    j["notes"] = notes;
    return j;
}

std::string EvalReport::to_table(const std::string& title) const {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-28s %8s %10s %8s %8s %8s %8s\n", "", "sACC", "Soft-sACC",
                  "All", "Old", "New", "IoU");
    out << line;
    char iou[32];
    std::snprintf(iou, sizeof(iou), "%.3f", name_iou);
    std::snprintf(line, sizeof(line), "%-28s %8s %10s %8s %8s %8s %8s\n", title.substr(0, 28).c_str(),
                  percent(sacc).c_str(), percent(soft_sacc).c_str(), percent(acc_all).c_str(),
                  percent(acc_old).c_str(), percent(acc_new).c_str(), iou);
    out << line;
    return out.str();
}

}  // namespace scd
