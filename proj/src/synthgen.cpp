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

#include "scd/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "scd/error.hpp"
#include "scd/random.hpp"

namespace scd {

namespace {

std::vector<float> unit_gaussian_row(Pcg32& rng, std::span<const float> centre, double sigma,
                                     std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double base = centre.empty() ? 0.0 : static_cast<double>(centre[d]);
        v[d] = base + sigma * rng.normal();
        norm += v[d] * v[d];
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        out[d] = static_cast<float>(v[d] / norm);
    }
    return out;
}

std::string padded(const char* prefix, std::size_t i, int width) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

}  // namespace

void PlantedSpec::validate() const {
    if (k == 0 || n == 0 || dim == 0 || per_class == 0) {
        throw Error(ErrorCode::InvalidArgument, "K, N, dim and instances per class must be positive");
    }
    if (k > n) {
        throw Error(ErrorCode::InvalidArgument, "K must not exceed N");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be a finite non-negative number");
    }
    if (!(labeled_fraction >= 0.0 && labeled_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "labeled fraction must lie in [0, 1]");
    }
}

PlantedDataset gen_planted(const PlantedSpec& spec) {
    spec.validate();
    Pcg32 rng(spec.seed);

    std::vector<float> name_data;
    name_data.reserve(spec.n * spec.dim);
    for (std::size_t j = 0; j < spec.n; ++j) {
        const auto row = unit_gaussian_row(rng, {}, 1.0, spec.dim);
        name_data.insert(name_data.end(), row.begin(), row.end());
    }
    EmbeddingMatrix names(spec.n, spec.dim, std::move(name_data), true);

    std::vector<std::size_t> ids(spec.n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    for (std::size_t c = 0; c < spec.k; ++c) {
        std::swap(ids[c], ids[c + rng.below(spec.n - c)]);
    }
    std::vector<std::size_t> class_names(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(spec.k));

    struct Sample {
        std::size_t cls;
        bool labeled;
        std::vector<float> row;
    };
    const std::size_t labeled_classes = (spec.k + 1) / 2;
    const auto labeled_per_class =
        static_cast<std::size_t>(std::floor(spec.labeled_fraction * static_cast<double>(spec.per_class)));
    std::vector<Sample> samples;
    samples.reserve(spec.k * spec.per_class);
    for (std::size_t c = 0; c < spec.k; ++c) {
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            samples.push_back({c, c < labeled_classes && s < labeled_per_class,
                               unit_gaussian_row(rng, names.row(class_names[c]), spec.sigma, spec.dim)});
        }
    }
    for (std::size_t i = samples.size(); i > 1; --i) {
        std::swap(samples[i - 1], samples[rng.below(i)]);
    }

    PlantedDataset out{EmbeddingMatrix{}, std::move(names), Vocabulary{}, {}, class_names,
                       std::set<std::size_t>(class_names.begin(), class_names.end())};
    std::vector<float> visual;
    visual.reserve(samples.size() * spec.dim);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        visual.insert(visual.end(), samples[i].row.begin(), samples[i].row.end());
        out.meta.push_back({padded("img_", i, 5), i, class_names[samples[i].cls], samples[i].labeled});
    }
    out.visual = EmbeddingMatrix(samples.size(), spec.dim, std::move(visual), true);

    std::vector<VocabularyEntry> entries;
    entries.reserve(spec.n);
    for (std::size_t j = 0; j < spec.n; ++j) {
        entries.push_back({j, padded("name_", j, 4), std::nullopt});
    }
    out.vocab = Vocabulary(std::move(entries));
    return out;
}

void write_planted(const PlantedDataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_embeddings(dir / "visual.emb", data.visual);
    save_embeddings(dir / "names.emb", data.names);
    save_vocabulary(dir / "vocab.jsonl", data.vocab);
    save_meta(dir / "meta.jsonl", data.meta);
}

TaxonomyFixture gen_taxonomy_fixture(std::size_t depth, std::size_t branching) {
    if (depth == 0 || branching == 0) {
        throw Error(ErrorCode::InvalidArgument, "depth and branching must be positive");
    }
    std::size_t count = 0;
    std::size_t level = 1;
    for (std::size_t d = 0; d < depth; ++d) {
        count += level;
        level *= branching;
    }
    TaxonomyFixture fx;
    fx.depth = depth;
    fx.branching = branching;
    for (std::size_t i = 0; i < count; ++i) {
        fx.offsets.push_back(padded("", (i + 1) * 100, 8));
        fx.lemmas.push_back(padded("concept_", i, 1));
    }
    fx.data_noun = "  1 synthetic hypernym tree in WordNet data.noun syntax\n  2 \n";
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> pointers;
        if (i > 0) {
            pointers.push_back("@ " + fx.offsets[(i - 1) / branching] + " n 0000");
        }
        for (std::size_t b = 0; b < branching; ++b) {
            const std::size_t child = i * branching + 1 + b;
            if (child < count) {
                pointers.push_back("~ " + fx.offsets[child] + " n 0000");
            }
        }
        char head[64];
        std::snprintf(head, sizeof(head), "%s 03 n 01 %s 0 %03zu", fx.offsets[i].c_str(),
                      fx.lemmas[i].c_str(), pointers.size());
        std::string line = head;
        for (const auto& p : pointers) {
            line += " " + p;
        }
        fx.data_noun += line + " | synthetic concept " + std::to_string(i) + "  \n";
        fx.lemma_map += fx.lemmas[i] + "\t" + fx.offsets[i] + "\n";
    }
    return fx;
}

void write_taxonomy_fixture(const TaxonomyFixture& fx, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_text(dir / "data.noun", fx.data_noun);
    write_file_text(dir / "lemmas.tsv", fx.lemma_map);
}

}  // namespace scd
