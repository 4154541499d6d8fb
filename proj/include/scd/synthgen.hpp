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
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "scd/embedding_store.hpp"

namespace scd {

struct PlantedSpec {
    std::size_t k = 10;
    std::size_t n = 200;
    std::size_t dim = 64;
    std::size_t per_class = 30;
    double sigma = 0.05;
    double labeled_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlantedDataset {
    EmbeddingMatrix visual;
    EmbeddingMatrix names;
    Vocabulary vocab;
    std::vector<InstanceMeta> meta;
    /// Name id of each planted class, class-id order.
    std::vector<std::size_t> class_names;
    std::set<std::size_t> truth;
};

/// N random unit name vectors; K of them are classes. Each image is its
/// class's name vector plus isotropic Gaussian noise (per coordinate sigma),
/// renormalized. Instances are shuffled. In the first ceil(K/2) classes a
/// labeled_fraction of instances is marked labeled.
PlantedDataset gen_planted(const PlantedSpec& spec);

/// Writes visual.emb, names.emb, vocab.jsonl and meta.jsonl into dir.
void write_planted(const PlantedDataset& data, const std::filesystem::path& dir);

struct TaxonomyFixture {
    std::size_t depth = 0;
    std::size_t branching = 0;
    /// Heap-ordered: node i has parent (i - 1) / branching.
    std::vector<std::string> offsets;
    std::vector<std::string> lemmas;
    std::string data_noun;
    std::string lemma_map;
};

/// Complete b-ary hypernym tree of the given depth in data.noun syntax.
TaxonomyFixture gen_taxonomy_fixture(std::size_t depth, std::size_t branching);

/// Writes data.noun and lemmas.tsv into dir.
void write_taxonomy_fixture(const TaxonomyFixture& fx, const std::filesystem::path& dir);

}  // namespace scd
