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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace scd {

/// Dense row-major float32 matrix. Construction validates shape and
/// finiteness; when `normalized` is set every row must have unit L2 norm to
/// within 1e-4. Immutable once built.
class EmbeddingMatrix {
public:
    static constexpr double kUnitNormTolerance = 1e-4;

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                    bool normalized = false);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool normalized() const noexcept { return normalized_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    [[nodiscard]] const std::vector<float>& data() const noexcept { return data_; }

    /// New matrix holding the given rows in the given order.
    [[nodiscard]] EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    bool normalized_ = false;
};

/// Dot product with double accumulation.
double dot(std::span<const float> a, std::span<const float> b);

/// Reads an EMB1 container: "EMB1", u32 LE rows, u32 LE dim, rows*dim f32 LE.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m);

/// Divides each row by its L2 norm (computed in double). Throws ZeroNormRow.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

struct VocabularyEntry {
    std::size_t name_id = 0;
    std::string lemma;
    std::optional<std::string> synset_id;
};

class Vocabulary {
public:
    Vocabulary() = default;
    /// name_id is reassigned from position; duplicate lemmas throw.
    explicit Vocabulary(std::vector<VocabularyEntry> entries);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const VocabularyEntry& operator[](std::size_t id) const { return entries_.at(id); }
    [[nodiscard]] const std::vector<VocabularyEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& lemma) const;

private:
    std::vector<VocabularyEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_lemma_;
};

struct InstanceMeta {
    std::string instance_id;
    std::size_t row = 0;
    std::optional<std::size_t> gt_name_id;
    bool labeled = false;
};

/// JSONL, one `{"lemma": str, "synset_id": str|null}` per line.
Vocabulary load_vocabulary(const std::filesystem::path& path);
Vocabulary parse_vocabulary(const std::string& text);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

/// JSONL, one `{"instance_id", "row", "gt_name_id", "labeled"}` per line.
std::vector<InstanceMeta> load_meta(const std::filesystem::path& path);
std::vector<InstanceMeta> parse_meta(const std::string& text);
void save_meta(const std::filesystem::path& path, std::span<const InstanceMeta> meta);

/// Checks rows form a bijection onto [0, rows), labeled implies a ground
/// truth, and ground-truth ids fall inside the vocabulary (if given).
void validate_meta(std::span<const InstanceMeta> meta, std::size_t rows,
                   std::optional<std::size_t> vocab_size = std::nullopt);

/// Whole-file helpers shared by the loaders.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace scd
