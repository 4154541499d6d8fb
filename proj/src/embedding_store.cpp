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

#include "scd/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "scd/error.hpp"

namespace scd {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

static_assert(std::endian::native == std::endian::little,
              "EMB1 I/O assumes a little-endian host");

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8U) |
           (static_cast<std::uint32_t>(p[2]) << 16U) | (static_cast<std::uint32_t>(p[3]) << 24U);
}

void write_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFFU));
    }
}

double row_norm(std::span<const float> r) {
    double s = 0.0;
    for (float v : r) {
        s += static_cast<double>(v) * static_cast<double>(v);
    }
    return std::sqrt(s);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

Error malformed(std::size_t line_no, const std::string& why) {
    return {ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + why};
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (rows_ == 0 || dim_ == 0) {
        throw Error(ErrorCode::InvalidArgument, "embedding matrix needs rows >= 1 and dim >= 1");
    }
    if (data_.size() != rows_ * dim_) {
        throw Error(ErrorCode::TruncatedPayload,
                    "expected " + std::to_string(rows_ * dim_) + " values, got " +
                        std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        for (float v : row(i)) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(i));
            }
        }
    }
    if (normalized_) {
        for (std::size_t i = 0; i < rows_; ++i) {
            if (std::abs(row_norm(row(i)) - 1.0) > kUnitNormTolerance) {
                throw Error(ErrorCode::InvalidArgument,
                            "row " + std::to_string(i) + " is flagged normalized but is not unit");
            }
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * dim_);
    for (std::size_t i : indices) {
        if (i >= rows_) {
            throw Error(ErrorCode::InvalidArgument, "row index " + std::to_string(i) + " out of range");
        }
        const auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return {indices.size(), dim_, std::move(out), normalized_};
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    }
    return s;
}

EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw Error(ErrorCode::BadMagic, "container does not start with EMB1");
    }
    if (bytes.size() < kHeaderBytes) {
        throw Error(ErrorCode::TruncatedPayload, "header shorter than 12 bytes");
    }
    const std::size_t rows = read_u32_le(bytes.data() + 4);
    const std::size_t dim = read_u32_le(bytes.data() + 8);
    if (rows == 0 || dim == 0) {
        throw Error(ErrorCode::InvalidArgument, "header declares an empty matrix");
    }
    const std::size_t payload = bytes.size() - kHeaderBytes;
    const std::size_t row_bytes = dim * sizeof(float);
    const std::size_t expected = rows * row_bytes;
    if (payload < expected) {
        throw Error(ErrorCode::TruncatedPayload,
                    "payload ends inside row " + std::to_string(payload / row_bytes) + " (" +
                        std::to_string(payload / sizeof(float)) + " of " +
                        std::to_string(rows * dim) + " floats present)");
    }
    if (payload > expected) {
        throw Error(ErrorCode::TrailingBytes,
                    std::to_string(payload - expected) + " bytes after the last row");
    }
    std::vector<float> data(rows * dim);
    std::memcpy(data.data(), bytes.data() + kHeaderBytes, expected);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(i / dim));
        }
    }
    return {rows, dim, std::move(data)};
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_embeddings(bytes);
}

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + m.data().size() * sizeof(float));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.dim()));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(m.data().data());
    out.insert(out.end(), raw, raw + m.data().size() * sizeof(float));
    return out;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
    const auto bytes = serialize_embeddings(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::Io, "write failed for " + path.string());
    }
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
    std::vector<float> out(m.data().size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        const double norm = row_norm(r);
        if (norm <= 0.0) {
            throw Error(ErrorCode::ZeroNormRow, "row " + std::to_string(i));
        }
        for (std::size_t k = 0; k < m.dim(); ++k) {
            out[i * m.dim() + k] = static_cast<float>(static_cast<double>(r[k]) / norm);
        }
    }
    return {m.rows(), m.dim(), std::move(out), true};
}

Vocabulary::Vocabulary(std::vector<VocabularyEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "vocabulary is empty");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        entries_[i].name_id = i;
        auto [it, inserted] = by_lemma_.emplace(entries_[i].lemma, i);
        if (!inserted) {
            throw Error(ErrorCode::DuplicateLemma,
                        "\"" + entries_[i].lemma + "\" on lines " + std::to_string(it->second + 1) +
                            " and " + std::to_string(i + 1));
        }
    }
}

std::optional<std::size_t> Vocabulary::find(const std::string& lemma) const {
    const auto it = by_lemma_.find(lemma);
    if (it == by_lemma_.end()) {
        return std::nullopt;
    }
    return it->second;
}

Vocabulary parse_vocabulary(const std::string& text) {
    std::vector<VocabularyEntry> entries;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (is_blank(lines[i])) {
            if (i + 1 == lines.size()) {
                break;
            }
            throw malformed(line_no, "blank line");
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw malformed(line_no, e.what());
        }
        if (!j.is_object() || !j.contains("lemma") || !j["lemma"].is_string()) {
            throw malformed(line_no, "expected an object with a string \"lemma\"");
        }
        VocabularyEntry e;
        e.lemma = j["lemma"].get<std::string>();
        if (e.lemma.empty()) {
            throw malformed(line_no, "empty lemma");
        }
        if (j.contains("synset_id") && !j["synset_id"].is_null()) {
            if (!j["synset_id"].is_string()) {
                throw malformed(line_no, "\"synset_id\" must be a string or null");
            }
            e.synset_id = j["synset_id"].get<std::string>();
        }
        entries.push_back(std::move(e));
    }
    return Vocabulary(std::move(entries));
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    return parse_vocabulary(read_file_text(path));
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::string text;
    for (const auto& e : vocab.entries()) {
        nlohmann::ordered_json j;
        j["lemma"] = e.lemma;
        j["synset_id"] = e.synset_id ? nlohmann::ordered_json(*e.synset_id) : nlohmann::ordered_json();
        text += j.dump() + "\n";
    }
    write_file_text(path, text);
}

std::vector<InstanceMeta> parse_meta(const std::string& text) {
    std::vector<InstanceMeta> meta;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (is_blank(lines[i])) {
            if (i + 1 == lines.size()) {
                break;
            }
            throw malformed(line_no, "blank line");
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw malformed(line_no, e.what());
        }
        if (!j.is_object()) {
            throw malformed(line_no, "expected an object");
        }
        if (!j.contains("instance_id") || !j["instance_id"].is_string()) {
            throw malformed(line_no, "missing string \"instance_id\"");
        }
        if (!j.contains("row") || !j["row"].is_number_unsigned()) {
            throw malformed(line_no, "missing non-negative integer \"row\"");
        }
        InstanceMeta m;
        m.instance_id = j["instance_id"].get<std::string>();
        m.row = j["row"].get<std::size_t>();
        if (j.contains("gt_name_id") && !j["gt_name_id"].is_null()) {
            if (!j["gt_name_id"].is_number_unsigned()) {
                throw malformed(line_no, "\"gt_name_id\" must be a non-negative integer or null");
            }
            m.gt_name_id = j["gt_name_id"].get<std::size_t>();
        }
        if (j.contains("labeled")) {
            if (!j["labeled"].is_boolean()) {
                throw malformed(line_no, "\"labeled\" must be a boolean");
            }
            m.labeled = j["labeled"].get<bool>();
        }
        meta.push_back(std::move(m));
    }
    return meta;
}

std::vector<InstanceMeta> load_meta(const std::filesystem::path& path) {
    return parse_meta(read_file_text(path));
}

void save_meta(const std::filesystem::path& path, std::span<const InstanceMeta> meta) {
    std::string text;
    for (const auto& m : meta) {
        nlohmann::ordered_json j;
        j["instance_id"] = m.instance_id;
        j["row"] = m.row;
        j["gt_name_id"] = m.gt_name_id ? nlohmann::ordered_json(*m.gt_name_id) : nlohmann::ordered_json();
        j["labeled"] = m.labeled;
        text += j.dump() + "\n";
    }
    write_file_text(path, text);
}

void validate_meta(std::span<const InstanceMeta> meta, std::size_t rows,
                   std::optional<std::size_t> vocab_size) {
    if (meta.size() != rows) {
        throw Error(ErrorCode::InvalidMeta, std::to_string(meta.size()) + " metadata records for " +
                                                std::to_string(rows) + " feature rows");
    }
    std::vector<bool> seen(rows, false);
    std::unordered_map<std::string, std::size_t> ids;
    for (std::size_t i = 0; i < meta.size(); ++i) {
        const auto& m = meta[i];
        if (m.row >= rows) {
            throw Error(ErrorCode::InvalidMeta, "record " + std::to_string(i + 1) + " references row " +
                                                    std::to_string(m.row) + " of a " +
                                                    std::to_string(rows) + "-row matrix");
        }
        if (seen[m.row]) {
            throw Error(ErrorCode::InvalidMeta, "row " + std::to_string(m.row) + " referenced twice");
        }
        seen[m.row] = true;
        if (!ids.emplace(m.instance_id, i).second) {
            throw Error(ErrorCode::InvalidMeta, "duplicate instance_id \"" + m.instance_id + "\"");
        }
        if (m.labeled && !m.gt_name_id) {
            throw Error(ErrorCode::InvalidMeta,
                        "labeled instance \"" + m.instance_id + "\" has no gt_name_id");
        }
        if (vocab_size && m.gt_name_id && *m.gt_name_id >= *vocab_size) {
            throw Error(ErrorCode::InvalidMeta, "instance \"" + m.instance_id + "\" has gt_name_id " +
                                                    std::to_string(*m.gt_name_id) +
                                                    " outside the vocabulary");
        }
    }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::Io, "write failed for " + path.string());
    }
}

}  // namespace scd
