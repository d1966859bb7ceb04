#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

/// Axis names of the released bioart dataset, in canonical order.
const std::vector<std::string>& default_axes();

struct Artwork {
    std::string id;
    std::string title;
    std::string artist;
    std::optional<int> year;
    /// Indexed like Corpus::axes. Keywords are normalized and deduplicated per axis.
    std::vector<std::vector<std::string>> keywords;

    std::size_t keyword_count() const;
    bool operator==(const Artwork&) const = default;
};

struct Corpus {
    std::vector<std::string> axes;
    /// Sorted by id.
    std::vector<Artwork> works;
    /// artist -> work ids, both sorted.
    std::map<std::string, std::vector<std::string>> artists;
    /// Non-fatal notes from parsing (e.g. duplicate keywords dropped).
    std::vector<std::string> warnings;

    std::optional<std::size_t> axis_index(std::string_view name) const;
    std::optional<std::size_t> work_index(std::string_view id) const;
    std::size_t assignment_count() const;
    /// Every distinct keyword across all works and axes, sorted.
    std::vector<std::string> vocabulary() const;

    bool operator==(const Corpus& other) const {
        return axes == other.axes && works == other.works && artists == other.artists;
    }
};

struct CorpusOptions {
    /// Unset accepts any non-empty axis list.
    std::optional<std::size_t> expected_axis_count = 13;
};

/// Case-fold (ASCII), trim, and collapse internal whitespace runs to one space.
std::string normalize_keyword(std::string_view raw);

Corpus parse_corpus(const nlohmann::json& doc, const CorpusOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
nlohmann::json corpus_to_json(const Corpus& corpus);

struct EmbeddingTable {
    std::size_t dimension = 0;
    /// File order.
    std::vector<std::string> keywords;
    /// One row per keyword, as stored (float32).
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vectors;

    std::size_t size() const { return keywords.size(); }
    std::optional<std::size_t> find(std::string_view keyword) const;
    /// Row as float64.
    Vector vector(std::size_t row) const;
    /// All rows as float64.
    Matrix as_matrix() const;

    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingTable make_embedding_table(std::vector<std::string> keywords, const Matrix& vectors);

EmbeddingTable parse_embedding_text(std::string_view text);
EmbeddingTable parse_embedding_binary(std::string_view bytes);
/// Detects the binary form by its magic bytes.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);

std::string embedding_table_to_text(const EmbeddingTable& table);
std::string embedding_table_to_binary(const EmbeddingTable& table);
void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path, bool binary);

struct ValidationReport {
    std::vector<std::string> missing;  // in corpus, absent from table
    std::vector<std::string> unused;   // in table, unused by corpus
    std::size_t present = 0;
    std::size_t assignments = 0;

    bool ok() const { return missing.empty(); }
};

ValidationReport validate_against(const Corpus& corpus, const EmbeddingTable& table);

}  // namespace axis_atlas
