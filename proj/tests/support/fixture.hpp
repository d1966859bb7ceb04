#pragma once

#include <filesystem>

#include <axis_atlas/codebook.hpp>
#include <axis_atlas/corpus_io.hpp>

namespace fixture {

inline std::filesystem::path dir() { return AXIS_ATLAS_FIXTURE_DIR; }
inline std::filesystem::path corpus_path() { return dir() / "bioart_corpus.json"; }
inline std::filesystem::path table_path() { return dir() / "bioart_embeddings.axeb"; }

inline const axis_atlas::Corpus& corpus() {
    static const auto c = axis_atlas::load_corpus(corpus_path());
    return c;
}

inline const axis_atlas::EmbeddingTable& table() {
    static const auto t = axis_atlas::load_embedding_table(table_path());
    return t;
}

/// Default configuration, seed 42; built once per process.
inline const axis_atlas::Codebook& codebook() {
    static const auto cb = axis_atlas::build_codebook(table(), axis_atlas::CodebookConfig{});
    return cb;
}

}  // namespace fixture
