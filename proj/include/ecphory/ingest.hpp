#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ecphory/util.hpp"

namespace ecphory {

struct Document {
    std::string doc_id;
    std::string title;  // may be empty
    std::string body;
};

/// A contiguous segment of a document. `text` is a verbatim substring of the
/// document body spanning the chunk's word tokens; `token_count` counts those
/// words. chunk_id is `<doc_id>#<ordinal, 4 digits>` and is used as a
/// persistence key, so its format must not change.
struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t token_count = 0;
};

enum class CorpusFormat { jsonl, plain_dir };

CorpusFormat parse_corpus_format(const std::string& name);

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal);

// JSONL records are {"doc_id","title","body"}; title optional. In plain-dir
// format every regular file is one document with doc_id = filename.
// Duplicate doc_ids and records without doc_id/body are rejected.
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format);

void write_corpus_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path);

struct ChunkingParams {
    std::size_t max_tokens = 256;
    std::size_t overlap_tokens = 32;
};

// Sliding word-token window: stride = max_tokens - overlap_tokens, one chunk
// per window start below the document's token count. Deterministic.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params);

}  // namespace ecphory
