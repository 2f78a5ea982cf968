#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ecphory/extract.hpp"
#include "ecphory/graph.hpp"
#include "ecphory/ingest.hpp"
#include "ecphory/model_clients.hpp"
#include "ecphory/vector_index.hpp"

namespace ecphory {

inline constexpr const char* kMemoryFormatVersion = "ecphory/1";

struct BuildManifest {
    std::string format_version = kMemoryFormatVersion;
    std::string corpus_hash;
    std::string config_hash;
    std::string chat_model;
    std::string embed_model;
    std::string build_timestamp;  // UTC ISO-8601; ECPHORY_BUILD_TIME overrides
    std::uint64_t total_indexing_tokens = 0;
    std::size_t engram_count = 0;
    std::size_t chunk_count = 0;
    std::size_t edge_count = 0;
    std::size_t embedding_dim = 0;

    bool operator==(const BuildManifest&) const = default;
};

/// The complete memory side of the pipeline: all engrams and chunks, the
/// co-occurrence graph, and one vector index per granularity. Immutable
/// after build or load; concurrent read-only queries are safe.
struct MemorySystem {
    std::map<std::string, Engram> engrams;
    std::map<std::string, Chunk> chunks;
    KnowledgeGraph graph;
    VectorIndex entity_index;
    VectorIndex chunk_index;
    BuildManifest manifest;
};

// Entity embeddings cover name and description joined as "name: description"
// (the separator is fixed; it is part of the index contract).
std::string engram_embedding_text(const Engram& engram);
Embedding embed_engram(const Engram& engram, EmbeddingClient& embedder,
                       const std::string& tag = "index:embed");

struct BuildOptions {
    ChunkingParams chunking;
    std::string extraction_template;  // empty -> default template
    std::string chat_model_name = "unknown";
    std::string embed_model_name = "unknown";
    int workers = 0;  // 0 -> chat client's concurrency bound
    std::function<void(const std::string&)> warning_sink;
};

// Offline phase: chunk, extract (single pass, concurrent), canonicalize,
// build the graph, embed both granularities. total_indexing_tokens sums the
// extraction calls' usage.
MemorySystem build_memory_system(const std::vector<Document>& corpus, ChatClient& chat,
                                 EmbeddingClient& embedder, const BuildOptions& options = {});

// Directory layout: manifest.json, engrams.jsonl, chunks.jsonl, edges.jsonl,
// entity_index.f32, chunk_index.f32, checksums.txt. Matrix files are raw
// row-major little-endian float32; row order follows the sorted id order of
// the jsonl stores. load verifies version and checksums and reproduces the
// saved system exactly.
void save_memory_system(const MemorySystem& ms, const std::filesystem::path& dir);
MemorySystem load_memory_system(const std::filesystem::path& dir);

std::string hash_corpus(const std::vector<Document>& corpus);

}  // namespace ecphory
