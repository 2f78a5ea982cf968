#pragma once

#include <string>
#include <vector>

#include "ecphory/memory.hpp"

namespace ecphory {

struct RetrievalParams {
    int k_initial = 20;        // breadth of the initial entity activation
    int retrieval_depth = 2;   // associative expansion rounds
    int k_final = 20;          // entities kept after the final re-rank
    int seed_count = 5;        // seeds per expansion round
    int direct_chunk_k = 10;   // direct chunk-index hits merged into C_init
    int final_chunk_count = 5; // grounding chunks passed to generation
    int expansion_factor = 3;  // per-round search width = k_initial * this
    bool hybrid_graph_expansion = false;  // also union graph neighbors of seeds

    void validate() const;
};

struct ScoredEntity {
    std::string entity_id;
    double score = 0.0;  // cosine against the query embedding
    int hop_found = 0;   // 0 = initial activation
};

/// Full per-query provenance: what was activated when, the expansion
/// centroids, and the final selections handed to generation.
struct RetrievalTrace {
    std::string query;
    std::vector<ScoredEntity> initial_entities;
    std::vector<std::vector<ScoredEntity>> per_hop_new_entities;  // one list per hop
    std::vector<ScoredEntity> final_entities;
    std::vector<std::string> final_chunks;
    std::vector<Embedding> centroids;  // one per hop

    std::string to_json(int indent = 2) const;
};

struct InitialActivation {
    Embedding query_embedding;
    std::vector<ScoredEntity> entities;   // top k_initial against the query
    std::vector<std::string> chunk_ids;   // merged+deduplicated initial context,
                                          // ordered by chunk-to-query cosine
};

// Activates the entity index with the whole-query embedding, then merges the
// activated entities' source chunks with a direct chunk-index search.
InitialActivation initial_activation(const std::string& query, const MemorySystem& ms,
                                     const RetrievalParams& params, EmbeddingClient& embedder,
                                     const std::string& tag = {});

// Score-weighted average of the seed entities' vectors, renormalized to unit
// length. Nonpositive scores are floored at a small epsilon so weights stay
// a convex combination.
Embedding weighted_centroid(const std::vector<ScoredEntity>& seeds, const MemorySystem& ms);

struct ExpansionResult {
    std::vector<ScoredEntity> entities;  // E_init plus everything discovered
    std::vector<std::vector<ScoredEntity>> per_hop_new;
    std::vector<Embedding> centroids;
};

// The multi-depth associative walk: per round, re-seed from the current best
// entities, search around their weighted centroid, and fuse the discoveries.
// New entities are scored against the query immediately so the next round's
// seed selection stays query-anchored.
ExpansionResult associative_search(const std::vector<ScoredEntity>& initial,
                                   const Embedding& query_embedding, const MemorySystem& ms,
                                   const RetrievalParams& params);

// Final anchoring step: rescores everything against the query embedding,
// discarding any influence of intermediate centroids, and keeps the top
// k_final.
std::vector<ScoredEntity> rerank_and_select(const std::vector<ScoredEntity>& candidates,
                                            const Embedding& query_embedding,
                                            const MemorySystem& ms, int k_final);

// The complete online workflow over a loaded memory system.
RetrievalTrace retrieve(const std::string& query, const MemorySystem& ms,
                        const RetrievalParams& params, EmbeddingClient& embedder,
                        const std::string& tag = {});

}  // namespace ecphory
