#include "ecphory/retrieve.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

namespace ecphory {

using nlohmann::json;

void RetrievalParams::validate() const {
    if (k_initial < 1) throw UsageError("k_initial must be >= 1");
    if (retrieval_depth < 0) throw UsageError("retrieval_depth must be >= 0");
    if (k_final < 1) throw UsageError("k_final must be >= 1");
    if (seed_count < 1) throw UsageError("seed_count must be >= 1");
    if (seed_count > k_initial) throw UsageError("seed_count must not exceed k_initial");
    if (direct_chunk_k < 1) throw UsageError("direct_chunk_k must be >= 1");
    if (final_chunk_count < 1) throw UsageError("final_chunk_count must be >= 1");
    if (expansion_factor < 1) throw UsageError("expansion_factor must be >= 1");
}

namespace {

json scored_to_json(const ScoredEntity& e) {
    return json{{"entity_id", e.entity_id}, {"score", e.score}, {"hop_found", e.hop_found}};
}

void sort_by_score_then_id(std::vector<ScoredEntity>& entities) {
    std::sort(entities.begin(), entities.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity_id < b.entity_id;
    });
}

}  // namespace

std::string RetrievalTrace::to_json(int indent) const {
    json hops = json::array();
    for (const auto& hop : per_hop_new_entities) {
        json list = json::array();
        for (const auto& e : hop) list.push_back(scored_to_json(e));
        hops.push_back(list);
    }
    json centroid_list = json::array();
    for (const auto& c : centroids) centroid_list.push_back(c.values);
    json initial = json::array();
    for (const auto& e : initial_entities) initial.push_back(scored_to_json(e));
    json final_list = json::array();
    for (const auto& e : final_entities) final_list.push_back(scored_to_json(e));

    json doc{{"query", query},
             {"initial_entities", initial},
             {"per_hop_new_entities", hops},
             {"final_entities", final_list},
             {"final_chunks", final_chunks},
             {"centroids", centroid_list}};
    return doc.dump(indent) + "\n";
}

InitialActivation initial_activation(const std::string& query, const MemorySystem& ms,
                                     const RetrievalParams& params, EmbeddingClient& embedder,
                                     const std::string& tag) {
    if (trim(query).empty()) throw Error("query must be nonempty");
    if (ms.engrams.empty() || ms.chunks.empty()) throw Error("memory system is empty");
    params.validate();

    InitialActivation activation;
    activation.query_embedding = embedder.embed_one(query, tag);

    const auto entity_hits =
        index_search(ms.entity_index, activation.query_embedding, params.k_initial);
    for (const auto& hit : entity_hits)
        activation.entities.push_back({hit.id, hit.score, 0});

    // Grounding chunks of the activated entities, merged with direct hits.
    std::unordered_set<std::string> seen;
    std::vector<std::string> merged;
    for (const auto& entity : activation.entities) {
        const Engram& engram = ms.engrams.at(entity.entity_id);
        for (const auto& chunk_id : engram.source_chunk_ids)
            if (seen.insert(chunk_id).second) merged.push_back(chunk_id);
    }
    const auto direct_hits =
        index_search(ms.chunk_index, activation.query_embedding, params.direct_chunk_k);
    for (const auto& hit : direct_hits)
        if (seen.insert(hit.id).second) merged.push_back(hit.id);

    const std::span<const float> q(activation.query_embedding.values.data(),
                                   activation.query_embedding.values.size());
    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(merged.size());
    for (const auto& chunk_id : merged)
        ranked.emplace_back(exact_cosine(ms.chunk_index.row(chunk_id), q), chunk_id);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [score, chunk_id] : ranked) activation.chunk_ids.push_back(chunk_id);
    return activation;
}

Embedding weighted_centroid(const std::vector<ScoredEntity>& seeds, const MemorySystem& ms) {
    if (seeds.empty()) throw Error("weighted_centroid requires at least one seed");
    constexpr double kEpsilon = 1e-6;

    double weight_sum = 0.0;
    for (const auto& seed : seeds) weight_sum += std::max(seed.score, kEpsilon);

    const std::size_t dim = ms.entity_index.dim();
    std::vector<double> sum(dim, 0.0);
    for (const auto& seed : seeds) {
        const double weight = std::max(seed.score, kEpsilon) / weight_sum;
        const auto row = ms.entity_index.row(seed.entity_id);
        for (std::size_t i = 0; i < dim; ++i)
            sum[i] += weight * static_cast<double>(row[i]);
    }

    double norm_sq = 0.0;
    for (double v : sum) norm_sq += v * v;
    double norm = std::sqrt(norm_sq);
    if (norm < 1e-12) {
        // Opposed seed vectors cancelled out; fall back to the best seed.
        const auto row = ms.entity_index.row(seeds.front().entity_id);
        Embedding fallback;
        fallback.values.assign(row.begin(), row.end());
        return fallback;
    }
    Embedding centroid;
    centroid.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        centroid.values[i] = static_cast<float>(sum[i] / norm);
    return centroid;
}

ExpansionResult associative_search(const std::vector<ScoredEntity>& initial,
                                   const Embedding& query_embedding, const MemorySystem& ms,
                                   const RetrievalParams& params) {
    params.validate();

    ExpansionResult result;
    result.entities = initial;

    std::unordered_set<std::string> known;
    for (const auto& entity : result.entities) known.insert(entity.entity_id);

    const std::span<const float> q(query_embedding.values.data(), query_embedding.values.size());

    for (int hop = 1; hop <= params.retrieval_depth; ++hop) {
        // Seeds: current best by query-anchored score, recomputed globally
        // each round.
        std::vector<ScoredEntity> seeds = result.entities;
        sort_by_score_then_id(seeds);
        if (seeds.size() > static_cast<std::size_t>(params.seed_count))
            seeds.resize(params.seed_count);
        if (seeds.empty()) break;

        const Embedding centroid = weighted_centroid(seeds, ms);
        result.centroids.push_back(centroid);

        const std::size_t width =
            static_cast<std::size_t>(params.k_initial) * static_cast<std::size_t>(params.expansion_factor);
        auto hits = index_search(ms.entity_index, centroid, width);

        std::vector<std::string> discovered_ids;
        for (const auto& hit : hits)
            if (!known.count(hit.id)) discovered_ids.push_back(hit.id);

        if (params.hybrid_graph_expansion) {
            for (const auto& seed : seeds) {
                for (const auto& neighbor : ms.graph.neighbors(seed.entity_id))
                    if (!known.count(neighbor) &&
                        std::find(discovered_ids.begin(), discovered_ids.end(), neighbor) ==
                            discovered_ids.end())
                        discovered_ids.push_back(neighbor);
            }
        }

        std::vector<ScoredEntity> new_entities;
        for (const auto& entity_id : discovered_ids) {
            // Scored against the query right away, not the centroid, so the
            // next round's seeds stay anchored.
            const double score = exact_cosine(ms.entity_index.row(entity_id), q);
            new_entities.push_back({entity_id, score, hop});
            known.insert(entity_id);
        }
        result.entities.insert(result.entities.end(), new_entities.begin(), new_entities.end());
        result.per_hop_new.push_back(std::move(new_entities));
    }
    return result;
}

std::vector<ScoredEntity> rerank_and_select(const std::vector<ScoredEntity>& candidates,
                                            const Embedding& query_embedding,
                                            const MemorySystem& ms, int k_final) {
    if (k_final < 1) throw Error("k_final must be >= 1");
    const std::span<const float> q(query_embedding.values.data(), query_embedding.values.size());

    std::vector<ScoredEntity> ranked;
    ranked.reserve(candidates.size());
    for (const auto& candidate : candidates) {
        ScoredEntity entity = candidate;
        entity.score = exact_cosine(ms.entity_index.row(entity.entity_id), q);
        ranked.push_back(std::move(entity));
    }
    sort_by_score_then_id(ranked);
    if (ranked.size() > static_cast<std::size_t>(k_final)) ranked.resize(k_final);
    return ranked;
}

RetrievalTrace retrieve(const std::string& query, const MemorySystem& ms,
                        const RetrievalParams& params, EmbeddingClient& embedder,
                        const std::string& tag) {
    const InitialActivation activation = initial_activation(query, ms, params, embedder, tag);
    const ExpansionResult expansion =
        associative_search(activation.entities, activation.query_embedding, ms, params);

    RetrievalTrace trace;
    trace.query = query;
    trace.initial_entities = activation.entities;
    trace.per_hop_new_entities = expansion.per_hop_new;
    trace.centroids = expansion.centroids;
    trace.final_entities =
        rerank_and_select(expansion.entities, activation.query_embedding, ms, params.k_final);

    const std::size_t chunk_count =
        std::min<std::size_t>(params.final_chunk_count, activation.chunk_ids.size());
    trace.final_chunks.assign(activation.chunk_ids.begin(),
                              activation.chunk_ids.begin() + chunk_count);
    return trace;
}

}  // namespace ecphory
