#include "ecphory/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "ecphory/vector_index.hpp"

namespace ecphory {

namespace {

// Four independent accumulators so the reduction vectorizes without
// fast-math. Only graph navigation depends on these values; reported scores
// come from exact_cosine.
inline float dot_f(std::span<const float> a, std::span<const float> b) {
    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
    std::size_t i = 0;
    for (; i + 4 <= a.size(); i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < a.size(); ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

HnswIndex::HnswIndex(const VectorIndex& source, HnswParams params)
    : source_(source), params_(params), level_rng_(params.seed) {
    if (params_.m < 2) throw Error("hnsw m must be >= 2");
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.m));
    nodes_.reserve(source_.size());
    for (std::uint32_t i = 0; i < source_.size(); ++i) insert(i);
}

float HnswIndex::distance(std::uint32_t a, std::uint32_t b) const {
    return 1.0f - dot_f(source_.row_at(a), source_.row_at(b));
}

float HnswIndex::distance_to_query(std::span<const float> q, std::uint32_t node) const {
    return 1.0f - dot_f(q, source_.row_at(node));
}

std::uint32_t HnswIndex::greedy_descent(std::span<const float> q, std::uint32_t start,
                                        int from_layer, int to_layer) const {
    std::uint32_t current = start;
    float best = distance_to_query(q, current);
    for (int layer = from_layer; layer > to_layer; --layer) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t next : nodes_[current].neighbors[layer]) {
                const float d = distance_to_query(q, next);
                if (d < best) {
                    best = d;
                    current = next;
                    improved = true;
                }
            }
        }
    }
    return current;
}

std::vector<std::pair<float, std::uint32_t>> HnswIndex::search_layer(std::span<const float> q,
                                                                     std::uint32_t entry,
                                                                     std::size_t ef,
                                                                     int layer) const {
    using Scored = std::pair<float, std::uint32_t>;
    // Candidates ordered nearest-first, results farthest-first.
    std::priority_queue<Scored, std::vector<Scored>, std::greater<>> candidates;
    std::priority_queue<Scored> results;
    std::unordered_set<std::uint32_t> visited;

    const float d0 = distance_to_query(q, entry);
    candidates.emplace(d0, entry);
    results.emplace(d0, entry);
    visited.insert(entry);

    while (!candidates.empty()) {
        const auto [dist, node] = candidates.top();
        candidates.pop();
        if (dist > results.top().first && results.size() >= ef) break;
        for (std::uint32_t next : nodes_[node].neighbors[layer]) {
            if (!visited.insert(next).second) continue;
            const float d = distance_to_query(q, next);
            if (results.size() < ef || d < results.top().first) {
                candidates.emplace(d, next);
                results.emplace(d, next);
                if (results.size() > ef) results.pop();
            }
        }
    }

    std::vector<Scored> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());  // nearest first
    return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(
    std::vector<std::pair<float, std::uint32_t>> candidates, std::size_t m) const {
    // Heuristic pruning: keep a candidate only if it is closer to the base
    // point than to every already-kept neighbor. Preserves graph diversity.
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint32_t> selected;
    std::vector<std::pair<float, std::uint32_t>> discarded;
    for (const auto& [dist, node] : candidates) {
        if (selected.size() >= m) break;
        bool keep = true;
        for (std::uint32_t held : selected) {
            if (distance(node, held) < dist) {
                keep = false;
                break;
            }
        }
        if (keep)
            selected.push_back(node);
        else
            discarded.emplace_back(dist, node);
    }
    for (const auto& [dist, node] : discarded) {
        if (selected.size() >= m) break;
        selected.push_back(node);
    }
    return selected;
}

void HnswIndex::insert(std::uint32_t id) {
    // Geometric level assignment from raw engine bits (platform-stable).
    const double u =
        (static_cast<double>(level_rng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    const int level = static_cast<int>(-std::log(u) * level_mult_);

    Node node;
    node.neighbors.resize(level + 1);

    if (nodes_.empty()) {
        nodes_.push_back(std::move(node));
        entry_point_ = id;
        max_layer_ = level;
        return;
    }

    const std::span<const float> q = source_.row_at(id);
    std::uint32_t entry = greedy_descent(q, entry_point_, max_layer_, level);

    for (int layer = std::min(level, static_cast<int>(max_layer_)); layer >= 0; --layer) {
        auto candidates = search_layer(q, entry, params_.ef_construction, layer);
        entry = candidates.front().second;

        const std::size_t cap = layer == 0 ? params_.m * 2 : params_.m;
        auto selected = select_neighbors(candidates, params_.m);
        node.neighbors[layer] = selected;
        for (std::uint32_t peer : selected) {
            auto& peer_links = nodes_[peer].neighbors[layer];
            peer_links.push_back(id);
            if (peer_links.size() > cap) {
                std::vector<std::pair<float, std::uint32_t>> scored;
                scored.reserve(peer_links.size());
                for (std::uint32_t n : peer_links) scored.emplace_back(distance(peer, n), n);
                peer_links = select_neighbors(std::move(scored), cap);
            }
        }
    }

    nodes_.push_back(std::move(node));
    if (level > max_layer_) {
        max_layer_ = level;
        entry_point_ = id;
    }
}

std::vector<SearchHit> HnswIndex::search(const Embedding& query, std::size_t k) const {
    return search(query, k, params_.ef_search);
}

std::vector<SearchHit> HnswIndex::search(const Embedding& query, std::size_t k,
                                         std::size_t ef) const {
    if (nodes_.empty()) return {};
    if (query.dim() != source_.dim()) throw Error("hnsw query dimension mismatch");

    // Queries are normalized like stored rows so dot == cosine.
    double norm_sq = 0.0;
    for (float v : query.values) norm_sq += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(norm_sq);
    std::vector<float> normalized(query.values.size());
    for (std::size_t i = 0; i < query.values.size(); ++i)
        normalized[i] = norm == 0.0 ? 0.0f : static_cast<float>(query.values[i] / norm);
    const std::span<const float> q(normalized.data(), normalized.size());

    const std::uint32_t entry = greedy_descent(q, entry_point_, max_layer_, 0);
    auto found = search_layer(q, entry, std::max(ef, k), 0);

    std::vector<SearchHit> hits;
    hits.reserve(std::min(k, found.size()));
    for (const auto& [dist, node] : found) {
        if (hits.size() >= k) break;
        // Report the same double-precision cosine the exact scan would.
        hits.push_back({source_.ids()[node], exact_cosine(source_.row_at(node), q)});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    return hits;
}

}  // namespace ecphory
