#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecphory/model_clients.hpp"

namespace ecphory {

class VectorIndex;
struct SearchHit;

struct HnswParams {
    std::size_t m = 16;                // neighbors per node per layer
    std::size_t ef_construction = 200;
    std::size_t ef_search = 120;
    std::uint64_t seed = 0x5eedULL;    // level assignment; fixed for reproducible builds
};

/// Hierarchical navigable-small-world graph over the rows of a VectorIndex.
/// Distance is 1 - dot on the index's normalized rows. Construction and
/// search are deterministic for a fixed seed and insertion order.
class HnswIndex {
public:
    HnswIndex(const VectorIndex& source, HnswParams params = {});

    std::vector<SearchHit> search(const Embedding& query, std::size_t k) const;
    std::vector<SearchHit> search(const Embedding& query, std::size_t k, std::size_t ef) const;

    const HnswParams& params() const { return params_; }

private:
    struct Node {
        std::vector<std::vector<std::uint32_t>> neighbors;  // one list per layer
    };

    float distance(std::uint32_t a, std::uint32_t b) const;
    float distance_to_query(std::span<const float> q, std::uint32_t node) const;
    std::uint32_t greedy_descent(std::span<const float> q, std::uint32_t start, int from_layer,
                                 int to_layer) const;
    std::vector<std::pair<float, std::uint32_t>> search_layer(std::span<const float> q,
                                                              std::uint32_t entry, std::size_t ef,
                                                              int layer) const;
    std::vector<std::uint32_t> select_neighbors(
        std::vector<std::pair<float, std::uint32_t>> candidates, std::size_t m) const;
    void insert(std::uint32_t id);

    const VectorIndex& source_;
    HnswParams params_;
    std::vector<Node> nodes_;
    std::int32_t max_layer_ = -1;
    std::uint32_t entry_point_ = 0;
    double level_mult_ = 0.0;
    std::mt19937_64 level_rng_;
};

}  // namespace ecphory
