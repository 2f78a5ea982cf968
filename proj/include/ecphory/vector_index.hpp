#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecphory/model_clients.hpp"

namespace ecphory {

class HnswIndex;

struct SearchHit {
    std::string id;
    double score = 0.0;  // cosine similarity, in [-1, 1]
};

// Textbook cosine in double precision over float32 data, sequentially
// accumulated. Zero-norm input scores 0.
double exact_cosine(std::span<const float> a, std::span<const float> b);

/// Dense id -> vector store. Rows are L2-normalized float32 at insert time;
/// search scores are still full double-precision cosines so results are
/// reproducible against an independent scan of the stored rows.
class VectorIndex {
public:
    VectorIndex() = default;
    explicit VectorIndex(std::size_t dim) : dim_(dim) {}

    void add(const std::string& id, const Embedding& embedding);

    // Stores the row verbatim (no normalization); for reloading persisted
    // rows, which are already unit length. Round-trips stay bit-exact.
    void add_raw(const std::string& id, std::span<const float> values);

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<float>& raw_data() const { return data_; }

    bool contains(const std::string& id) const { return row_of_.count(id) > 0; }
    std::span<const float> row(const std::string& id) const;
    std::span<const float> row_at(std::size_t index) const;

    // Exact top-k scan used when no ANN accelerator is attached.
    // Ordering: score descending, then id ascending.
    std::vector<SearchHit> search(const Embedding& query, std::size_t k) const;

    // Optional drop-in accelerator behind the same search operation. The
    // exact scan stays the reference; the accelerator trades exactness for
    // speed and must be validated against it. The accelerator references the
    // index it was built over, so attach only once the index has reached its
    // final address and will no longer be moved.
    void attach_ann(std::shared_ptr<const HnswIndex> ann) { ann_ = std::move(ann); }
    bool has_ann() const { return ann_ != nullptr; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;  // row-major, ids_.size() x dim_
    std::unordered_map<std::string, std::size_t> row_of_;
    std::shared_ptr<const HnswIndex> ann_;
};

inline std::vector<SearchHit> index_search(const VectorIndex& index, const Embedding& query,
                                           std::size_t k) {
    return index.search(query, k);
}

}  // namespace ecphory
