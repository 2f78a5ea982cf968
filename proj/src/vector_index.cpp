#include "ecphory/vector_index.hpp"

#include <algorithm>
#include <cmath>

#include "ecphory/hnsw.hpp"

namespace ecphory {

double exact_cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        norm_a += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        norm_b += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    const double denom = std::sqrt(norm_a) * std::sqrt(norm_b);
    if (denom == 0.0) return 0.0;
    const double score = dot / denom;
    return std::clamp(score, -1.0, 1.0);
}

void VectorIndex::add(const std::string& id, const Embedding& embedding) {
    if (id.empty()) throw Error("index id must be nonempty");
    if (dim_ == 0) dim_ = embedding.dim();
    if (embedding.dim() != dim_)
        throw Error("dimension mismatch adding '" + id + "': " + std::to_string(embedding.dim()) +
                    " vs index dim " + std::to_string(dim_));
    if (!row_of_.emplace(id, ids_.size()).second)
        throw Error("duplicate index id '" + id + "'");

    double norm_sq = 0.0;
    for (float v : embedding.values) {
        if (!std::isfinite(v)) throw Error("non-finite vector component for '" + id + "'");
        norm_sq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double norm = std::sqrt(norm_sq);
    ids_.push_back(id);
    data_.reserve(data_.size() + dim_);
    for (float v : embedding.values)
        data_.push_back(norm == 0.0 ? 0.0f : static_cast<float>(static_cast<double>(v) / norm));
}

void VectorIndex::add_raw(const std::string& id, std::span<const float> values) {
    if (id.empty()) throw Error("index id must be nonempty");
    if (dim_ == 0) dim_ = values.size();
    if (values.size() != dim_)
        throw Error("dimension mismatch adding '" + id + "': " + std::to_string(values.size()) +
                    " vs index dim " + std::to_string(dim_));
    if (!row_of_.emplace(id, ids_.size()).second)
        throw Error("duplicate index id '" + id + "'");
    for (float v : values)
        if (!std::isfinite(v)) throw Error("non-finite vector component for '" + id + "'");
    ids_.push_back(id);
    data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const float> VectorIndex::row(const std::string& id) const {
    auto it = row_of_.find(id);
    if (it == row_of_.end()) throw Error("unknown index id '" + id + "'");
    return row_at(it->second);
}

std::span<const float> VectorIndex::row_at(std::size_t index) const {
    return {data_.data() + index * dim_, dim_};
}

std::vector<SearchHit> VectorIndex::search(const Embedding& query, std::size_t k) const {
    if (k == 0) throw Error("search k must be >= 1");
    if (query.dim() != dim_)
        throw Error("query dimension " + std::to_string(query.dim()) + " does not match index dim " +
                    std::to_string(dim_));
    if (ids_.empty()) return {};

    if (ann_) return ann_->search(query, k);

    std::vector<SearchHit> hits;
    hits.reserve(ids_.size());
    const std::span<const float> q(query.values.data(), query.values.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
        hits.push_back({ids_[i], exact_cosine(row_at(i), q)});

    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace ecphory
