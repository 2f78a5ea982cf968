#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>

#include "ecphory/extract.hpp"

namespace ecphory {

// Unordered entity pair stored in canonical (first < second) order.
using EdgeKey = std::pair<std::string, std::string>;

inline EdgeKey make_edge_key(const std::string& a, const std::string& b) {
    return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

/// Undirected, unweighted co-occurrence graph over engrams. An edge exists
/// iff its two entities share at least one source chunk; edge_sources keeps
/// the witnessing chunks for provenance.
struct KnowledgeGraph {
    std::set<std::string> nodes;
    std::map<EdgeKey, std::set<std::string>> edge_sources;

    bool has_edge(const std::string& a, const std::string& b) const {
        return edge_sources.count(make_edge_key(a, b)) > 0;
    }
    std::set<std::string> neighbors(const std::string& node) const;
    std::size_t edge_count() const { return edge_sources.size(); }
};

KnowledgeGraph build_graph(const std::map<std::string, Engram>& engrams);

}  // namespace ecphory
