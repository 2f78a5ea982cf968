#include "ecphory/graph.hpp"

namespace ecphory {

std::set<std::string> KnowledgeGraph::neighbors(const std::string& node) const {
    std::set<std::string> out;
    // Edge keys are ordered pairs, so scan both orientations.
    for (auto it = edge_sources.lower_bound({node, ""});
         it != edge_sources.end() && it->first.first == node; ++it)
        out.insert(it->first.second);
    for (const auto& [edge, sources] : edge_sources)
        if (edge.second == node) out.insert(edge.first);
    return out;
}

KnowledgeGraph build_graph(const std::map<std::string, Engram>& engrams) {
    KnowledgeGraph graph;

    std::map<std::string, std::vector<std::string>> chunk_entities;
    for (const auto& [entity_id, engram] : engrams) {
        graph.nodes.insert(entity_id);
        for (const auto& chunk_id : engram.source_chunk_ids)
            chunk_entities[chunk_id].push_back(entity_id);
    }

    for (const auto& [chunk_id, entities] : chunk_entities) {
        for (std::size_t i = 0; i < entities.size(); ++i) {
            for (std::size_t j = i + 1; j < entities.size(); ++j) {
                if (entities[i] == entities[j]) continue;  // no self-loops
                graph.edge_sources[make_edge_key(entities[i], entities[j])].insert(chunk_id);
            }
        }
    }
    return graph;
}

}  // namespace ecphory
