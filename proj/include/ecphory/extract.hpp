#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ecphory/ingest.hpp"
#include "ecphory/model_clients.hpp"

namespace ecphory {

/// The atomic memory trace: one entity with its metadata and pointers to
/// every chunk it was extracted from. Identity is the normalized surface
/// name; alias resolution is deliberately out of scope.
struct Engram {
    std::string entity_id;  // normalize_entity_name(name)
    std::string name;
    std::string entity_type;  // open vocabulary
    std::string description;
    double importance = 0.5;  // stored but not consumed by retrieval
    std::set<std::string> source_chunk_ids;
};

struct ExtractionResult {
    std::string chunk_id;
    std::vector<Engram> engrams;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::vector<std::string> parse_warnings;
};

// Lowercase, trimmed, internal whitespace collapsed to single spaces.
std::string normalize_entity_name(const std::string& name);

// Default user-prompt template; `{chunk_text}` is the placeholder. A custom
// template must keep the placeholder and the JSON-array output contract.
extern const char* const kDefaultExtractionTemplate;

ChatRequest build_extraction_prompt(const Chunk& chunk, const std::string& user_template = {});

// Single-pass extraction: one chat call per chunk, no recall retries.
// Malformed entries degrade to warnings; only transport errors propagate.
ExtractionResult extract_entities(const Chunk& chunk, ChatClient& client,
                                  const std::string& user_template = {});

// Merges engrams with equal entity_id across chunks. All merge rules are
// order-free: source sets union, importance takes the max, description takes
// the longest (ties to the lexicographically smaller), type follows the
// winning description.
std::map<std::string, Engram> canonicalize(const std::vector<ExtractionResult>& results);

}  // namespace ecphory
