#pragma once

#include <string>
#include <vector>

#include "ecphory/memory.hpp"
#include "ecphory/retrieve.hpp"

namespace ecphory {

// Which context components reach the generator. entity_only exists for the
// ablation showing that engrams index well but ground poorly on their own.
enum class ContextMode { entity_only, entity_plus_chunk, chunk_only };

ContextMode parse_context_mode(const std::string& name);
std::string context_mode_name(ContextMode mode);

struct ContextEntity {
    std::string name;
    std::string entity_type;
    std::string description;
    double score = 0.0;
};

struct ContextChunk {
    std::string chunk_id;
    std::string text;
};

struct GenerationContext {
    std::string question;
    std::vector<ContextEntity> entities;
    std::vector<ContextChunk> chunks;
    ContextMode mode = ContextMode::entity_plus_chunk;
    // Provenance carried through to the Answer.
    std::vector<std::string> entity_ids;
    std::vector<std::string> chunk_ids;
};

struct Answer {
    std::string text;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::vector<std::string> entity_ids;
    std::vector<std::string> chunk_ids;
};

// Resolves a trace's final selections against the memory system. The context
// lists exactly mirror trace.final_entities / trace.final_chunks.
GenerationContext make_generation_context(const std::string& question, const RetrievalTrace& trace,
                                          const MemorySystem& ms,
                                          ContextMode mode = ContextMode::entity_plus_chunk);

extern const char* const kDefaultGenerationTemplate;

// Deterministic prompt: instruction, KNOWN ENTITIES (one line each),
// EVIDENCE (verbatim chunks labeled by id), then the question. Sections are
// included per mode; an available-but-empty section renders "(none)".
ChatRequest format_prompt(const GenerationContext& context, const std::string& user_template = {},
                          const std::string& tag = {});

// One chat call. If the reply's final line starts with "Answer:", that
// suffix is the answer span; otherwise the whole trimmed reply is.
Answer answer(const GenerationContext& context, ChatClient& client,
              const std::string& user_template = {}, const std::string& tag = {});

std::string extract_answer_span(const std::string& reply);

}  // namespace ecphory
