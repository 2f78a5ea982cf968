#include "ecphory/generate.hpp"

#include <sstream>

namespace ecphory {

ContextMode parse_context_mode(const std::string& name) {
    if (name == "entity_only") return ContextMode::entity_only;
    if (name == "entity_plus_chunk") return ContextMode::entity_plus_chunk;
    if (name == "chunk_only") return ContextMode::chunk_only;
    throw UsageError("unknown context mode: '" + name +
                "' (expected entity_only, entity_plus_chunk or chunk_only)");
}

std::string context_mode_name(ContextMode mode) {
    switch (mode) {
        case ContextMode::entity_only: return "entity_only";
        case ContextMode::entity_plus_chunk: return "entity_plus_chunk";
        case ContextMode::chunk_only: return "chunk_only";
    }
    return "unknown";
}

GenerationContext make_generation_context(const std::string& question, const RetrievalTrace& trace,
                                          const MemorySystem& ms, ContextMode mode) {
    GenerationContext context;
    context.question = question;
    context.mode = mode;
    for (const auto& entity : trace.final_entities) {
        const Engram& engram = ms.engrams.at(entity.entity_id);
        context.entities.push_back({engram.name, engram.entity_type, engram.description,
                                    entity.score});
        context.entity_ids.push_back(entity.entity_id);
    }
    for (const auto& chunk_id : trace.final_chunks) {
        context.chunks.push_back({chunk_id, ms.chunks.at(chunk_id).text});
        context.chunk_ids.push_back(chunk_id);
    }
    return context;
}

const char* const kDefaultGenerationTemplate =
    "Answer the question using only the context below. Reason step by step, "
    "then give a short final answer on its own line in the form "
    "\"Answer: <answer>\".\n"
    "\n"
    "{context_sections}"
    "QUESTION: {question}\n";

static const char* const kGenerationSystemPrompt =
    "You are a careful question answering assistant. You rely only on the "
    "provided context and reason step by step before answering.";

ChatRequest format_prompt(const GenerationContext& context, const std::string& user_template,
                          const std::string& tag) {
    if (trim(context.question).empty()) throw Error("question must be nonempty");

    std::ostringstream sections;
    const bool want_entities = context.mode != ContextMode::chunk_only;
    const bool want_chunks = context.mode != ContextMode::entity_only;

    if (want_entities) {
        sections << "KNOWN ENTITIES:\n";
        if (context.entities.empty()) {
            sections << "(none)\n";
        } else {
            for (const auto& entity : context.entities)
                sections << "- " << entity.name << " [" << entity.entity_type
                         << "]: " << entity.description << "\n";
        }
        sections << "\n";
    }
    if (want_chunks) {
        sections << "EVIDENCE:\n";
        if (context.chunks.empty()) {
            sections << "(none)\n";
        } else {
            for (const auto& chunk : context.chunks)
                sections << "[" << chunk.chunk_id << "]\n" << chunk.text << "\n";
        }
        sections << "\n";
    }

    const std::string& tpl = user_template.empty() ? kDefaultGenerationTemplate : user_template;
    const std::string rendered_sections = sections.str();
    ChatRequest request;
    request.system_prompt = kGenerationSystemPrompt;
    request.user_prompt = render_template(
        tpl, {{"context_sections", rendered_sections}, {"question", context.question}});
    request.temperature = 0.0;
    request.max_output_tokens = 1024;
    request.tag = tag;
    return request;
}

std::string extract_answer_span(const std::string& reply) {
    const std::string trimmed = trim(reply);
    const std::size_t last_newline = trimmed.rfind('\n');
    const std::string last_line =
        trim(last_newline == std::string::npos ? trimmed : trimmed.substr(last_newline + 1));
    constexpr std::string_view kMarker = "Answer:";
    if (last_line.size() >= kMarker.size() &&
        std::string_view(last_line).substr(0, kMarker.size()) == kMarker)
        return trim(last_line.substr(kMarker.size()));
    return trimmed;
}

Answer answer(const GenerationContext& context, ChatClient& client,
              const std::string& user_template, const std::string& tag) {
    const ChatRequest request = format_prompt(context, user_template, tag);
    const ChatResponse response = client.chat(request);

    Answer result;
    result.text = extract_answer_span(response.text);
    result.prompt_tokens = response.prompt_tokens;
    result.completion_tokens = response.completion_tokens;
    result.entity_ids = context.entity_ids;
    result.chunk_ids = context.chunk_ids;
    return result;
}

}  // namespace ecphory
