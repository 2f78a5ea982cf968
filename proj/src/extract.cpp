#include "ecphory/extract.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

namespace ecphory {

using nlohmann::json;

std::string normalize_entity_name(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    bool in_space = true;  // swallows leading whitespace
    for (unsigned char c : name) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

const char* const kDefaultExtractionTemplate =
    "Extract the core entities from the text below.\n"
    "Return a JSON array. Each element must be an object with fields:\n"
    "  \"name\": the entity's surface name,\n"
    "  \"type\": a short category such as person, place, date, org or concept,\n"
    "  \"description\": one sentence describing the entity in this text,\n"
    "  \"importance\": a number between 0 and 1.\n"
    "Return only the JSON array, with no commentary.\n"
    "\n"
    "TEXT:\n"
    "{chunk_text}\n";

static const char* const kExtractionSystemPrompt =
    "You are an information extraction engine. You read a text chunk and list "
    "the core entities it mentions as structured JSON.";

ChatRequest build_extraction_prompt(const Chunk& chunk, const std::string& user_template) {
    const std::string& tpl = user_template.empty() ? kDefaultExtractionTemplate : user_template;
    ChatRequest request;
    request.system_prompt = kExtractionSystemPrompt;
    request.user_prompt = render_template(tpl, {{"chunk_text", chunk.text}});
    request.temperature = 0.0;
    request.max_output_tokens = 2048;
    request.tag = "index:extract:" + chunk.chunk_id;
    return request;
}

namespace {

// Models wrap JSON in code fences or prose more often than not; accept the
// array wherever it is.
bool try_parse_entity_array(const std::string& text, json& out) {
    const std::string trimmed = trim(text);
    try {
        out = json::parse(trimmed);
        if (out.is_array()) return true;
    } catch (const json::exception&) {
    }
    const std::size_t open = trimmed.find('[');
    const std::size_t close = trimmed.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) return false;
    try {
        out = json::parse(trimmed.substr(open, close - open + 1));
        return out.is_array();
    } catch (const json::exception&) {
        return false;
    }
}

}  // namespace

ExtractionResult extract_entities(const Chunk& chunk, ChatClient& client,
                                  const std::string& user_template) {
    if (chunk.text.empty()) throw Error("cannot extract from an empty chunk");

    const ChatRequest request = build_extraction_prompt(chunk, user_template);
    const ChatResponse response = client.chat(request);

    ExtractionResult result;
    result.chunk_id = chunk.chunk_id;
    result.prompt_tokens = response.prompt_tokens;
    result.completion_tokens = response.completion_tokens;

    json entries;
    if (!try_parse_entity_array(response.text, entries)) {
        result.parse_warnings.push_back(chunk.chunk_id + ": unparseable extraction output");
        return result;
    }

    std::size_t index = 0;
    for (const auto& entry : entries) {
        const std::string where = chunk.chunk_id + " entry " + std::to_string(index++);
        if (!entry.is_object()) {
            result.parse_warnings.push_back(where + ": not an object, dropped");
            continue;
        }
        if (!entry.contains("name") || !entry["name"].is_string() ||
            normalize_entity_name(entry["name"].get<std::string>()).empty()) {
            result.parse_warnings.push_back(where + ": missing or empty name, dropped");
            continue;
        }
        Engram engram;
        engram.name = trim(entry["name"].get<std::string>());
        engram.entity_id = normalize_entity_name(engram.name);
        engram.entity_type = entry.contains("type") && entry["type"].is_string()
                                 ? entry["type"].get<std::string>()
                                 : "unknown";
        engram.description = entry.contains("description") && entry["description"].is_string()
                                 ? entry["description"].get<std::string>()
                                 : "";
        if (entry.contains("importance") && entry["importance"].is_number()) {
            const double raw = entry["importance"].get<double>();
            engram.importance = std::clamp(raw, 0.0, 1.0);
            if (raw < 0.0 || raw > 1.0)
                result.parse_warnings.push_back(where + ": importance clamped to [0,1]");
        } else {
            engram.importance = 0.5;
        }
        engram.source_chunk_ids.insert(chunk.chunk_id);
        result.engrams.push_back(std::move(engram));
    }
    return result;
}

std::map<std::string, Engram> canonicalize(const std::vector<ExtractionResult>& results) {
    std::map<std::string, Engram> canonical;
    for (const auto& result : results) {
        for (const auto& engram : result.engrams) {
            auto [it, inserted] = canonical.emplace(engram.entity_id, engram);
            if (inserted) continue;
            Engram& merged = it->second;
            // Surface names may differ in case/spacing; keep the smallest so
            // the merge is independent of arrival order.
            merged.name = std::min(merged.name, engram.name);
            merged.source_chunk_ids.insert(engram.source_chunk_ids.begin(),
                                           engram.source_chunk_ids.end());
            merged.importance = std::max(merged.importance, engram.importance);
            const bool takes_description =
                engram.description.size() > merged.description.size() ||
                (engram.description.size() == merged.description.size() &&
                 (engram.description < merged.description ||
                  (engram.description == merged.description &&
                   engram.entity_type < merged.entity_type)));
            if (takes_description) {
                merged.description = engram.description;
                merged.entity_type = engram.entity_type;
            }
        }
    }
    return canonical;
}

}  // namespace ecphory
