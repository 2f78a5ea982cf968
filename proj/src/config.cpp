#include "ecphory/config.hpp"

#include <cstdlib>

#include <json.hpp>

namespace ecphory {

using nlohmann::json;

namespace {

void read_client(const json& doc, ClientConfig& client) {
    client.backend = doc.value("backend", client.backend);
    client.http.endpoint = doc.value("endpoint", client.http.endpoint);
    client.http.model = doc.value("model", client.http.model);
    client.http.api_token = doc.value("api_token", client.http.api_token);
    client.http.timeout_seconds = doc.value("timeout_seconds", client.http.timeout_seconds);
    client.http.max_retries = doc.value("max_retries", client.http.max_retries);
    client.http.backoff_seconds = doc.value("backoff_seconds", client.http.backoff_seconds);
    client.http.max_concurrency = doc.value("max_concurrency", client.http.max_concurrency);
    client.http.max_batch = doc.value("max_batch", client.http.max_batch);
    client.fixture = doc.value("fixture", client.fixture);
    client.mock_dim = doc.value("dim", client.mock_dim);
    client.default_response = doc.value("default_response", client.default_response);
    if (client.backend != "mock" && client.backend != "http")
        throw UsageError("client backend must be 'mock' or 'http', got '" + client.backend + "'");
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw UsageError("bad config " + path.string() + ": " + e.what());
    }

    Config config;
    if (doc.contains("chat")) read_client(doc["chat"], config.chat);
    if (doc.contains("embed")) read_client(doc["embed"], config.embed);
    if (doc.contains("chunking")) {
        config.chunking.max_tokens = doc["chunking"].value("max_tokens", config.chunking.max_tokens);
        config.chunking.overlap_tokens =
            doc["chunking"].value("overlap_tokens", config.chunking.overlap_tokens);
    }
    if (doc.contains("retrieval")) {
        const json& r = doc["retrieval"];
        RetrievalParams& p = config.retrieval;
        p.k_initial = r.value("k_initial", p.k_initial);
        p.retrieval_depth = r.value("retrieval_depth", p.retrieval_depth);
        p.k_final = r.value("k_final", p.k_final);
        p.seed_count = r.value("seed_count", p.seed_count);
        p.direct_chunk_k = r.value("direct_chunk_k", p.direct_chunk_k);
        p.final_chunk_count = r.value("final_chunk_count", p.final_chunk_count);
        p.expansion_factor = r.value("expansion_factor", p.expansion_factor);
        p.hybrid_graph_expansion = r.value("hybrid_graph_expansion", p.hybrid_graph_expansion);
    }
    if (doc.contains("generation_mode"))
        config.generation_mode = parse_context_mode(doc["generation_mode"].get<std::string>());
    if (doc.contains("prompts")) {
        config.extraction_template_path =
            doc["prompts"].value("extraction_template", config.extraction_template_path);
        config.generation_template_path =
            doc["prompts"].value("generation_template", config.generation_template_path);
    }
    if (doc.contains("paths")) {
        const json& p = doc["paths"];
        config.corpus_path = p.value("corpus", config.corpus_path);
        config.corpus_format = p.value("corpus_format", config.corpus_format);
        config.memory_dir = p.value("memory_dir", config.memory_dir);
        config.out_dir = p.value("out_dir", config.out_dir);
    }
    if (doc.contains("index")) {
        const json& idx = doc["index"];
        config.use_ann = idx.value("use_ann", config.use_ann);
        config.ann_m = idx.value("ann_m", config.ann_m);
        config.ann_ef_construction = idx.value("ann_ef_construction", config.ann_ef_construction);
        config.ann_ef_search = idx.value("ann_ef_search", config.ann_ef_search);
    }

    if (const char* endpoint = std::getenv("ECPHORY_CHAT_ENDPOINT"))
        config.chat.http.endpoint = endpoint;
    if (const char* endpoint = std::getenv("ECPHORY_EMBED_ENDPOINT"))
        config.embed.http.endpoint = endpoint;
    if (const char* token = std::getenv("ECPHORY_API_TOKEN")) {
        config.chat.http.api_token = token;
        config.embed.http.api_token = token;
    }

    // Referenced files must exist up front; a 10k-chunk index run should not
    // die late on a typo.
    auto check_exists = [](const std::string& path, const char* what) {
        if (!path.empty() && !std::filesystem::exists(path))
            throw UsageError(std::string(what) + " path does not exist: " + path);
    };
    check_exists(config.chat.fixture, "chat fixture");
    check_exists(config.embed.fixture, "embedding fixture");
    check_exists(config.extraction_template_path, "extraction template");
    check_exists(config.generation_template_path, "generation template");
    return config;
}

std::string Config::load_extraction_template() const {
    if (extraction_template_path.empty()) return {};
    return read_text_file(extraction_template_path);
}

std::string Config::load_generation_template() const {
    if (generation_template_path.empty()) return {};
    return read_text_file(generation_template_path);
}

std::unique_ptr<ChatClient> make_chat_client(const Config& config, std::shared_ptr<UsageLog> log) {
    if (config.chat.backend == "http")
        return std::make_unique<HttpChatClient>(config.chat.http, std::move(log));
    auto client = config.chat.fixture.empty()
                      ? std::make_unique<MockChatClient>(std::vector<MockChatRule>{}, log)
                      : std::make_unique<MockChatClient>(
                            MockChatClient::from_fixture_file(config.chat.fixture, log));
    if (!config.chat.default_response.empty())
        client->set_default_response(config.chat.default_response);
    return client;
}

std::unique_ptr<EmbeddingClient> make_embedding_client(const Config& config,
                                                       std::shared_ptr<UsageLog> log) {
    if (config.embed.backend == "http")
        return std::make_unique<HttpEmbeddingClient>(config.embed.http, std::move(log));
    if (config.embed.fixture.empty())
        return std::make_unique<MockEmbeddingClient>(config.embed.mock_dim, std::move(log));
    return std::make_unique<MockEmbeddingClient>(
        MockEmbeddingClient::from_fixture_file(config.embed.fixture, std::move(log)));
}

}  // namespace ecphory
