#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "ecphory/generate.hpp"
#include "ecphory/ingest.hpp"
#include "ecphory/model_clients.hpp"
#include "ecphory/retrieve.hpp"

namespace ecphory {

struct ClientConfig {
    std::string backend = "mock";  // mock | http
    // http backend
    HttpClientConfig http;
    // mock backend
    std::string fixture;        // rule / override file, optional
    std::size_t mock_dim = 64;  // embedding mock only
    std::string default_response;  // chat mock only
};

struct Config {
    ClientConfig chat;
    ClientConfig embed;
    ChunkingParams chunking;
    RetrievalParams retrieval;
    ContextMode generation_mode = ContextMode::entity_plus_chunk;
    std::string extraction_template_path;
    std::string generation_template_path;
    std::string corpus_path;
    std::string corpus_format = "jsonl";
    std::string memory_dir;
    std::string out_dir = "out";
    bool use_ann = false;  // attach the approximate index after load
    std::size_t ann_m = 16;
    std::size_t ann_ef_construction = 200;
    std::size_t ann_ef_search = 120;

    std::string load_extraction_template() const;
    std::string load_generation_template() const;
};

// Environment overrides: ECPHORY_CHAT_ENDPOINT, ECPHORY_EMBED_ENDPOINT,
// ECPHORY_API_TOKEN.
Config load_config(const std::filesystem::path& path);

std::unique_ptr<ChatClient> make_chat_client(const Config& config,
                                             std::shared_ptr<UsageLog> log);
std::unique_ptr<EmbeddingClient> make_embedding_client(const Config& config,
                                                       std::shared_ptr<UsageLog> log);

}  // namespace ecphory
