#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ecphory/eval.hpp"
#include "ecphory/ingest.hpp"
#include "ecphory/model_clients.hpp"

namespace ecphory {

struct SyntheticOptions {
    // Adversarial variant: per-chain distractor entities crowd the head of
    // the query ranking so bridge entities fall outside the initial
    // activation window and only associative expansion can reach them.
    bool adversarial = false;
    int distractors_per_chain = -1;  // -1: 20 when adversarial, else 0
    std::size_t dim = 0;             // 0: smallest dimension that fits the layout
};

/// A desk-scale multi-hop benchmark with fully scripted model behavior.
/// Every chain is a path of entities planted on a 2-plane of embedding
/// space; consecutive entities co-occur in exactly one document and each
/// question asks for the terminal entity given the head. chat_rules script
/// both extraction and generation; embedding_overrides plant the geometry.
struct SyntheticSuite {
    std::vector<Document> corpus;
    std::vector<QAExample> examples;
    BridgeMap bridge_map;
    std::vector<MockChatRule> chat_rules;
    std::map<std::string, std::vector<float>> embedding_overrides;
    std::size_t dim = 0;

    MockChatClient make_chat_client(std::shared_ptr<UsageLog> log = nullptr) const;
    MockEmbeddingClient make_embedding_client(std::shared_ptr<UsageLog> log = nullptr) const;
};

SyntheticSuite make_synthetic_corpus(int n_chains, int hops, std::uint64_t seed,
                                     const SyntheticOptions& options = {});

// Writes corpus.jsonl, examples.jsonl, chat_fixture.json, embed_fixture.json,
// bridge_map.json and a ready-to-run config.json into dir.
void write_synthetic_suite(const SyntheticSuite& suite, const std::filesystem::path& dir);

BridgeMap load_bridge_map(const std::filesystem::path& path);

}  // namespace ecphory
