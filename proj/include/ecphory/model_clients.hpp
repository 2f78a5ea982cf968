#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ecphory/util.hpp"

namespace ecphory {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    // Accounting label, never sent on the wire ("index:extract", "query:<id>", ...).
    std::string tag;
};

struct ChatResponse {
    std::string text;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    // True when the backend omitted usage and the counts are the
    // words*4/3 estimate.
    bool usage_estimated = false;
};

struct Embedding {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

// One backend call, as recorded for token accounting. Embedding calls carry
// their estimate in prompt_tokens with completion_tokens = 0.
struct UsageRecord {
    enum class Kind { chat, embed };
    Kind kind = Kind::chat;
    std::string tag;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool estimated = false;
};

/// Append-only, thread-safe call log. Reports recompute token totals from
/// this log, so every client implementation must record each call.
class UsageLog {
public:
    void record(UsageRecord rec);
    std::vector<UsageRecord> snapshot() const;
    std::size_t size() const;
    std::uint64_t total_for_tag_prefix(std::string_view prefix) const;
    std::uint64_t total_for_tag(std::string_view tag) const;
    // Sums only records appended at or after `since`; lets a run scope its
    // accounting to its own calls when the log is shared across runs.
    std::uint64_t total_for_tag_since(std::string_view tag, std::size_t since) const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::vector<UsageRecord> records_;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResponse chat(const ChatRequest& request) = 0;
    virtual int max_concurrency() const { return 4; }
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    // One embedding per input, order preserved, one dim per client.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                         const std::string& tag = {}) = 0;
    virtual std::size_t embedding_dim() const = 0;

    Embedding embed_one(const std::string& text, const std::string& tag = {});
};

struct HttpClientConfig {
    std::string endpoint;  // e.g. http://localhost:11434
    std::string model;
    std::string api_token;       // optional bearer token
    double timeout_seconds = 60.0;
    int max_retries = 3;         // attempts on transport/5xx failures
    double backoff_seconds = 0.5;  // doubled after each failed attempt
    int max_concurrency = 4;
    std::size_t max_batch = 64;  // embedding batch bound
};

/// Chat-completions-style HTTP JSON protocol (messages in, choices + usage
/// out), as served by common local model servers.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config, std::shared_ptr<UsageLog> log = nullptr);
    ~HttpChatClient() override;

    ChatResponse chat(const ChatRequest& request) override;
    int max_concurrency() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpEmbeddingClient : public EmbeddingClient {
public:
    explicit HttpEmbeddingClient(HttpClientConfig config, std::shared_ptr<UsageLog> log = nullptr);
    ~HttpEmbeddingClient() override;

    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string& tag) override;
    std::size_t embedding_dim() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// A scripted response rule. A rule fires when every entry of match_all
// occurs in "<system>\n<user>"; first firing rule wins.
struct MockChatRule {
    std::vector<std::string> match_all;
    std::string response;
    std::int64_t prompt_tokens = -1;      // <0: use the estimate rule
    std::int64_t completion_tokens = -1;  // <0: use the estimate rule
    bool fail = false;                    // simulate a transport failure
};

/// Table-driven offline chat backend. Without a matching rule it answers
/// with a canned response keyed by the prompt hash, so it is a total,
/// deterministic function of the request.
class MockChatClient : public ChatClient {
public:
    MockChatClient() = default;
    explicit MockChatClient(std::vector<MockChatRule> rules,
                            std::shared_ptr<UsageLog> log = nullptr);

    static MockChatClient from_fixture_file(const std::filesystem::path& path,
                                            std::shared_ptr<UsageLog> log = nullptr);

    ChatResponse chat(const ChatRequest& request) override;

    void set_default_response(std::string response) { default_response_ = std::move(response); }

private:
    std::vector<MockChatRule> rules_;
    std::optional<std::string> default_response_;
    std::shared_ptr<UsageLog> log_;
};

// Deterministic embedding of `text`: an mt19937_64 stream seeded with
// FNV-1a(text), mapped to [-1, 1) without platform-dependent distributions,
// then L2-normalized. Identical across processes and platforms.
Embedding mock_embed_spec(const std::string& text, std::size_t dim);

/// Hash-based embedder with optional planted vectors: exact-text overrides
/// take precedence over the hash construction, which lets fixtures place
/// entities at engineered positions while everything else stays random.
class MockEmbeddingClient : public EmbeddingClient {
public:
    explicit MockEmbeddingClient(std::size_t dim, std::shared_ptr<UsageLog> log = nullptr);

    static MockEmbeddingClient from_fixture_file(const std::filesystem::path& path,
                                                 std::shared_ptr<UsageLog> log = nullptr);

    std::vector<Embedding> embed(const std::vector<std::string>& texts,
                                 const std::string& tag) override;
    std::size_t embedding_dim() const override { return dim_; }

    void plant(const std::string& text, std::vector<float> vector);

private:
    std::size_t dim_;
    std::map<std::string, std::vector<float>> overrides_;
    std::shared_ptr<UsageLog> log_;
};

}  // namespace ecphory
