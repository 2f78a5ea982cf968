#include "ecphory/model_clients.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ecphory {

using nlohmann::json;

void UsageLog::record(UsageRecord rec) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(rec));
}

std::vector<UsageRecord> UsageLog::snapshot() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::uint64_t UsageLog::total_for_tag_prefix(std::string_view prefix) const {
    std::lock_guard lock(mutex_);
    std::uint64_t total = 0;
    for (const auto& rec : records_) {
        if (rec.tag.size() >= prefix.size() &&
            std::string_view(rec.tag).substr(0, prefix.size()) == prefix)
            total += rec.prompt_tokens + rec.completion_tokens;
    }
    return total;
}

std::uint64_t UsageLog::total_for_tag(std::string_view tag) const {
    return total_for_tag_since(tag, 0);
}

std::uint64_t UsageLog::total_for_tag_since(std::string_view tag, std::size_t since) const {
    std::lock_guard lock(mutex_);
    std::uint64_t total = 0;
    for (std::size_t i = since; i < records_.size(); ++i)
        if (records_[i].tag == tag) total += records_[i].prompt_tokens + records_[i].completion_tokens;
    return total;
}

std::size_t UsageLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

void UsageLog::clear() {
    std::lock_guard lock(mutex_);
    records_.clear();
}

Embedding EmbeddingClient::embed_one(const std::string& text, const std::string& tag) {
    auto result = embed({text}, tag);
    return std::move(result.front());
}

namespace {

// Bounded in-flight request gate. The client enforces the limit so callers
// may fan out freely.
class ConcurrencyGate {
public:
    explicit ConcurrencyGate(int limit) : limit_(std::max(1, limit)) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    int limit_;
    int active_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct GateGuard {
    ConcurrencyGate& gate;
    explicit GateGuard(ConcurrencyGate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
};

std::string bearer_header(const std::string& token) {
    return "Bearer " + token;
}

// POSTs with retry on transport errors and 5xx. Backoff doubles per attempt.
json post_json_with_retry(httplib::Client& client, const std::string& path, const json& body,
                          const HttpClientConfig& config) {
    std::string payload = body.dump();
    httplib::Headers headers;
    if (!config.api_token.empty())
        headers.emplace("Authorization", bearer_header(config.api_token));

    std::string last_error;
    const int attempts = std::max(1, config.max_retries);
    double backoff = config.backoff_seconds;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && backoff > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2;
        }
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport failure: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_error = "server error " + std::to_string(result->status) + ": " + result->body;
            continue;
        }
        if (result->status != 200)
            throw TransportError("backend error " + std::to_string(result->status) + ": " +
                                 result->body);
        try {
            return json::parse(result->body);
        } catch (const json::exception& e) {
            throw TransportError(std::string("backend returned invalid JSON: ") + e.what());
        }
    }
    throw TransportError(path + " failed after " + std::to_string(attempts) +
                         " attempts; last error: " + last_error);
}

std::unique_ptr<httplib::Client> make_http(const HttpClientConfig& config) {
    auto client = std::make_unique<httplib::Client>(config.endpoint);
    const auto secs = std::chrono::duration<double>(config.timeout_seconds);
    client->set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client->set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client->set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    return client;
}

}  // namespace

struct HttpChatClient::Impl {
    HttpClientConfig config;
    std::shared_ptr<UsageLog> log;
    ConcurrencyGate gate;

    Impl(HttpClientConfig cfg, std::shared_ptr<UsageLog> usage_log)
        : config(std::move(cfg)), log(std::move(usage_log)), gate(config.max_concurrency) {}
};

HttpChatClient::HttpChatClient(HttpClientConfig config, std::shared_ptr<UsageLog> log)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(log))) {
    if (impl_->config.endpoint.empty()) throw Error("chat client requires an endpoint");
}

HttpChatClient::~HttpChatClient() = default;

int HttpChatClient::max_concurrency() const {
    return impl_->config.max_concurrency;
}

ChatResponse HttpChatClient::chat(const ChatRequest& request) {
    if (request.system_prompt.empty() && request.user_prompt.empty())
        throw Error("chat request has empty prompts");
    if (request.temperature < 0.0 || request.temperature > 1.0)
        throw Error("temperature must be in [0, 1]");

    json body = {
        {"model", impl_->config.model},
        {"messages",
         json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                      json{{"role", "user"}, {"content", request.user_prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
        {"stream", false},
    };

    GateGuard guard(impl_->gate);
    auto http = make_http(impl_->config);
    json reply = post_json_with_retry(*http, "/v1/chat/completions", body, impl_->config);

    ChatResponse response;
    try {
        response.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected chat response shape: ") + e.what());
    }
    if (reply.contains("usage") && reply["usage"].is_object() &&
        reply["usage"].contains("prompt_tokens") && reply["usage"].contains("completion_tokens")) {
        response.prompt_tokens = reply["usage"]["prompt_tokens"].get<std::uint64_t>();
        response.completion_tokens = reply["usage"]["completion_tokens"].get<std::uint64_t>();
    } else {
        response.prompt_tokens =
            estimate_tokens(request.system_prompt) + estimate_tokens(request.user_prompt);
        response.completion_tokens = estimate_tokens(response.text);
        response.usage_estimated = true;
    }
    if (impl_->log)
        impl_->log->record({UsageRecord::Kind::chat, request.tag, response.prompt_tokens,
                            response.completion_tokens, response.usage_estimated});
    return response;
}

struct HttpEmbeddingClient::Impl {
    HttpClientConfig config;
    std::shared_ptr<UsageLog> log;
    ConcurrencyGate gate;
    std::size_t dim = 0;  // learned from the first response
    std::mutex dim_mutex;

    Impl(HttpClientConfig cfg, std::shared_ptr<UsageLog> usage_log)
        : config(std::move(cfg)), log(std::move(usage_log)), gate(config.max_concurrency) {}
};

HttpEmbeddingClient::HttpEmbeddingClient(HttpClientConfig config, std::shared_ptr<UsageLog> log)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(log))) {
    if (impl_->config.endpoint.empty()) throw Error("embedding client requires an endpoint");
}

HttpEmbeddingClient::~HttpEmbeddingClient() = default;

std::size_t HttpEmbeddingClient::embedding_dim() const {
    std::lock_guard lock(impl_->dim_mutex);
    return impl_->dim;
}

std::vector<Embedding> HttpEmbeddingClient::embed(const std::vector<std::string>& texts,
                                                  const std::string& tag) {
    std::vector<Embedding> out;
    if (texts.empty()) return out;
    for (const auto& text : texts)
        if (text.empty()) throw Error("cannot embed empty text");

    for (std::size_t offset = 0; offset < texts.size(); offset += impl_->config.max_batch) {
        const std::size_t end = std::min(offset + impl_->config.max_batch, texts.size());
        json input = json::array();
        for (std::size_t i = offset; i < end; ++i) input.push_back(texts[i]);
        json body = {{"model", impl_->config.model}, {"input", input}};

        GateGuard guard(impl_->gate);
        auto http = make_http(impl_->config);
        json reply = post_json_with_retry(*http, "/v1/embeddings", body, impl_->config);

        if (!reply.contains("data") || !reply["data"].is_array() ||
            reply["data"].size() != end - offset)
            throw TransportError("embedding backend returned wrong item count");
        for (const auto& item : reply["data"]) {
            Embedding emb;
            for (const auto& v : item.at("embedding")) emb.values.push_back(v.get<float>());
            {
                std::lock_guard lock(impl_->dim_mutex);
                if (impl_->dim == 0) impl_->dim = emb.dim();
                if (emb.dim() != impl_->dim)
                    throw TransportError("embedding dimension mismatch within batch: " +
                                         std::to_string(emb.dim()) + " vs " +
                                         std::to_string(impl_->dim));
            }
            out.push_back(std::move(emb));
        }
        if (impl_->log) {
            std::uint64_t estimate = 0;
            for (std::size_t i = offset; i < end; ++i) estimate += estimate_tokens(texts[i]);
            impl_->log->record({UsageRecord::Kind::embed, tag, estimate, 0, true});
        }
    }
    return out;
}

MockChatClient::MockChatClient(std::vector<MockChatRule> rules, std::shared_ptr<UsageLog> log)
    : rules_(std::move(rules)), log_(std::move(log)) {}

MockChatClient MockChatClient::from_fixture_file(const std::filesystem::path& path,
                                                 std::shared_ptr<UsageLog> log) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("bad chat fixture " + path.string() + ": " + e.what());
    }
    std::vector<MockChatRule> rules;
    for (const auto& item : doc) {
        MockChatRule rule;
        if (item.contains("match_all"))
            for (const auto& m : item["match_all"]) rule.match_all.push_back(m.get<std::string>());
        if (item.contains("response")) rule.response = item["response"].get<std::string>();
        if (item.contains("prompt_tokens")) rule.prompt_tokens = item["prompt_tokens"].get<std::int64_t>();
        if (item.contains("completion_tokens"))
            rule.completion_tokens = item["completion_tokens"].get<std::int64_t>();
        if (item.contains("fail")) rule.fail = item["fail"].get<bool>();
        rules.push_back(std::move(rule));
    }
    return MockChatClient(std::move(rules), std::move(log));
}

ChatResponse MockChatClient::chat(const ChatRequest& request) {
    if (request.temperature < 0.0 || request.temperature > 1.0)
        throw Error("temperature must be in [0, 1]");
    const std::string haystack = request.system_prompt + "\n" + request.user_prompt;

    const MockChatRule* hit = nullptr;
    for (const auto& rule : rules_) {
        bool all = true;
        for (const auto& needle : rule.match_all) {
            if (haystack.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) {
            hit = &rule;
            break;
        }
    }

    if (hit && hit->fail) throw TransportError("mock chat backend: scripted failure");

    ChatResponse response;
    if (hit) {
        response.text = hit->response;
    } else if (default_response_) {
        response.text = *default_response_;
    } else {
        response.text = "mock:" + to_hex(fnv1a64(haystack));
    }

    if (hit && hit->prompt_tokens >= 0 && hit->completion_tokens >= 0) {
        response.prompt_tokens = static_cast<std::uint64_t>(hit->prompt_tokens);
        response.completion_tokens = static_cast<std::uint64_t>(hit->completion_tokens);
    } else {
        response.prompt_tokens =
            estimate_tokens(request.system_prompt) + estimate_tokens(request.user_prompt);
        response.completion_tokens = estimate_tokens(response.text);
        response.usage_estimated = true;
    }
    if (log_)
        log_->record({UsageRecord::Kind::chat, request.tag, response.prompt_tokens,
                      response.completion_tokens, response.usage_estimated});
    return response;
}

Embedding mock_embed_spec(const std::string& text, std::size_t dim) {
    if (dim < 8) throw Error("mock embedding dim must be >= 8");
    std::mt19937_64 gen(fnv1a64(text));
    std::vector<double> raw(dim);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        // Top 53 bits -> [0,1), shifted to [-1,1). Avoids distribution
        // classes, whose sequences are implementation-defined.
        const double u = static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
        raw[i] = 2.0 * u - 1.0;
        norm_sq += raw[i] * raw[i];
    }
    const double norm = std::sqrt(norm_sq);
    Embedding emb;
    emb.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        emb.values[i] = static_cast<float>(raw[i] / norm);
    return emb;
}

MockEmbeddingClient::MockEmbeddingClient(std::size_t dim, std::shared_ptr<UsageLog> log)
    : dim_(dim), log_(std::move(log)) {
    if (dim_ < 8) throw Error("mock embedding dim must be >= 8");
}

MockEmbeddingClient MockEmbeddingClient::from_fixture_file(const std::filesystem::path& path,
                                                           std::shared_ptr<UsageLog> log) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("bad embedding fixture " + path.string() + ": " + e.what());
    }
    MockEmbeddingClient client(doc.at("dim").get<std::size_t>(), std::move(log));
    if (doc.contains("overrides")) {
        for (auto it = doc["overrides"].begin(); it != doc["overrides"].end(); ++it) {
            std::vector<float> vec;
            for (const auto& v : it.value()) vec.push_back(v.get<float>());
            client.plant(it.key(), std::move(vec));
        }
    }
    return client;
}

void MockEmbeddingClient::plant(const std::string& text, std::vector<float> vector) {
    if (vector.size() != dim_)
        throw Error("planted vector for '" + text + "' has dim " +
                    std::to_string(vector.size()) + ", client dim is " + std::to_string(dim_));
    overrides_[text] = std::move(vector);
}

std::vector<Embedding> MockEmbeddingClient::embed(const std::vector<std::string>& texts,
                                                  const std::string& tag) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    std::uint64_t estimate = 0;
    for (const auto& text : texts) {
        if (text.empty()) throw Error("cannot embed empty text");
        auto it = overrides_.find(text);
        if (it != overrides_.end()) {
            out.push_back(Embedding{it->second});
        } else {
            out.push_back(mock_embed_spec(text, dim_));
        }
        estimate += estimate_tokens(text);
    }
    if (log_ && !texts.empty())
        log_->record({UsageRecord::Kind::embed, tag, estimate, 0, true});
    return out;
}

}  // namespace ecphory
