#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tabgr {

enum class PromptKind { ColumnSelect, Sufficiency, EdgeSelect, AnswerGen };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> prompt_kind_from_string(std::string_view name);

struct LlmRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 512;
    PromptKind kind = PromptKind::AnswerGen;
    /// Scopes scripted response sequences and ledger entries.
    std::string question_id;
};

struct LlmResponse {
    std::string text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    /// True when the token counts came from the provider rather than the
    /// character-count approximation.
    bool provider_usage = false;
    double latency_s = 0.0;
    int attempts = 1;
};

/// Approximate token count: ceil(code points / 4).
std::int64_t count_tokens(std::string_view text);
inline constexpr std::string_view kApproxTokenizerBasis = "approx_chars_div_4";

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock

struct MockRule {
    std::optional<PromptKind> kind;
    std::string pattern;
    /// Replayed in order per question id; the last entry repeats.
    std::vector<std::string> responses;
    /// Simulates an unreachable service for matching prompts.
    bool unavailable = false;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::optional<std::string> fallback;
};

/// {"rules": [{"kind"?, "pattern", "response" | "responses" | "unavailable"}],
///  "default"?: text}
MockScript parse_mock_script(const nlohmann::json& doc);
MockScript load_mock_script(const std::string& path);

/// Deterministic offline client. Among rules whose kind matches (or is unset)
/// and whose pattern is a substring of the prompt, the longest pattern wins;
/// on equal length a kind-specific rule beats a generic one, then file order.
/// Never touches the network.
class ScriptedClient : public LlmClient {
public:
    explicit ScriptedClient(MockScript script);
    LlmResponse complete(const LlmRequest& request) override;

private:
    MockScript script_;
    std::mutex mu_;
    std::map<std::pair<std::size_t, std::string>, std::size_t> cursors_;
};

/// Client backed by an arbitrary callable; handy for behavioural mocks.
class FunctionClient : public LlmClient {
public:
    using Fn = std::function<std::string(const LlmRequest&)>;
    explicit FunctionClient(Fn fn) : fn_(std::move(fn)) {}
    LlmResponse complete(const LlmRequest& request) override;

private:
    Fn fn_;
};

// ---------------------------------------------------------------------------
// Remote chat-completion client

struct HttpResult {
    int status = 0;
    std::string body;
    bool timed_out = false;
    /// Set when no HTTP response was received at all.
    std::string transport_error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post(const std::string& url,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body) = 0;
};

/// cpp-httplib transport; https URLs require OpenSSL support at build time.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(double timeout_s = 60.0) : timeout_s_(timeout_s) {}
    HttpResult post(const std::string& url,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body) override;

private:
    double timeout_s_;
};

struct RemoteSettings {
    std::string base_url;
    std::string model;
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

/// OpenAI-compatible POST {base_url}/chat/completions. Retries 429, 5xx,
/// timeouts and transport errors with exponential backoff; 401/403 fail fast
/// with AuthError.
class RemoteClient : public LlmClient {
public:
    RemoteClient(RemoteSettings settings, std::shared_ptr<Transport> transport);
    LlmResponse complete(const LlmRequest& request) override;

    static nlohmann::json request_body(const LlmRequest& request, const std::string& model);

private:
    RemoteSettings settings_;
    std::shared_ptr<Transport> transport_;
};

// ---------------------------------------------------------------------------
// Usage accounting

struct UsageTotals {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t calls = 0;
    std::int64_t provider_calls = 0;
    std::map<std::string, std::int64_t> calls_by_kind;

    void add(PromptKind kind, const LlmResponse& response);
    void merge(const UsageTotals& other);
    /// "provider", the approximation name, "mixed", or "none".
    std::string basis() const;
    nlohmann::json to_json() const;
    static UsageTotals from_json(const nlohmann::json& j);
};

/// Thread-safe per-question and aggregate token ledger.
class UsageLedger {
public:
    void record(const std::string& question_id, PromptKind kind, const LlmResponse& response);
    UsageTotals question(const std::string& question_id) const;
    UsageTotals aggregate() const;
    std::size_t num_questions() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, UsageTotals> per_question_;
    UsageTotals aggregate_;
};

/// Sends one request and records its usage.
LlmResponse complete(LlmClient& client, const LlmRequest& request, UsageLedger* ledger);

/// Per-question handle bundling the client with model settings and a ledger.
class LlmSession {
public:
    LlmSession(LlmClient* client, UsageLedger* ledger, std::string question_id,
               std::string model = {}, double temperature = 0.0, int max_output_tokens = 512);

    bool available() const noexcept { return client_ != nullptr; }
    /// Throws LlmUnavailable when no client is configured.
    std::string ask(PromptKind kind, std::string prompt);
    int calls() const noexcept { return calls_; }
    int calls_of(PromptKind kind) const;
    const std::string& question_id() const noexcept { return question_id_; }

private:
    LlmClient* client_;
    UsageLedger* ledger_;
    std::string question_id_;
    std::string model_;
    double temperature_;
    int max_output_tokens_;
    int calls_ = 0;
    std::map<PromptKind, int> calls_by_kind_;
};

struct LlmSettings {
    enum class Provider { None, Mock, Remote };
    Provider provider = Provider::None;
    std::string base_url;
    std::string model;
    std::string mock_script;
    double temperature = 0.0;
    int max_output_tokens = 512;
    int max_attempts = 3;
    int backoff_ms = 500;
    double timeout_s = 60.0;
};

/// Returns nullptr for Provider::None. The remote credential is read from
/// TABGR_LLM_API_KEY. `transport` overrides the HTTP layer for remote
/// clients and is ignored otherwise.
std::unique_ptr<LlmClient> make_client(const LlmSettings& settings,
                                       std::shared_ptr<Transport> transport = nullptr);

}  // namespace tabgr
