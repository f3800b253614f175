#include "tabgr/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "tabgr/error.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::ColumnSelect: return "column_select";
        case PromptKind::Sufficiency: return "sufficiency";
        case PromptKind::EdgeSelect: return "edge_select";
        case PromptKind::AnswerGen: return "answer_gen";
    }
    return "unknown";
}

std::optional<PromptKind> prompt_kind_from_string(std::string_view name) {
    for (auto k : {PromptKind::ColumnSelect, PromptKind::Sufficiency, PromptKind::EdgeSelect,
                   PromptKind::AnswerGen}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::int64_t count_tokens(std::string_view text) {
    const auto chars = static_cast<std::int64_t>(text::utf8_length(text));
    return (chars + 3) / 4;
}

// ---------------------------------------------------------------------------

MockScript parse_mock_script(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("mock script must be a JSON object");
    MockScript script;
    if (doc.contains("rules")) {
        for (const auto& r : doc.at("rules")) {
            MockRule rule;
            if (!r.contains("pattern") || !r.at("pattern").is_string()) {
                throw ConfigError("mock rule lacks a string 'pattern'");
            }
            rule.pattern = r.at("pattern").get<std::string>();
            if (r.contains("kind")) {
                auto kind = prompt_kind_from_string(r.at("kind").get<std::string>());
                if (!kind) throw ConfigError("unknown mock rule kind: " + r.at("kind").dump());
                rule.kind = kind;
            }
            if (r.contains("response")) rule.responses.push_back(r.at("response").get<std::string>());
            if (r.contains("responses")) {
                for (const auto& s : r.at("responses")) rule.responses.push_back(s.get<std::string>());
            }
            rule.unavailable = r.value("unavailable", false);
            if (rule.responses.empty() && !rule.unavailable) {
                throw ConfigError("mock rule '" + rule.pattern + "' has no response");
            }
            script.rules.push_back(std::move(rule));
        }
    }
    if (doc.contains("default")) script.fallback = doc.at("default").get<std::string>();
    return script;
}

MockScript load_mock_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("mock script " + path + " is not valid JSON: " + e.what());
    }
    return parse_mock_script(doc);
}

ScriptedClient::ScriptedClient(MockScript script) : script_(std::move(script)) {}

LlmResponse ScriptedClient::complete(const LlmRequest& request) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const auto& rule = script_.rules[i];
        if (rule.kind && *rule.kind != request.kind) continue;
        if (request.prompt.find(rule.pattern) == std::string::npos) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& cur = script_.rules[*best];
        if (rule.pattern.size() > cur.pattern.size() ||
            (rule.pattern.size() == cur.pattern.size() && rule.kind && !cur.kind)) {
            best = i;
        }
    }

    LlmResponse response;
    if (best) {
        const auto& rule = script_.rules[*best];
        if (rule.unavailable) throw LlmUnavailable("scripted outage for pattern '" + rule.pattern + "'");
        std::size_t pos;
        {
            std::lock_guard lock(mu_);
            auto& cursor = cursors_[{*best, request.question_id}];
            pos = cursor;
            if (cursor + 1 < rule.responses.size()) ++cursor;
        }
        response.text = rule.responses[pos];
    } else if (script_.fallback) {
        response.text = *script_.fallback;
    } else {
        throw LlmUnavailable("mock script has no rule for this " +
                             std::string(to_string(request.kind)) + " prompt");
    }
    response.input_tokens = count_tokens(request.prompt);
    response.output_tokens = count_tokens(response.text);
    return response;
}

LlmResponse FunctionClient::complete(const LlmRequest& request) {
    LlmResponse response;
    response.text = fn_(request);
    response.input_tokens = count_tokens(request.prompt);
    response.output_tokens = count_tokens(response.text);
    return response;
}

// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("LLM base URL lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResult HttpTransport::post(const std::string& url,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               const std::string& body) {
    auto parts = split_url(url);
    httplib::Client client(parts.origin);
    const auto sec = static_cast<time_t>(timeout_s_);
    const auto usec = static_cast<time_t>((timeout_s_ - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    HttpResult out;
    auto res = client.Post(parts.path, hdrs, body, "application/json");
    if (!res) {
        auto err = res.error();
        out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        out.transport_error = httplib::to_string(err);
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

RemoteClient::RemoteClient(RemoteSettings settings, std::shared_ptr<Transport> transport)
    : settings_(std::move(settings)), transport_(std::move(transport)) {
    if (!transport_) transport_ = std::make_shared<HttpTransport>();
    if (settings_.max_attempts < 1) settings_.max_attempts = 1;
}

nlohmann::json RemoteClient::request_body(const LlmRequest& request, const std::string& model) {
    return nlohmann::json{
        {"model", request.model.empty() ? model : request.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };
}

LlmResponse RemoteClient::complete(const LlmRequest& request) {
    std::string url = settings_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    url += "/chat/completions";
    const std::string body = request_body(request, settings_.model).dump();
    std::vector<std::pair<std::string, std::string>> headers;
    if (!settings_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + settings_.api_key);

    const auto start = std::chrono::steady_clock::now();
    auto backoff = settings_.initial_backoff;
    bool all_timeouts = true;
    std::string last_error;
    for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        HttpResult res = transport_->post(url, headers, body);
        if (res.status == 401 || res.status == 403) {
            throw AuthError("LLM endpoint rejected the credential (HTTP " +
                            std::to_string(res.status) + ")");
        }
        if (res.status == 200) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(res.body);
                LlmResponse out;
                out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
                if (doc.contains("usage") && doc["usage"].is_object()) {
                    const auto& u = doc["usage"];
                    out.input_tokens = u.value("prompt_tokens", std::int64_t{0});
                    out.output_tokens = u.value("completion_tokens", std::int64_t{0});
                    out.provider_usage = true;
                } else {
                    out.input_tokens = count_tokens(request.prompt);
                    out.output_tokens = count_tokens(out.text);
                }
                out.attempts = attempt;
                out.latency_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                return out;
            } catch (const nlohmann::json::exception& e) {
                throw LlmUnavailable(std::string("malformed chat-completion response: ") + e.what());
            }
        }
        if (!res.timed_out) all_timeouts = false;
        const bool transient = res.status == 0 || res.status == 408 || res.status == 429 ||
                               res.status >= 500;
        last_error = res.status ? "HTTP " + std::to_string(res.status) : res.transport_error;
        if (!transient) {
            throw LlmUnavailable("LLM endpoint returned non-retryable " + last_error);
        }
    }
    if (all_timeouts) {
        throw TimeoutError("LLM request timed out on all " + std::to_string(settings_.max_attempts) +
                           " attempts");
    }
    throw LlmUnavailable("LLM request failed after " + std::to_string(settings_.max_attempts) +
                         " attempts (last: " + last_error + ")");
}

// ---------------------------------------------------------------------------

void UsageTotals::add(PromptKind kind, const LlmResponse& response) {
    input_tokens += response.input_tokens;
    output_tokens += response.output_tokens;
    ++calls;
    if (response.provider_usage) ++provider_calls;
    ++calls_by_kind[std::string(to_string(kind))];
}

void UsageTotals::merge(const UsageTotals& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    calls += other.calls;
    provider_calls += other.provider_calls;
    for (const auto& [k, v] : other.calls_by_kind) calls_by_kind[k] += v;
}

std::string UsageTotals::basis() const {
    if (calls == 0) return "none";
    if (provider_calls == calls) return "provider";
    if (provider_calls == 0) return std::string(kApproxTokenizerBasis);
    return "mixed";
}

nlohmann::json UsageTotals::to_json() const {
    return nlohmann::json{{"input_tokens", input_tokens},
                          {"output_tokens", output_tokens},
                          {"calls", calls},
                          {"provider_calls", provider_calls},
                          {"calls_by_kind", calls_by_kind},
                          {"basis", basis()}};
}

UsageTotals UsageTotals::from_json(const nlohmann::json& j) {
    UsageTotals t;
    t.input_tokens = j.value("input_tokens", std::int64_t{0});
    t.output_tokens = j.value("output_tokens", std::int64_t{0});
    t.calls = j.value("calls", std::int64_t{0});
    t.provider_calls = j.value("provider_calls", std::int64_t{0});
    if (j.contains("calls_by_kind")) {
        t.calls_by_kind = j.at("calls_by_kind").get<std::map<std::string, std::int64_t>>();
    }
    return t;
}

void UsageLedger::record(const std::string& question_id, PromptKind kind,
                         const LlmResponse& response) {
    std::lock_guard lock(mu_);
    per_question_[question_id].add(kind, response);
    aggregate_.add(kind, response);
}

UsageTotals UsageLedger::question(const std::string& question_id) const {
    std::lock_guard lock(mu_);
    auto it = per_question_.find(question_id);
    return it == per_question_.end() ? UsageTotals{} : it->second;
}

UsageTotals UsageLedger::aggregate() const {
    std::lock_guard lock(mu_);
    return aggregate_;
}

std::size_t UsageLedger::num_questions() const {
    std::lock_guard lock(mu_);
    return per_question_.size();
}

LlmResponse complete(LlmClient& client, const LlmRequest& request, UsageLedger* ledger) {
    LlmResponse response = client.complete(request);
    if (ledger) ledger->record(request.question_id, request.kind, response);
    return response;
}

LlmSession::LlmSession(LlmClient* client, UsageLedger* ledger, std::string question_id,
                       std::string model, double temperature, int max_output_tokens)
    : client_(client),
      ledger_(ledger),
      question_id_(std::move(question_id)),
      model_(std::move(model)),
      temperature_(temperature),
      max_output_tokens_(max_output_tokens) {}

std::string LlmSession::ask(PromptKind kind, std::string prompt) {
    if (!client_) throw LlmUnavailable("no LLM client configured");
    LlmRequest req;
    req.model = model_;
    req.prompt = std::move(prompt);
    req.temperature = temperature_;
    req.max_output_tokens = max_output_tokens_;
    req.kind = kind;
    req.question_id = question_id_;
    ++calls_;
    ++calls_by_kind_[kind];
    return complete(*client_, req, ledger_).text;
}

int LlmSession::calls_of(PromptKind kind) const {
    auto it = calls_by_kind_.find(kind);
    return it == calls_by_kind_.end() ? 0 : it->second;
}

std::unique_ptr<LlmClient> make_client(const LlmSettings& settings,
                                       std::shared_ptr<Transport> transport) {
    switch (settings.provider) {
        case LlmSettings::Provider::None:
            return nullptr;
        case LlmSettings::Provider::Mock:
            return std::make_unique<ScriptedClient>(load_mock_script(settings.mock_script));
        case LlmSettings::Provider::Remote: {
            if (settings.base_url.empty()) throw ConfigError("remote LLM requires a base URL");
            RemoteSettings rs;
            rs.base_url = settings.base_url;
            rs.model = settings.model;
            if (const char* key = std::getenv("TABGR_LLM_API_KEY")) rs.api_key = key;
            rs.max_attempts = settings.max_attempts;
            rs.initial_backoff = std::chrono::milliseconds(settings.backoff_ms);
            if (!transport) transport = std::make_shared<HttpTransport>(settings.timeout_s);
            return std::make_unique<RemoteClient>(std::move(rs), std::move(transport));
        }
    }
    return nullptr;
}

}  // namespace tabgr
