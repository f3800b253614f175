#include "tabgr/config.hpp"

#include <fstream>

#include "tabgr/error.hpp"

namespace tabgr {

namespace {

std::string_view provider_name(LlmSettings::Provider p) {
    switch (p) {
        case LlmSettings::Provider::None: return "none";
        case LlmSettings::Provider::Mock: return "mock";
        case LlmSettings::Provider::Remote: return "remote";
    }
    return "none";
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.mode = mode;
    p.ppr = ppr;
    p.decompose = decompose;
    return p;
}

nlohmann::json RunConfig::to_json() const {
    return nlohmann::json{
        {"mode", std::string(tabgr::to_string(mode))},
        {"task", std::string(tabgr::to_string(task))},
        {"ppr", ppr.to_json()},
        {"decompose",
         {{"max_rounds", decompose.max_rounds},
          {"full_graph_fallback", decompose.full_graph_fallback}}},
        {"dataset", {{"questions", questions_path}, {"tables", tables_path}}},
        {"llm",
         {{"provider", std::string(provider_name(llm.provider))},
          {"base_url", llm.base_url},
          {"model", llm.model},
          {"mock_script", llm.mock_script},
          {"temperature", llm.temperature},
          {"max_output_tokens", llm.max_output_tokens},
          {"max_attempts", llm.max_attempts},
          {"backoff_ms", llm.backoff_ms},
          {"timeout_s", llm.timeout_s}}},
        {"workers", workers},
        {"out", out_dir},
        {"seeds", seeds},
        {"resume", resume}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.mode = mode_from_string(get_or<std::string>(j, "mode", "full"));
    c.task = task_from_string(get_or<std::string>(j, "task", "qa"));
    try {
        c.ppr = PprConfig::from_json(j.value("ppr", nlohmann::json::object()),
                                     default_ppr_config(c.mode, c.task));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field 'ppr': ") + e.what());
    }

    const auto dec = j.value("decompose", nlohmann::json::object());
    c.decompose.max_rounds = get_or<int>(dec, "max_rounds", 3);
    c.decompose.full_graph_fallback = get_or<bool>(dec, "full_graph_fallback", false);

    const auto data = j.value("dataset", nlohmann::json::object());
    c.questions_path = get_or<std::string>(data, "questions", "");
    c.tables_path = get_or<std::string>(data, "tables", "");

    const auto llm = j.value("llm", nlohmann::json::object());
    c.llm.base_url = get_or<std::string>(llm, "base_url", "");
    c.llm.model = get_or<std::string>(llm, "model", "");
    c.llm.mock_script = get_or<std::string>(llm, "mock_script", "");
    c.llm.temperature = get_or<double>(llm, "temperature", 0.0);
    c.llm.max_output_tokens = get_or<int>(llm, "max_output_tokens", 512);
    c.llm.max_attempts = get_or<int>(llm, "max_attempts", 3);
    c.llm.backoff_ms = get_or<int>(llm, "backoff_ms", 500);
    c.llm.timeout_s = get_or<double>(llm, "timeout_s", 60.0);
    const auto provider = get_or<std::string>(llm, "provider", "");
    const bool has_mock = !c.llm.mock_script.empty();
    const bool has_remote = !c.llm.base_url.empty();
    if (provider.empty()) {
        if (has_mock && has_remote) {
            throw ConfigError("configure either a mock script or a remote base URL, not both");
        }
        c.llm.provider = has_mock     ? LlmSettings::Provider::Mock
                         : has_remote ? LlmSettings::Provider::Remote
                                      : LlmSettings::Provider::None;
    } else if (provider == "mock") {
        c.llm.provider = LlmSettings::Provider::Mock;
    } else if (provider == "remote") {
        c.llm.provider = LlmSettings::Provider::Remote;
    } else if (provider == "none") {
        c.llm.provider = LlmSettings::Provider::None;
    } else {
        throw ConfigError("unknown llm provider: " + provider);
    }

    c.workers = get_or<int>(j, "workers", 1);
    c.out_dir = get_or<std::string>(j, "out", "out");
    c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {1, 2});
    c.resume = get_or<bool>(j, "resume", false);
    return c;
}

void RunConfig::validate(bool require_llm) const {
    ppr.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (decompose.max_rounds < 0) throw ConfigError("decompose.max_rounds must be >= 0");
    if (llm.max_attempts < 1) throw ConfigError("llm.max_attempts must be >= 1");
    using P = LlmSettings::Provider;
    if (llm.provider == P::Mock && llm.mock_script.empty()) {
        throw ConfigError("mock provider needs a mock script path");
    }
    if (llm.provider == P::Remote) {
        if (llm.base_url.empty()) throw ConfigError("remote provider needs a base URL");
        if (llm.model.empty()) throw ConfigError("remote provider needs a model name");
    }
    if (mode == Mode::Decomposed && llm.provider == P::None) {
        throw ConfigError("decomposed mode requires an LLM (remote or mock)");
    }
    if (require_llm && llm.provider == P::None) {
        throw ConfigError("this command requires an LLM (remote or mock)");
    }
}

nlohmann::json load_config_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

void merge_json(nlohmann::json& base, const nlohmann::json& patch) {
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            merge_json(base[it.key()], *it);
        } else {
            base[it.key()] = *it;
        }
    }
}

}  // namespace tabgr
