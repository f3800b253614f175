#include "tabgr/reasoner.hpp"

#include <algorithm>
#include <unordered_set>

#include "tabgr/prompts.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

std::string_view to_string(ParseStatus status) {
    switch (status) {
        case ParseStatus::Clean: return "clean";
        case ParseStatus::Repaired: return "repaired";
        case ParseStatus::Failed: return "failed";
    }
    return "failed";
}

nlohmann::json ReasoningResult::to_json() const {
    return nlohmann::json{{"path", path},
                          {"cot", cot},
                          {"answer", answer},
                          {"parse_status", std::string(to_string(status))},
                          {"repairs", repairs},
                          {"raw", raw}};
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kPathsOpen = "<paths>";
constexpr std::string_view kPathsClose = "</paths>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kArrow = "→";

std::vector<std::string> split_path_entries(std::string_view block) {
    std::vector<std::string> out;
    for (const auto& line : text::split(block, "\n")) {
        for (const auto& piece : text::split(line, kArrow)) {
            auto t = text::trim(piece);
            if (!t.empty()) out.emplace_back(t);
        }
    }
    return out;
}

std::size_t count_occurrences(std::string_view s, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

ReasoningResult failed(std::string raw) {
    ReasoningResult r;
    r.status = ParseStatus::Failed;
    r.raw = std::move(raw);
    return r;
}

}  // namespace

ReasoningResult parse_output(const std::string& raw) {
    const std::string_view s = raw;
    ReasoningResult result;
    result.raw = raw;
    auto& repairs = result.repairs;

    // Answer section.
    const auto first_answer = s.find(kAnswerOpen);
    if (first_answer == std::string_view::npos) return failed(raw);
    const auto answer_opens = count_occurrences(s, kAnswerOpen);
    const auto last_answer = s.rfind(kAnswerOpen);
    const auto answer_body = last_answer + kAnswerOpen.size();
    const auto answer_close = s.find(kAnswerClose, answer_body);
    if (answer_opens > 1) repairs.emplace_back("multiple_answers");
    if (answer_close == std::string_view::npos) {
        const auto tail = text::trim(s.substr(answer_body));
        if (answer_opens != 1 || tail.empty()) return failed(raw);
        result.answer = std::string(tail);
        repairs.emplace_back("missing_answer_close");
    } else {
        result.answer = std::string(text::trim(s.substr(answer_body, answer_close - answer_body)));
        if (!text::trim(s.substr(answer_close + kAnswerClose.size())).empty()) {
            repairs.emplace_back("extra_text");
        }
    }

    // Thought section: everything before the first <answer>.
    const std::string_view head = s.substr(0, first_answer);
    const auto paths_open = head.find(kPathsOpen);
    if (paths_open == std::string_view::npos) return failed(raw);
    const auto think_open = head.find(kThinkOpen);
    std::string_view preamble;
    if (think_open == std::string_view::npos || think_open > paths_open) {
        if (think_open != std::string_view::npos) return failed(raw);
        repairs.emplace_back("missing_think_open");
        preamble = head.substr(0, paths_open);
    } else {
        preamble = head.substr(0, think_open);
        if (!text::trim(head.substr(think_open + kThinkOpen.size(),
                                    paths_open - think_open - kThinkOpen.size()))
                 .empty()) {
            return failed(raw);
        }
    }
    if (!text::trim(preamble).empty()) repairs.emplace_back("extra_text");

    const auto body_start = paths_open + kPathsOpen.size();
    const auto paths_close = head.find(kPathsClose, body_start);
    const auto think_close = head.rfind(kThinkClose);
    const bool has_think_close =
        think_close != std::string_view::npos && think_close >= body_start;
    if (think_close != std::string_view::npos && !has_think_close) return failed(raw);

    std::vector<std::string> entries;
    if (paths_close == std::string_view::npos) {
        const auto end = has_think_close ? think_close : head.size();
        entries = split_path_entries(head.substr(body_start, end - body_start));
        for (const auto& e : entries) {
            if (!parse_rendered_triple(e)) return failed(raw);
        }
        repairs.emplace_back("missing_paths_close");
        if (!has_think_close) repairs.emplace_back("missing_think_close");
    } else {
        if (has_think_close && think_close < paths_close) return failed(raw);
        entries = split_path_entries(head.substr(body_start, paths_close - body_start));
        const auto cot_start = paths_close + kPathsClose.size();
        if (has_think_close) {
            result.cot = std::string(text::trim(head.substr(cot_start, think_close - cot_start)));
            if (!text::trim(head.substr(think_close + kThinkClose.size())).empty()) {
                repairs.emplace_back("extra_text");
            }
        } else {
            result.cot = std::string(text::trim(head.substr(cot_start)));
            repairs.emplace_back("missing_think_close");
        }
    }

    bool dropped = false;
    for (auto& e : entries) {
        if (parse_rendered_triple(e)) {
            result.path.push_back(std::move(e));
        } else {
            dropped = true;
        }
    }
    if (dropped) repairs.emplace_back("dropped_path_entry");

    // A stray tag anywhere else means the segments overlap in ways the
    // whitelist does not cover.
    for (auto tag : {kThinkOpen, kPathsOpen, kPathsClose, kThinkClose}) {
        if (count_occurrences(s, tag) > 1) return failed(raw);
    }
    if (count_occurrences(result.cot, kAnswerClose) || count_occurrences(result.answer, kThinkOpen)) {
        return failed(raw);
    }

    std::sort(repairs.begin(), repairs.end());
    repairs.erase(std::unique(repairs.begin(), repairs.end()), repairs.end());
    result.status = repairs.empty() ? ParseStatus::Clean : ParseStatus::Repaired;
    return result;
}

std::string format_output(const ReasoningResult& result) {
    std::string out = "<think>\n<paths>";
    out += text::join(result.path, " → ");
    out += "</paths>\n";
    out += result.cot;
    out += "\n</think>\n<answer>";
    out += result.answer;
    out += "</answer>";
    return out;
}

std::string build_answer_prompt(const std::string& question, const std::string& title,
                                const std::vector<std::string>& headers,
                                const std::vector<Triple>& ranked) {
    std::string content;
    for (const auto& t : ranked) {
        content += '\n';
        content += render_triple(t);
    }
    return render(default_template(PromptKind::AnswerGen), {{"title", title},
                                                            {"question", question},
                                                            {"header", text::join(headers, " | ")},
                                                            {"reasoning_paths", content}});
}

ReasoningResult generate_answer(const std::string& question, const std::string& title,
                                const std::vector<std::string>& headers,
                                const std::vector<Triple>& ranked, LlmSession& llm) {
    const auto reply = llm.ask(PromptKind::AnswerGen,
                               build_answer_prompt(question, title, headers, ranked));
    std::string completed = reply;
    if (reply.find(kThinkOpen) == std::string::npos) {
        // The prompt already opened both sections.
        completed = reply.find(kPathsOpen) == std::string::npos ? "<think>\n<paths>" + reply
                                                                : "<think>\n" + reply;
    }
    auto result = parse_output(completed);
    result.raw = reply;
    return result;
}

PathGrounding validate_path(const ReasoningResult& result, const AtgGraph& graph,
                            const std::vector<std::size_t>& evidence) {
    const std::unordered_set<std::size_t> allowed(evidence.begin(), evidence.end());
    PathGrounding out;
    std::size_t hits = 0;
    for (const auto& entry : result.path) {
        bool ok = false;
        if (auto parsed = parse_rendered_triple(entry); parsed && parsed->row < graph.num_rows()) {
            const auto& headers = graph.headers();
            for (std::size_t j = 0; j < headers.size() && !ok; ++j) {
                if (text::trim(headers[j]) != parsed->header) continue;
                const auto id = parsed->row * graph.num_cols() + j;
                ok = allowed.count(id) && text::trim(graph.triple(id).value) == parsed->value;
            }
        }
        out.grounded.push_back(ok);
        if (ok) ++hits;
    }
    if (!result.path.empty()) {
        out.fraction = static_cast<double>(hits) / static_cast<double>(result.path.size());
    }
    return out;
}

}  // namespace tabgr
