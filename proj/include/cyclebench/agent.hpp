#pragma once
// Deterministic agent simulator: consumes tool-visible text, follows
// directives with configurable compliance, respects turn/depth/token
// budgets, accounts tokens with a fixed counting rule, and optionally
// applies a lexical suppression filter to its own reasoning text.

#include "cyclebench/registry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cyclebench {

struct Directive {
    enum class Source { description, output };

    std::string target_tool;
    json args_hint;
    Source source = Source::output;
    std::string raw_span;  // occurs verbatim in the source text
};

std::string to_string(Directive::Source source);

// First canonical directive line in `text`, if any.
std::optional<Directive> parse_directive(const std::string& text);

// Imperative markers that attract a first call into an attack chain.
const std::vector<std::string>& lure_markers();

// The marker matched by `description`, if any (case-insensitive).
std::optional<std::string> find_lure_span(const std::string& description);

// Tokens are maximal alphanumeric runs plus individual punctuation
// characters; whitespace separates. Deterministic, and additive over
// concatenation up to one boundary token.
std::int64_t count_tokens(std::string_view text);

struct NoWaitConfig {
    std::vector<std::string> token_set;  // defaults to the stock list
    bool rule_whitespace = true;
    bool rule_capitalization = true;
    bool rule_punctuation = true;

    NoWaitConfig();
};

// The stock suppression lexicon (17 entries).
const std::vector<std::string>& nowait_default_tokens();

// Removes every token-set member and its variants under the active rules;
// surviving words are re-joined with single spaces, order preserved.
std::string nowait_filter(const std::string& text, const NoWaitConfig& cfg);

struct Budget {
    int max_turns = 1000;
    int max_depth_per_turn = 20;
    std::int64_t max_total_tokens = 2'000'000;
    std::int64_t wall_clock_cap_us = 3'600'000'000;  // virtual

    static Budget from_json(const json& j);
    json to_json() const;
};

struct AgentConfig {
    double p_comply = 1.0;
    double p_lure = 0.3;
    int task_plan_length = 4;
    int reasoning_template_id = 0;
    int reasoning_words_per_step = 40;
    double suppressible_density = 0.15;
    bool nowait_enabled = false;
    NoWaitConfig nowait;
    // When set, the first lure the agent falls for targets this tool
    // (if it is a registered lure candidate); later lures are seeded.
    std::optional<std::string> first_lure_tool;
    std::uint64_t seed = 0;
    std::int64_t base_latency_us = 200'000;   // virtual per-call latency
    std::int64_t per_token_latency_us = 5'000;

    static AgentConfig from_json(const json& j);
    json to_json() const;
};

enum class TerminationReason {
    task_done,
    budget_turns,
    budget_depth,
    budget_tokens,
    wall_clock,
    guard,
};

std::string to_string(TerminationReason reason);
TerminationReason termination_from_string(const std::string& s);

struct InducedBy {
    Directive::Source source;
    std::string raw_span;
};

struct CallRecord {
    int turn = 0;
    int depth = 0;
    std::string tool;
    std::string args_digest;
    std::string output_text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t elapsed_us = 0;
    std::optional<InducedBy> induced_by;
    bool is_error = false;
};

struct ReasoningRecord {
    int turn = 0;
    std::int64_t tokens = 0;
};

struct Trace {
    std::string query_id;
    RegistryMode registry_mode = RegistryMode::normal;
    std::uint64_t seed = 0;
    std::vector<CallRecord> records;
    std::vector<ReasoningRecord> reasoning;
    std::int64_t total_tokens = 0;
    std::int64_t reasoning_tokens = 0;
    std::int64_t virtual_runtime_us = 0;
    TerminationReason terminated_by = TerminationReason::task_done;

    // Line-delimited records plus a footer with totals.
    std::string to_jsonl() const;
    static Trace from_jsonl(std::istream& in);
    static Trace from_jsonl_string(const std::string& text);
};

// Synthetic user query for a query id; seeds the context token count.
std::string query_text(const std::string& query_id);

// Deterministic per-step reasoning text with a controlled density of
// suppressible tokens.
std::string reasoning_text(std::uint64_t seed, const std::string& query_id, int turn,
                           const AgentConfig& cfg);

struct ServerUnavailable : std::runtime_error {
    explicit ServerUnavailable(const std::string& name)
        : std::runtime_error("server unavailable for tool: " + name) {}
};

Trace run_episode(const std::string& query_id, ToolRegistry& registry,
                  const Budget& budget, const AgentConfig& cfg);

} // namespace cyclebench
