#pragma once
// Trace analytics: directive-linked cycle detection and token/runtime
// amplification arithmetic with mean-of-repetitions aggregation.

#include "cyclebench/agent.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cyclebench {

enum class CycleKind { self_loop, multi_step, scope_expanding };

std::string to_string(CycleKind kind);

struct DetectedCycle {
    CycleKind kind;
    std::string entry_tool;
    int length = 1;       // distance between an occurrence and its revisit
    int occurrences = 1;  // revisits of the entry tool within the chain
    int first_index = 0;  // record index of the entry occurrence
};

struct CycleReport {
    std::vector<DetectedCycle> cycles;
    bool has_cycle = false;
};

// Cycles are defined over directive-linked chains, never over raw tool-name
// repetition. A chain is a run of calls connected by output directives; a
// description-induced call starts a chain. `categories` (tool -> category)
// lets revisits inside an all-distraction chain be classified as
// scope-expanding; without it such cycles read as multi_step.
CycleReport detect_cycles(const Trace& trace,
                          const std::map<std::string, AttackCategory>* categories = nullptr);

struct DivisionByZeroBaseline : std::runtime_error {
    DivisionByZeroBaseline() : std::runtime_error("baseline token count must be > 0") {}
};

struct EmptyInput : std::runtime_error {
    explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

struct IncompleteGroup : std::runtime_error {
    explicit IncompleteGroup(const std::string& what) : std::runtime_error(what) {}
};

double amplification_ratio(std::int64_t tokens_variant, std::int64_t tokens_normal);

// Display rounding used by the table emitters (2 decimals).
std::string format_factor(double ratio);

struct QueryPair {
    std::string query_id;
    std::int64_t tokens_variant = 0;
    std::int64_t tokens_normal = 0;
    // Optional runtime pair; ratio computed when both are positive.
    std::int64_t runtime_variant_us = 0;
    std::int64_t runtime_normal_us = 0;
};

struct AmplificationEntry {
    std::string query_id;
    double ratio_tokens = 0;
    std::optional<double> ratio_runtime;
};

struct AmplificationReport {
    std::vector<AmplificationEntry> per_query;
    double mean_ratio_tokens = 0;
    std::optional<double> mean_ratio_runtime;
    int n_repetitions = 1;
};

AmplificationReport mean_amplification(const std::vector<QueryPair>& pairs,
                                       int n_repetitions = 1);

struct RunGroup {
    std::string query_id;
    RegistryMode mode;
    double mean_tokens = 0;
    double mean_runtime_us = 0;
    int count = 0;
};

// Means per (query, mode); every group must hold exactly k traces.
std::vector<RunGroup> aggregate_runs(const std::vector<Trace>& traces, int k);

json cycle_report_json(const CycleReport& report);

} // namespace cyclebench
