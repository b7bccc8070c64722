#pragma once
// Seeded experiment matrices: (query, mode, repetition) cells, one trace
// file and one registry manifest per cell, amplification reports comparing
// every non-normal mode against normal. Reruns are byte-identical.

#include "cyclebench/analyzer.hpp"
#include "cyclebench/guard.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cyclebench {

struct ExperimentSpec {
    std::vector<std::string> queries;
    std::vector<RegistryMode> modes{RegistryMode::normal, RegistryMode::mixed};
    int repetitions = 5;
    std::uint64_t seed = 42;

    // Catalog source: builtin of catalog_size entries, or a catalog file.
    std::size_t catalog_size = 100;
    std::optional<std::filesystem::path> catalog_file;
    std::size_t sample_n = 100;
    std::size_t benign_output_cap = 400;
    ListingOrder listing_order = ListingOrder::sampled;

    Budget budget;
    AgentConfig agent;
    AttackConfig attack;
    std::optional<GuardPolicy> guard;

    std::string output_dir = "runs";

    void validate() const;
    static ExperimentSpec from_json(const json& j);
    json to_json() const;
};

// Built-in defaults: ten queries, all three modes, five repetitions.
ExperimentSpec default_experiment_spec();

// Parses a spec file; // and /* */ comments are permitted.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct ExperimentResult {
    std::filesystem::path run_dir;
    json report;
    std::vector<std::string> errors;  // per-cell failures; run continues
};

// Deterministic run id from the spec content.
std::string run_id_for(const ExperimentSpec& spec);

std::string trace_file_name(const std::string& query, RegistryMode mode,
                            std::uint64_t seed);

// Executes the matrix under output_root/<run_id>/ and writes spec.json,
// manifests/, traces/, report.json and report.tsv.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::filesystem::path& output_root);

// Re-runs every cell of a previous run from its manifests into dest_dir
// and reports whether all trace files came out byte-identical.
bool replay_experiment(const std::filesystem::path& run_dir,
                       const std::filesystem::path& dest_dir);

} // namespace cyclebench
