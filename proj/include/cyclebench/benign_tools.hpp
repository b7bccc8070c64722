#pragma once
// Synthetic benign tool catalog: deterministic descriptors and stub
// behaviors standing in for a real production registry, plus a loader for
// external catalog files (one JSON record per line).

#include "cyclebench/tool_server.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace cyclebench {

enum class BenignBehavior { echo_args, fixed_text, arithmetic_eval, lookup_table };

std::string to_string(BenignBehavior behavior);
BenignBehavior benign_behavior_from_string(const std::string& s);

struct BenignToolEntry {
    ToolDescriptor descriptor;
    BenignBehavior behavior;
    json payload;  // behavior-specific data (fixed text, lookup map)
};

enum class CatalogSource { builtin, file };

struct Catalog {
    std::vector<BenignToolEntry> entries;
    CatalogSource source = CatalogSource::builtin;

    const BenignToolEntry* find(const std::string& name) const;
};

struct CatalogParseError : std::runtime_error {
    explicit CatalogParseError(const std::string& what)
        : std::runtime_error("catalog parse error: " + what) {}
};

// Deterministic catalog of `size` entries cycling through the four
// behaviors; same size always yields the same catalog.
Catalog builtin_catalog(std::size_t size);

Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

// Deterministic stub output; never contains a directive line. Output is
// truncated to output_cap characters.
std::string invoke_benign(const BenignToolEntry& entry, const json& args,
                          std::size_t output_cap = 400);

std::shared_ptr<InProcessServer> make_benign_server(const Catalog& catalog,
                                                    std::size_t output_cap = 400);

// Integer expression evaluation for the arithmetic_eval behavior
// (+ - * / and parentheses, 64-bit, truncating division).
long long eval_arithmetic(const std::string& expr);

} // namespace cyclebench
