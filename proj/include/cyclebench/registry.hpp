#pragma once
// Registry composition: sampled benign registries, mixed registries with
// the 14 attack tools interleaved at seeded positions, and attack-only
// registries. A manifest records the composition for replay.

#include "cyclebench/attack_tools.hpp"
#include "cyclebench/benign_tools.hpp"
#include "cyclebench/tool_server.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cyclebench {

enum class RegistryMode { normal, mixed, attack_only };

std::string to_string(RegistryMode mode);
RegistryMode registry_mode_from_string(const std::string& s);

struct SampleTooLarge : std::runtime_error {
    SampleTooLarge(std::size_t n, std::size_t have)
        : std::runtime_error("sample of " + std::to_string(n) + " from catalog of " +
                             std::to_string(have)) {}
};

struct ModeMismatch : std::runtime_error {
    explicit ModeMismatch(const std::string& what)
        : std::runtime_error("mode mismatch: " + what) {}
};

struct RegistryEntry {
    ToolDescriptor descriptor;
    std::shared_ptr<ToolServer> route;
    std::string server_name;
    bool is_attack = false;
    std::optional<AttackCategory> category;
};

enum class ListingOrder { sampled, sorted };

struct ToolRegistry {
    std::vector<RegistryEntry> entries;
    RegistryMode mode = RegistryMode::normal;
    std::uint64_t sample_seed = 0;

    const RegistryEntry* find(const std::string& name) const;
    std::size_t attack_count() const;
    json manifest() const;
};

// Draws n entries without replacement, deterministically in seed, and
// routes them to one in-process benign server.
ToolRegistry sample_normal(const Catalog& catalog, std::size_t n, std::uint64_t seed,
                           std::size_t output_cap = 400,
                           ListingOrder order = ListingOrder::sampled);

// mode == normal returns `normal` unchanged (attack servers must be empty);
// otherwise the attack servers must expose exactly the 14 known tools.
// Attack entries are interleaved at seeded positions. Name collisions
// between benign and attack entries are rejected.
ToolRegistry compose(const ToolRegistry& normal,
                     const std::vector<std::shared_ptr<ToolServer>>& attack_servers,
                     RegistryMode mode, ListingOrder order = ListingOrder::sampled);

// Rebuilds a registry from its manifest, the catalog it was sampled from,
// and fresh attack servers. The composition is pinned by the manifest.
ToolRegistry registry_from_manifest(const json& manifest, const Catalog& catalog,
                                    const std::vector<std::shared_ptr<ToolServer>>& attack_servers,
                                    std::size_t output_cap = 400);

} // namespace cyclebench
