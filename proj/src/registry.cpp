#include "cyclebench/registry.hpp"

#include "cyclebench/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cyclebench {

std::string to_string(RegistryMode mode) {
    switch (mode) {
        case RegistryMode::normal: return "normal";
        case RegistryMode::mixed: return "mixed";
        case RegistryMode::attack_only: return "attack_only";
    }
    return "?";
}

RegistryMode registry_mode_from_string(const std::string& s) {
    if (s == "normal") return RegistryMode::normal;
    if (s == "mixed") return RegistryMode::mixed;
    if (s == "attack_only") return RegistryMode::attack_only;
    throw std::invalid_argument("unknown registry mode '" + s + "'");
}

const RegistryEntry* ToolRegistry::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.descriptor.name == name) return &e;
    return nullptr;
}

std::size_t ToolRegistry::attack_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(),
                      [](const RegistryEntry& e) { return e.is_attack; }));
}

json ToolRegistry::manifest() const {
    json entries_json = json::array();
    for (const auto& e : entries) {
        json item = {{"name", e.descriptor.name}, {"server", e.server_name}};
        if (e.category) item["category"] = to_string(*e.category);
        entries_json.push_back(item);
    }
    return {{"mode", to_string(mode)},
            {"sample_seed", sample_seed},
            {"entries", entries_json}};
}

namespace {

void sort_entries(std::vector<RegistryEntry>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const RegistryEntry& a, const RegistryEntry& b) {
                  return a.descriptor.name < b.descriptor.name;
              });
}

std::vector<RegistryEntry> attack_entries_from(
    const std::vector<std::shared_ptr<ToolServer>>& attack_servers) {
    const auto& categories = attack_category_map();
    std::vector<RegistryEntry> result;
    for (const auto& server : attack_servers) {
        for (const auto& d : server->list_tools()) {
            auto it = categories.find(d.name);
            if (it == categories.end())
                throw ModeMismatch("server lists unknown attack tool '" + d.name + "'");
            result.push_back({d, server, server->server_name(), true, it->second});
        }
    }
    return result;
}

} // namespace

ToolRegistry sample_normal(const Catalog& catalog, std::size_t n, std::uint64_t seed,
                           std::size_t output_cap, ListingOrder order) {
    if (n > catalog.entries.size()) throw SampleTooLarge(n, catalog.entries.size());

    // Seeded Fisher-Yates over indices; first n positions are the sample.
    std::vector<std::size_t> indices(catalog.entries.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(derive_seed(seed, "sample_normal"));
    for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
        const std::size_t j = i + rng.index(indices.size() - i);
        std::swap(indices[i], indices[j]);
    }

    Catalog sampled;
    sampled.source = catalog.source;
    for (std::size_t i = 0; i < n; ++i)
        sampled.entries.push_back(catalog.entries[indices[i]]);

    auto server = make_benign_server(sampled, output_cap);
    ToolRegistry registry;
    registry.mode = RegistryMode::normal;
    registry.sample_seed = seed;
    for (const auto& entry : sampled.entries)
        registry.entries.push_back(
            {entry.descriptor, server, server->server_name(), false, std::nullopt});
    if (order == ListingOrder::sorted) sort_entries(registry.entries);
    return registry;
}

ToolRegistry compose(const ToolRegistry& normal,
                     const std::vector<std::shared_ptr<ToolServer>>& attack_servers,
                     RegistryMode mode, ListingOrder order) {
    if (mode == RegistryMode::normal) {
        if (!attack_servers.empty())
            throw ModeMismatch("normal mode accepts no attack servers");
        return normal;
    }

    std::vector<RegistryEntry> attack = attack_entries_from(attack_servers);
    if (attack.size() != attack_tool_specs().size())
        throw ModeMismatch("expected " + std::to_string(attack_tool_specs().size()) +
                           " attack tools, got " + std::to_string(attack.size()));

    ToolRegistry registry;
    registry.mode = mode;
    registry.sample_seed = normal.sample_seed;

    if (mode == RegistryMode::attack_only) {
        registry.entries = std::move(attack);
        if (order == ListingOrder::sorted) sort_entries(registry.entries);
        return registry;
    }

    std::set<std::string> names;
    for (const auto& e : normal.entries) names.insert(e.descriptor.name);
    for (const auto& e : attack)
        if (!names.insert(e.descriptor.name).second)
            throw ModeMismatch("name collision on '" + e.descriptor.name + "'");

    // Interleave at seeded positions rather than appending as a block.
    registry.entries = normal.entries;
    Rng rng(derive_seed(normal.sample_seed, "interleave"));
    for (auto& e : attack) {
        const std::size_t pos = rng.index(registry.entries.size() + 1);
        registry.entries.insert(registry.entries.begin() + static_cast<long>(pos),
                                std::move(e));
    }
    if (order == ListingOrder::sorted) sort_entries(registry.entries);
    return registry;
}

ToolRegistry registry_from_manifest(const json& manifest, const Catalog& catalog,
                                    const std::vector<std::shared_ptr<ToolServer>>& attack_servers,
                                    std::size_t output_cap) {
    ToolRegistry registry;
    registry.mode = registry_mode_from_string(manifest.at("mode").get<std::string>());
    registry.sample_seed = manifest.at("sample_seed").get<std::uint64_t>();

    std::map<std::string, RegistryEntry> attack_by_name;
    for (auto& e : attack_entries_from(attack_servers))
        attack_by_name.emplace(e.descriptor.name, std::move(e));

    // One benign server hosting every benign entry named by the manifest.
    Catalog benign;
    benign.source = catalog.source;
    for (const auto& item : manifest.at("entries")) {
        const std::string name = item.at("name").get<std::string>();
        if (attack_by_name.count(name)) continue;
        const BenignToolEntry* entry = catalog.find(name);
        if (!entry)
            throw std::runtime_error("manifest names unknown benign tool '" + name + "'");
        benign.entries.push_back(*entry);
    }
    auto benign_server =
        benign.entries.empty() ? nullptr : make_benign_server(benign, output_cap);

    for (const auto& item : manifest.at("entries")) {
        const std::string name = item.at("name").get<std::string>();
        auto it = attack_by_name.find(name);
        if (it != attack_by_name.end()) {
            registry.entries.push_back(it->second);
        } else {
            RegistryEntry entry{catalog.find(name)->descriptor, benign_server,
                                benign_server->server_name(), false, std::nullopt};
            registry.entries.push_back(std::move(entry));
        }
    }
    return registry;
}

} // namespace cyclebench
