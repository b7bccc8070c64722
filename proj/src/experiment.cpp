#include "cyclebench/experiment.hpp"

#include "cyclebench/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cyclebench {

namespace fs = std::filesystem;

void ExperimentSpec::validate() const {
    if (queries.empty()) throw std::invalid_argument("query set must be non-empty");
    if (modes.empty()) throw std::invalid_argument("modes must be non-empty");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (sample_n > catalog_size && !catalog_file)
        throw std::invalid_argument("sample_n exceeds catalog size");
    std::set<RegistryMode> unique(modes.begin(), modes.end());
    if (unique.size() != modes.size())
        throw std::invalid_argument("duplicate modes in spec");
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
    ExperimentSpec spec;
    if (j.contains("queries"))
        spec.queries = j["queries"].get<std::vector<std::string>>();
    if (j.contains("modes")) {
        spec.modes.clear();
        for (const auto& m : j["modes"])
            spec.modes.push_back(registry_mode_from_string(m.get<std::string>()));
    }
    spec.repetitions = j.value("repetitions", spec.repetitions);
    spec.seed = j.value("seed", spec.seed);
    spec.catalog_size = j.value("catalog_size", spec.catalog_size);
    if (j.contains("catalog_file") && j["catalog_file"].is_string())
        spec.catalog_file = fs::path(j["catalog_file"].get<std::string>());
    spec.sample_n = j.value("sample_n", spec.sample_n);
    spec.benign_output_cap = j.value("benign_output_cap", spec.benign_output_cap);
    if (j.value("listing_order", "sampled") == std::string("sorted"))
        spec.listing_order = ListingOrder::sorted;
    if (j.contains("budget")) spec.budget = Budget::from_json(j["budget"]);
    if (j.contains("agent")) spec.agent = AgentConfig::from_json(j["agent"]);
    if (j.contains("attack")) spec.attack = AttackConfig::from_json(j["attack"]);
    if (j.contains("guard") && !j["guard"].is_null())
        spec.guard = GuardPolicy::from_json(j["guard"]);
    spec.output_dir = j.value("output_dir", spec.output_dir);
    spec.validate();
    return spec;
}

json ExperimentSpec::to_json() const {
    json modes_json = json::array();
    for (const auto m : modes) modes_json.push_back(to_string(m));
    json j = {{"queries", queries},
              {"modes", modes_json},
              {"repetitions", repetitions},
              {"seed", seed},
              {"catalog_size", catalog_size},
              {"sample_n", sample_n},
              {"benign_output_cap", benign_output_cap},
              {"listing_order",
               listing_order == ListingOrder::sorted ? "sorted" : "sampled"},
              {"budget", budget.to_json()},
              {"agent", agent.to_json()},
              {"attack", attack.to_json()},
              {"output_dir", output_dir}};
    if (catalog_file) j["catalog_file"] = catalog_file->string();
    j["guard"] = guard ? guard->to_json() : json();
    return j;
}

ExperimentSpec default_experiment_spec() {
    ExperimentSpec spec;
    for (int i = 1; i <= 10; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "q%02d", i);
        spec.queries.emplace_back(buf);
    }
    spec.modes = {RegistryMode::normal, RegistryMode::mixed, RegistryMode::attack_only};
    return spec;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec file " + path.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    return ExperimentSpec::from_json(j);
}

std::string run_id_for(const ExperimentSpec& spec) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(spec.to_json().dump())));
    return std::string("run_") + buf;
}

std::string trace_file_name(const std::string& query, RegistryMode mode,
                            std::uint64_t seed) {
    return query + "_" + to_string(mode) + "_" + std::to_string(seed) + ".trace";
}

namespace {

Catalog spec_catalog(const ExperimentSpec& spec) {
    if (spec.catalog_file) return load_catalog(*spec.catalog_file);
    return builtin_catalog(spec.catalog_size);
}

std::uint64_t cell_seed(const ExperimentSpec& spec, const std::string& query, int rep) {
    return derive_seed(spec.seed, query + ":rep" + std::to_string(rep));
}

struct Cell {
    std::string query;
    RegistryMode mode;
    int rep;
    std::uint64_t seed;
};

Trace run_cell(const ExperimentSpec& spec, const Catalog& catalog, const Cell& cell,
               json* manifest_out) {
    ToolRegistry normal = sample_normal(catalog, spec.sample_n, cell.seed,
                                        spec.benign_output_cap, spec.listing_order);
    ToolRegistry registry =
        cell.mode == RegistryMode::normal
            ? normal
            : compose(normal, make_attack_servers(cell.query, spec.attack), cell.mode,
                      spec.listing_order);
    if (manifest_out) *manifest_out = registry.manifest();

    AgentConfig agent = spec.agent;
    agent.seed = cell.seed;

    if (spec.guard) {
        GuardedRegistry guarded = guard_registry(registry, *spec.guard);
        return run_episode(cell.query, guarded.registry, spec.budget, agent);
    }
    return run_episode(cell.query, registry, spec.budget, agent);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json analysis_report(const ExperimentSpec& spec, const std::vector<Trace>& traces) {
    json report;

    const auto groups = aggregate_runs(traces, spec.repetitions);
    json groups_json = json::array();
    for (const auto& g : groups)
        groups_json.push_back({{"query", g.query_id},
                               {"mode", to_string(g.mode)},
                               {"mean_tokens", g.mean_tokens},
                               {"mean_runtime_us", g.mean_runtime_us}});
    report["aggregates"] = groups_json;

    const auto group_of = [&](const std::string& query,
                              RegistryMode mode) -> const RunGroup* {
        for (const auto& g : groups)
            if (g.query_id == query && g.mode == mode) return &g;
        return nullptr;
    };

    // Per-(query, rep) token totals for mean-of-ratios aggregation.
    std::map<std::pair<std::string, int>, std::map<RegistryMode, const Trace*>> cells;
    {
        std::map<std::pair<std::string, RegistryMode>, int> next_rep;
        for (const auto& t : traces) {
            const int rep = next_rep[{t.query_id, t.registry_mode}]++;
            cells[{t.query_id, rep}][t.registry_mode] = &t;
        }
    }

    const bool have_normal =
        std::find(spec.modes.begin(), spec.modes.end(), RegistryMode::normal) !=
        spec.modes.end();
    json per_mode = json::object();
    std::map<RegistryMode, double> headline;
    for (const auto mode : spec.modes) {
        if (mode == RegistryMode::normal) continue;
        if (!have_normal) continue;

        std::vector<QueryPair> rep_pairs;
        for (const auto& [key, by_mode] : cells) {
            auto normal_it = by_mode.find(RegistryMode::normal);
            auto variant_it = by_mode.find(mode);
            if (normal_it == by_mode.end() || variant_it == by_mode.end()) continue;
            rep_pairs.push_back({key.first + ":rep" + std::to_string(key.second),
                                 variant_it->second->total_tokens,
                                 normal_it->second->total_tokens,
                                 variant_it->second->virtual_runtime_us,
                                 normal_it->second->virtual_runtime_us});
        }
        const AmplificationReport mean_of_ratios =
            mean_amplification(rep_pairs, spec.repetitions);

        std::vector<QueryPair> mean_pairs;
        for (const auto& q : spec.queries) {
            const RunGroup* n = group_of(q, RegistryMode::normal);
            const RunGroup* v = group_of(q, mode);
            if (!n || !v) continue;
            mean_pairs.push_back({q, static_cast<std::int64_t>(v->mean_tokens),
                                  static_cast<std::int64_t>(n->mean_tokens),
                                  static_cast<std::int64_t>(v->mean_runtime_us),
                                  static_cast<std::int64_t>(n->mean_runtime_us)});
        }
        const AmplificationReport ratio_of_means =
            mean_amplification(mean_pairs, spec.repetitions);

        json entries = json::array();
        for (const auto& e : ratio_of_means.per_query) {
            json item = {{"query", e.query_id},
                         {"factor_tokens", e.ratio_tokens},
                         {"factor_tokens_printed", format_factor(e.ratio_tokens)}};
            if (e.ratio_runtime) {
                item["factor_runtime"] = *e.ratio_runtime;
                item["factor_runtime_printed"] = format_factor(*e.ratio_runtime);
            }
            entries.push_back(item);
        }
        per_mode[to_string(mode)] = {
            {"mean_of_ratios_tokens", mean_of_ratios.mean_ratio_tokens},
            {"ratio_of_means_tokens", ratio_of_means.mean_ratio_tokens},
            {"mean_of_ratios_runtime", mean_of_ratios.mean_ratio_runtime
                                           ? json(*mean_of_ratios.mean_ratio_runtime)
                                           : json()},
            {"per_query", entries}};
        headline[mode] = mean_of_ratios.mean_ratio_tokens;
    }
    report["amplification"] = per_mode;
    if (per_mode.empty())
        report["note"] = have_normal
                             ? "no non-normal modes to compare against normal"
                             : "no normal-mode baseline; amplification ratios omitted";

    // The mixed / attack_only ordering is model-dependent in live systems,
    // so it is recorded as an observation rather than asserted.
    if (have_normal && headline.count(RegistryMode::mixed) &&
        headline.count(RegistryMode::attack_only)) {
        int mixed_ge = 0;
        int total = 0;
        for (const auto& q : spec.queries) {
            const RunGroup* n = group_of(q, RegistryMode::normal);
            const RunGroup* m = group_of(q, RegistryMode::mixed);
            const RunGroup* a = group_of(q, RegistryMode::attack_only);
            if (!n || !m || !a || n->mean_tokens <= 0) continue;
            ++total;
            if (m->mean_tokens >= a->mean_tokens) ++mixed_ge;
        }
        report["observation"] = {
            {"mixed_ge_attack_only_cells", mixed_ge},
            {"cells", total},
            {"note", "ordering recorded as observation, not asserted"}};
    }

    // Cycle summaries per trace.
    json cycle_summaries = json::array();
    for (const auto& t : traces) {
        CycleReport cycles = detect_cycles(t, &attack_category_map());
        cycle_summaries.push_back({{"query", t.query_id},
                                   {"mode", to_string(t.registry_mode)},
                                   {"seed", t.seed},
                                   {"terminated_by", to_string(t.terminated_by)},
                                   {"total_tokens", t.total_tokens},
                                   {"report", cycle_report_json(cycles)}});
    }
    report["cycles"] = cycle_summaries;
    return report;
}

std::string report_table(const ExperimentSpec& spec, const json& report) {
    std::ostringstream out;
    out << "label\tmode\ttokens\ttime_s\tfactor_tokens\tfactor_time\n";
    std::map<std::string, std::map<std::string, std::pair<double, double>>> by_query;
    for (const auto& g : report["aggregates"]) {
        by_query[g["query"].get<std::string>()][g["mode"].get<std::string>()] = {
            g["mean_tokens"].get<double>(), g["mean_runtime_us"].get<double>()};
    }
    for (const auto& q : spec.queries) {
        auto it = by_query.find(q);
        if (it == by_query.end()) continue;
        const auto normal_it = it->second.find("normal");
        for (const auto mode : spec.modes) {
            const auto m = it->second.find(to_string(mode));
            if (m == it->second.end()) continue;
            out << q << "\t" << to_string(mode) << "\t"
                << static_cast<long long>(m->second.first) << "\t"
                << format_factor(m->second.second / 1e6);
            if (mode != RegistryMode::normal && normal_it != it->second.end() &&
                normal_it->second.first > 0) {
                out << "\t" << format_factor(m->second.first / normal_it->second.first)
                    << "\t"
                    << format_factor(m->second.second / normal_it->second.second);
            } else {
                out << "\t-\t-";
            }
            out << "\n";
        }
    }
    return out.str();
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const fs::path& output_root) {
    spec.validate();
    const Catalog catalog = spec_catalog(spec);

    ExperimentResult result;
    result.run_dir = output_root / run_id_for(spec);
    fs::create_directories(result.run_dir / "traces");
    fs::create_directories(result.run_dir / "manifests");
    write_file(result.run_dir / "spec.json", spec.to_json().dump(2) + "\n");

    std::vector<Trace> traces;
    for (const auto& query : spec.queries) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            for (const auto mode : spec.modes) {
                Cell cell{query, mode, rep, cell_seed(spec, query, rep)};
                try {
                    json manifest;
                    Trace trace = run_cell(spec, catalog, cell, &manifest);
                    const std::string base =
                        query + "_" + to_string(mode) + "_" + std::to_string(cell.seed);
                    write_file(result.run_dir / "manifests" / (base + ".manifest.json"),
                               manifest.dump(2) + "\n");
                    write_file(result.run_dir / "traces" /
                                   trace_file_name(query, mode, cell.seed),
                               trace.to_jsonl());
                    traces.push_back(std::move(trace));
                } catch (const std::exception& e) {
                    result.errors.push_back(query + "/" + to_string(mode) + "/rep" +
                                            std::to_string(rep) + ": " + e.what());
                }
            }
        }
    }

    if (result.errors.empty()) {
        result.report = analysis_report(spec, traces);
        result.report["run_id"] = run_id_for(spec);
        write_file(result.run_dir / "report.json", result.report.dump(2) + "\n");
        write_file(result.run_dir / "report.tsv", report_table(spec, result.report));
    }
    return result;
}

bool replay_experiment(const fs::path& run_dir, const fs::path& dest_dir) {
    std::ifstream spec_in(run_dir / "spec.json");
    if (!spec_in) throw std::runtime_error("missing spec.json in " + run_dir.string());
    const ExperimentSpec spec =
        ExperimentSpec::from_json(json::parse(spec_in, nullptr, true, true));
    const Catalog catalog = spec_catalog(spec);

    fs::create_directories(dest_dir / "traces");
    bool identical = true;
    for (const auto& query : spec.queries) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            for (const auto mode : spec.modes) {
                const std::uint64_t seed = cell_seed(spec, query, rep);
                const std::string base =
                    query + "_" + to_string(mode) + "_" + std::to_string(seed);
                const fs::path manifest_path =
                    run_dir / "manifests" / (base + ".manifest.json");
                const json manifest =
                    json::parse(read_file(manifest_path), nullptr, true, true);

                ToolRegistry registry = registry_from_manifest(
                    manifest, catalog, make_attack_servers(query, spec.attack),
                    spec.benign_output_cap);
                AgentConfig agent = spec.agent;
                agent.seed = seed;

                Trace trace;
                if (spec.guard) {
                    GuardedRegistry guarded = guard_registry(registry, *spec.guard);
                    trace = run_episode(query, guarded.registry, spec.budget, agent);
                } else {
                    trace = run_episode(query, registry, spec.budget, agent);
                }

                const std::string replayed = trace.to_jsonl();
                write_file(dest_dir / "traces" / trace_file_name(query, mode, seed),
                           replayed);
                const std::string original = read_file(
                    run_dir / "traces" / trace_file_name(query, mode, seed));
                if (replayed != original) identical = false;
            }
        }
    }
    return identical;
}

} // namespace cyclebench
