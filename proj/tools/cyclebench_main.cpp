// cyclebench command line: serve tool servers over stdio, run seeded
// experiment matrices, analyze trace files, exercise guard policies, and
// print the default configuration.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 partial
// results.

#include "cyclebench/experiment.hpp"
#include "cyclebench/rng.hpp"
#include "cyclebench/stdio_client.hpp"

#include <cstdlib>
#include <fnmatch.h>
#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace cyclebench;
namespace fs = std::filesystem;

int usage() {
    std::cerr <<
        "usage: cyclebench <command> [options]\n"
        "\n"
        "commands:\n"
        "  serve <repeat_text|refinement|distraction|benign> [--config FILE]\n"
        "        [--catalog FILE] [--catalog-size N] [--session ID]\n"
        "  run --config FILE [--output-root DIR] [--replay RUN_DIR]\n"
        "  analyze --traces GLOB --out DIR | --pair VARIANT NORMAL\n"
        "  guard-check --config FILE [--out DIR]\n"
        "  print-config\n"
        "\n"
        "CYCLEBENCH_OUTPUT_ROOT overrides the output root for run.\n";
    return 1;
}

std::map<std::string, std::string> parse_flags(int argc, char** argv, int from,
                                               std::vector<std::string>* positional) {
    std::map<std::string, std::string> flags;
    for (int i = from; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) == 0) {
            std::string value = "true";
            if (i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0)
                value = argv[++i];
            flags[arg.substr(2)] = value;
        } else if (positional) {
            positional->push_back(arg);
        }
    }
    return flags;
}

int cmd_serve(const std::vector<std::string>& positional,
              const std::map<std::string, std::string>& flags) {
    if (positional.empty()) {
        std::cerr << "serve: missing server kind\n";
        return 1;
    }
    AttackConfig cfg;
    if (auto it = flags.find("config"); it != flags.end()) {
        std::ifstream in(it->second);
        if (!in) {
            std::cerr << "serve: cannot open config " << it->second << "\n";
            return 1;
        }
        cfg = AttackConfig::from_json(json::parse(in, nullptr, true, true));
    }
    const std::string session =
        flags.count("session") ? flags.at("session") : "default";

    const std::string& kind = positional[0];
    std::shared_ptr<ToolServer> server;
    Catalog catalog;  // keeps catalog alive for the benign server
    if (kind == "repeat_text") {
        server = make_repeat_text_server(cfg);
    } else if (kind == "refinement") {
        server = make_refinement_server(session, cfg);
    } else if (kind == "distraction") {
        server = make_distraction_server(cfg);
    } else if (kind == "benign") {
        if (auto it = flags.find("catalog"); it != flags.end())
            catalog = load_catalog(it->second);
        else
            catalog = builtin_catalog(
                flags.count("catalog-size")
                    ? std::stoul(flags.at("catalog-size"))
                    : 100);
        server = make_benign_server(catalog);
    } else {
        std::cerr << "serve: unknown kind '" << kind << "'\n";
        return 1;
    }
    serve_stdio(*server, std::cin, std::cout);
    return 0;
}

int cmd_run(const std::map<std::string, std::string>& flags) {
    fs::path output_root = "runs";
    if (const char* env = std::getenv("CYCLEBENCH_OUTPUT_ROOT")) output_root = env;
    if (auto it = flags.find("output-root"); it != flags.end())
        output_root = it->second;

    if (auto it = flags.find("replay"); it != flags.end()) {
        const fs::path dest = output_root / "replay";
        const bool identical = replay_experiment(it->second, dest);
        std::cout << (identical ? "replay identical\n" : "replay diverged\n");
        return identical ? 0 : 2;
    }

    auto it = flags.find("config");
    if (it == flags.end()) {
        std::cerr << "run: --config is required\n";
        return 1;
    }
    const ExperimentSpec spec = load_experiment_spec(it->second);
    const ExperimentResult result = run_experiment(spec, output_root);
    for (const auto& e : result.errors) std::cerr << "cell failed: " << e << "\n";
    std::cout << "run dir: " << result.run_dir.string() << "\n";
    if (!result.errors.empty()) return 3;

    for (const auto& [mode, data] : result.report["amplification"].items())
        std::cout << mode << " mean amplification: "
                  << format_factor(data["mean_of_ratios_tokens"].get<double>())
                  << "x\n";
    return 0;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
    fs::path p(pattern);
    fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    const std::string name_pattern = p.filename().string();
    std::vector<fs::path> matches;
    if (!fs::is_directory(dir)) return matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (fnmatch(name_pattern.c_str(), entry.path().filename().c_str(), 0) == 0)
            matches.push_back(entry.path());
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

int cmd_analyze(const std::map<std::string, std::string>& flags) {
    auto traces_it = flags.find("traces");
    if (traces_it == flags.end()) {
        std::cerr << "analyze: --traces is required\n";
        return 1;
    }
    const auto files = expand_glob(traces_it->second);
    if (files.empty()) {
        std::cerr << "analyze: no trace files match '" << traces_it->second << "'\n";
        return 1;
    }

    std::vector<Trace> traces;
    for (const auto& f : files) {
        std::ifstream in(f);
        try {
            traces.push_back(Trace::from_jsonl(in));
        } catch (const std::exception& e) {
            std::cerr << f.string() << ": " << e.what() << "\n";
            return 2;
        }
    }

    json out = json::array();
    std::map<std::pair<std::string, RegistryMode>, std::vector<const Trace*>> grouped;
    for (const auto& t : traces) {
        const CycleReport report = detect_cycles(t, &attack_category_map());
        out.push_back({{"query", t.query_id},
                       {"mode", to_string(t.registry_mode)},
                       {"seed", t.seed},
                       {"total_tokens", t.total_tokens},
                       {"cycles", cycle_report_json(report)}});
        grouped[{t.query_id, t.registry_mode}].push_back(&t);
    }

    json ratios = json::array();
    for (const auto& [key, group] : grouped) {
        if (key.second == RegistryMode::normal) continue;
        auto normal_it = grouped.find({key.first, RegistryMode::normal});
        if (normal_it == grouped.end()) continue;
        double variant_mean = 0;
        double normal_mean = 0;
        for (const auto* t : group) variant_mean += static_cast<double>(t->total_tokens);
        for (const auto* t : normal_it->second)
            normal_mean += static_cast<double>(t->total_tokens);
        variant_mean /= static_cast<double>(group.size());
        normal_mean /= static_cast<double>(normal_it->second.size());
        const double factor = variant_mean / normal_mean;
        ratios.push_back({{"query", key.first},
                          {"mode", to_string(key.second)},
                          {"factor_tokens", factor},
                          {"printed", format_factor(factor)}});
        std::cout << key.first << " " << to_string(key.second) << ": "
                  << format_factor(factor) << "x\n";
    }

    if (auto it = flags.find("out"); it != flags.end()) {
        fs::create_directories(it->second);
        std::ofstream cycles(fs::path(it->second) / "cycles.json");
        cycles << out.dump(2) << "\n";
        std::ofstream amp(fs::path(it->second) / "amplification.json");
        amp << ratios.dump(2) << "\n";
    }
    return 0;
}

int cmd_pair(const std::string& variant, const std::string& normal) {
    const double ratio =
        amplification_ratio(std::stoll(variant), std::stoll(normal));
    std::cout << format_factor(ratio) << "\n";
    return 0;
}

int cmd_guard_check(const std::map<std::string, std::string>& flags) {
    auto it = flags.find("config");
    if (it == flags.end()) {
        std::cerr << "guard-check: --config is required\n";
        return 1;
    }
    ExperimentSpec spec = load_experiment_spec(it->second);
    if (!spec.guard) spec.guard = GuardPolicy{};

    const Catalog catalog = spec.catalog_file ? load_catalog(*spec.catalog_file)
                                              : builtin_catalog(spec.catalog_size);
    json audits = json::array();
    for (const auto& query : spec.queries) {
        const std::uint64_t seed = derive_seed(spec.seed, query + ":rep0");
        ToolRegistry normal = sample_normal(catalog, spec.sample_n, seed,
                                            spec.benign_output_cap, spec.listing_order);
        ToolRegistry mixed = compose(normal, make_attack_servers(query, spec.attack),
                                     RegistryMode::mixed, spec.listing_order);
        GuardedRegistry guarded = guard_registry(mixed, *spec.guard);
        AgentConfig agent = spec.agent;
        agent.seed = seed;
        const Trace trace = run_episode(query, guarded.registry, spec.budget, agent);
        audits.push_back({{"query", query},
                          {"terminated_by", to_string(trace.terminated_by)},
                          {"calls", trace.records.size()},
                          {"audit", audit_json(guarded.session->audit())}});
        std::cout << query << ": " << trace.records.size() << " calls, terminated_by="
                  << to_string(trace.terminated_by) << ", audit entries="
                  << guarded.session->audit().size() << "\n";
    }
    if (auto out_it = flags.find("out"); out_it != flags.end()) {
        fs::create_directories(out_it->second);
        std::ofstream out(fs::path(out_it->second) / "guard_audit.json");
        out << audits.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    const std::string command = argv[1];
    std::vector<std::string> positional;
    const auto flags = parse_flags(argc, argv, 2, &positional);

    try {
        if (command == "serve") return cmd_serve(positional, flags);
        if (command == "run") return cmd_run(flags);
        if (command == "analyze") {
            // --pair consumes two positionals.
            if (flags.count("pair")) {
                if (positional.size() != 1) {
                    std::cerr << "analyze --pair VARIANT NORMAL\n";
                    return 1;
                }
                return cmd_pair(flags.at("pair"), positional[0]);
            }
            return cmd_analyze(flags);
        }
        if (command == "guard-check") return cmd_guard_check(flags);
        if (command == "print-config") {
            std::cout << "// default experiment configuration\n"
                      << default_experiment_spec().to_json().dump(2) << "\n";
            return 0;
        }
        return usage();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CatalogParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
