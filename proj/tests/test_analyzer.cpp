#include "doctest.h"

#include "cyclebench/analyzer.hpp"
#include "cycle_oracle.hpp"
#include "cyclebench/rng.hpp"

#include <cmath>

using namespace cyclebench;
using cyclebench::testing::Link;

namespace {

CycleReport detect(const std::vector<std::string>& tools,
                   const std::vector<Link>& links) {
    const Trace trace = testing::synthetic_trace(tools, links);
    return detect_cycles(trace, &attack_category_map());
}

} // namespace

TEST_CASE("the five-stage loop registers as one multi_step cycle") {
    const auto report = detect(
        {"analyze", "validate", "refine", "verify", "finalize", "analyze"},
        {Link::description, Link::output, Link::output, Link::output, Link::output,
         Link::output});
    REQUIRE(report.has_cycle);
    REQUIRE(report.cycles.size() == 1);
    CHECK(report.cycles[0].kind == CycleKind::multi_step);
    CHECK(report.cycles[0].entry_tool == "analyze");
    CHECK(report.cycles[0].length == 5);
    CHECK(report.cycles[0].first_index == 0);
}

TEST_CASE("empty traces and unlinked repeats have no cycles") {
    CHECK_FALSE(detect({}, {}).has_cycle);
    // A benign tool called twice without directive links is not a cycle.
    CHECK_FALSE(detect({"echo_args_0", "echo_args_0", "echo_args_0"},
                       {Link::none, Link::none, Link::none})
                    .has_cycle);
}

TEST_CASE("a directive-linked self call is a self_loop of length 1") {
    const auto report =
        detect({"echo_verification", "echo_verification"}, {Link::none, Link::output});
    REQUIRE(report.has_cycle);
    CHECK(report.cycles[0].kind == CycleKind::self_loop);
    CHECK(report.cycles[0].length == 1);
    CHECK(report.cycles[0].occurrences == 1);
}

TEST_CASE("an all-distraction loop is scope_expanding") {
    const std::vector<std::string> chain = {
        "check_time_complexity", "verify_edge_cases", "consider_alternative_approaches",
        "check_historical_context", "assess_practical_applications",
        "validate_assumptions", "check_time_complexity"};
    std::vector<Link> links(chain.size(), Link::output);
    links[0] = Link::description;
    const auto report = detect(chain, links);
    REQUIRE(report.has_cycle);
    CHECK(report.cycles[0].kind == CycleKind::scope_expanding);
    CHECK(report.cycles[0].entry_tool == "check_time_complexity");
    CHECK(report.cycles[0].length == 6);
}

TEST_CASE("repeated traversals count as occurrences of one cycle") {
    std::vector<std::string> tools;
    std::vector<Link> links;
    for (int rep = 0; rep < 3; ++rep)
        for (const char* stage : {"analyze", "validate", "refine", "verify", "finalize"}) {
            tools.emplace_back(stage);
            links.push_back(tools.size() == 1 ? Link::description : Link::output);
        }
    const auto report = detect(tools, links);
    REQUIRE(report.cycles.size() == 1);
    CHECK(report.cycles[0].entry_tool == "analyze");
    CHECK(report.cycles[0].occurrences == 2);  // analyze revisited twice
}

TEST_CASE("chain breaks reset revisit tracking") {
    // Same tool twice, but the second occurrence starts a fresh chain.
    const auto report = detect({"analyze", "validate", "analyze", "validate"},
                               {Link::description, Link::output, Link::description,
                                Link::output});
    CHECK_FALSE(report.has_cycle);
}

TEST_CASE("detector matches the brute-force oracle on random traces") {
    Rng rng(404);
    const std::vector<std::string> alphabet = {"t0", "t1", "t2", "t3"};
    for (int i = 0; i < 3000; ++i) {
        const std::size_t len = rng.index(9);
        std::vector<std::string> tools;
        std::vector<Link> links;
        for (std::size_t j = 0; j < len; ++j) {
            tools.push_back(alphabet[rng.index(alphabet.size())]);
            const auto roll = rng.index(4);
            links.push_back(roll == 0   ? Link::none
                            : roll == 1 ? Link::description
                                        : Link::output);
        }
        const auto report = detect(tools, links);
        const auto oracle = testing::oracle_scan(tools, links);
        CAPTURE(i);
        CHECK(testing::reports_agree(report, oracle));
    }
}

TEST_CASE("amplification_ratio reproduces printed table factors") {
    CHECK(std::abs(amplification_ratio(343900, 31600) - 10.88) < 0.005);
    CHECK(format_factor(amplification_ratio(343900, 31600)) == "10.88");
    CHECK(std::abs(amplification_ratio(8097643, 36936) - 219.23) <= 0.005);
    CHECK(amplification_ratio(5, 5) == 1.0);
    CHECK_THROWS_AS(amplification_ratio(10, 0), DivisionByZeroBaseline);
}

TEST_CASE("ratios are scale invariant") {
    const double base = amplification_ratio(343900, 31600);
    for (const std::int64_t k : {2, 10, 1000}) {
        CHECK(std::abs(amplification_ratio(343900 * k, 31600 * k) - base) <= 1e-12);
    }
}

TEST_CASE("mean_amplification averages per-query ratios") {
    const AmplificationReport two = mean_amplification(
        {{"q1", 20, 10, 0, 0}, {"q2", 40, 10, 0, 0}});
    CHECK(two.per_query.size() == 2);
    CHECK(two.mean_ratio_tokens == doctest::Approx(3.0));

    const AmplificationReport one = mean_amplification({{"solo", 30, 10, 0, 0}});
    CHECK(one.mean_ratio_tokens == doctest::Approx(3.0));

    CHECK_THROWS_AS(mean_amplification({}), EmptyInput);
}

TEST_CASE("the seven Kimi problem rows match the printed factors within 0.01") {
    const std::vector<QueryPair> rows = {
        {"1981c", 405100, 77580, 610, 209},   {"2008b", 283742, 22258, 694, 152},
        {"1982e", 338932, 41452, 489, 388},   {"2033f", 502473, 21131, 404, 140},
        {"1996e", 278376, 24955, 429, 190},   {"2003a", 298428, 17796, 235, 91},
        {"1972b", 300311, 15720, 280, 60},
    };
    const std::vector<double> printed_tokens = {5.22, 12.75, 8.18, 23.78,
                                                11.16, 16.77, 19.10};
    const AmplificationReport report = mean_amplification(rows, 1);
    REQUIRE(report.per_query.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(std::abs(report.per_query[i].ratio_tokens - printed_tokens[i]) <= 0.01);
}

TEST_CASE("aggregate_runs groups by query and mode") {
    const auto make_trace = [](const std::string& q, RegistryMode m, std::int64_t tokens) {
        Trace t;
        t.query_id = q;
        t.registry_mode = m;
        t.total_tokens = tokens;
        t.virtual_runtime_us = tokens * 10;
        return t;
    };

    SUBCASE("k identical traces mean to the common value") {
        std::vector<Trace> traces;
        for (int i = 0; i < 5; ++i)
            traces.push_back(make_trace("q", RegistryMode::normal, 100));
        const auto groups = aggregate_runs(traces, 5);
        REQUIRE(groups.size() == 1);
        CHECK(groups[0].mean_tokens == doctest::Approx(100));
    }
    SUBCASE("k=1 passes values through") {
        const auto groups =
            aggregate_runs({make_trace("q", RegistryMode::mixed, 42)}, 1);
        CHECK(groups[0].mean_tokens == doctest::Approx(42));
    }
    SUBCASE("a synthetic group of 10..50 means to 30") {
        std::vector<Trace> traces;
        for (const std::int64_t v : {10, 20, 30, 40, 50})
            traces.push_back(make_trace("q", RegistryMode::mixed, v));
        const auto groups = aggregate_runs(traces, 5);
        CHECK(groups[0].mean_tokens == doctest::Approx(30));
    }
    SUBCASE("short groups are rejected") {
        std::vector<Trace> traces = {make_trace("q", RegistryMode::normal, 1),
                                     make_trace("q", RegistryMode::mixed, 1),
                                     make_trace("q", RegistryMode::mixed, 1)};
        CHECK_THROWS_AS(aggregate_runs(traces, 2), IncompleteGroup);
    }
}
