#include "doctest.h"

#include "cyclebench/stdio_client.hpp"

#include <filesystem>
#include <unistd.h>

using namespace cyclebench;

namespace {

std::filesystem::path bin_dir() {
    char buf[4096];
    const ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
    REQUIRE(n > 0);
    buf[n] = '\0';
    return std::filesystem::path(buf).parent_path();
}

} // namespace

TEST_CASE("stdio client drives a benign catalog server") {
    StdioToolClient client({(bin_dir() / "benign-server").string(), "8"});
    client.initialize();
    CHECK(client.server_name() == "benign");
    CHECK(client.list_tools().size() == 8);

    const std::string out = client.call_tool("echo_args_0", {{"text", "ping"}});
    CHECK(out.find("ping") != std::string::npos);

    CHECK_THROWS_AS(client.call_tool("no_such_tool", json::object()), ToolNotFound);
    CHECK_THROWS_AS(client.call_tool("arithmetic_eval_2", json::object()), ServerError);

    client.close();
    CHECK_THROWS_AS(client.call_tool("echo_args_0", {{"text", "x"}}), TransportClosed);
}

TEST_CASE("finalize at cycle 1 directs the client back to analyze") {
    StdioToolClient client({(bin_dir() / "refinement-server").string(), "wire-session"});
    client.initialize();
    const std::string out = client.call_tool(
        "finalize", {{"final_solution", "d"}, {"completeness_score", "0.5"},
                     {"confidence_level", "low"}, {"next_step", "submit"}});
    CHECK(out.find("Call analyze NOW") != std::string::npos);
}
