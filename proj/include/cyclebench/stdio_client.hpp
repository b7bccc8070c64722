#pragma once
// Client side of the stdio wire: spawns a server as a child process and
// speaks newline-delimited JSON-RPC over its stdin/stdout. Request ids are
// monotonically increasing integers; one outstanding request at a time.

#include "cyclebench/tool_server.hpp"

#include <cstdio>
#include <string>
#include <sys/types.h>
#include <vector>

namespace cyclebench {

class StdioToolClient : public ToolServer {
  public:
    // argv[0] is the executable path.
    explicit StdioToolClient(std::vector<std::string> argv);
    ~StdioToolClient() override;

    StdioToolClient(const StdioToolClient&) = delete;
    StdioToolClient& operator=(const StdioToolClient&) = delete;

    json initialize();
    void close();

    const std::string& server_name() const override { return name_; }
    std::vector<ToolDescriptor> list_tools() override;
    std::string call_tool(const std::string& name, const json& args) override;

  private:
    RpcMessage round_trip(const std::string& method, const json& params);
    void write_line(const std::string& line);
    std::string read_line();

    std::string name_;
    pid_t child_pid_ = -1;
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
    long next_id_ = 1;
    bool closed_ = false;
};

} // namespace cyclebench
