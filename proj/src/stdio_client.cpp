#include "cyclebench/stdio_client.hpp"

#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace cyclebench {

StdioToolClient::StdioToolClient(std::vector<std::string> argv) {
    if (argv.empty()) throw std::invalid_argument("empty server command");
    name_ = argv[0];

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw std::runtime_error("pipe() failed");
    // The parent-side ends must not leak into later-spawned children, or
    // their inherited copies keep earlier servers' stdin open past close().
    fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    fcntl(from_child[0], F_SETFD, FD_CLOEXEC);

    child_pid_ = fork();
    if (child_pid_ < 0) throw std::runtime_error("fork() failed");

    if (child_pid_ == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (auto& a : argv) cargv.push_back(a.data());
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }

    ::close(to_child[0]);
    ::close(from_child[1]);
    to_child_ = fdopen(to_child[1], "w");
    from_child_ = fdopen(from_child[0], "r");
    if (!to_child_ || !from_child_)
        throw std::runtime_error("fdopen() failed");
}

StdioToolClient::~StdioToolClient() {
    close();
    if (child_pid_ > 0) {
        int status = 0;
        waitpid(child_pid_, &status, 0);
    }
}

void StdioToolClient::close() {
    if (to_child_) {
        fclose(to_child_);
        to_child_ = nullptr;
    }
    if (from_child_) {
        fclose(from_child_);
        from_child_ = nullptr;
    }
    closed_ = true;
}

void StdioToolClient::write_line(const std::string& line) {
    if (closed_ || !to_child_) throw TransportClosed();
    if (fputs(line.c_str(), to_child_) == EOF) throw TransportClosed();
    fflush(to_child_);
}

std::string StdioToolClient::read_line() {
    if (closed_ || !from_child_) throw TransportClosed();
    std::string line;
    int c;
    while ((c = fgetc(from_child_)) != EOF) {
        if (c == '\n') return line;
        line.push_back(static_cast<char>(c));
    }
    throw TransportClosed();
}

RpcMessage StdioToolClient::round_trip(const std::string& method, const json& params) {
    const json id = next_id_++;
    write_line(encode_message(RpcMessage::request(id, method, params)));
    // Responses arrive in request order; ids must round-trip unchanged.
    const RpcMessage reply = decode_message(read_line());
    if (!reply.id || *reply.id != id)
        throw ServerError(rpc_error::kInternalError, "correlation id mismatch");
    if (reply.kind == MessageKind::error) {
        if (reply.error_code == rpc_error::kToolNotFound)
            throw ToolNotFound(reply.error_message);
        throw ServerError(reply.error_code, reply.error_message);
    }
    return reply;
}

json StdioToolClient::initialize() {
    RpcMessage reply = round_trip(
        "initialize", {{"protocolVersion", "2024-11-05"},
                       {"clientInfo", {{"name", "cyclebench-client"}, {"version", "1.0.0"}}}});
    if (reply.result.contains("serverInfo") &&
        reply.result["serverInfo"].contains("name"))
        name_ = reply.result["serverInfo"]["name"].get<std::string>();
    return reply.result;
}

std::vector<ToolDescriptor> StdioToolClient::list_tools() {
    RpcMessage reply = round_trip("tools/list", json::object());
    std::vector<ToolDescriptor> tools;
    for (const auto& entry : reply.result.value("tools", json::array()))
        tools.push_back(ToolDescriptor::from_list_entry(entry));
    return tools;
}

std::string StdioToolClient::call_tool(const std::string& name, const json& args) {
    RpcMessage reply =
        round_trip("tools/call", {{"name", name}, {"arguments", args}});
    const json content = reply.result.value("content", json::array());
    std::string text;
    for (const auto& block : content) {
        if (block.value("type", "") == "text") {
            if (!text.empty()) text += "\n";
            text += block.value("text", "");
        }
    }
    return text;
}

} // namespace cyclebench
