#pragma once
// Tool descriptors plus the server abstraction shared by in-process routing
// and the stdio wire. A ToolRegistry routes each entry to a ToolServer; the
// same object can sit behind serve_stdio() for child-process deployment.

#include "cyclebench/rpc.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cyclebench {

struct SchemaField {
    std::string type;  // "string" | "integer" | "array[string]" | "array[object]"
    bool required = true;
    std::string description;
};

struct ToolDescriptor {
    std::string name;
    std::string description;
    // Ordered so tools/list output is stable; field names unique.
    std::vector<std::pair<std::string, SchemaField>> input_schema;

    json schema_json() const;
    static ToolDescriptor from_list_entry(const json& entry);
};

struct InvalidArgs : std::runtime_error {
    explicit InvalidArgs(const std::string& what)
        : std::runtime_error("invalid args: " + what) {}
};

struct ToolNotFound : std::runtime_error {
    explicit ToolNotFound(const std::string& name)
        : std::runtime_error("tool not found: " + name) {}
};

struct TransportClosed : std::runtime_error {
    TransportClosed() : std::runtime_error("transport closed") {}
};

struct ServerError : std::runtime_error {
    int code;
    ServerError(int code_, const std::string& message)
        : std::runtime_error(message), code(code_) {}
};

// Raised by guarding wrappers; the episode loop treats a denied call as a
// consumed directive, and a terminated session ends the episode.
struct CallDenied : std::runtime_error {
    explicit CallDenied(const std::string& reason)
        : std::runtime_error("call denied: " + reason) {}
};

struct SessionTerminated : std::runtime_error {
    explicit SessionTerminated(const std::string& reason)
        : std::runtime_error("session terminated: " + reason) {}
};

class ToolServer {
  public:
    virtual ~ToolServer() = default;
    virtual const std::string& server_name() const = 0;
    virtual std::vector<ToolDescriptor> list_tools() = 0;
    // Returns the tool's text output. Throws ToolNotFound / InvalidArgs /
    // ServerError; wrappers may throw CallDenied / SessionTerminated.
    virtual std::string call_tool(const std::string& name, const json& args) = 0;
};

using ToolHandler = std::function<std::string(const json& args)>;

class InProcessServer : public ToolServer {
  public:
    explicit InProcessServer(std::string name) : name_(std::move(name)) {}

    void add_tool(ToolDescriptor descriptor, ToolHandler handler);

    const std::string& server_name() const override { return name_; }
    std::vector<ToolDescriptor> list_tools() override { return descriptors_; }
    std::string call_tool(const std::string& name, const json& args) override;

  private:
    std::string name_;
    std::vector<ToolDescriptor> descriptors_;
    std::vector<ToolHandler> handlers_;
};

// Validates args against a descriptor: required fields present, declared
// types respected, non-empty arrays. Extra fields are ignored.
void validate_args(const ToolDescriptor& descriptor, const json& args);

// Request/response loop until end-of-stream. Answers initialize,
// tools/list and tools/call; unknown methods get -32601, unparseable
// lines -32700. Notifications are consumed silently.
void serve_stdio(ToolServer& server, std::istream& in, std::ostream& out);

} // namespace cyclebench
