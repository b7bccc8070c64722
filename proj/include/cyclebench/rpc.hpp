#pragma once
// JSON-RPC 2.0 message layer: newline-delimited single-line framing over
// stdio, the subset needed for tool servers (initialize, tools/list,
// tools/call). Notifications (no id) receive no response.

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclebench {

using json = nlohmann::json;

namespace rpc_error {
constexpr int kParseError = -32700;
constexpr int kInvalidRequest = -32600;
constexpr int kMethodNotFound = -32601;
constexpr int kInvalidParams = -32602;
constexpr int kInternalError = -32603;
constexpr int kToolNotFound = -32001;
} // namespace rpc_error

struct MalformedMessage : std::runtime_error {
    explicit MalformedMessage(const std::string& what)
        : std::runtime_error("malformed message: " + what) {}
};

// Parseable JSON that is neither a request, a response, nor an error.
struct UnknownShape : std::runtime_error {
    explicit UnknownShape(const std::string& what)
        : std::runtime_error("unknown message shape: " + what) {}
};

enum class MessageKind { request, response, error };

struct RpcMessage {
    MessageKind kind = MessageKind::request;
    // JSON-RPC ids may be integers or strings; absent means notification.
    std::optional<json> id;
    std::string method;  // requests only
    json params;         // requests only
    json result;         // responses only
    int error_code = 0;          // errors only
    std::string error_message;   // errors only

    static RpcMessage request(json id, std::string method, json params = json::object());
    static RpcMessage notification(std::string method, json params = json::object());
    static RpcMessage response(json id, json result);
    static RpcMessage error(json id, int code, std::string message);

    bool operator==(const RpcMessage& other) const;
};

// One newline-terminated line; decode_message(encode_message(m)) == m.
std::string encode_message(const RpcMessage& msg);

// Throws MalformedMessage on unparseable input, UnknownShape on JSON that
// fits none of the three kinds (or mixes result and error).
RpcMessage decode_message(std::string_view line);

} // namespace cyclebench
