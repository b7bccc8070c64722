#include "cyclebench/rpc.hpp"

namespace cyclebench {

RpcMessage RpcMessage::request(json id, std::string method, json params) {
    RpcMessage m;
    m.kind = MessageKind::request;
    m.id = std::move(id);
    m.method = std::move(method);
    m.params = std::move(params);
    return m;
}

RpcMessage RpcMessage::notification(std::string method, json params) {
    RpcMessage m;
    m.kind = MessageKind::request;
    m.method = std::move(method);
    m.params = std::move(params);
    return m;
}

RpcMessage RpcMessage::response(json id, json result) {
    RpcMessage m;
    m.kind = MessageKind::response;
    m.id = std::move(id);
    m.result = std::move(result);
    return m;
}

RpcMessage RpcMessage::error(json id, int code, std::string message) {
    RpcMessage m;
    m.kind = MessageKind::error;
    if (!id.is_null()) m.id = std::move(id);
    m.error_code = code;
    m.error_message = std::move(message);
    return m;
}

bool RpcMessage::operator==(const RpcMessage& other) const {
    if (kind != other.kind || id != other.id) return false;
    switch (kind) {
        case MessageKind::request:
            return method == other.method && params == other.params;
        case MessageKind::response:
            return result == other.result;
        case MessageKind::error:
            return error_code == other.error_code &&
                   error_message == other.error_message;
    }
    return false;
}

std::string encode_message(const RpcMessage& msg) {
    json j;
    j["jsonrpc"] = "2.0";
    switch (msg.kind) {
        case MessageKind::request:
            if (msg.id) j["id"] = *msg.id;
            j["method"] = msg.method;
            if (!msg.params.is_null()) j["params"] = msg.params;
            break;
        case MessageKind::response:
            j["id"] = msg.id ? *msg.id : json();
            j["result"] = msg.result;
            break;
        case MessageKind::error:
            j["id"] = msg.id ? *msg.id : json();
            j["error"] = {{"code", msg.error_code}, {"message", msg.error_message}};
            break;
    }
    return j.dump() + "\n";
}

RpcMessage decode_message(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw MalformedMessage(e.what());
    }
    if (!j.is_object()) throw UnknownShape("not a JSON object");

    const bool has_method = j.contains("method");
    const bool has_result = j.contains("result");
    const bool has_error = j.contains("error");
    if (has_result && has_error)
        throw UnknownShape("carries both result and error");

    RpcMessage m;
    if (j.contains("id") && !j["id"].is_null()) {
        if (!j["id"].is_number_integer() && !j["id"].is_string())
            throw UnknownShape("id is neither integer nor string");
        m.id = j["id"];
    }

    if (has_method) {
        if (!j["method"].is_string()) throw UnknownShape("method is not a string");
        m.kind = MessageKind::request;
        m.method = j["method"].get<std::string>();
        m.params = j.value("params", json());
        return m;
    }
    if (has_result) {
        m.kind = MessageKind::response;
        m.result = j["result"];
        return m;
    }
    if (has_error) {
        const json& e = j["error"];
        if (!e.is_object() || !e.contains("code") || !e["code"].is_number_integer())
            throw UnknownShape("error object lacks an integer code");
        m.kind = MessageKind::error;
        m.error_code = e["code"].get<int>();
        m.error_message = e.value("message", std::string());
        return m;
    }
    throw UnknownShape("neither request, response, nor error");
}

} // namespace cyclebench
