#include "cyclebench/tool_server.hpp"

#include <istream>
#include <ostream>
#include <set>

namespace cyclebench {

json ToolDescriptor::schema_json() const {
    json properties = json::object();
    json required = json::array();
    for (const auto& [field, spec] : input_schema) {
        json prop = {{"type", spec.type}};
        if (!spec.description.empty()) prop["description"] = spec.description;
        properties[field] = prop;
        if (spec.required) required.push_back(field);
    }
    return {{"type", "object"}, {"properties", properties}, {"required", required}};
}

ToolDescriptor ToolDescriptor::from_list_entry(const json& entry) {
    ToolDescriptor d;
    d.name = entry.at("name").get<std::string>();
    d.description = entry.value("description", std::string());
    const json schema = entry.value("inputSchema", json::object());
    std::set<std::string> required;
    for (const auto& r : schema.value("required", json::array()))
        required.insert(r.get<std::string>());
    const json properties = schema.value("properties", json::object());
    for (const auto& [field, prop] : properties.items()) {
        SchemaField f;
        f.type = prop.value("type", "string");
        f.required = required.count(field) > 0;
        f.description = prop.value("description", std::string());
        d.input_schema.emplace_back(field, f);
    }
    return d;
}

void InProcessServer::add_tool(ToolDescriptor descriptor, ToolHandler handler) {
    if (descriptor.description.empty())
        throw std::invalid_argument("tool description must be non-empty: " + descriptor.name);
    for (const auto& existing : descriptors_)
        if (existing.name == descriptor.name)
            throw std::invalid_argument("duplicate tool name: " + descriptor.name);
    std::set<std::string> fields;
    for (const auto& [field, _] : descriptor.input_schema)
        if (!fields.insert(field).second)
            throw std::invalid_argument("duplicate schema field in " + descriptor.name);
    descriptors_.push_back(std::move(descriptor));
    handlers_.push_back(std::move(handler));
}

std::string InProcessServer::call_tool(const std::string& name, const json& args) {
    for (std::size_t i = 0; i < descriptors_.size(); ++i) {
        if (descriptors_[i].name == name) {
            validate_args(descriptors_[i], args);
            return handlers_[i](args);
        }
    }
    throw ToolNotFound(name);
}

namespace {

bool type_matches(const std::string& type, const json& value) {
    if (type == "string") return value.is_string();
    if (type == "integer") return value.is_number_integer();
    if (type == "number") return value.is_number();
    if (type == "boolean") return value.is_boolean();
    if (type == "array[string]") {
        if (!value.is_array()) return false;
        for (const auto& v : value)
            if (!v.is_string()) return false;
        return true;
    }
    if (type == "array[object]") {
        if (!value.is_array()) return false;
        for (const auto& v : value)
            if (!v.is_object()) return false;
        return true;
    }
    return true;
}

} // namespace

void validate_args(const ToolDescriptor& descriptor, const json& args) {
    if (!args.is_object() && !args.is_null())
        throw InvalidArgs("arguments must be an object");
    for (const auto& [field, spec] : descriptor.input_schema) {
        const bool present = args.is_object() && args.contains(field);
        if (!present) {
            if (spec.required)
                throw InvalidArgs("missing required field '" + field + "'");
            continue;
        }
        const json& value = args.at(field);
        if (!type_matches(spec.type, value))
            throw InvalidArgs("field '" + field + "' expects " + spec.type);
        if (spec.type.rfind("array", 0) == 0 && spec.required && value.empty())
            throw InvalidArgs("field '" + field + "' must not be empty");
    }
}

namespace {

json tools_list_result(ToolServer& server) {
    json tools = json::array();
    for (const auto& d : server.list_tools()) {
        tools.push_back({{"name", d.name},
                         {"description", d.description},
                         {"inputSchema", d.schema_json()}});
    }
    return {{"tools", tools}};
}

RpcMessage dispatch(ToolServer& server, const RpcMessage& req) {
    const json id = req.id ? *req.id : json();
    if (req.method == "initialize") {
        return RpcMessage::response(
            id, {{"protocolVersion", "2024-11-05"},
                 {"capabilities", {{"tools", json::object()}}},
                 {"serverInfo", {{"name", server.server_name()}, {"version", "1.0.0"}}}});
    }
    if (req.method == "tools/list") {
        return RpcMessage::response(id, tools_list_result(server));
    }
    if (req.method == "tools/call") {
        if (!req.params.is_object() || !req.params.contains("name") ||
            !req.params["name"].is_string()) {
            return RpcMessage::error(id, rpc_error::kInvalidParams, "missing tool name");
        }
        const std::string name = req.params["name"].get<std::string>();
        const json args = req.params.value("arguments", json::object());
        try {
            const std::string text = server.call_tool(name, args);
            json content = json::array({{{"type", "text"}, {"text", text}}});
            return RpcMessage::response(id, {{"content", content}, {"isError", false}});
        } catch (const ToolNotFound& e) {
            return RpcMessage::error(id, rpc_error::kToolNotFound, e.what());
        } catch (const InvalidArgs& e) {
            return RpcMessage::error(id, rpc_error::kInvalidParams, e.what());
        } catch (const std::exception& e) {
            return RpcMessage::error(id, rpc_error::kInternalError, e.what());
        }
    }
    return RpcMessage::error(id, rpc_error::kMethodNotFound,
                             "unknown method: " + req.method);
}

} // namespace

void serve_stdio(ToolServer& server, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RpcMessage req;
        try {
            req = decode_message(line);
        } catch (const MalformedMessage& e) {
            out << encode_message(RpcMessage::error(json(), rpc_error::kParseError, e.what()));
            out.flush();
            continue;
        } catch (const UnknownShape& e) {
            out << encode_message(
                RpcMessage::error(json(), rpc_error::kInvalidRequest, e.what()));
            out.flush();
            continue;
        }
        if (req.kind != MessageKind::request) continue;
        if (!req.id) continue;  // notification
        out << encode_message(dispatch(server, req));
        out.flush();
    }
}

} // namespace cyclebench
