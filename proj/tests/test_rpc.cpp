#include "doctest.h"

#include "cyclebench/rpc.hpp"
#include "test_helpers.hpp"

using namespace cyclebench;

TEST_CASE("encode produces one newline-terminated line") {
    const auto msg = RpcMessage::request(1, "tools/list");
    const std::string line = encode_message(msg);
    REQUIRE(!line.empty());
    CHECK(line.back() == '\n');
    CHECK(line.find('\n') == line.size() - 1);
    CHECK(line.find("tools/list") != std::string::npos);
}

TEST_CASE("round-trip identity on hand-built messages") {
    const auto req = RpcMessage::request(1, "tools/list", {{"cursor", nullptr}});
    CHECK(decode_message(encode_message(req)) == req);

    json tools = json::array();
    for (int i = 0; i < 14; ++i) tools.push_back({{"name", "tool" + std::to_string(i)}});
    const auto resp = RpcMessage::response(1, {{"tools", tools}});
    const auto decoded = decode_message(encode_message(resp));
    CHECK(decoded == resp);
    CHECK(decoded.result["tools"].size() == 14);

    const auto err = RpcMessage::error(2, rpc_error::kMethodNotFound, "no such method");
    const auto err2 = decode_message(encode_message(err));
    CHECK(err2 == err);
    CHECK(err2.error_code == -32601);
}

TEST_CASE("round-trip property over generated messages") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        const RpcMessage m = testing::random_message(rng);
        CAPTURE(encode_message(m));
        CHECK(decode_message(encode_message(m)) == m);
    }
}

TEST_CASE("ids round-trip unchanged for integer and string forms") {
    for (const json id : {json(7), json("corr-9")}) {
        const auto m = RpcMessage::request(id, "tools/call");
        const auto back = decode_message(encode_message(m));
        REQUIRE(back.id.has_value());
        CHECK(*back.id == id);
    }
}

TEST_CASE("decode rejects garbage") {
    CHECK_THROWS_AS(decode_message("{not json"), MalformedMessage);
    CHECK_THROWS_AS(decode_message(""), MalformedMessage);
}

TEST_CASE("decode rejects shapes that are none of the three kinds") {
    CHECK_THROWS_AS(decode_message(R"({"jsonrpc":"2.0","id":1})"), UnknownShape);
    CHECK_THROWS_AS(decode_message(R"([1,2,3])"), UnknownShape);
    CHECK_THROWS_AS(
        decode_message(R"({"jsonrpc":"2.0","id":1,"result":1,"error":{"code":-1}})"),
        UnknownShape);
}
