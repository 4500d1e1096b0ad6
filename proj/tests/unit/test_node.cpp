#include <doctest.h>

#include <filesystem>

#include "support.hpp"

using namespace augur;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("augur_node_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<Json> walkthrough_log()
{
    const fs::path dir = fresh_dir("log");
    run_scenario(test::scenario("walkthrough"), dir.string());
    auto lines = read_jsonl((dir / "blocks.jsonl").string());
    fs::remove_all(dir);
    return lines;
}

}  // namespace

TEST_CASE("an untouched log verifies")
{
    const auto lines = walkthrough_log();
    const VerifyResult r = verify_lines(lines);
    CHECK(r.ok);
    CHECK(r.blocks == static_cast<int64_t>(lines.size()));
    CHECK(r.head == lines.back().at("hash").get<std::string>());
}

TEST_CASE("an edited output value fails at its block")
{
    const auto lines = walkthrough_log();
    size_t target = 0;
    for (size_t b = 1; b < lines.size() && !target; ++b)
        if (!lines[b].at("txs").empty())
            target = b;
    REQUIRE(target > 0);

    auto edited = lines;
    Json& out = edited[target]["txs"][0]["vout"][0];
    out["value"] = (Amount::parse(out.at("value").get<std::string>()) + Amount::from_units(1)).to_string();
    const VerifyResult r = verify_lines(edited);
    CHECK_FALSE(r.ok);
    CHECK(r.blocks == static_cast<int64_t>(target));
    CHECK(r.message.find("block " + std::to_string(target)) != std::string::npos);
}

TEST_CASE("reordered transactions fail")
{
    const auto lines = walkthrough_log();
    bool tried = false;
    for (size_t b = 1; b < lines.size(); ++b) {
        if (lines[b].at("txs").size() < 2)
            continue;
        auto edited = lines;
        auto& txs = edited[b]["txs"];
        std::swap(txs[0], txs[1]);
        CHECK_FALSE(verify_lines(edited).ok);
        tried = true;
    }
    CHECK(tried);

    auto truncated = lines;
    truncated.erase(truncated.begin() + 1);
    CHECK_FALSE(verify_lines(truncated).ok);
}

TEST_CASE("runs are deterministic and reload")
{
    const Json spec = test::scenario("walkthrough");
    const Json a = run_scenario(spec);
    const Json b = run_scenario(spec);
    CHECK(a.at("head") == b.at("head"));
    CHECK(a.at("state") == b.at("state"));

    const fs::path dir = fresh_dir("reload");
    run_scenario(spec, dir.string());
    const Node node = Node::load(dir.string());
    CHECK(node.head() == a.at("head").get<std::string>());
    CHECK(to_hex(node.ledger().state().hash()) == a.at("state").get<std::string>());
    CHECK(!node.names().at("events").empty());
    fs::remove_all(dir);
}
