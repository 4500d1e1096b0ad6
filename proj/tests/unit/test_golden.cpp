#include <doctest.h>

#include <fstream>

#include "golden.hpp"

using namespace augur;
namespace lc = augur::lifecycle;

TEST_CASE("golden transactions")
{
    const bool regen = std::getenv("AUGUR_REGEN_GOLDEN") != nullptr;
    for (const auto& c : test::golden_cases()) {
        SUBCASE(c.name.c_str())
        {
            const std::string text = test::golden_text(c);
            if (regen) {
                std::ofstream(test::golden_path(c.name)) << text;
                continue;
            }
            const std::string stored = test::read_text(test::golden_path(c.name));
            CHECK(stored == text);

            const auto g = test::parse_golden(stored);
            const Transaction tx = Transaction::from_json(g.tx);
            CHECK(c.pre.validate(tx).ok());
            REQUIRE(g.pairs.size() == tx.vin.size());
            for (const auto& p : g.pairs)
                CHECK(test::run_pair(c.pre, tx, p.input, p.lock, p.unlock));

            const auto tally = test::mutate_golden(c.pre, g);
            CHECK(tally.tried > 20);
            for (const auto& s : tally.survivors)
                FAIL_CHECK("mutant accepted: " << s);
        }
    }
}

TEST_CASE("market funding must match its loss limit")
{
    auto s = test::run(test::market_chain(), Json::parse(R"([
        {"do": "create_event", "actor": "carol", "name": "hail", "expires_in_blocks": 5},
        {"do": "advance"}
    ])"));
    const Ledger& L = s.node().ledger();
    const Transaction honest = lc::create_market(L, actor_key("carol"), "sky", {test::named_event(s, "hail")}, 40.0, 0.0);
    REQUIRE(honest.market->funding.to_string() == "27.72588722");

    MarketData relabelled = *honest.market;
    relabelled.loss_limit = 1.2;
    relabelled.stated_id.reset();
    std::string text = honest.to_json().dump();
    const auto swap = [&](const std::string& from, const std::string& to) {
        for (size_t at = text.find(from); at != std::string::npos; at = text.find(from, at + to.size()))
            text.replace(at, from.size(), to);
    };
    swap(hex(honest.market->id()), hex(relabelled.id()));
    swap(honest.market->address(), relabelled.address());
    Json j = Json::parse(text);
    j["loss_limit"] = 1.2;
    Transaction forged = Transaction::from_json(j);
    lc::sign_inputs(forged, L.state(), actor_key("carol"));
    REQUIRE(forged.market->id() == relabelled.id());
    const auto r = L.validate(forged);
    CHECK(r.code == ValidationCode::TypeRule);
    CHECK(r.message.find("funding") != std::string::npos);
}
