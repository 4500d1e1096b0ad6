#include <doctest.h>

#include <cmath>

#include "augur/lifecycle.hpp"
#include "support.hpp"

using namespace augur;
namespace lc = augur::lifecycle;

namespace {

EventData binary_event(const std::string& description, int64_t expiration)
{
    EventData e;
    e.description = description;
    e.branch = "main";
    e.expiration = expiration;
    return e;
}

Amount bitcoin_of(const Session& s, const std::string& actor)
{
    return s.node().ledger().balance(actor_key(actor).address(), UnitKind::Bitcoin);
}

Amount shares_of(const Session& s, const std::string& actor)
{
    return s.node().ledger().balance(actor_key(actor).address(), UnitKind::Shares);
}

}  // namespace

TEST_CASE("event creation fee and expiration")
{
    auto s = test::market_chain();
    const Ledger& L = s.node().ledger();
    const KeyPair carol = actor_key("carol");
    CHECK(L.validate(lc::create_event(L, carol, binary_event("a", L.now() + 1), Amount::parse("0.01"))).ok());
    CHECK(L.validate(lc::create_event(L, carol, binary_event("b", L.now() + 1), Amount::parse("0.00999999"))).code ==
        ValidationCode::InsufficientFunds);
    CHECK(L.validate(lc::create_event(L, carol, binary_event("c", L.now()), Amount::parse("0.01"))).code ==
        ValidationCode::TypeRule);

    EventData bad = binary_event("d", L.now() + 1);
    bad.range = {1.0, 1.0};
    CHECK_THROWS_AS(lc::create_event(L, carol, bad, Amount::parse("0.01")), FormatError);
}

TEST_CASE("market funding is the worst-case loss")
{
    auto s = test::run(test::market_chain(), Json::parse(R"([
        {"do": "create_event", "actor": "carol", "name": "hail", "expires_in_blocks": 4},
        {"do": "advance"}
    ])"));
    const Ledger& L = s.node().ledger();
    const Hash160 hail = test::named_event(s, "hail");
    const Transaction tx = lc::create_market(L, actor_key("carol"), "hail market", {hail}, 1.0, 0.0);
    CHECK(tx.market->funding.to_string() == "0.69314718");
    CHECK(L.validate(tx).ok());

    CHECK(test::named_market(s, "weather") != Hash160{});
    const auto& weather = L.state().markets.at(test::named_market(s, "weather"));
    CHECK(weather.data.funding == Amount::from_double(40.0 * 2.0 * std::log(2.0)));

    CHECK_THROWS_AS(lc::create_market(L, actor_key("carol"), "again", {test::named_event(s, "rain")}, 1.0, 0.0),
        lc::LifecycleError);
}

TEST_CASE("trades")
{
    auto s = test::market_chain();
    const Ledger& L = s.node().ledger();
    const Hash160 gusts = test::named_market(s, "gusts");
    const Hash160 wind = test::named_event(s, "wind");
    CHECK_THROWS_AS(lc::buy(L, actor_key("dave"), gusts, wind, 1, Amount()), lc::LifecycleError);
    CHECK_THROWS_AS(lc::sell(L, actor_key("dave"), gusts, wind, 1, Amount::coins(1)), lc::LifecycleError);
    CHECK_THROWS_AS(lc::buy(L, actor_key("dave"), gusts, wind, 2, Amount::coins(1)), std::exception);

    const Amount before = bitcoin_of(s, "dave");
    s = test::run(std::move(s), Json::parse(R"([
        {"do": "buy", "actor": "dave", "market": "gusts", "outcome": 0, "shares": "7.5"},
        {"do": "sell", "actor": "dave", "market": "gusts", "outcome": 0, "shares": "7.5"}
    ])"));
    const Amount lost = before - bitcoin_of(s, "dave");
    CHECK(lost.units() >= 0);
    CHECK(lost.units() <= 2);
    CHECK(shares_of(s, "dave") == Amount::coins(42));
}

TEST_CASE("quorum closes trading")
{
    auto s = test::market_chain();
    const Hash160 weather = test::named_market(s, "weather");
    const Ledger& L = s.node().ledger();
    CHECK_FALSE(L.quorum("main", L.timestamp_at(2)).matured);
    CHECK(L.quorum("main").matured);

    auto young = test::run(test::market_chain(), Json::parse(R"([
        {"do": "create_event", "actor": "carol", "name": "hail", "expires_in_blocks": 5},
        {"do": "advance"},
        {"do": "create_market", "actor": "carol", "name": "sky", "events": ["hail"], "loss_limit": 2},
        {"do": "advance"}
    ])"));
    const auto [early, reveal] = lc::submit_report(
        young.node().ledger(), actor_key("alice"), "main", std::vector(4, consensus::Entry::of(1)));
    CHECK_FALSE(early.vout[0].report->quorum.matured);
    CHECK(reveal.entries.size() == 4);

    s = test::run(std::move(s), Json::parse(R"([
        {"do": "advance", "blocks": 2},
        {"do": "report", "actor": "alice", "entries": {"rain": 1, "snow": 0, "wind": 1}}
    ])"));
    QuorumStatus q = s.node().ledger().quorum("main");
    CHECK(q.matured);
    CHECK(q.reported == 1);
    CHECK(q.required == 2);
    CHECK_FALSE(q.met);
    CHECK_FALSE(s.node().ledger().market_closed(weather));

    s = test::run(std::move(s), Json::parse(R"([
        {"do": "buy", "actor": "dave", "market": "weather", "event": "rain", "outcome": 1, "shares": "1"},
        {"do": "report", "actor": "bob", "entries": {"rain": 1, "snow": 0, "wind": 1}}
    ])"));
    q = s.node().ledger().quorum("main");
    CHECK(q.met);
    CHECK(s.node().ledger().market_closed(weather));
    CHECK_THROWS_AS(s.execute(Json::parse(
                        R"({"do": "buy", "actor": "dave", "market": "weather", "event": "rain", "outcome": 1, "shares": "1"})")),
        RejectedError);
}

TEST_CASE("winning shares pay one each")
{
    auto s = test::due_chain();
    const Amount dave = bitcoin_of(s, "dave");
    const Amount carol = bitcoin_of(s, "carol");
    s.node().redeem_due();
    REQUIRE(s.node().open_block().size() == 1);
    CHECK(s.node().open_block()[0].type == TxType::Redemption);
    CHECK((bitcoin_of(s, "dave") - dave).to_string() == "42.00000000");
    CHECK(bitcoin_of(s, "carol") - carol >= Amount::coins(4));
    CHECK(shares_of(s, "dave") == Amount());
    CHECK(test::total_units(s.node().ledger().state(), UnitKind::Reputation) == Amount::coins(100));
    for (const auto& [id, m] : s.node().ledger().state().markets)
        CHECK(m.redeemed);
}

TEST_CASE("an invalid event pays the closing price")
{
    const Json report = run_scenario(test::scenario("invalid_event"));
    const auto& payout = report.at("redemptions").at(0).at("payouts").at(0);
    const double p = std::exp(0.6) / (1.0 + std::exp(0.6));
    CHECK(payout.at("owed").get<std::string>() == Amount::from_units(int64_t(std::floor(3 * p * 1e8))).to_string());

    Json outcome{{"invalid", true}, {"unresolvable", false}, {"value", nullptr}};
    EventData e;
    CHECK(lc::share_value(e, 256, outcome, 1, {0.25, 0.75}) == 0.75);
    outcome = Json{{"invalid", false}, {"unresolvable", false}, {"value", "1.00000000"}};
    CHECK(lc::share_value(e, 256, outcome, 1, {0.25, 0.75}) == 1.0);
    CHECK(lc::share_value(e, 256, outcome, 0, {0.25, 0.75}) == 0.0);
}
