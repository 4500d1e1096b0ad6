#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "augur/lifecycle.hpp"
#include "support.hpp"

using namespace augur;
namespace lc = augur::lifecycle;
using consensus::Entry;

namespace {

const Hash160 kEvent = hash160("launch");

feeds::Decision split(const std::string& yes, const std::string& no, double theta)
{
    std::map<std::string, Amount> tally;
    tally["1.00000000"] = Amount::parse(yes);
    if (no != "0")
        tally["0.00000000"] = Amount::parse(no);
    return feeds::decide(kEvent, tally, theta);
}

Session feeds_session()
{
    Json spec = test::scenario("feeds_resolve");
    Session s = Session::start(spec);
    for (const auto& a : spec.at("actions")) {
        if (a.at("do") == "feeds_collect")
            break;
        s.execute(a);
    }
    return s;
}

}  // namespace

TEST_CASE("threshold decisions")
{
    CHECK(split("95", "5", 0.95).resolved);
    CHECK(split("95", "5", 0.95).value.value == 1.0);
    CHECK_FALSE(split("94.9", "5.1", 0.95).resolved);
    CHECK_FALSE(split("90", "10", 0.95).resolved);
    CHECK(split("90", "10", 0.9).resolved);
    CHECK_FALSE(split("99.99999999", "0.00000001", 1.0).resolved);
    CHECK(split("42", "0", 1.0).resolved);
    CHECK(split("0.00000001", "0", 0.95).resolved);
    CHECK_FALSE(split("0", "0", 0.95).resolved);
    CHECK_THROWS(split("1", "0", 0.5));
    CHECK_THROWS(split("1", "0", 1.01));

    const auto d = feeds::aggregate({}, {kEvent}, 0.95);
    REQUIRE(d.size() == 1);
    CHECK_FALSE(d[0].resolved);
}

TEST_CASE("collecting signed observations")
{
    const KeyPair a = actor_key("oracle");
    const KeyPair b = actor_key("minor");
    const KeyPair c = actor_key("third");
    const std::map<Hash160, Entry> yes{{kEvent, Entry::of(1)}};
    const feeds::StaticFeedSource sa("a", yes), sb("b", yes), sc("c", yes), down("down", std::nullopt);

    auto obs = feeds::collect({{&a, &sa, Amount::coins(50)}, {&b, &sb, Amount::coins(30)}, {&c, &sc, Amount::coins(20)}},
        {kEvent});
    REQUIRE(obs.size() == 3);
    CHECK(feeds::verify_observation(obs[0], a.public_key()));
    CHECK_FALSE(feeds::verify_observation(obs[0], b.public_key()));
    const auto decisions = feeds::aggregate(obs, {kEvent}, 1.0);
    CHECK(decisions[0].resolved);
    CHECK(decisions[0].total_weight == Amount::coins(100));

    obs = feeds::collect({{&a, &sa, Amount::coins(50)}, {&b, &down, Amount::coins(30)}}, {kEvent});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].holder == a.address());

    feeds::Observation forged = feeds::sign_observation(a, kEvent, Entry::of(1), Amount::coins(50));
    forged.value = Entry::of(0);
    CHECK_FALSE(feeds::verify_observation(forged, a.public_key()));
    CHECK(feeds::Observation::from_json(forged.to_json()).message() == forged.message());
}

TEST_CASE("file feeds")
{
    const auto path = std::filesystem::temp_directory_path() / "augur_feed_test.json";
    {
        std::ofstream out(path);
        out << Json{{hex(kEvent), 1}}.dump();
    }
    const feeds::FileFeedSource file(path.string());
    const auto data = file.fetch();
    REQUIRE(data);
    CHECK(data->at(kEvent).value == 1.0);
    std::filesystem::remove(path);
    CHECK_FALSE(file.fetch());
}

TEST_CASE("feed redemption checks every observation")
{
    Session s = feeds_session();
    const Ledger& L = s.node().ledger();
    const Hash160 launch = test::named_event(s, "launch");
    const KeyPair oracle = actor_key("oracle");
    const KeyPair minor = actor_key("minor");

    auto good = std::vector{feeds::sign_observation(oracle, launch, Entry::of(1), Amount::coins(95)),
        feeds::sign_observation(minor, launch, Entry::of(0), Amount::coins(5))};
    std::string why;
    CHECK(lc::redeem_feeds(L, "main", good, &why));

    auto forged = good;
    forged[1].value = Entry::of(1);
    CHECK_FALSE(lc::redeem_feeds(L, "main", forged, &why));
    CHECK(why.find("does not verify") != std::string::npos);

    auto inflated = good;
    inflated[1] = feeds::sign_observation(minor, launch, Entry::of(0), Amount::coins(6));
    CHECK_FALSE(lc::redeem_feeds(L, "main", inflated, &why));

    CHECK(feeds::aggregate(good, {launch}, 0.95)[0].resolved);
    CHECK_FALSE(feeds::aggregate(good, {launch}, 1.0)[0].resolved);
}

TEST_CASE("settled events cannot be challenged")
{
    Session s = feeds_session();
    const Hash160 launch = test::named_event(s, "launch");
    const Transaction early = lc::challenge(s.node().ledger(), actor_key("trader"), launch, Amount::parse("0.1"));
    CHECK(s.node().ledger().validate(early).ok());

    s.execute(Json::parse(R"({"do": "feeds_collect", "sources": {"oracle": {"launch": 1}, "minor": {"launch": 0}}})"));
    s.execute(Json::parse(R"({"do": "feeds_aggregate"})"));
    REQUIRE(s.node().ledger().state().events.at(launch).settled);
    const Transaction late = lc::challenge(s.node().ledger(), actor_key("trader"), launch, Amount::parse("0.1"));
    CHECK(s.node().ledger().validate(late).code == ValidationCode::TypeRule);
    CHECK(s.node().ledger().balance(actor_key("minor").address(), UnitKind::Reputation) == Amount::coins(5));
}
