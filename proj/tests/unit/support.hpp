#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "augur/scenario.hpp"

namespace augur::test {

inline Json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return Json::parse(ss.str());
}

inline Json scenario(const std::string& name)
{
    return load_json(std::string(AUGUR_SCENARIO_DIR) + "/" + name + ".json");
}

/// Session over a fresh genesis; every actor gets the listed allocation.
inline Session session(const Json& genesis, const Json& config = Json::object())
{
    Json spec{{"config", config}, {"genesis", genesis}};
    return Session::start(spec);
}

inline Hash160 named_event(const Session& s, const std::string& name)
{
    return hash160_from_hex(s.node().names().at("events").at(name).get<std::string>());
}

inline Hash160 named_market(const Session& s, const std::string& name)
{
    return hash160_from_hex(s.node().names().at("markets").at(name).get<std::string>());
}

inline Amount total_units(const LedgerState& state, UnitKind units)
{
    Amount t;
    for (const auto& [p, o] : state.utxo)
        if (o.units == units)
            t += o.value;
    return t;
}

inline Session run(Session s, const Json& actions)
{
    for (const auto& a : actions)
        s.execute(a);
    return s;
}

/// Two binary events in one market plus a single-event market, with trades
/// on both; everything still open.
inline Session market_chain(const Json& extra_config = Json::object())
{
    Json config{{"quorum_required", 2}, {"reveal_window", 2}};
    config.update(extra_config);
    Session s = session(Json::parse(R"({
        "alice": {"bitcoin": "1000", "reputation": "40"},
        "bob":   {"bitcoin": "1000", "reputation": "35"},
        "carol": {"bitcoin": "1000", "reputation": "25"},
        "dave":  {"bitcoin": "500"}
    })"),
        config);
    return run(std::move(s), Json::parse(R"([
        {"do": "create_event", "actor": "alice", "name": "rain", "expires_in_blocks": 3},
        {"do": "create_event", "actor": "alice", "name": "snow", "expires_in_blocks": 3},
        {"do": "create_event", "actor": "bob", "name": "wind", "expires_in_blocks": 3},
        {"do": "advance"},
        {"do": "create_market", "actor": "alice", "name": "weather", "events": ["rain", "snow"], "loss_limit": 40, "trading_fee": 0.01},
        {"do": "create_market", "actor": "bob", "name": "gusts", "events": ["wind"], "loss_limit": 10, "trading_fee": 0.0},
        {"do": "advance"},
        {"do": "buy", "actor": "dave", "market": "weather", "event": "rain", "outcome": 1, "shares": "30"},
        {"do": "buy", "actor": "dave", "market": "weather", "event": "snow", "outcome": 0, "shares": "12"},
        {"do": "buy", "actor": "carol", "market": "gusts", "outcome": 1, "shares": "4"},
        {"do": "advance"}
    ])"));
}

/// market_chain after maturity with three reports (carol dissents on rain),
/// sealed until the redemption is due but not yet built.
inline Session due_chain(const Json& extra_config = Json::object())
{
    Session s = run(market_chain(extra_config), Json::parse(R"([
        {"do": "advance", "blocks": 2},
        {"do": "report", "actor": "alice", "entries": {"rain": 1, "snow": 0, "wind": 1}},
        {"do": "report", "actor": "bob", "entries": {"rain": 1, "snow": 0, "wind": 1}},
        {"do": "report", "actor": "carol", "entries": {"rain": 0, "snow": 0, "wind": 1}}
    ])"));
    for (int k = 0; k < 10 && s.node().ledger().due_redemptions().empty(); ++k)
        s.node().seal(false);
    return s;
}

}  // namespace augur::test
