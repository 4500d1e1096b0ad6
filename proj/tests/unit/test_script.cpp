#include <doctest.h>

#include "augur/interpreter.hpp"
#include "augur/lifecycle.hpp"
#include "support.hpp"

using namespace augur;
namespace lc = augur::lifecycle;

namespace {

ExecResult run_input(const Ledger& L, const Transaction& tx, size_t i, std::optional<Script> unlock = std::nullopt,
    std::optional<Script> lock = std::nullopt)
{
    const TxOutput& spent = L.state().utxo.at(tx.vin[i].prevout);
    ExecContext ctx;
    ctx.tx = &tx;
    ctx.input_index = i;
    ctx.spent = &spent;
    ctx.services = &L;
    Script effective = spent.script;
    if (tx.type == TxType::Redemption)
        if (const auto owner = owner_of(spent))
            effective = scripts::consensus_claim(*owner);
    return execute(unlock.value_or(tx.vin[i].script_sig), lock.value_or(effective), ctx);
}

size_t input_with(const Ledger& L, const Transaction& tx, const Script& lock)
{
    for (size_t i = 0; i < tx.vin.size(); ++i)
        if (L.state().utxo.at(tx.vin[i].prevout).script == lock)
            return i;
    throw std::runtime_error("no input with that lock");
}

}  // namespace

TEST_CASE("script text and binary forms round-trip")
{
    const std::string text =
        "OP_DUP OP_HASH160 <751e76e8199196d454941c45d1b3a323f1433bd6> OP_EQUALVERIFY OP_CHECKSIG";
    const Script s = Script::parse(text);
    CHECK(s.to_string() == text);
    CHECK(Script::deserialize(s.serialize()) == s);
    CHECK(s == scripts::pay_to_key_hash(hash160_from_hex("751e76e8199196d454941c45d1b3a323f1433bd6")));
    CHECK(Script::parse("OP_CHECKDATA") == Script::parse("OP_DATACHECK"));
    const Script w = Script::parse("<00ff> [c0ffee] OP_PCACHECK");
    CHECK(w.to_string() == "<00ff> [c0ffee] OP_PCACHECK");
    CHECK(Script::deserialize(w.serialize()) == w);
    for (const char* bad : {"OP_NOPE", "<0g>", "<abc>", "[12", "foo"})
        CHECK_THROWS_AS(Script::parse(bad), ScriptParseError);
    CHECK_THROWS(Script::deserialize(Bytes{0x01, 0xff}));
    CHECK_THROWS(Script::deserialize(Bytes{0x00}));
    for (uint8_t b : {0x76, 0xa9, 0x88, 0xac, 0xc0, 0xc1, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6}) {
        const auto op = opcode_from_byte(b);
        REQUIRE(op);
        CHECK(opcode_from_name(opcode_name(*op)) == op);
    }
}

TEST_CASE("pay to key hash")
{
    auto s = test::market_chain();
    const Ledger& L = s.node().ledger();
    const KeyPair dave = actor_key("dave");
    const Transaction tx = lc::transfer(L, dave, actor_key("bob").address(), UnitKind::Bitcoin, Amount::coins(1));
    CHECK(run_input(L, tx, 0));

    const auto& ops = tx.vin[0].script_sig.ops();
    const Bytes sig = std::get<Push>(ops[0]).data;
    const PublicKey other = actor_key("bob").public_key();
    const auto wrong = run_input(L, tx, 0, Script().push(sig).push(other));
    CHECK_FALSE(wrong);
    CHECK(wrong.error == ScriptError::VerifyFailed);

    PublicKey daves = dave.public_key();
    Signature forged{};
    std::copy(sig.begin(), sig.end(), forged.begin());
    forged[5] ^= 1;
    const auto bad_sig = run_input(L, tx, 0, scripts::signature_unlock(forged, daves));
    CHECK(bad_sig.error == ScriptError::FalseResult);

    const auto empty = run_input(L, tx, 0, Script(), Script::parse("OP_EQUALVERIFY"));
    CHECK(empty.error == ScriptError::Underflow);
}

TEST_CASE("market check guards event and market custody")
{
    auto s = test::market_chain();
    s = test::run(std::move(s), Json::parse(R"([
        {"do": "create_event", "actor": "carol", "name": "hail", "expires_in_blocks": 4},
        {"do": "create_event", "actor": "carol", "name": "fog", "expires_in_blocks": 4},
        {"do": "advance"}
    ])"));
    const Ledger& L = s.node().ledger();
    const Hash160 hail = test::named_event(s, "hail");
    const Hash160 fog = test::named_event(s, "fog");
    const Transaction tx = lc::create_market(L, actor_key("carol"), "sky", {hail}, 2.0, 0.01);
    const size_t i = input_with(L, tx, scripts::event_custody(hail));
    CHECK(run_input(L, tx, i));

    const auto& ops = tx.vin[i].script_sig.ops();
    const Bytes mid = std::get<Push>(ops[0]).data;
    Json mdata = Json::parse(std::get<Push>(ops[1]).data);
    const Bytes edata = std::get<Push>(ops[2]).data;
    for (const char* field : {"title", "loss_limit", "funding"}) {
        Json changed = mdata;
        if (changed[field].is_string())
            changed[field] = changed[field].get<std::string>() == "x" ? "y" : "x";
        else
            changed[field] = changed[field].get<double>() + 1;
        const std::string text = changed.dump();
        const auto r = run_input(L, tx, i, Script().push(mid).push(Bytes(text.begin(), text.end())).push(edata));
        CHECK_FALSE(r);
    }
    const Bytes foreign = L.state().events.at(fog).data.canonical();
    CHECK_FALSE(run_input(L, tx, i, Script().push(mid).push(std::get<Push>(ops[1]).data).push(foreign)));
}

TEST_CASE("event lookup and counter legs on trades")
{
    auto s = test::market_chain();
    const Ledger& L = s.node().ledger();
    const Hash160 weather = test::named_market(s, "weather");
    const Hash160 gusts = test::named_market(s, "gusts");
    const Hash160 rain = test::named_event(s, "rain");
    const Hash160 snow = test::named_event(s, "snow");
    const Hash160 wind = test::named_event(s, "wind");

    for (const auto& [market, event] : {std::pair{weather, rain}, {weather, snow}, {gusts, wind}}) {
        const Transaction tx = lc::buy(L, actor_key("dave"), market, event, 1, Amount::coins(2));
        const size_t pool = input_with(L, tx, scripts::share_pool());
        CHECK(run_input(L, tx, pool));
        const auto foreign = run_input(L, tx, pool, scripts::event_id_unlock(event == wind ? rain : wind));
        CHECK_FALSE(foreign);
    }

    Transaction tx = lc::buy(L, actor_key("dave"), weather, rain, 1, Amount::coins(2));
    const size_t pool = input_with(L, tx, scripts::share_pool());
    for (auto& in : tx.vin)
        if (&in != &tx.vin[pool])
            in.units = UnitKind::Reputation;
    CHECK_FALSE(run_input(L, tx, pool));

    const Transaction sell = lc::sell(L, actor_key("dave"), weather, rain, 1, Amount::coins(5));
    const size_t bank = input_with(L, sell, scripts::market_pool());
    CHECK(run_input(L, sell, bank));
    Transaction no_shares = sell;
    for (auto& in : no_shares.vin)
        if (in.units == UnitKind::Shares)
            in.units = UnitKind::Reputation;
    CHECK_FALSE(run_input(L, no_shares, bank));
}

TEST_CASE("report data check")
{
    auto s = test::due_chain();
    const Ledger& L = s.node().ledger();
    const Transaction red = *lc::redeem_vote(L, "main", s.node().reveals());
    size_t report_input = red.vin.size();
    for (size_t i = 0; i < red.vin.size(); ++i)
        if (L.state().utxo.at(red.vin[i].prevout).report)
            report_input = i;
    REQUIRE(report_input < red.vin.size());
    CHECK(run_input(L, red, report_input));

    const TxOutput& spent = L.state().utxo.at(red.vin[report_input].prevout);
    TxOutput flipped = spent;
    flipped.report->outcomes[0][0] ^= 1;
    ExecContext ctx;
    ctx.tx = &red;
    ctx.input_index = report_input;
    ctx.spent = &flipped;
    ctx.services = &L;
    CHECK_FALSE(execute(red.vin[report_input].script_sig, spent.script, ctx));

    Json j = spent.report->to_json();
    j.erase("quorum");
    CHECK_THROWS_AS(ReportData::from_json(j), FormatError);
}

TEST_CASE("consensus and PCA checks on a redemption")
{
    auto s = test::due_chain();
    const Ledger& L = s.node().ledger();
    const Transaction red = *lc::redeem_vote(L, "main", s.node().reveals());
    for (size_t i = 0; i < red.vin.size(); ++i)
        CHECK(run_input(L, red, i));

    size_t k = 0;
    while (!L.state().utxo.at(red.vin[k].prevout).report)
        ++k;
    const auto& ops = red.vin[k].script_sig.ops();
    const Bytes pub = std::get<Push>(ops[0]).data;
    const Bytes matrix = std::get<WitnessPush>(ops[1]).data;
    Eigen::MatrixXd centered = parse_matrix(std::get<WitnessPush>(ops[2]).data);

    Eigen::MatrixXd nudged = centered;
    nudged(0, 0) += 1e-6;
    CHECK_FALSE(run_input(L, red, k, Script().push(pub).witness(matrix).witness(serialize_matrix(nudged))));

    BallotMatrix heavier = BallotMatrix::parse(matrix);
    heavier.rows[0].reputation += Amount::coins(1);
    CHECK_FALSE(run_input(L, red, k, Script().push(pub).witness(heavier.serialize()).witness(serialize_matrix(centered))));

    BallotMatrix empty = BallotMatrix::parse(matrix);
    empty.rows.clear();
    CHECK_FALSE(run_input(L, red, k, Script().push(pub).witness(empty.serialize()).witness(serialize_matrix(centered))));

    const auto missing = run_input(L, red, k, Script().push(pub));
    CHECK_FALSE(missing);
}

TEST_CASE("stack limits")
{
    auto s = test::market_chain();
    const Ledger& L = s.node().ledger();
    const Transaction tx =
        lc::transfer(L, actor_key("dave"), actor_key("bob").address(), UnitKind::Bitcoin, Amount::coins(1));
    Script deep;
    for (int i = 0; i < 70; ++i)
        deep.push(Bytes{1});
    CHECK(run_input(L, tx, 0, deep, Script()).error == ScriptError::StackLimit);
    CHECK(run_input(L, tx, 0, Script().witness(Bytes{1}), Script::parse("OP_DUP")).error == ScriptError::Underflow);
    CHECK(run_input(L, tx, 0, Script().push(Bytes{1}), Script().witness(Bytes{1})).error == ScriptError::VerifyFailed);
}
