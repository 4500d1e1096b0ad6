#include "augur/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "augur/ballot.hpp"

namespace augur::lifecycle {

namespace {

[[noreturn]] void reject(const std::string& message)
{
    throw ValidationError(ValidationCode::TypeRule, message);
}

TxInput input_from(const Coin& c)
{
    TxInput in;
    in.prevout = c.point;
    in.value = c.output.value;
    in.units = c.output.units;
    in.outcome = c.output.outcome;
    return in;
}

Amount total(const std::vector<Coin>& coins)
{
    Amount s;
    for (const auto& c : coins)
        s += c.output.value;
    return s;
}

std::vector<Coin> select(const std::vector<Coin>& coins, Amount target, const std::string& what)
{
    std::vector<Coin> out;
    Amount have;
    for (const auto& c : coins) {
        if (have >= target && !out.empty())
            break;
        out.push_back(c);
        have += c.output.value;
    }
    if (have < target || out.empty())
        throw LifecycleError("insufficient " + what + ": need " + target.to_string() + ", have " + have.to_string());
    return out;
}

std::string event_address(const Hash160& event)
{
    return encode_address(event, AddressVersion::Event);
}

size_t event_index(const MarketData& m, const Hash160& event)
{
    const auto pos = std::find(m.events.begin(), m.events.end(), event);
    if (pos == m.events.end())
        throw LifecycleError("event is not part of the market");
    return static_cast<size_t>(pos - m.events.begin());
}

const MarketRecord& market_of(const Ledger& ledger, const Hash160& market)
{
    const auto it = ledger.state().markets.find(market);
    if (it == ledger.state().markets.end())
        throw LifecycleError("unknown market " + hex(market));
    return it->second;
}

std::map<UnitKind, Amount> sum_by_units(const std::vector<TxOutput>& outs)
{
    std::map<UnitKind, Amount> m;
    for (const auto& o : outs)
        m[o.units] += o.value;
    return m;
}

}  // namespace

TxOutput pay_to(const std::string& address, UnitKind units, Amount value)
{
    TxOutput out;
    out.value = value;
    out.units = units;
    out.address = address;
    out.script = scripts::pay_to_key_hash(key_hash_of_address(address));
    return out;
}

Hash160 key_hash_of_address(const std::string& address)
{
    const DecodedAddress d = decode_address(address);
    if (d.version != static_cast<uint8_t>(AddressVersion::User))
        throw LifecycleError("not a user address: " + address);
    return d.digest;
}

std::vector<Coin> coins_of(const LedgerState& state, const Hash160& owner, UnitKind units,
    std::optional<Hash160> event, std::optional<int64_t> outcome)
{
    std::vector<Coin> out;
    for (const auto& [point, o] : state.utxo) {
        if (o.units != units || o.market || o.report || o.escrow || o.event_data)
            continue;
        const auto h = owner_of(o);
        if (!h || *h != owner)
            continue;
        if (event && o.event != event)
            continue;
        if (outcome && o.outcome != outcome)
            continue;
        out.push_back({point, o});
    }
    return out;
}

void sign_inputs(Transaction& tx, const LedgerState& state, const KeyPair& key)
{
    const Hash160 kh = key.key_hash();
    for (size_t i = 0; i < tx.vin.size(); ++i) {
        const auto it = state.utxo.find(tx.vin[i].prevout);
        if (it == state.utxo.end())
            continue;
        const auto owner = owner_of(it->second);
        if (owner && *owner == kh)
            tx.vin[i].script_sig = scripts::signature_unlock(key.sign(tx.sighash(i)), key.public_key());
    }
}

Transaction faucet(std::vector<TxOutput> outputs, std::string memo)
{
    Transaction tx;
    tx.type = TxType::Faucet;
    tx.issued = sum_by_units(outputs);
    tx.vout = std::move(outputs);
    tx.memo = std::move(memo);
    return tx;
}

Transaction create_event(const Ledger& ledger, const KeyPair& creator, EventData event, Amount fee)
{
    event.creator = creator.address();
    event.stated_id.reset();
    event.validate();
    const auto coins = select(coins_of(ledger.state(), creator.key_hash(), UnitKind::Bitcoin), fee, "bitcoin");
    Transaction tx;
    tx.type = TxType::CreateEvent;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    TxOutput head;
    head.value = fee;
    head.units = UnitKind::Bitcoin;
    head.address = event.address();
    head.script = scripts::event_custody(event.id());
    head.event_data = std::move(event);
    tx.vout.push_back(std::move(head));
    const Amount change = total(coins) - fee;
    if (change.units() > 0)
        tx.vout.push_back(pay_to(creator.address(), UnitKind::Bitcoin, change));
    sign_inputs(tx, ledger.state(), creator);
    return tx;
}

Amount market_funding(const MarketData& market, const std::vector<EventData>& events, size_t scalar_bins)
{
    double funding = 0.0;
    for (const auto& e : events)
        funding += lmsr::max_loss(market.loss_limit, static_cast<double>(e.outcomes(scalar_bins)));
    return Amount::from_double(funding);
}

std::vector<TxOutput> market_outputs(const MarketData& market, const std::vector<Amount>& event_fees, Amount change)
{
    const Hash160 id = market.id();
    const std::string maddr = market.address();
    std::vector<TxOutput> outs;

    TxOutput funding;
    funding.value = market.funding;
    funding.units = UnitKind::Bitcoin;
    funding.market = id;
    funding.address = maddr;
    funding.script = scripts::market_pool();
    outs.push_back(funding);

    for (const auto& e : market.events) {
        TxOutput shares;
        shares.value = Amount::coins(kSharesPerEvent);
        shares.units = UnitKind::Shares;
        shares.event = e;
        shares.branch = market.branch;
        shares.market = id;
        shares.address = maddr;
        shares.script = scripts::share_pool();
        outs.push_back(std::move(shares));
    }
    for (size_t i = 0; i < market.events.size(); ++i) {
        const Hash160& e = market.events[i];
        const Amount escrow = Amount::from_units(event_fees.at(i).units() / 2);
        const Amount pool = event_fees.at(i) - escrow;
        if (escrow.units() > 0) {
            TxOutput o;
            o.value = escrow;
            o.units = UnitKind::Bitcoin;
            o.event = e;
            o.market = id;
            o.escrow = "reporter";
            o.address = event_address(e);
            o.script = scripts::event_custody(e);
            outs.push_back(std::move(o));
        }
        if (pool.units() > 0) {
            TxOutput o;
            o.value = pool;
            o.units = UnitKind::Bitcoin;
            o.event = e;
            o.market = id;
            o.address = maddr;
            o.script = scripts::market_pool();
            outs.push_back(std::move(o));
        }
    }
    if (change.units() > 0)
        outs.push_back(pay_to(market.creator, UnitKind::Bitcoin, change));
    return outs;
}

Transaction create_market(const Ledger& ledger, const KeyPair& creator, std::string title,
    const std::vector<Hash160>& events, double loss_limit, double trading_fee)
{
    const auto& st = ledger.state();
    if (events.empty())
        throw LifecycleError("a market needs at least one event");
    MarketData m;
    m.title = std::move(title);
    m.events = events;
    m.loss_limit = loss_limit;
    m.trading_fee = trading_fee;
    m.creator = creator.address();
    std::vector<EventData> evs;
    std::vector<Amount> fees;
    std::vector<OutPoint> creations;
    for (const auto& e : events) {
        const auto it = st.events.find(e);
        if (it == st.events.end())
            throw LifecycleError("unknown event " + hex(e));
        evs.push_back(it->second.data);
        fees.push_back(it->second.fee);
        creations.push_back(it->second.creation);
    }
    m.branch = evs.front().branch;
    m.funding = market_funding(m, evs, ledger.config().scalar_bins);
    const Hash160 id = m.id();
    const Bytes mdata = m.canonical();

    const auto coins = select(coins_of(st, creator.key_hash(), UnitKind::Bitcoin), m.funding, "bitcoin");
    Transaction tx;
    tx.type = TxType::CreateMarket;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    tx.vin[0].trading_fee = trading_fee;
    for (size_t i = 0; i < events.size(); ++i) {
        const auto it = st.utxo.find(creations[i]);
        if (it == st.utxo.end())
            throw LifecycleError("event " + hex(events[i]) + " is already in a market");
        TxInput in = input_from({creations[i], it->second});
        in.script_sig = scripts::market_data_unlock(id, mdata, evs[i].canonical());
        tx.vin.push_back(std::move(in));
    }
    tx.vout = market_outputs(m, fees, total(coins) - m.funding);
    tx.issued[UnitKind::Shares] = Amount::coins(kSharesPerEvent * static_cast<int64_t>(events.size()));
    tx.market = std::move(m);
    sign_inputs(tx, st, creator);
    return tx;
}

lmsr::LmsrState book(const Ledger& ledger, const Hash160& market, const Hash160& event)
{
    const MarketRecord& m = market_of(ledger, market);
    const size_t ei = event_index(m.data, event);
    std::vector<double> q;
    for (const auto& a : m.q[ei])
        q.push_back(a.to_double());
    return lmsr::LmsrState(std::move(q), m.data.loss_limit);
}

Quote quote(const Ledger& ledger, const Hash160& market, const Hash160& event, int64_t outcome, Amount shares)
{
    const MarketRecord& m = market_of(ledger, market);
    const lmsr::LmsrState st = book(ledger, market, event);
    if (outcome < 0 || static_cast<size_t>(outcome) >= st.outcomes())
        throw LifecycleError("outcome out of range");
    const auto k = static_cast<size_t>(outcome);
    const double x = shares.to_double();
    Quote q;
    if (st.quantity(k) + x < 0)
        throw LifecycleError("sale exceeds the outstanding shares of the outcome");
    q.exact = lmsr::trade_cost(st, k, x);
    const lmsr::LmsrState after = st.after_trade(k, x);
    q.prices_after = lmsr::prices(after);
    q.price = std::round(q.prices_after[k] * 1e9) / 1e9;
    const double scaled = q.exact * static_cast<double>(Amount::kUnitsPerCoin);
    if (shares.units() >= 0)
        q.cost = Amount::from_units(static_cast<int64_t>(std::ceil(scaled)));
    else
        q.cost = Amount::from_units(static_cast<int64_t>(std::floor(-scaled)));
    q.fee = Amount::from_double(q.cost.to_double() * m.data.trading_fee);
    return q;
}

std::pair<Amount, Amount> split_fee(Amount fee)
{
    const Amount creator = Amount::from_units(fee.units() / 2);
    return {creator, fee - creator};
}

namespace {

void push_fee(std::vector<TxOutput>& outs, const MarketRecord& m, const Hash160& market, const Hash160& event,
    Amount fee)
{
    const auto [creator, pool] = split_fee(fee);
    if (creator.units() > 0)
        outs.push_back(pay_to(m.data.creator, UnitKind::Bitcoin, creator));
    if (pool.units() > 0) {
        TxOutput o;
        o.value = pool;
        o.units = UnitKind::Bitcoin;
        o.event = event;
        o.market = market;
        o.address = m.data.address();
        o.script = scripts::market_pool();
        outs.push_back(std::move(o));
    }
}

TxOutput custody(const Hash160& market, const Hash160& event, UnitKind units, Amount value)
{
    TxOutput o;
    o.value = value;
    o.units = units;
    o.event = event;
    o.market = market;
    o.address = event_address(event);
    o.script = scripts::event_custody(event);
    return o;
}

TxOutput shares_to(const std::string& address, const Hash160& event, int64_t outcome, Amount value)
{
    TxOutput o = pay_to(address, UnitKind::Shares, value);
    o.event = event;
    o.outcome = outcome;
    return o;
}

}  // namespace

std::vector<TxOutput> buy_outputs(const MarketRecord& market, const TradeData& trade, const TxOutput& pool,
    const std::string& buyer, Amount buyer_in)
{
    std::vector<TxOutput> outs;
    outs.push_back(custody(trade.market, trade.event, UnitKind::Bitcoin, trade.cost));
    outs.push_back(shares_to(buyer, trade.event, trade.outcome, trade.shares));
    const Amount rest = pool.value - trade.shares;
    if (rest.units() > 0) {
        TxOutput p = pool;
        p.value = rest;
        outs.push_back(std::move(p));
    }
    push_fee(outs, market, trade.market, trade.event, trade.fee);
    const Amount change = buyer_in - trade.cost - trade.fee;
    if (change.units() > 0)
        outs.push_back(pay_to(buyer, UnitKind::Bitcoin, change));
    return outs;
}

std::vector<TxOutput> sell_outputs(const MarketRecord& market, const TradeData& trade, const std::string& seller,
    Amount shares_in, Amount custody_in)
{
    std::vector<TxOutput> outs;
    TxOutput sold = custody(trade.market, trade.event, UnitKind::Shares, trade.shares);
    sold.outcome = trade.outcome;
    outs.push_back(std::move(sold));
    const Amount proceeds = trade.cost - trade.fee;
    if (proceeds.units() > 0)
        outs.push_back(pay_to(seller, UnitKind::Bitcoin, proceeds));
    const Amount share_change = shares_in - trade.shares;
    if (share_change.units() > 0)
        outs.push_back(shares_to(seller, trade.event, trade.outcome, share_change));
    push_fee(outs, market, trade.market, trade.event, trade.fee);
    const Amount rest = custody_in - trade.cost;
    if (rest.units() > 0)
        outs.push_back(custody(trade.market, trade.event, UnitKind::Bitcoin, rest));
    return outs;
}

Transaction buy(const Ledger& ledger, const KeyPair& buyer, const Hash160& market, const Hash160& event,
    int64_t outcome, Amount shares)
{
    if (shares.units() <= 0)
        throw LifecycleError("share count must be positive");
    const auto& st = ledger.state();
    const MarketRecord& m = market_of(ledger, market);
    event_index(m.data, event);
    const Quote q = quote(ledger, market, event, outcome, shares);
    TradeData t{market, event, outcome, shares, q.cost, q.fee, q.price};

    std::optional<Coin> pool;
    for (const auto& [point, o] : st.utxo) {
        if (o.units == UnitKind::Shares && o.market == market && o.event == event &&
            o.script == scripts::share_pool()) {
            pool = Coin{point, o};
            break;
        }
    }
    if (!pool)
        throw LifecycleError("share pool exhausted");
    const auto coins =
        select(coins_of(st, buyer.key_hash(), UnitKind::Bitcoin), q.cost + q.fee, "bitcoin");

    Transaction tx;
    tx.type = TxType::Buy;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    TxInput pin = input_from(*pool);
    pin.script_sig = scripts::event_id_unlock(event);
    tx.vin.push_back(std::move(pin));
    tx.trade = t;
    tx.vout = buy_outputs(m, t, pool->output, buyer.address(), total(coins));
    sign_inputs(tx, st, buyer);
    return tx;
}

Transaction sell(const Ledger& ledger, const KeyPair& seller, const Hash160& market, const Hash160& event,
    int64_t outcome, Amount shares)
{
    if (shares.units() <= 0)
        throw LifecycleError("share count must be positive");
    const auto& st = ledger.state();
    const MarketRecord& m = market_of(ledger, market);
    event_index(m.data, event);
    const auto held = select(coins_of(st, seller.key_hash(), UnitKind::Shares, event, outcome), shares, "shares");
    const Quote q = quote(ledger, market, event, outcome, -shares);
    TradeData t{market, event, outcome, shares, q.cost, q.fee, q.price};

    std::vector<Coin> vault;
    for (const auto& [point, o] : st.utxo) {
        if (o.units != UnitKind::Bitcoin || o.market != market || o.escrow)
            continue;
        const bool lock = o.script == scripts::market_pool() ||
            (o.event && o.script == scripts::event_custody(*o.event));
        if (lock)
            vault.push_back({point, o});
    }
    const auto custody_coins = select(vault, q.cost, "market custody");

    Transaction tx;
    tx.type = TxType::Sell;
    for (const auto& c : held)
        tx.vin.push_back(input_from(c));
    const Bytes mdata = m.data.canonical();
    for (const auto& c : custody_coins) {
        TxInput in = input_from(c);
        if (c.output.script == scripts::market_pool()) {
            in.script_sig = scripts::event_id_unlock(c.output.event.value_or(m.data.events.front()));
        } else {
            const EventData& ev = st.events.at(*c.output.event).data;
            in.script_sig = scripts::market_data_unlock(market, mdata, ev.canonical());
        }
        tx.vin.push_back(std::move(in));
    }
    tx.trade = t;
    tx.vout = sell_outputs(m, t, seller.address(), total(held), total(custody_coins));
    sign_inputs(tx, st, seller);
    return tx;
}

Transaction transfer(const Ledger& ledger, const KeyPair& from, const std::string& to, UnitKind units, Amount value,
    std::optional<Hash160> event, std::optional<int64_t> outcome)
{
    if (value.units() <= 0)
        throw LifecycleError("transfer value must be positive");
    if (units == UnitKind::Shares && (!event || !outcome))
        throw LifecycleError("share transfers name an event and outcome");
    const auto& st = ledger.state();
    const auto coins = select(coins_of(st, from.key_hash(), units, event, outcome), value,
        std::string(to_string(units)));
    Transaction tx;
    tx.type = TxType::Transfer;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    const auto out = [&](const std::string& address, Amount v) {
        TxOutput o = pay_to(address, units, v);
        if (units == UnitKind::Shares) {
            o.event = event;
            o.outcome = outcome;
        }
        return o;
    };
    tx.vout.push_back(out(to, value));
    const Amount change = total(coins) - value;
    if (change.units() > 0)
        tx.vout.push_back(out(from.address(), change));
    sign_inputs(tx, st, from);
    return tx;
}

Transaction challenge(const Ledger& ledger, const KeyPair& from, const Hash160& event, Amount fee)
{
    const auto& st = ledger.state();
    const auto it = st.events.find(event);
    if (it == st.events.end() || !it->second.market)
        throw LifecycleError("only events in a market can be challenged");
    const auto coins = select(coins_of(st, from.key_hash(), UnitKind::Bitcoin), fee, "bitcoin");
    Transaction tx;
    tx.type = TxType::Transfer;
    tx.challenge = event;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    TxOutput head = custody(*it->second.market, event, UnitKind::Bitcoin, fee);
    head.escrow = "challenge";
    tx.vout.push_back(std::move(head));
    const Amount change = total(coins) - fee;
    if (change.units() > 0)
        tx.vout.push_back(pay_to(from.address(), UnitKind::Bitcoin, change));
    sign_inputs(tx, st, from);
    return tx;
}

// ---------------------------------------------------------------------------
// Reporting

Json Reveal::to_json() const
{
    Json j;
    j["report"] = report.to_string();
    Json e = Json::array();
    for (const auto& x : entries)
        e.push_back(entry_text(x));
    j["entries"] = std::move(e);
    Json s = Json::array();
    for (const auto& x : salts)
        s.push_back(to_hex(x));
    j["salts"] = std::move(s);
    return j;
}

Reveal Reveal::from_json(const Json& j)
{
    Reveal r;
    try {
        r.report = OutPoint::parse(j.at("report").get<std::string>());
        for (const auto& e : j.at("entries"))
            r.entries.push_back(parse_entry(e.get<std::string>()));
        for (const auto& s : j.at("salts")) {
            const Bytes raw = from_hex(s.get<std::string>());
            Hash256 salt{};
            if (raw.size() != salt.size())
                throw FormatError("salts are 32 bytes");
            std::copy(raw.begin(), raw.end(), salt.begin());
            r.salts.push_back(salt);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad reveal: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad reveal: ") + e.what());
    }
    return r;
}

Hash256 ballot_salt(const KeyPair& key, const std::string& branch, int64_t cycle, const Hash160& event)
{
    const std::string msg = branch + "|" + std::to_string(cycle) + "|" + hex(event);
    return hmac_sha256(key.secret(), as_bytes(msg));
}

std::vector<Hash160> ballot_for(const Ledger& ledger, const std::string& branch)
{
    const auto it = ledger.state().branches.find(branch);
    if (it != ledger.state().branches.end() && !it->second.ballot.empty())
        return it->second.ballot;
    return ledger.open_events(branch);
}

std::pair<Transaction, Reveal> submit_report(const Ledger& ledger, const KeyPair& reporter, const std::string& branch,
    const std::vector<consensus::Entry>& entries)
{
    const auto& st = ledger.state();
    const auto ballot = ballot_for(ledger, branch);
    if (ballot.empty())
        throw LifecycleError("no events to report on branch " + branch);
    if (entries.size() != ballot.size())
        throw LifecycleError("ballot has " + std::to_string(ballot.size()) + " events, got " +
            std::to_string(entries.size()) + " entries");
    const auto coins = coins_of(st, reporter.key_hash(), UnitKind::Reputation);
    if (coins.empty())
        throw LifecycleError("reporter holds no reputation");
    const auto bit = st.branches.find(branch);
    const int64_t cycle = bit == st.branches.end() ? 0 : bit->second.cycle;

    Reveal reveal;
    reveal.entries = entries;
    ReportData r;
    r.branch = branch;
    r.cycle = cycle;
    r.reporter = reporter.address();
    r.events = ballot;
    for (size_t k = 0; k < ballot.size(); ++k) {
        const Hash256 salt = ballot_salt(reporter, branch, cycle, ballot[k]);
        reveal.salts.push_back(salt);
        r.outcomes.push_back(entry_commitment(salt, ballot[k], entries[k]));
    }
    r.quorum = ledger.quorum(branch);

    Transaction tx;
    tx.type = TxType::Report;
    for (const auto& c : coins)
        tx.vin.push_back(input_from(c));
    TxOutput out;
    out.value = total(coins);
    out.units = UnitKind::Reputation;
    out.address = reporter.address();
    out.script = scripts::report_lock(reporter.key_hash());
    out.report = std::move(r);
    tx.vout.push_back(std::move(out));
    sign_inputs(tx, st, reporter);
    reveal.report = OutPoint{tx.txid(), 0};
    return {std::move(tx), std::move(reveal)};
}

bool reveal_matches(const ReportData& report, const Reveal& reveal)
{
    if (reveal.entries.size() != report.events.size() || reveal.salts.size() != report.events.size())
        return false;
    for (size_t k = 0; k < report.events.size(); ++k) {
        if (entry_commitment(reveal.salts[k], report.events[k], reveal.entries[k]) != report.outcomes[k])
            return false;
    }
    return true;
}

std::vector<Holding> holdings(const LedgerState& state, const std::string& branch, int64_t cycle)
{
    std::map<std::string, Holding> by;
    for (const auto& [point, o] : state.utxo) {
        if (o.units != UnitKind::Reputation)
            continue;
        if (o.report) {
            if (o.report->branch != branch || o.report->cycle != cycle)
                continue;
            Holding& h = by[o.report->reporter];
            h.holder = o.report->reporter;
            h.key_hash = key_hash_of_address(h.holder);
            h.reputation += o.value;
            h.report = point;
            continue;
        }
        const auto owner = owner_of(o);
        if (!owner || o.market || o.escrow)
            continue;
        const std::string addr = encode_address(*owner, AddressVersion::User);
        Holding& h = by[addr];
        h.holder = addr;
        h.key_hash = *owner;
        h.reputation += o.value;
        h.plain.push_back(point);
    }
    std::vector<Holding> out;
    for (auto& [addr, h] : by) {
        if (h.reputation.units() > 0)
            out.push_back(std::move(h));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Redemption

double share_value(const EventData& event, size_t scalar_bins, const Json& outcome, size_t k,
    const std::vector<double>& close_prices)
{
    const bool invalid = outcome.at("invalid").get<bool>() || outcome.at("unresolvable").get<bool>() ||
        outcome.at("value").is_null();
    if (invalid)
        return close_prices.at(k);
    const double v = std::stod(outcome.at("value").get<std::string>());
    if (event.kind() == EventData::Kind::Scalar) {
        const double a = event.range.at(0);
        const double b = event.range.at(1);
        const auto spec = lmsr::ScalarMarketSpec::uniform(a, b, scalar_bins);
        return std::max(0.0, 1.0 - std::abs(spec.bin_center(k) - v) / (b - a));
    }
    return static_cast<size_t>(std::llround(v)) == k ? 1.0 : 0.0;
}

namespace {

struct Plan {
    std::string branch;
    int64_t cycle = 0;
    bool vote = true;
    BallotMatrix matrix;
    std::vector<std::string> fee_recipients;  // feeds mode
    Json observations;                        // feeds mode
};

BallotMatrix matrix_skeleton(const Ledger& ledger, const std::string& branch, int64_t cycle,
    const std::vector<Hash160>& events)
{
    BallotMatrix m;
    m.branch = branch;
    m.cycle = cycle;
    m.events = events;
    for (const auto& e : events)
        m.scales.push_back(ledger.state().events.at(e).data.scale());
    return m;
}

Transaction assemble(const Ledger& ledger, const Plan& plan)
{
    const auto& st = ledger.state();
    const BallotMatrix& matrix = plan.matrix;
    const auto& events = matrix.events;
    const std::set<Hash160> event_set(events.begin(), events.end());

    std::vector<Hash160> markets;
    for (const auto& e : events) {
        const auto& rec = st.events.at(e);
        if (!rec.market)
            reject("ballot event " + hex(e) + " has no market");
        if (std::find(markets.begin(), markets.end(), *rec.market) == markets.end())
            markets.push_back(*rec.market);
    }
    for (const auto& mid : markets) {
        for (const auto& e : st.markets.at(mid).data.events)
            if (!event_set.count(e))
                reject("market " + hex(mid) + " is only partly on the ballot");
    }
    const std::set<Hash160> market_set(markets.begin(), markets.end());

    consensus::ConsensusResult result;
    try {
        result = consensus::run(matrix.report_matrix(), ledger.consensus_params());
    } catch (const std::exception& e) {
        reject(std::string("consensus failed: ") + e.what());
    }
    const Json cj = consensus_json(result);
    const Bytes matrix_bytes = matrix.serialize();
    const Bytes centered_bytes = serialize_matrix(result.centered);
    const auto claim = [&](const Hash160& kh) {
        const auto pk = ledger.key_for(kh);
        if (!pk)
            reject("no public key known for " + encode_address(kh, AddressVersion::User));
        return scripts::redemption_unlock(*pk, matrix_bytes, centered_bytes);
    };

    Transaction tx;
    tx.type = TxType::Redemption;
    tx.branch = plan.branch;
    tx.cycle = plan.cycle;
    const auto add = [&](const OutPoint& p, Script sig) {
        const TxOutput& o = st.utxo.at(p);
        TxInput in = input_from({p, o});
        in.script_sig = std::move(sig);
        tx.vin.push_back(std::move(in));
    };

    const auto hold = holdings(st, plan.branch, plan.cycle);
    for (const auto& h : hold)
        if (h.report)
            add(*h.report, claim(h.key_hash));
    if (plan.vote) {
        for (const auto& h : hold)
            for (const auto& p : h.plain)
                add(p, claim(h.key_hash));
    }

    std::map<Hash160, Amount> custody_by, escrow_by;
    Amount retired;
    for (const auto& [point, o] : st.utxo) {
        if (!o.market || !market_set.count(*o.market))
            continue;
        const MarketData& md = st.markets.at(*o.market).data;
        if (o.script == scripts::market_pool() || o.script == scripts::share_pool())
            add(point, scripts::event_id_unlock(o.event.value_or(md.events.front())));
        else
            add(point, scripts::market_data_unlock(*o.market, md.canonical(), st.events.at(*o.event_id()).data.canonical()));
        if (o.units == UnitKind::Shares)
            retired += o.value;
        else if (o.escrow)
            escrow_by[*o.market] += o.value;
        else
            custody_by[*o.market] += o.value;
    }

    // Owed bitcoin per market and holder, from trader share coins.
    std::map<Hash160, std::vector<double>> close;
    for (size_t j = 0; j < events.size(); ++j) {
        const Hash160 mid = *st.events.at(events[j]).market;
        close[events[j]] = lmsr::prices(book(ledger, mid, events[j]));
    }
    std::map<Hash160, std::map<std::string, Amount>> owed;
    for (const auto& [point, o] : st.utxo) {
        if (o.units != UnitKind::Shares || o.market || !o.event || !event_set.count(*o.event) || !o.outcome)
            continue;
        const auto owner = owner_of(o);
        if (!owner || !ledger.key_for(*owner))
            continue;
        add(point, claim(*owner));
        retired += o.value;
        const size_t j = static_cast<size_t>(std::find(events.begin(), events.end(), *o.event) - events.begin());
        const EventData& ev = st.events.at(*o.event).data;
        const double v = share_value(ev, ledger.config().scalar_bins, cj["outcomes"][j],
            static_cast<size_t>(*o.outcome), close[*o.event]);
        const auto units = static_cast<int64_t>(std::floor(v * static_cast<double>(o.value.units())));
        owed[*st.events.at(*o.event).market][encode_address(*owner, AddressVersion::User)] +=
            Amount::from_units(units);
    }

    std::map<std::string, Amount> pay;
    Json payouts = Json::array();
    for (const auto& mid : markets) {
        const MarketData& md = st.markets.at(mid).data;
        const Amount held = custody_by[mid];
        Amount due;
        for (const auto& [addr, a] : owed[mid])
            due += a;
        Json rows = Json::array();
        Amount paid;
        for (const auto& [addr, a] : owed[mid]) {
            Amount share = a;
            if (due > held)
                share = Amount::from_units(static_cast<int64_t>(
                    static_cast<__int128>(a.units()) * held.units() / due.units()));
            paid += share;
            pay[addr] += share;
            rows.push_back(Json{{"address", addr}, {"owed", a.to_string()}, {"paid", share.to_string()}});
        }
        const Amount residual = held - paid;
        pay[md.creator] += residual;
        Json p;
        p["market"] = hex(mid);
        p["custody"] = held.to_string();
        p["owed"] = due.to_string();
        p["residual"] = residual.to_string();
        p["rows"] = std::move(rows);
        payouts.push_back(std::move(p));
    }

    Amount escrow_total;
    for (const auto& [mid, a] : escrow_by)
        escrow_total += a;
    std::vector<std::string> recipients;
    std::vector<double> weights;
    for (size_t i = 0; i < matrix.rows.size(); ++i) {
        const BallotRow& row = matrix.rows[i];
        const bool earns = plan.vote
            ? (row.report && !row.salts.empty())
            : std::find(plan.fee_recipients.begin(), plan.fee_recipients.end(), row.holder) != plan.fee_recipients.end();
        if (earns && result.reputation[i].units() > 0) {
            recipients.push_back(row.holder);
            weights.push_back(result.reputation[i].to_double());
        }
    }
    Json fees = Json::array();
    if (escrow_total.units() > 0) {
        if (recipients.empty()) {
            for (const auto& [mid, a] : escrow_by) {
                const std::string& creator = st.markets.at(mid).data.creator;
                pay[creator] += a;
                fees.push_back(Json{{"address", creator}, {"amount", a.to_string()}});
            }
        } else {
            const auto parts = consensus::apportion(weights, escrow_total);
            for (size_t i = 0; i < recipients.size(); ++i) {
                pay[recipients[i]] += parts[i];
                fees.push_back(Json{{"address", recipients[i]}, {"amount", parts[i].to_string()}});
            }
        }
    }

    if (plan.vote) {
        for (size_t i = 0; i < matrix.rows.size(); ++i)
            if (result.reputation[i].units() > 0)
                tx.vout.push_back(pay_to(matrix.rows[i].holder, UnitKind::Reputation, result.reputation[i]));
    }
    for (const auto& [addr, a] : pay)
        if (a.units() > 0)
            tx.vout.push_back(pay_to(addr, UnitKind::Bitcoin, a));
    if (retired.units() > 0)
        tx.retired[UnitKind::Shares] = retired;

    Json s;
    s["mode"] = plan.vote ? "vote" : "feeds";
    Json mj = Json::array();
    for (const auto& m : markets)
        mj.push_back(hex(m));
    s["markets"] = std::move(mj);
    Json ej = Json::array();
    for (const auto& e : events)
        ej.push_back(hex(e));
    s["events"] = std::move(ej);
    s["outcomes"] = cj["outcomes"];
    if (plan.vote)
        s["consensus"] = cj;
    s["payouts"] = std::move(payouts);
    s["reporter_fees"] = std::move(fees);
    if (!plan.vote)
        s["observations"] = plan.observations;
    tx.settlement = std::move(s);
    if (tx.vout.empty())
        reject("redemption has nothing to pay out");
    return tx;
}

const BranchState& branch_state(const Ledger& ledger, const std::string& branch)
{
    const auto it = ledger.state().branches.find(branch);
    if (it == ledger.state().branches.end())
        reject("unknown branch " + branch);
    return it->second;
}

Plan vote_plan(const Ledger& ledger, const std::string& branch, BallotMatrix matrix)
{
    const BranchState& bs = branch_state(ledger, branch);
    if (!bs.closed_height || ledger.height() + 1 < *bs.closed_height + ledger.config().reveal_window)
        reject("redemption of branch " + branch + " is not due");
    const BallotMatrix want = matrix_skeleton(ledger, branch, bs.cycle, bs.ballot);
    if (matrix.branch != want.branch || matrix.cycle != want.cycle || matrix.events != want.events)
        reject("report matrix belongs to another ballot");
    Json ws = Json::array(), ms = Json::array();
    for (const auto& s : want.scales)
        ws.push_back(scale_json(s));
    for (const auto& s : matrix.scales)
        ms.push_back(scale_json(s));
    if (ws != ms)
        reject("report matrix scales differ from the events");
    const auto hold = holdings(ledger.state(), branch, bs.cycle);
    if (hold.size() != matrix.rows.size())
        reject("report matrix rows differ from the reputation holders");
    for (size_t i = 0; i < hold.size(); ++i) {
        const BallotRow& row = matrix.rows[i];
        if (row.holder != hold[i].holder || row.reputation != hold[i].reputation || row.report != hold[i].report)
            reject("report matrix row " + std::to_string(i) + " differs from the holder");
        if (row.entries.size() != matrix.events.size())
            reject("report matrix row " + std::to_string(i) + " has the wrong width");
        const bool blank = std::none_of(row.entries.begin(), row.entries.end(),
            [](const consensus::Entry& e) { return e.present(); });
        if (row.salts.empty()) {
            if (!blank)
                reject("unrevealed row " + std::to_string(i) + " holds entries");
            continue;
        }
        if (!row.report)
            reject("row " + std::to_string(i) + " reveals without a report");
        const ReportData& r = *ledger.state().utxo.at(*row.report).report;
        if (!reveal_matches(r, Reveal{*row.report, row.entries, row.salts}))
            reject("row " + std::to_string(i) + " does not match its commitment");
    }
    Plan p;
    p.branch = branch;
    p.cycle = bs.cycle;
    p.vote = true;
    p.matrix = std::move(matrix);
    return p;
}

Plan feeds_plan(const Ledger& ledger, const std::string& branch, const std::vector<feeds::Observation>& observations)
{
    const auto& st = ledger.state();
    const BranchState& bs = branch_state(ledger, branch);
    if (!bs.ballot.empty() || !bs.reports.empty())
        reject("branch " + branch + " already has reports this cycle");
    const auto events = ledger.open_events(branch);
    if (events.empty())
        reject("no open events on branch " + branch);
    for (const auto& e : events) {
        const auto& rec = st.events.at(e);
        if (rec.data.expiration > ledger.now())
            reject("event " + hex(e) + " has not expired");
        if (rec.challenged)
            reject("event " + hex(e) + " was challenged and goes to a vote");
    }
    const std::set<Hash160> event_set(events.begin(), events.end());
    std::set<std::pair<std::string, Hash160>> seen;
    std::vector<std::string> observers;
    Json obs_json = Json::array();
    for (const auto& o : observations) {
        if (!event_set.count(o.event))
            reject("observation names an event outside the ballot");
        if (!seen.insert({o.holder, o.event}).second)
            reject("duplicate observation from " + o.holder);
        const auto pk = ledger.key_for(key_hash_of_address(o.holder));
        if (!pk || !feeds::verify_observation(o, *pk))
            reject("observation signature from " + o.holder + " does not verify");
        const auto rep = ledger.holder_reputation(branch, bs.cycle, o.holder);
        if (!rep || *rep != o.weight)
            reject("observation weight of " + o.holder + " differs from its reputation");
        if (std::find(observers.begin(), observers.end(), o.holder) == observers.end())
            observers.push_back(o.holder);
        obs_json.push_back(o.to_json());
    }
    const auto decisions = feeds::aggregate(observations, events, ledger.config().theta);
    BallotMatrix matrix = matrix_skeleton(ledger, branch, bs.cycle, events);
    std::vector<consensus::Entry> row;
    for (const auto& d : decisions) {
        if (!d.resolved)
            reject("event " + hex(d.event) + " did not reach the feed threshold");
        row.push_back(d.value);
    }
    for (const auto& h : holdings(st, branch, bs.cycle))
        matrix.rows.push_back(BallotRow{h.holder, h.reputation, h.report, row, {}});
    Plan p;
    p.branch = branch;
    p.cycle = bs.cycle;
    p.vote = false;
    p.matrix = std::move(matrix);
    p.fee_recipients = std::move(observers);
    p.observations = std::move(obs_json);
    return p;
}

}  // namespace

std::optional<Transaction> redeem_vote(const Ledger& ledger, const std::string& branch,
    const std::map<OutPoint, Reveal>& reveals, std::string* why)
{
    try {
        const BranchState& bs = branch_state(ledger, branch);
        BallotMatrix matrix = matrix_skeleton(ledger, branch, bs.cycle, bs.ballot);
        for (const auto& h : holdings(ledger.state(), branch, bs.cycle)) {
            BallotRow row{h.holder, h.reputation, h.report,
                std::vector<consensus::Entry>(matrix.events.size(), consensus::Entry::no_report()), {}};
            if (h.report) {
                const auto it = reveals.find(*h.report);
                const ReportData& r = *ledger.state().utxo.at(*h.report).report;
                if (it != reveals.end() && reveal_matches(r, it->second)) {
                    row.entries = it->second.entries;
                    row.salts = it->second.salts;
                }
            }
            matrix.rows.push_back(std::move(row));
        }
        return assemble(ledger, vote_plan(ledger, branch, std::move(matrix)));
    } catch (const std::exception& e) {
        if (why)
            *why = e.what();
        return std::nullopt;
    }
}

std::optional<Transaction> redeem_feeds(const Ledger& ledger, const std::string& branch,
    const std::vector<feeds::Observation>& observations, std::string* why)
{
    try {
        return assemble(ledger, feeds_plan(ledger, branch, observations));
    } catch (const std::exception& e) {
        if (why)
            *why = e.what();
        return std::nullopt;
    }
}

Transaction rebuild_redemption(const Ledger& ledger, const Transaction& tx)
{
    const Json& s = *tx.settlement;
    const std::string mode = s.value("mode", "");
    if (mode == "vote") {
        std::optional<BallotMatrix> matrix;
        for (const auto& in : tx.vin) {
            for (const auto& op : in.script_sig.ops()) {
                if (const auto* w = std::get_if<WitnessPush>(&op)) {
                    try {
                        matrix = BallotMatrix::parse(w->data);
                    } catch (const std::exception& e) {
                        reject(std::string("unreadable report matrix: ") + e.what());
                    }
                    break;
                }
            }
            if (matrix)
                break;
        }
        if (!matrix)
            reject("redemption carries no report matrix");
        if (*tx.branch != matrix->branch)
            reject("redemption branch differs from the matrix");
        return assemble(ledger, vote_plan(ledger, *tx.branch, std::move(*matrix)));
    }
    if (mode == "feeds") {
        std::vector<feeds::Observation> obs;
        try {
            for (const auto& o : s.at("observations"))
                obs.push_back(feeds::Observation::from_json(o));
        } catch (const std::exception& e) {
            reject(std::string("unreadable observations: ") + e.what());
        }
        return assemble(ledger, feeds_plan(ledger, *tx.branch, obs));
    }
    reject("unknown redemption mode");
}

}  // namespace augur::lifecycle
