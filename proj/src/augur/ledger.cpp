#include "augur/ledger.hpp"

#include <algorithm>
#include <cmath>

#include "augur/lifecycle.hpp"

namespace augur {

namespace {

[[noreturn]] void fail(ValidationCode code, const std::string& message)
{
    throw ValidationError(code, message);
}

bool is_plain(const TxOutput& out)
{
    return !out.event_data && !out.market && !out.report && !out.escrow && owner_of(out).has_value();
}

std::string user_address(const Hash160& key_hash)
{
    return encode_address(key_hash, AddressVersion::User);
}

void expect_outputs(const Transaction& tx, const std::vector<TxOutput>& want, const std::string& what)
{
    if (tx.vout.size() != want.size())
        fail(ValidationCode::TypeRule, what + ": expected " + std::to_string(want.size()) + " outputs, got " +
                std::to_string(tx.vout.size()));
    for (size_t i = 0; i < want.size(); ++i) {
        if (output_json(tx.vout[i], i) != output_json(want[i], i))
            fail(ValidationCode::TypeRule, what + ": output " + std::to_string(i) + " differs from the derived one");
    }
}

Json hex_keys(const std::vector<PublicKey>& keys)
{
    Json arr = Json::array();
    for (const auto& k : keys)
        arr.push_back(to_hex(k));
    return arr;
}

}  // namespace

std::string_view to_string(ValidationCode code)
{
    switch (code) {
    case ValidationCode::Ok: return "ok";
    case ValidationCode::Malformed: return "malformed";
    case ValidationCode::EmptyOutputs: return "empty-outputs";
    case ValidationCode::MissingInput: return "missing-input";
    case ValidationCode::DoubleSpend: return "double-spend";
    case ValidationCode::UnitMismatch: return "unit-mismatch";
    case ValidationCode::ScriptFailure: return "script-failure";
    case ValidationCode::Conservation: return "conservation";
    case ValidationCode::DuplicateEvent: return "duplicate-event";
    case ValidationCode::TypeRule: return "type-rule";
    case ValidationCode::MarketClosed: return "market-closed";
    case ValidationCode::Slippage: return "slippage";
    case ValidationCode::InsufficientFunds: return "insufficient-funds";
    case ValidationCode::TooLarge: return "too-large";
    }
    return "unknown";
}

std::optional<Hash160> owner_of(const TxOutput& out)
{
    return scripts::key_hash_of(out.script);
}

// ---------------------------------------------------------------------------
// ChainConfig

Json ChainConfig::to_json() const
{
    Json j;
    j["genesis_time"] = genesis_time;
    j["block_interval"] = block_interval;
    j["quorum_required"] = quorum_required;
    j["reveal_window"] = reveal_window;
    j["alpha"] = alpha;
    j["blend"] = blend;
    j["margin"] = margin;
    j["theta"] = theta;
    j["slippage"] = slippage;
    j["min_event_fee"] = min_event_fee.to_string();
    j["challenge_fee"] = challenge_fee.to_string();
    j["scalar_bins"] = scalar_bins;
    j["max_tx_bytes"] = max_tx_bytes;
    j["keys"] = hex_keys(keys);
    return j;
}

ChainConfig ChainConfig::from_json(const Json& j)
{
    ChainConfig c;
    if (!j.is_object())
        throw FormatError("config must be an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "genesis_time") c.genesis_time = value.get<int64_t>();
            else if (key == "block_interval") c.block_interval = value.get<int64_t>();
            else if (key == "quorum_required") c.quorum_required = value.get<int64_t>();
            else if (key == "reveal_window") c.reveal_window = value.get<int64_t>();
            else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "blend") c.blend = value.get<double>();
            else if (key == "margin") c.margin = value.get<double>();
            else if (key == "theta") c.theta = value.get<double>();
            else if (key == "slippage") c.slippage = value.get<double>();
            else if (key == "min_event_fee") c.min_event_fee = Amount::parse(value.get<std::string>());
            else if (key == "challenge_fee") c.challenge_fee = Amount::parse(value.get<std::string>());
            else if (key == "scalar_bins") c.scalar_bins = value.get<size_t>();
            else if (key == "max_tx_bytes") c.max_tx_bytes = value.get<size_t>();
            else if (key == "keys") {
                for (const auto& k : value) {
                    const Bytes raw = from_hex(k.get<std::string>());
                    PublicKey pk{};
                    if (raw.size() != pk.size())
                        throw FormatError("public keys must be 33 bytes");
                    std::copy(raw.begin(), raw.end(), pk.begin());
                    c.keys.push_back(pk);
                }
            } else
                throw FormatError("unknown config field: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad config: ") + e.what());
    }
    if (c.block_interval <= 0 || c.quorum_required < 1 || c.reveal_window < 0 || c.scalar_bins < 2)
        throw FormatError("config values out of range");
    if (!(c.theta > 0.5 && c.theta <= 1.0) || !(c.alpha > 0.0 && c.alpha <= 1.0) || !(c.blend >= 0.0 && c.blend <= 1.0))
        throw FormatError("config thresholds out of range");
    return c;
}

// ---------------------------------------------------------------------------
// LedgerState

Json LedgerState::to_json() const
{
    Json j;
    j["height"] = height;
    Json utxos = Json::array();
    for (const auto& [point, out] : utxo) {
        Json u;
        u["outpoint"] = point.to_string();
        u["output"] = output_json(out, point.index);
        utxos.push_back(std::move(u));
    }
    j["utxo"] = std::move(utxos);

    Json evs = Json::array();
    for (const auto& [id, rec] : events) {
        Json e;
        e["id"] = hex(id);
        e["data"] = rec.data.to_json();
        e["creation"] = rec.creation.to_string();
        e["fee"] = rec.fee.to_string();
        if (rec.market)
            e["market"] = hex(*rec.market);
        e["settled"] = rec.settled;
        e["challenged"] = rec.challenged;
        if (rec.resolution)
            e["resolution"] = *rec.resolution;
        evs.push_back(std::move(e));
    }
    j["events"] = std::move(evs);

    Json mks = Json::array();
    for (const auto& [id, rec] : markets) {
        Json m;
        m["id"] = hex(id);
        m["data"] = rec.data.to_json();
        Json q = Json::array();
        for (const auto& row : rec.q) {
            Json r = Json::array();
            for (const auto& a : row)
                r.push_back(a.to_string());
            q.push_back(std::move(r));
        }
        m["q"] = std::move(q);
        m["created_height"] = rec.created_height;
        m["redeemed"] = rec.redeemed;
        mks.push_back(std::move(m));
    }
    j["markets"] = std::move(mks);

    Json brs = Json::array();
    for (const auto& [name, b] : branches) {
        Json o;
        o["branch"] = name;
        o["cycle"] = b.cycle;
        Json ballot = Json::array();
        for (const auto& e : b.ballot)
            ballot.push_back(hex(e));
        o["ballot"] = std::move(ballot);
        Json reports = Json::array();
        for (const auto& r : b.reports)
            reports.push_back(r.to_string());
        o["reports"] = std::move(reports);
        o["reporters"] = b.reporters;
        if (b.closed_height)
            o["closed_height"] = *b.closed_height;
        brs.push_back(std::move(o));
    }
    j["branches"] = std::move(brs);

    Json ks = Json::array();
    for (const auto& [h, pk] : keys)
        ks.push_back(to_hex(pk));
    j["keys"] = std::move(ks);
    j["event_keys"] = event_keys;
    Json txj = Json::object();
    for (const auto& [id, n] : txs)
        txj[hex(id)] = n;
    j["txs"] = std::move(txj);
    return j;
}

Hash256 LedgerState::hash() const
{
    return sha256(as_bytes(to_json().dump()));
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(ChainConfig config) : config_(std::move(config))
{
    for (const auto& pk : config_.keys)
        state_.keys[hash160(pk)] = pk;
}

ValidationReport Ledger::validate(const Transaction& tx) const
{
    ValidationReport report;
    try {
        check(tx);
    } catch (const ValidationError& e) {
        report.code = e.code();
        report.message = e.what();
    } catch (const FormatError& e) {
        report.code = ValidationCode::Malformed;
        report.message = e.what();
    } catch (const std::exception& e) {
        report.code = ValidationCode::Malformed;
        report.message = e.what();
    }
    return report;
}

void Ledger::apply(const Transaction& tx)
{
    const ValidationReport report = validate(tx);
    if (!report.ok())
        throw ValidationError(report.code, report.message);
    LedgerState next = state_;
    commit(next, tx);
    state_ = std::move(next);
}

void Ledger::end_block()
{
    ++state_.height;
    const int64_t ts = timestamp_at(state_.height);
    for (auto& [name, branch] : state_.branches) {
        if (branch.ballot.empty() || branch.closed_height)
            continue;
        if (quorum(name, ts).met)
            branch.closed_height = state_.height;
    }
}

void Ledger::check(const Transaction& tx) const
{
    if (tx.type != TxType::Redemption && tx.canonical().size() > config_.max_tx_bytes)
        fail(ValidationCode::TooLarge, "transaction exceeds " + std::to_string(config_.max_tx_bytes) + " bytes");
    if (tx.vout.empty())
        fail(ValidationCode::EmptyOutputs, "transaction has no outputs");
    if (state_.txs.count(tx.txid()))
        fail(ValidationCode::DoubleSpend, "transaction already applied");
    for (size_t i = 0; i < tx.vout.size(); ++i) {
        const TxOutput& out = tx.vout[i];
        if (out.value.units() <= 0)
            fail(ValidationCode::Malformed, "output " + std::to_string(i) + " has a non-positive value");
        if (out.units == UnitKind::Shares && (!out.event || out.event_data))
            fail(ValidationCode::Malformed, "share output " + std::to_string(i) + " names no event");
        if (out.script.empty())
            fail(ValidationCode::Malformed, "output " + std::to_string(i) + " has no locking script");
    }
    check_inputs(tx);
    check_conservation(tx);
    check_type_rules(tx);
    check_scripts(tx);
}

void Ledger::check_inputs(const Transaction& tx) const
{
    if (tx.type == TxType::Faucet) {
        if (!tx.vin.empty())
            fail(ValidationCode::TypeRule, "faucet transactions take no inputs");
        return;
    }
    if (tx.vin.empty())
        fail(ValidationCode::TypeRule, "transaction has no inputs");
    std::set<OutPoint> seen;
    for (size_t i = 0; i < tx.vin.size(); ++i) {
        const TxInput& in = tx.vin[i];
        if (!seen.insert(in.prevout).second)
            fail(ValidationCode::DoubleSpend, "input " + std::to_string(i) + " repeats " + in.prevout.to_string());
        const auto it = state_.utxo.find(in.prevout);
        if (it == state_.utxo.end()) {
            const auto t = state_.txs.find(in.prevout.txid);
            if (t != state_.txs.end() && in.prevout.index < t->second)
                fail(ValidationCode::DoubleSpend, "input " + std::to_string(i) + " spends spent " +
                        in.prevout.to_string());
            fail(ValidationCode::MissingInput, "input " + std::to_string(i) + " references unknown " +
                    in.prevout.to_string());
        }
        const TxOutput& prev = it->second;
        if (in.value != prev.value || in.units != prev.units || in.outcome != prev.outcome)
            fail(ValidationCode::UnitMismatch, "input " + std::to_string(i) + " does not match " +
                    in.prevout.to_string());
    }
}

void Ledger::check_conservation(const Transaction& tx) const
{
    const bool may_issue = tx.type == TxType::Faucet || tx.type == TxType::CreateMarket;
    const bool may_retire = tx.type == TxType::Redemption;
    if (!may_issue && !tx.issued.empty())
        fail(ValidationCode::Conservation, "only faucets and market creation issue units");
    if (!may_retire && !tx.retired.empty())
        fail(ValidationCode::Conservation, "only redemptions retire units");
    std::map<UnitKind, Amount> balance;
    for (const auto& in : tx.vin)
        balance[in.units] += in.value;
    for (const auto& [u, a] : tx.issued) {
        if (a.units() <= 0)
            fail(ValidationCode::Conservation, "issued amounts must be positive");
        balance[u] += a;
    }
    for (const auto& out : tx.vout)
        balance[out.units] -= out.value;
    for (const auto& [u, a] : tx.retired) {
        if (a.units() <= 0)
            fail(ValidationCode::Conservation, "retired amounts must be positive");
        balance[u] -= a;
    }
    for (const auto& [u, a] : balance) {
        if (!a.is_zero())
            fail(ValidationCode::Conservation, std::string(to_string(u)) + " not conserved: imbalance " +
                    a.to_string());
    }
}

void Ledger::check_scripts(const Transaction& tx) const
{
    for (size_t i = 0; i < tx.vin.size(); ++i) {
        const TxOutput& spent = state_.utxo.at(tx.vin[i].prevout);
        Script lock = spent.script;
        if (tx.type == TxType::Redemption) {
            if (const auto owner = owner_of(spent))
                lock = scripts::consensus_claim(*owner);
        }
        ExecContext ctx;
        ctx.tx = &tx;
        ctx.input_index = i;
        ctx.spent = &spent;
        ctx.services = this;
        const ExecResult r = execute(tx.vin[i].script_sig, lock, ctx);
        if (!r)
            fail(ValidationCode::ScriptFailure, "input " + std::to_string(i) + ": " +
                    std::string(to_string(r.error)) + (r.detail.empty() ? "" : " (" + r.detail + ")"));
    }
}

void Ledger::check_type_rules(const Transaction& tx) const
{
    const auto spent = [&](size_t i) -> const TxOutput& { return state_.utxo.at(tx.vin[i].prevout); };
    // Single owner of every pay-to-key-hash input, which must all carry `units`.
    const auto sole_owner = [&](UnitKind units, size_t first, size_t last) -> Hash160 {
        std::optional<Hash160> owner;
        for (size_t i = first; i < last; ++i) {
            const TxOutput& prev = spent(i);
            const auto o = owner_of(prev);
            if (!o || !is_plain(prev) || prev.units != units)
                fail(ValidationCode::TypeRule, "input " + std::to_string(i) + " must be a plain " +
                        std::string(to_string(units)) + " output");
            if (owner && *owner != *o)
                fail(ValidationCode::TypeRule, "inputs must belong to a single owner");
            owner = o;
        }
        if (!owner)
            fail(ValidationCode::TypeRule, "no owner inputs");
        return *owner;
    };
    const auto sum_inputs = [&](size_t first, size_t last) {
        Amount s;
        for (size_t i = first; i < last; ++i)
            s += tx.vin[i].value;
        return s;
    };
    const auto no_extras = [&](bool market, bool trade, bool branch, bool settlement, bool challenge, bool memo) {
        if ((!market && tx.market) || (!trade && tx.trade) || (!branch && (tx.branch || tx.cycle)) ||
            (!settlement && tx.settlement) || (!challenge && tx.challenge) || (!memo && tx.memo))
            fail(ValidationCode::TypeRule, "field not allowed for " + std::string(to_string(tx.type)));
        for (const auto& in : tx.vin) {
            if (in.trading_fee && tx.type != TxType::CreateMarket)
                fail(ValidationCode::TypeRule, "tradingFee is only carried by market creation");
        }
    };

    switch (tx.type) {
    case TxType::Faucet: {
        no_extras(false, false, false, false, false, true);
        if (!tx.memo)
            fail(ValidationCode::TypeRule, "faucet needs a memo");
        for (size_t i = 0; i < tx.vout.size(); ++i) {
            const TxOutput& out = tx.vout[i];
            if (!is_plain(out) || out.units == UnitKind::Shares || out.event || out.outcome || out.branch)
                fail(ValidationCode::TypeRule, "faucet output " + std::to_string(i) + " must be plain coin");
            if (out.address != user_address(*owner_of(out)))
                fail(ValidationCode::TypeRule, "faucet output " + std::to_string(i) + " address mismatch");
            if (out.units == UnitKind::Reputation && state_.height >= 0)
                fail(ValidationCode::TypeRule, "reputation is only issued at genesis");
        }
        break;
    }
    case TxType::CreateEvent: {
        no_extras(false, false, false, false, false, false);
        const Hash160 owner = sole_owner(UnitKind::Bitcoin, 0, tx.vin.size());
        const TxOutput& head = tx.vout[0];
        if (!head.event_data)
            fail(ValidationCode::TypeRule, "first output must carry the event");
        const EventData& ev = *head.event_data;
        ev.validate();
        const Hash160 id = ev.id();
        if (ev.declared_id() != id)
            fail(ValidationCode::TypeRule, "event id does not match its data");
        if (ev.creator != user_address(owner))
            fail(ValidationCode::TypeRule, "event creator is not the funding owner");
        if (ev.expiration <= now())
            fail(ValidationCode::TypeRule, "event expiration is not in the future");
        if (head.value < config_.min_event_fee)
            fail(ValidationCode::InsufficientFunds, "event fee below " + config_.min_event_fee.to_string());
        const std::string key = ev.creator + "|" + ev.description + "|" + std::to_string(ev.expiration);
        if (state_.events.count(id) || state_.event_keys.count(key))
            fail(ValidationCode::DuplicateEvent, "event already exists");
        TxOutput want;
        want.value = head.value;
        want.units = UnitKind::Bitcoin;
        want.event_data = ev;
        want.address = ev.address();
        want.script = scripts::event_custody(id);
        std::vector<TxOutput> outs{want};
        const Amount in = sum_inputs(0, tx.vin.size());
        if (in < head.value)
            fail(ValidationCode::InsufficientFunds, "inputs do not cover the event fee");
        if (in > head.value)
            outs.push_back(lifecycle::pay_to(user_address(owner), UnitKind::Bitcoin, in - head.value));
        expect_outputs(tx, outs, "CreateEvent");
        break;
    }
    case TxType::CreateMarket: {
        no_extras(true, false, false, false, false, false);
        if (!tx.market)
            fail(ValidationCode::TypeRule, "market data missing");
        const MarketData& m = *tx.market;
        const Hash160 id = m.id();
        if (m.declared_id() != id)
            fail(ValidationCode::TypeRule, "market id does not match its data");
        if (state_.markets.count(id))
            fail(ValidationCode::TypeRule, "market already exists");
        if (!(std::isfinite(m.loss_limit) && m.loss_limit > 0.0))
            fail(ValidationCode::TypeRule, "loss limit must be positive");
        if (!(m.trading_fee >= 0.0 && m.trading_fee <= 0.5))
            fail(ValidationCode::TypeRule, "trading fee must lie in [0, 0.5]");
        if (m.events.empty())
            fail(ValidationCode::TypeRule, "market has no events");
        if (!tx.vin[0].trading_fee || *tx.vin[0].trading_fee != m.trading_fee)
            fail(ValidationCode::TypeRule, "first input must carry the trading fee");
        std::set<OutPoint> creations;
        std::vector<EventData> evs;
        std::vector<Amount> fees;
        for (const auto& e : m.events) {
            const auto it = state_.events.find(e);
            if (it == state_.events.end())
                fail(ValidationCode::TypeRule, "unknown event " + hex(e));
            if (it->second.market)
                fail(ValidationCode::TypeRule, "event already belongs to a market");
            if (it->second.data.branch != m.branch)
                fail(ValidationCode::TypeRule, "events must share the market branch");
            if (!creations.insert(it->second.creation).second)
                fail(ValidationCode::TypeRule, "event listed twice");
            evs.push_back(it->second.data);
            fees.push_back(it->second.fee);
        }
        if (m.funding != lifecycle::market_funding(m, evs, config_.scalar_bins))
            fail(ValidationCode::TypeRule, "funding differs from the worst-case loss");
        size_t creation_inputs = 0;
        for (const auto& in : tx.vin)
            creation_inputs += creations.count(in.prevout);
        if (creation_inputs != creations.size())
            fail(ValidationCode::TypeRule, "every event creation output must be spent");
        std::optional<Hash160> owner;
        Amount funds;
        for (size_t i = 0; i < tx.vin.size(); ++i) {
            if (creations.count(tx.vin[i].prevout)) {
                if (i == 0)
                    fail(ValidationCode::TypeRule, "first input must fund the market");
                continue;
            }
            const TxOutput& prev = spent(i);
            const auto o = owner_of(prev);
            if (!o || !is_plain(prev) || prev.units != UnitKind::Bitcoin || (owner && *o != *owner))
                fail(ValidationCode::TypeRule, "funding inputs must be the creator's bitcoin");
            owner = o;
            funds += tx.vin[i].value;
        }
        if (m.creator != user_address(*owner))
            fail(ValidationCode::TypeRule, "market creator is not the funding owner");
        if (funds < m.funding)
            fail(ValidationCode::InsufficientFunds, "inputs do not cover the funding");
        const std::map<UnitKind, Amount> issued{
            {UnitKind::Shares, Amount::coins(kSharesPerEvent * static_cast<int64_t>(m.events.size()))}};
        if (tx.issued != issued)
            fail(ValidationCode::TypeRule, "market must issue one share coinbase per event");
        expect_outputs(tx, lifecycle::market_outputs(m, fees, funds - m.funding), "CreateMarket");
        break;
    }
    case TxType::Buy:
    case TxType::Sell: {
        no_extras(false, true, false, false, false, false);
        const bool is_buy = tx.type == TxType::Buy;
        if (!tx.trade)
            fail(ValidationCode::TypeRule, "trade data missing");
        const TradeData& t = *tx.trade;
        const auto mit = state_.markets.find(t.market);
        if (mit == state_.markets.end())
            fail(ValidationCode::TypeRule, "unknown market");
        const MarketRecord& m = mit->second;
        const auto pos = std::find(m.data.events.begin(), m.data.events.end(), t.event);
        if (pos == m.data.events.end())
            fail(ValidationCode::TypeRule, "event is not part of the market");
        const size_t ei = static_cast<size_t>(pos - m.data.events.begin());
        if (t.outcome < 0 || static_cast<size_t>(t.outcome) >= m.q[ei].size())
            fail(ValidationCode::TypeRule, "outcome out of range");
        if (t.shares.units() <= 0)
            fail(ValidationCode::TypeRule, "trade must move a positive number of shares");
        if (market_closed(t.market))
            fail(ValidationCode::MarketClosed, "trading on the market is closed");
        if (!is_buy && m.q[ei][static_cast<size_t>(t.outcome)] < t.shares)
            fail(ValidationCode::TypeRule, "cannot sell more shares than outstanding");
        const lifecycle::Quote q =
            lifecycle::quote(*this, t.market, t.event, t.outcome, is_buy ? t.shares : -t.shares);
        const double tol = std::max(config_.slippage * std::abs(q.cost.to_double()), 1e-8);
        if (std::abs(t.cost.to_double() - q.cost.to_double()) > tol)
            fail(ValidationCode::Slippage, "cost " + t.cost.to_string() + " deviates from quote " +
                    q.cost.to_string());
        if (std::abs(t.price - q.price) > config_.slippage)
            fail(ValidationCode::Slippage, "price deviates from the quote");
        if (t.fee != Amount::from_double(t.cost.to_double() * m.data.trading_fee))
            fail(ValidationCode::TypeRule, "fee does not match the market rate");
        if (is_buy) {
            std::optional<size_t> pool;
            for (size_t i = 0; i < tx.vin.size(); ++i) {
                const TxOutput& prev = spent(i);
                if (prev.units == UnitKind::Shares && !owner_of(prev)) {
                    if (pool || prev.market != t.market || prev.event != t.event ||
                        prev.script != scripts::share_pool())
                        fail(ValidationCode::TypeRule, "buy must spend exactly the market's share pool");
                    pool = i;
                }
            }
            if (!pool || *pool != tx.vin.size() - 1)
                fail(ValidationCode::TypeRule, "last input must be the share pool");
            const Hash160 owner = sole_owner(UnitKind::Bitcoin, 0, tx.vin.size() - 1);
            const TxOutput& pool_out = spent(*pool);
            if (pool_out.value < t.shares)
                fail(ValidationCode::InsufficientFunds, "share pool exhausted");
            const Amount buyer_in = sum_inputs(0, tx.vin.size() - 1);
            if (buyer_in < t.cost + t.fee)
                fail(ValidationCode::InsufficientFunds, "inputs do not cover cost and fee");
            expect_outputs(tx, lifecycle::buy_outputs(m, t, pool_out, user_address(owner), buyer_in), "Buy");
        } else {
            size_t n_shares = 0;
            while (n_shares < tx.vin.size() && spent(n_shares).units == UnitKind::Shares)
                ++n_shares;
            const Hash160 owner = sole_owner(UnitKind::Shares, 0, n_shares);
            for (size_t i = 0; i < n_shares; ++i) {
                if (spent(i).event != t.event || spent(i).outcome != t.outcome)
                    fail(ValidationCode::TypeRule, "sold shares must match the trade outcome");
            }
            Amount custody_in;
            for (size_t i = n_shares; i < tx.vin.size(); ++i) {
                const TxOutput& prev = spent(i);
                const bool custody_lock = prev.script == scripts::market_pool() ||
                    (prev.event && prev.script == scripts::event_custody(*prev.event));
                if (prev.units != UnitKind::Bitcoin || prev.market != t.market || prev.escrow || !custody_lock)
                    fail(ValidationCode::TypeRule, "input " + std::to_string(i) + " is not market custody");
                custody_in += tx.vin[i].value;
            }
            const Amount shares_in = sum_inputs(0, n_shares);
            if (shares_in < t.shares)
                fail(ValidationCode::InsufficientFunds, "seller holds too few shares");
            if (custody_in < t.cost)
                fail(ValidationCode::InsufficientFunds, "custody inputs do not cover the proceeds");
            expect_outputs(tx, lifecycle::sell_outputs(m, t, user_address(owner), shares_in, custody_in), "Sell");
        }
        break;
    }
    case TxType::Report: {
        no_extras(false, false, false, false, false, false);
        const Hash160 owner = sole_owner(UnitKind::Reputation, 0, tx.vin.size());
        if (tx.vout.size() != 1 || !tx.vout[0].report)
            fail(ValidationCode::TypeRule, "report has exactly one report output");
        const ReportData& r = *tx.vout[0].report;
        if (r.declared_id() != r.id())
            fail(ValidationCode::TypeRule, "report id does not match its data");
        const std::string reporter = user_address(owner);
        if (r.reporter != reporter)
            fail(ValidationCode::TypeRule, "reporter is not the reputation owner");
        const auto bit = state_.branches.find(r.branch);
        const int64_t cycle = bit == state_.branches.end() ? 0 : bit->second.cycle;
        if (r.cycle != cycle)
            fail(ValidationCode::TypeRule, "report targets cycle " + std::to_string(r.cycle) + ", current is " +
                    std::to_string(cycle));
        const auto ballot = lifecycle::ballot_for(*this, r.branch);
        if (ballot.empty())
            fail(ValidationCode::TypeRule, "nothing to report on this branch");
        if (r.events != ballot)
            fail(ValidationCode::TypeRule, "report events differ from the ballot");
        if (r.outcomes.size() != r.events.size())
            fail(ValidationCode::TypeRule, "one commitment per ballot event");
        if (bit != state_.branches.end() && bit->second.reporters.count(reporter))
            fail(ValidationCode::TypeRule, "reporter already reported this cycle");
        if (r.quorum != quorum(r.branch))
            fail(ValidationCode::TypeRule, "report quorum status is stale");
        TxOutput want;
        want.value = sum_inputs(0, tx.vin.size());
        want.units = UnitKind::Reputation;
        want.report = r;
        want.address = reporter;
        want.script = scripts::report_lock(owner);
        expect_outputs(tx, {want}, "Report");
        break;
    }
    case TxType::Redemption: {
        if (!tx.branch || !tx.cycle || !tx.settlement)
            fail(ValidationCode::TypeRule, "redemption needs branch, cycle and settlement");
        const Transaction want = lifecycle::rebuild_redemption(*this, tx);
        if (want.canonical() != tx.canonical())
            fail(ValidationCode::TypeRule, "redemption differs from the deterministic settlement");
        break;
    }
    case TxType::Transfer: {
        no_extras(false, false, false, false, true, false);
        const UnitKind units = spent(0).units;
        const Hash160 owner = sole_owner(units, 0, tx.vin.size());
        (void)owner;
        size_t first = 0;
        if (tx.challenge) {
            if (units != UnitKind::Bitcoin)
                fail(ValidationCode::TypeRule, "challenges are paid in bitcoin");
            const auto eit = state_.events.find(*tx.challenge);
            if (eit == state_.events.end() || !eit->second.market)
                fail(ValidationCode::TypeRule, "challenged event is not in a market");
            if (eit->second.settled)
                fail(ValidationCode::TypeRule, "challenged event is already settled");
            const TxOutput& head = tx.vout[0];
            if (head.value < config_.challenge_fee)
                fail(ValidationCode::InsufficientFunds, "challenge fee below " + config_.challenge_fee.to_string());
            TxOutput want;
            want.value = head.value;
            want.units = UnitKind::Bitcoin;
            want.event = *tx.challenge;
            want.market = eit->second.market;
            want.escrow = "challenge";
            want.address = eit->second.data.address();
            want.script = scripts::event_custody(*tx.challenge);
            if (output_json(head, 0) != output_json(want, 0))
                fail(ValidationCode::TypeRule, "challenge output differs from the derived one");
            first = 1;
        }
        const auto ev = spent(0).event;
        const auto oc = spent(0).outcome;
        for (size_t i = 0; i < tx.vin.size(); ++i) {
            if (spent(i).event != ev || spent(i).outcome != oc)
                fail(ValidationCode::TypeRule, "transfer inputs must hold one kind of coin");
        }
        for (size_t i = first; i < tx.vout.size(); ++i) {
            const TxOutput& out = tx.vout[i];
            if (!is_plain(out) || out.units != units || out.event != ev || out.outcome != oc || out.branch)
                fail(ValidationCode::TypeRule, "transfer output " + std::to_string(i) + " must match its inputs");
            if (out.address != user_address(*owner_of(out)))
                fail(ValidationCode::TypeRule, "transfer output " + std::to_string(i) + " address mismatch");
        }
        break;
    }
    }
}

void Ledger::commit(LedgerState& next, const Transaction& tx) const
{
    const Hash160 txid = tx.txid();
    for (const auto& in : tx.vin) {
        next.utxo.erase(in.prevout);
        const auto& ops = in.script_sig.ops();
        if (!ops.empty()) {
            const auto* pk = std::get_if<Push>(&ops[ops.size() == 2 ? 1 : 0]);
            if (pk && pk->data.size() == PublicKey{}.size()) {
                PublicKey key{};
                std::copy(pk->data.begin(), pk->data.end(), key.begin());
                next.keys[hash160(key)] = key;
            }
        }
    }
    size_t counter = 0;
    for (size_t i = 0; i < tx.vout.size(); ++i) {
        if (fault_hook_)
            fault_hook_(counter++);
        next.utxo[OutPoint{txid, static_cast<uint32_t>(i)}] = tx.vout[i];
    }
    next.txs[txid] = static_cast<uint32_t>(tx.vout.size());

    switch (tx.type) {
    case TxType::CreateEvent: {
        const EventData& ev = *tx.vout[0].event_data;
        EventRecord rec;
        rec.data = ev;
        rec.creation = OutPoint{txid, 0};
        rec.fee = tx.vout[0].value;
        next.events[ev.id()] = rec;
        next.event_keys.insert(ev.creator + "|" + ev.description + "|" + std::to_string(ev.expiration));
        next.branches.try_emplace(ev.branch);
        break;
    }
    case TxType::CreateMarket: {
        const MarketData& m = *tx.market;
        const Hash160 id = m.id();
        MarketRecord rec;
        rec.data = m;
        rec.created_height = next.height + 1;
        for (const auto& e : m.events) {
            auto& ev = next.events.at(e);
            rec.q.emplace_back(ev.data.outcomes(config_.scalar_bins), Amount{});
            ev.market = id;
        }
        next.markets[id] = std::move(rec);
        break;
    }
    case TxType::Buy:
    case TxType::Sell: {
        const TradeData& t = *tx.trade;
        auto& m = next.markets.at(t.market);
        const auto pos = std::find(m.data.events.begin(), m.data.events.end(), t.event);
        auto& cell = m.q[static_cast<size_t>(pos - m.data.events.begin())][static_cast<size_t>(t.outcome)];
        if (tx.type == TxType::Buy)
            cell += t.shares;
        else
            cell -= t.shares;
        break;
    }
    case TxType::Report: {
        const ReportData& r = *tx.vout[0].report;
        auto& b = next.branches[r.branch];
        if (b.ballot.empty())
            b.ballot = r.events;
        b.reports.push_back(OutPoint{txid, 0});
        b.reporters.insert(r.reporter);
        break;
    }
    case TxType::Transfer:
        if (tx.challenge)
            next.events.at(*tx.challenge).challenged = true;
        break;
    case TxType::Redemption: {
        const Json& s = *tx.settlement;
        for (const auto& m : s.at("markets"))
            next.markets.at(hash160_from_hex(m.get<std::string>())).redeemed = true;
        const Json& evs = s.at("events");
        const Json& outs = s.at("outcomes");
        for (size_t i = 0; i < evs.size(); ++i) {
            auto& ev = next.events.at(hash160_from_hex(evs[i].get<std::string>()));
            ev.settled = true;
            ev.resolution = outs.at(i);
        }
        auto& b = next.branches[*tx.branch];
        b.cycle += 1;
        b.ballot.clear();
        b.reports.clear();
        b.reporters.clear();
        b.closed_height.reset();
        break;
    }
    case TxType::Faucet:
        break;
    }
}

Amount Ledger::balance(const std::string& address, UnitKind units) const
{
    Amount total;
    for (const auto& [point, out] : state_.utxo) {
        if (out.units == units && out.address == address)
            total += out.value;
    }
    return total;
}

QuorumStatus Ledger::quorum(const std::string& branch, int64_t now) const
{
    QuorumStatus q;
    q.required = config_.quorum_required;
    const auto it = state_.branches.find(branch);
    const std::vector<Hash160> ballot = it != state_.branches.end() && !it->second.ballot.empty()
        ? it->second.ballot
        : open_events(branch);
    if (it != state_.branches.end())
        q.reported = static_cast<int64_t>(it->second.reports.size());
    q.matured = !ballot.empty();
    for (const auto& e : ballot) {
        if (state_.events.at(e).data.expiration > now)
            q.matured = false;
    }
    q.met = q.matured && q.reported >= q.required;
    return q;
}

bool Ledger::market_closed(const Hash160& market) const
{
    const auto it = state_.markets.find(market);
    if (it == state_.markets.end())
        return true;
    if (it->second.redeemed)
        return true;
    const auto bit = state_.branches.find(it->second.data.branch);
    if (bit == state_.branches.end() || bit->second.ballot.empty())
        return false;
    const auto& ballot = bit->second.ballot;
    if (std::find(ballot.begin(), ballot.end(), it->second.data.events.front()) == ballot.end())
        return false;
    return quorum(it->second.data.branch).met;
}

std::vector<Hash160> Ledger::open_events(const std::string& branch) const
{
    std::vector<const std::pair<const Hash160, MarketRecord>*> open;
    for (const auto& entry : state_.markets) {
        if (!entry.second.redeemed && entry.second.data.branch == branch)
            open.push_back(&entry);
    }
    std::stable_sort(open.begin(), open.end(), [](const auto* a, const auto* b) {
        return a->second.created_height < b->second.created_height;
    });
    std::vector<Hash160> out;
    for (const auto* m : open) {
        for (const auto& e : m->second.data.events)
            out.push_back(e);
    }
    return out;
}

std::vector<std::string> Ledger::due_redemptions() const
{
    std::vector<std::string> out;
    for (const auto& [name, b] : state_.branches) {
        if (b.closed_height && state_.height + 1 >= *b.closed_height + config_.reveal_window)
            out.push_back(name);
    }
    return out;
}

std::optional<PublicKey> Ledger::key_for(const Hash160& key_hash) const
{
    const auto it = state_.keys.find(key_hash);
    if (it == state_.keys.end())
        return std::nullopt;
    return it->second;
}

std::optional<MarketData> Ledger::find_market(const Hash160& id) const
{
    const auto it = state_.markets.find(id);
    if (it == state_.markets.end())
        return std::nullopt;
    return it->second.data;
}

std::optional<EventData> Ledger::find_event(const Hash160& id) const
{
    const auto it = state_.events.find(id);
    if (it == state_.events.end())
        return std::nullopt;
    return it->second.data;
}

std::optional<Amount> Ledger::holder_reputation(const std::string& branch, int64_t cycle,
    const std::string& holder) const
{
    for (const auto& h : lifecycle::holdings(state_, branch, cycle)) {
        if (h.holder == holder)
            return h.reputation;
    }
    return std::nullopt;
}

}  // namespace augur
