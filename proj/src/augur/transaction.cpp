#include "augur/transaction.hpp"

#include <array>
#include <cmath>

namespace augur {

namespace {

constexpr std::array<std::pair<TxType, std::string_view>, 8> kTypeNames{{
    {TxType::CreateEvent, "CreateEvent"},
    {TxType::CreateMarket, "CreateMarket"},
    {TxType::Buy, "Buy"},
    {TxType::Sell, "Sell"},
    {TxType::Report, "Report"},
    {TxType::Redemption, "Redemption"},
    {TxType::Transfer, "Transfer"},
    {TxType::Faucet, "Faucet"},
}};

const Json& req(const Json& j, const char* key)
{
    if (!j.is_object())
        throw FormatError(std::string("expected object holding '") + key + "'");
    const auto it = j.find(key);
    if (it == j.end())
        throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

const Json* opt(const Json& j, const char* key)
{
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

std::string req_string(const Json& j, const char* key)
{
    const Json& v = req(j, key);
    if (!v.is_string())
        throw FormatError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

int64_t req_int(const Json& j, const char* key)
{
    const Json& v = req(j, key);
    if (!v.is_number_integer())
        throw FormatError(std::string("field '") + key + "' must be an integer");
    return v.get<int64_t>();
}

bool req_bool(const Json& j, const char* key)
{
    const Json& v = req(j, key);
    if (!v.is_boolean())
        throw FormatError(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

double req_double(const Json& j, const char* key)
{
    const Json& v = req(j, key);
    if (!v.is_number())
        throw FormatError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

Amount amount_of(const Json& v)
{
    if (!v.is_string())
        throw FormatError("amounts are written as decimal strings");
    try {
        return Amount::parse(v.get<std::string>());
    } catch (const std::exception& e) {
        throw FormatError(e.what());
    }
}

Hash160 digest_of(const Json& v)
{
    if (!v.is_string())
        throw FormatError("digest must be a hex string");
    try {
        return hash160_from_hex(v.get<std::string>());
    } catch (const std::exception& e) {
        throw FormatError(e.what());
    }
}

UnitKind units_of(const Json& v)
{
    if (!v.is_string())
        throw FormatError("units must be a string");
    try {
        return parse_unit_kind(v.get<std::string>());
    } catch (const std::exception& e) {
        throw FormatError(e.what());
    }
}

Script script_of(const Json& v)
{
    if (!v.is_string())
        throw FormatError("script must be a string");
    try {
        return Script::parse(v.get<std::string>());
    } catch (const ScriptParseError& e) {
        throw FormatError(e.what());
    }
}

int64_t outcome_of(const Json& v)
{
    // Binary listings write the outcome as a boolean; the canonical form is the index.
    if (v.is_boolean())
        return v.get<bool>() ? 1 : 0;
    if (!v.is_number_integer() || v.get<int64_t>() < 0)
        throw FormatError("outcome must be a non-negative integer");
    return v.get<int64_t>();
}

Json digests(const std::vector<Hash160>& list)
{
    Json out = Json::array();
    for (const auto& h : list)
        out.push_back(hex(h));
    return out;
}

std::vector<Hash160> digests_of(const Json& v)
{
    if (!v.is_array())
        throw FormatError("expected an array of digests");
    std::vector<Hash160> out;
    for (const auto& item : v)
        out.push_back(digest_of(item));
    return out;
}

Json unit_map(const std::map<UnitKind, Amount>& m)
{
    Json out = Json::object();
    for (const auto& [kind, value] : m)
        out[std::string(to_string(kind))] = value.to_string();
    return out;
}

std::map<UnitKind, Amount> unit_map_of(const Json& v)
{
    if (!v.is_object())
        throw FormatError("expected a units map");
    std::map<UnitKind, Amount> out;
    for (const auto& [key, value] : v.items())
        out[units_of(Json(key))] = amount_of(value);
    return out;
}

Bytes dump_bytes(const Json& j)
{
    const std::string text = j.dump();
    return Bytes(text.begin(), text.end());
}

}  // namespace

std::string hex(const Hash160& h)
{
    return to_hex(h);
}

std::string_view to_string(TxType type)
{
    for (const auto& [t, name] : kTypeNames)
        if (t == type)
            return name;
    return "Unknown";
}

TxType parse_tx_type(std::string_view text)
{
    for (const auto& [t, name] : kTypeNames)
        if (name == text)
            return t;
    throw FormatError("unknown transaction type: " + std::string(text));
}

OutPoint OutPoint::parse(std::string_view text)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || colon + 1 == text.size())
        throw FormatError("bad outpoint: " + std::string(text));
    OutPoint p;
    try {
        p.txid = hash160_from_hex(text.substr(0, colon));
        const std::string idx(text.substr(colon + 1));
        size_t used = 0;
        const unsigned long v = std::stoul(idx, &used);
        if (used != idx.size() || v > UINT32_MAX)
            throw std::invalid_argument("index");
        p.index = static_cast<uint32_t>(v);
    } catch (const std::exception&) {
        throw FormatError("bad outpoint: " + std::string(text));
    }
    return p;
}

std::string OutPoint::to_string() const
{
    return hex(txid) + ":" + std::to_string(index);
}

// ---------------------------------------------------------------------------
// Event

EventData::Kind EventData::kind() const
{
    if (is_binary)
        return Kind::Binary;
    return labels.empty() ? Kind::Scalar : Kind::Categorical;
}

size_t EventData::outcomes(size_t scalar_bins) const
{
    switch (kind()) {
    case Kind::Binary:
        return 2;
    case Kind::Categorical:
        return labels.size();
    case Kind::Scalar:
        return scalar_bins;
    }
    return 2;
}

consensus::EventScale EventData::scale() const
{
    consensus::EventScale s;
    switch (kind()) {
    case Kind::Binary:
        s.kind = consensus::EventScale::Kind::Binary;
        break;
    case Kind::Categorical:
        s.kind = consensus::EventScale::Kind::Categorical;
        s.categories = labels.size();
        break;
    case Kind::Scalar:
        s.kind = consensus::EventScale::Kind::Scalar;
        s.lower = range.at(0);
        s.upper = range.at(1);
        break;
    }
    return s;
}

void EventData::validate() const
{
    if (description.empty())
        throw FormatError("event description is empty");
    if (branch.empty())
        throw FormatError("event branch is empty");
    switch (kind()) {
    case Kind::Binary:
        if (range != std::vector<double>{0.0, 1.0} || !labels.empty())
            throw FormatError("binary events have valid_range [0, 1]");
        break;
    case Kind::Categorical:
        if (labels.size() < 2)
            throw FormatError("categorical events need at least two labels");
        break;
    case Kind::Scalar:
        if (range.size() != 2 || !std::isfinite(range[0]) || !std::isfinite(range[1]) || !(range[0] < range[1]))
            throw FormatError("scalar events need valid_range [a, b] with a < b");
        break;
    }
}

Json EventData::to_json(bool with_id) const
{
    Json j;
    if (with_id)
        j["id"] = hex(declared_id());
    j["description"] = description;
    j["branch"] = branch;
    j["is_binary"] = is_binary;
    Json r = Json::array();
    if (kind() == Kind::Binary) {
        r = Json::array({0, 1});
    } else if (kind() == Kind::Categorical) {
        for (const auto& l : labels)
            r.push_back(l);
    } else {
        for (double v : range)
            r.push_back(v);
    }
    j["valid_range"] = std::move(r);
    j["expiration"] = expiration;
    j["creator"] = creator;
    return j;
}

EventData EventData::from_json(const Json& j)
{
    EventData e;
    e.description = req_string(j, "description");
    e.branch = req_string(j, "branch");
    e.is_binary = req_bool(j, "is_binary");
    const Json& r = req(j, "valid_range");
    if (!r.is_array() || r.empty())
        throw FormatError("valid_range must be a non-empty array");
    if (r.front().is_string()) {
        e.range.clear();
        for (const auto& l : r) {
            if (!l.is_string())
                throw FormatError("categorical labels must all be strings");
            e.labels.push_back(l.get<std::string>());
        }
    } else {
        e.range.clear();
        for (const auto& v : r) {
            if (!v.is_number())
                throw FormatError("valid_range bounds must be numbers");
            e.range.push_back(v.get<double>());
        }
    }
    e.expiration = req_int(j, "expiration");
    e.creator = req_string(j, "creator");
    if (const Json* id = opt(j, "id"))
        e.stated_id = digest_of(*id);
    e.validate();
    return e;
}

Bytes EventData::canonical() const
{
    return dump_bytes(to_json(false));
}

Hash160 EventData::id() const
{
    return hash160(canonical());
}

std::string EventData::address() const
{
    return encode_address(declared_id(), AddressVersion::Event);
}

// ---------------------------------------------------------------------------
// Market

Json MarketData::to_json(bool with_id) const
{
    Json j;
    if (with_id)
        j["id"] = hex(declared_id());
    j["title"] = title;
    j["branch"] = branch;
    j["events"] = digests(events);
    j["loss_limit"] = loss_limit;
    j["tradingFee"] = trading_fee;
    j["funding"] = funding.to_string();
    j["creator"] = creator;
    return j;
}

MarketData MarketData::from_json(const Json& j)
{
    MarketData m;
    m.title = req_string(j, "title");
    m.branch = req_string(j, "branch");
    m.events = digests_of(req(j, "events"));
    m.loss_limit = req_double(j, "loss_limit");
    m.trading_fee = req_double(j, "tradingFee");
    m.funding = amount_of(req(j, "funding"));
    m.creator = req_string(j, "creator");
    if (const Json* id = opt(j, "id"))
        m.stated_id = digest_of(*id);
    return m;
}

Bytes MarketData::canonical() const
{
    return dump_bytes(to_json(false));
}

Hash160 MarketData::id() const
{
    return hash160(canonical());
}

std::string MarketData::address() const
{
    return encode_address(declared_id(), AddressVersion::Market);
}

// ---------------------------------------------------------------------------
// Report

Json ReportData::to_json(bool with_id) const
{
    Json j;
    if (with_id)
        j["id"] = hex(declared_id());
    j["branch"] = branch;
    j["cycle"] = cycle;
    j["reporter"] = reporter;
    j["events"] = digests(events);
    j["outcomes"] = digests(outcomes);
    j["quorum"] = Json{{"matured", quorum.matured},
        {"reported", quorum.reported},
        {"required", quorum.required},
        {"met", quorum.met}};
    return j;
}

ReportData ReportData::from_json(const Json& j)
{
    ReportData r;
    r.branch = req_string(j, "branch");
    r.cycle = req_int(j, "cycle");
    r.reporter = req_string(j, "reporter");
    r.events = digests_of(req(j, "events"));
    r.outcomes = digests_of(req(j, "outcomes"));
    if (r.events.size() != r.outcomes.size())
        throw FormatError("report needs one commitment per event");
    const Json& q = req(j, "quorum");
    r.quorum.matured = req_bool(q, "matured");
    r.quorum.reported = req_int(q, "reported");
    r.quorum.required = req_int(q, "required");
    r.quorum.met = req_bool(q, "met");
    if (const Json* id = opt(j, "id"))
        r.stated_id = digest_of(*id);
    return r;
}

Bytes ReportData::canonical() const
{
    return dump_bytes(to_json(false));
}

Hash160 ReportData::id() const
{
    return hash160(canonical());
}

std::string entry_text(const consensus::Entry& entry)
{
    switch (entry.kind) {
    case consensus::Entry::Kind::NoReport:
        return "no-report";
    case consensus::Entry::Kind::Invalid:
        return "invalid";
    case consensus::Entry::Kind::Value:
        break;
    }
    return Amount::from_double(entry.value).to_string();
}

consensus::Entry parse_entry(std::string_view text)
{
    if (text == "no-report")
        return consensus::Entry::no_report();
    if (text == "invalid")
        return consensus::Entry::invalid();
    try {
        return consensus::Entry::of(Amount::parse(text).to_double());
    } catch (const std::exception& e) {
        throw FormatError("bad ballot entry: " + std::string(text));
    }
}

Hash160 entry_commitment(const Hash256& salt, const Hash160& event, const consensus::Entry& entry)
{
    Bytes data(salt.begin(), salt.end());
    data.insert(data.end(), event.begin(), event.end());
    const std::string text = entry_text(entry);
    data.insert(data.end(), text.begin(), text.end());
    return hash160(data);
}

std::optional<Hash160> TxOutput::event_id() const
{
    if (event_data)
        return event_data->declared_id();
    return event;
}

Json output_json(const TxOutput& out, size_t n)
{
    Json o;
    o["n"] = n;
    o["value"] = out.value.to_string();
    o["units"] = std::string(to_string(out.units));
    if (out.outcome)
        o["outcome"] = *out.outcome;
    if (out.event_data)
        o["event"] = out.event_data->to_json();
    else if (out.event)
        o["event"] = hex(*out.event);
    if (out.branch)
        o["branch"] = *out.branch;
    if (out.market)
        o["market"] = hex(*out.market);
    if (out.report)
        o["report"] = out.report->to_json();
    if (out.escrow)
        o["escrow"] = *out.escrow;
    if (out.address)
        o["address"] = *out.address;
    o["script"] = out.script.to_string();
    return o;
}

TxOutput output_from_json(const Json& o)
{
    TxOutput out;
    out.value = amount_of(req(o, "value"));
    out.units = units_of(req(o, "units"));
    if (const Json* v = opt(o, "outcome"))
        out.outcome = outcome_of(*v);
    if (const Json* v = opt(o, "event")) {
        if (v->is_object())
            out.event_data = EventData::from_json(*v);
        else
            out.event = digest_of(*v);
    }
    if (opt(o, "branch"))
        out.branch = req_string(o, "branch");
    if (const Json* v = opt(o, "market"))
        out.market = digest_of(*v);
    if (const Json* v = opt(o, "report"))
        out.report = ReportData::from_json(*v);
    if (opt(o, "escrow"))
        out.escrow = req_string(o, "escrow");
    if (opt(o, "address"))
        out.address = req_string(o, "address");
    out.script = script_of(req(o, "script"));
    return out;
}

// ---------------------------------------------------------------------------
// Transaction

Json Transaction::to_json() const
{
    Json j;
    j["type"] = std::string(augur::to_string(type));
    if (market)
        j["loss_limit"] = market->loss_limit;

    Json ins = Json::array();
    for (size_t i = 0; i < vin.size(); ++i) {
        const TxInput& in = vin[i];
        Json o;
        o["n"] = i;
        o["txid"] = hex(in.prevout.txid);
        o["vout"] = in.prevout.index;
        o["value"] = in.value.to_string();
        o["units"] = std::string(augur::to_string(in.units));
        if (in.outcome)
            o["outcome"] = *in.outcome;
        if (in.trading_fee)
            o["tradingFee"] = *in.trading_fee;
        o["scriptSig"] = in.script_sig.to_string();
        ins.push_back(std::move(o));
    }
    j["vin"] = std::move(ins);

    Json outs = Json::array();
    for (size_t i = 0; i < vout.size(); ++i)
        outs.push_back(output_json(vout[i], i));
    j["vout"] = std::move(outs);

    if (market) {
        j["id"] = hex(market->declared_id());
        j["creator"] = market->creator;
        j["title"] = market->title;
        j["branch"] = market->branch;
        j["events"] = digests(market->events);
        j["funding"] = market->funding.to_string();
    }
    if (trade) {
        j["market"] = hex(trade->market);
        j["event"] = hex(trade->event);
        j["outcome"] = trade->outcome;
        j["shares"] = trade->shares.to_string();
        j["cost"] = trade->cost.to_string();
        j["fee"] = trade->fee.to_string();
        j["price"] = trade->price;
    }
    if (branch)
        j["branch"] = *branch;
    if (cycle)
        j["cycle"] = *cycle;
    if (settlement)
        j["settlement"] = *settlement;
    if (challenge)
        j["challenge"] = hex(*challenge);
    if (memo)
        j["memo"] = *memo;
    if (!issued.empty())
        j["issued"] = unit_map(issued);
    if (!retired.empty())
        j["retired"] = unit_map(retired);
    return j;
}

Transaction Transaction::from_json(const Json& j)
{
    Transaction tx;
    tx.type = parse_tx_type(req_string(j, "type"));

    const Json& ins = req(j, "vin");
    if (!ins.is_array())
        throw FormatError("vin must be an array");
    for (size_t i = 0; i < ins.size(); ++i) {
        const Json& o = ins[i];
        if (req_int(o, "n") != static_cast<int64_t>(i))
            throw FormatError("vin indices must be consecutive");
        TxInput in;
        in.prevout.txid = digest_of(req(o, "txid"));
        const int64_t vout = req_int(o, "vout");
        if (vout < 0 || vout > UINT32_MAX)
            throw FormatError("vout out of range");
        in.prevout.index = static_cast<uint32_t>(vout);
        in.value = amount_of(req(o, "value"));
        in.units = units_of(req(o, "units"));
        if (const Json* v = opt(o, "outcome"))
            in.outcome = outcome_of(*v);
        if (const Json* v = opt(o, "tradingFee")) {
            if (!v->is_number())
                throw FormatError("tradingFee must be a number");
            in.trading_fee = v->get<double>();
        }
        in.script_sig = script_of(req(o, "scriptSig"));
        tx.vin.push_back(std::move(in));
    }

    const Json& outs = req(j, "vout");
    if (!outs.is_array())
        throw FormatError("vout must be an array");
    for (size_t i = 0; i < outs.size(); ++i) {
        const Json& o = outs[i];
        if (req_int(o, "n") != static_cast<int64_t>(i))
            throw FormatError("vout indices must be consecutive");
        TxOutput out = output_from_json(o);
        tx.vout.push_back(std::move(out));
    }

    if (tx.type == TxType::CreateMarket) {
        MarketData m;
        m.loss_limit = req_double(j, "loss_limit");
        m.stated_id = digest_of(req(j, "id"));
        m.creator = req_string(j, "creator");
        m.title = req_string(j, "title");
        m.branch = req_string(j, "branch");
        m.events = digests_of(req(j, "events"));
        m.funding = amount_of(req(j, "funding"));
        if (tx.vin.empty() || !tx.vin[0].trading_fee)
            throw FormatError("CreateMarket input 0 carries the tradingFee");
        m.trading_fee = *tx.vin[0].trading_fee;
        tx.market = std::move(m);
    } else if (tx.type == TxType::Buy || tx.type == TxType::Sell) {
        TradeData t;
        t.market = digest_of(req(j, "market"));
        t.event = digest_of(req(j, "event"));
        t.outcome = outcome_of(req(j, "outcome"));
        t.shares = amount_of(req(j, "shares"));
        t.cost = amount_of(req(j, "cost"));
        t.fee = amount_of(req(j, "fee"));
        t.price = req_double(j, "price");
        tx.trade = t;
    } else if (opt(j, "branch")) {
        tx.branch = req_string(j, "branch");
    }
    if (opt(j, "cycle"))
        tx.cycle = req_int(j, "cycle");
    if (const Json* s = opt(j, "settlement"))
        tx.settlement = *s;
    if (const Json* c = opt(j, "challenge"))
        tx.challenge = digest_of(*c);
    if (opt(j, "memo"))
        tx.memo = req_string(j, "memo");
    if (const Json* m = opt(j, "issued"))
        tx.issued = unit_map_of(*m);
    if (const Json* m = opt(j, "retired"))
        tx.retired = unit_map_of(*m);
    return tx;
}

Bytes Transaction::canonical() const
{
    return dump_bytes(to_json());
}

Hash160 Transaction::txid() const
{
    return hash160(canonical());
}

Bytes Transaction::sighash(size_t index) const
{
    Transaction blank = *this;
    for (auto& in : blank.vin)
        in.script_sig = Script();
    Bytes out = blank.canonical();
    const std::string suffix = "#" + std::to_string(index);
    out.insert(out.end(), suffix.begin(), suffix.end());
    return out;
}

}  // namespace augur
