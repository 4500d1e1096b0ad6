#include "augur/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace augur {

namespace lc = lifecycle;

namespace {

Amount amount_field(const Json& a, const char* key, std::optional<Amount> fallback = std::nullopt)
{
    if (!a.contains(key)) {
        if (fallback)
            return *fallback;
        throw ScenarioError(std::string("missing field \"") + key + "\"");
    }
    const Json& v = a.at(key);
    if (v.is_string())
        return Amount::parse(v.get<std::string>());
    if (v.is_number_integer())
        return Amount::coins(v.get<int64_t>());
    if (v.is_number())
        return Amount::from_double(v.get<double>());
    throw ScenarioError(std::string("field \"") + key + "\" must be an amount");
}

std::string string_field(const Json& a, const char* key, std::optional<std::string> fallback = std::nullopt)
{
    if (!a.contains(key)) {
        if (fallback)
            return *fallback;
        throw ScenarioError(std::string("missing field \"") + key + "\"");
    }
    if (!a.at(key).is_string())
        throw ScenarioError(std::string("field \"") + key + "\" must be a string");
    return a.at(key).get<std::string>();
}

ValidationCode builder_code(const lc::LifecycleError& e)
{
    const std::string msg = e.what();
    return msg.rfind("insufficient", 0) == 0 || msg.find("exhausted") != std::string::npos
        ? ValidationCode::InsufficientFunds
        : ValidationCode::TypeRule;
}

Json prices_json(const std::vector<double>& p)
{
    Json arr = Json::array();
    for (double v : p)
        arr.push_back(fixed9(v));
    return arr;
}

}  // namespace

KeyPair actor_key(const std::string& name)
{
    return KeyPair::derive("actor:" + name);
}

Session Session::start(const Json& spec)
{
    ChainConfig config;
    std::set<std::string> names;
    try {
        if (spec.contains("config"))
            config = ChainConfig::from_json(spec.at("config"));
        if (spec.contains("actors"))
            for (const auto& n : spec.at("actors"))
                names.insert(n.get<std::string>());
        if (spec.contains("genesis"))
            for (const auto& [n, v] : spec.at("genesis").items())
                names.insert(n);
    } catch (const std::exception& e) {
        throw ScenarioError(std::string("bad scenario header: ") + e.what());
    }
    if (names.empty())
        throw ScenarioError("scenario declares no actors");
    config.keys.clear();
    for (const auto& n : names)
        config.keys.push_back(actor_key(n).public_key());

    std::vector<TxOutput> outs;
    try {
        const Json genesis = spec.value("genesis", Json::object());
        for (const auto& n : names) {
            if (!genesis.contains(n))
                continue;
            const std::string addr = actor_key(n).address();
            for (const auto& [units, value] : genesis.at(n).items()) {
                const UnitKind u = parse_unit_kind(units);
                const Amount v = value.is_string() ? Amount::parse(value.get<std::string>())
                                                   : Amount::from_double(value.get<double>());
                outs.push_back(lc::pay_to(addr, u, v));
            }
        }
    } catch (const std::exception& e) {
        throw ScenarioError(std::string("bad genesis allocation: ") + e.what());
    }
    if (outs.empty())
        throw ScenarioError("genesis allocates nothing");
    Node node = [&] {
        try {
            return Node::genesis(config, {lc::faucet(outs, "genesis")});
        } catch (const std::exception& e) {
            throw ScenarioError(std::string("genesis rejected: ") + e.what());
        }
    }();
    Json& n = node.names();
    n["actors"] = Json(std::vector<std::string>(names.begin(), names.end()));
    n["events"] = Json::object();
    n["markets"] = Json::object();
    n["withheld"] = Json::object();
    return Session(std::move(node));
}

std::vector<std::string> Session::actors() const
{
    std::vector<std::string> out;
    for (const auto& a : node_.names().value("actors", Json::array()))
        out.push_back(a.get<std::string>());
    return out;
}

void Session::note_actor(const std::string& name)
{
    auto list = actors();
    if (std::find(list.begin(), list.end(), name) == list.end()) {
        list.push_back(name);
        std::sort(list.begin(), list.end());
        node_.names()["actors"] = list;
    }
}

std::string Session::address_of(const std::string& who) const
{
    if (!who.empty() && who[0] == '1') {
        try {
            lc::key_hash_of_address(who);
            return who;
        } catch (const std::exception&) {
        }
    }
    return actor_key(who).address();
}

Hash160 Session::event_id(const Json& ref) const
{
    const std::string s = ref.get<std::string>();
    const Json& events = node_.names().at("events");
    if (events.contains(s))
        return hash160_from_hex(events.at(s).get<std::string>());
    try {
        return hash160_from_hex(s);
    } catch (const std::exception&) {
        throw ScenarioError("unknown event \"" + s + "\"");
    }
}

Hash160 Session::market_id(const Json& ref) const
{
    const std::string s = ref.get<std::string>();
    const Json& markets = node_.names().at("markets");
    if (markets.contains(s))
        return hash160_from_hex(markets.at(s).get<std::string>());
    try {
        return hash160_from_hex(s);
    } catch (const std::exception&) {
        throw ScenarioError("unknown market \"" + s + "\"");
    }
}

int64_t Session::outcome_of(const Hash160& event, const Json& a) const
{
    const auto it = node_.ledger().state().events.find(event);
    if (it == node_.ledger().state().events.end())
        throw ScenarioError("unknown event");
    const EventData& ev = it->second.data;
    if (a.contains("value")) {
        if (ev.kind() != EventData::Kind::Scalar)
            throw ScenarioError("\"value\" selects a bin of a scalar event");
        const auto spec = lmsr::ScalarMarketSpec::uniform(ev.range[0], ev.range[1], node_.ledger().config().scalar_bins);
        return static_cast<int64_t>(spec.bin_of(a.at("value").get<double>()));
    }
    const Json& o = a.at("outcome");
    if (o.is_string()) {
        const auto pos = std::find(ev.labels.begin(), ev.labels.end(), o.get<std::string>());
        if (pos == ev.labels.end())
            throw ScenarioError("unknown outcome label \"" + o.get<std::string>() + "\"");
        return pos - ev.labels.begin();
    }
    if (o.is_boolean())
        return o.get<bool>() ? 1 : 0;
    return o.get<int64_t>();
}

Json Session::execute(const Json& action)
{
    const int64_t i = index_++;
    const std::string what = action.is_object() ? action.value("do", "?") : "?";
    const std::string where = "action " + std::to_string(i) + " (" + what + "): ";
    try {
        Json r = run_action(action);
        r["index"] = i;
        return r;
    } catch (const RejectedError& e) {
        throw RejectedError(e.code(), where + e.what());
    } catch (const ScenarioError& e) {
        throw ScenarioError(where + e.what());
    } catch (const VerifyError& e) {
        throw ScenarioError(where + e.what());
    } catch (const std::exception& e) {
        throw ScenarioError(where + e.what());
    }
}

Json Session::submit(const Transaction& tx, const Json& a, Json result)
{
    const ValidationReport r = node_.submit(tx);
    const std::string got = r.ok() ? "ok" : std::string(to_string(r.code));
    const std::string expect = a.value("expect", "ok");
    result["ok"] = r.ok();
    result["code"] = got;
    result["txid"] = hex(tx.txid());
    if (!r.ok())
        result["message"] = r.message;
    if (got != expect) {
        if (expect == "ok")
            throw RejectedError(r.code, "rejected: " + got + ": " + r.message);
        throw ScenarioError("expected " + expect + ", got " + got + (r.ok() ? "" : " (" + r.message + ")"));
    }
    return result;
}

Json Session::run_action(const Json& a)
{
    if (!a.is_object() || !a.contains("do"))
        throw ScenarioError("action must be an object with a \"do\" field");
    const std::string what = a.at("do").get<std::string>();
    const Ledger& L = node_.ledger();
    Json result;
    result["do"] = what;

    const auto built = [&](auto&& make) -> Json {
        Transaction tx;
        try {
            tx = make();
        } catch (const lc::LifecycleError& e) {
            const std::string got(to_string(builder_code(e)));
            const std::string expect = a.value("expect", "ok");
            if (expect == got) {
                result["ok"] = false;
                result["code"] = got;
                result["message"] = e.what();
                return result;
            }
            if (expect == "ok")
                throw RejectedError(builder_code(e), std::string("cannot build: ") + e.what());
            throw ScenarioError("expected " + expect + ", got " + got + " (" + e.what() + ")");
        }
        return submit(tx, a, result);
    };

    if (what == "create_event") {
        const std::string actor = string_field(a, "actor");
        const std::string name = string_field(a, "name");
        EventData ev;
        ev.description = string_field(a, "description", name);
        ev.branch = string_field(a, "branch", "main");
        const std::string kind = string_field(a, "kind", "binary");
        if (kind == "binary") {
            ev.is_binary = true;
        } else if (kind == "categorical") {
            ev.is_binary = false;
            ev.labels = a.at("labels").get<std::vector<std::string>>();
        } else if (kind == "scalar") {
            ev.is_binary = false;
            ev.range = a.at("range").get<std::vector<double>>();
        } else {
            throw ScenarioError("unknown event kind \"" + kind + "\"");
        }
        if (a.contains("expiration"))
            ev.expiration = a.at("expiration").get<int64_t>();
        else
            ev.expiration = L.now() + a.value("expires_in_blocks", int64_t{2}) * L.config().block_interval;
        const Amount fee = amount_field(a, "fee", L.config().min_event_fee);
        note_actor(actor);
        Json r = built([&] { return lc::create_event(L, actor_key(actor), ev, fee); });
        if (r.value("ok", false)) {
            const auto& tx = node_.open_block().back();
            const std::string id = hex(tx.vout[0].event_data->id());
            node_.names()["events"][name] = id;
            r["event"] = id;
        }
        return r;
    }
    if (what == "create_market") {
        const std::string actor = string_field(a, "actor");
        const std::string name = string_field(a, "name");
        std::vector<Hash160> events;
        for (const auto& e : a.at("events"))
            events.push_back(event_id(e));
        const double ell = a.value("loss_limit", 10.0);
        const double fee = a.value("trading_fee", 0.01);
        note_actor(actor);
        Json r = built([&] { return lc::create_market(L, actor_key(actor), string_field(a, "title", name), events, ell, fee); });
        if (r.value("ok", false)) {
            const auto& tx = node_.open_block().back();
            const std::string id = hex(tx.market->id());
            node_.names()["markets"][name] = id;
            r["market"] = id;
            r["funding"] = tx.market->funding.to_string();
        }
        return r;
    }
    if (what == "buy" || what == "sell" || what == "quote") {
        const Hash160 market = market_id(a.at("market"));
        const auto mit = L.state().markets.find(market);
        if (mit == L.state().markets.end())
            throw ScenarioError("unknown market");
        const Hash160 event = a.contains("event") ? event_id(a.at("event")) : mit->second.data.events.front();
        const int64_t outcome = outcome_of(event, a);
        const Amount shares = amount_field(a, "shares");
        if (what == "quote") {
            const bool selling = a.value("side", "buy") == "sell";
            const auto q = lc::quote(L, market, event, outcome, selling ? -shares : shares);
            result["ok"] = true;
            result["cost"] = q.cost.to_string();
            result["fee"] = q.fee.to_string();
            result["price"] = fixed9(q.price);
            result["prices_after"] = prices_json(q.prices_after);
            result["prices"] = prices_json(lmsr::prices(lc::book(L, market, event)));
            return result;
        }
        const std::string actor = string_field(a, "actor");
        note_actor(actor);
        Json r = built([&] {
            return what == "buy" ? lc::buy(L, actor_key(actor), market, event, outcome, shares)
                                 : lc::sell(L, actor_key(actor), market, event, outcome, shares);
        });
        if (r.value("ok", false)) {
            const auto& t = *node_.open_block().back().trade;
            r["cost"] = t.cost.to_string();
            r["fee"] = t.fee.to_string();
            r["market"] = hex(market);
            r["event"] = hex(event);
            r["prices"] = prices_json(lmsr::prices(lc::book(L, market, event)));
        }
        return r;
    }
    if (what == "transfer") {
        const std::string from = string_field(a, "from");
        const std::string to = address_of(string_field(a, "to"));
        const UnitKind units = parse_unit_kind(string_field(a, "units", "bitcoin"));
        std::optional<Hash160> event;
        std::optional<int64_t> outcome;
        if (units == UnitKind::Shares) {
            event = event_id(a.at("event"));
            outcome = outcome_of(*event, Json{{"outcome", a.at("outcome")}});
        }
        const Amount value = amount_field(a, "value");
        note_actor(from);
        return built([&] { return lc::transfer(L, actor_key(from), to, units, value, event, outcome); });
    }
    if (what == "challenge") {
        const std::string actor = string_field(a, "actor");
        const Hash160 event = event_id(a.at("event"));
        const Amount fee = amount_field(a, "fee", L.config().challenge_fee);
        note_actor(actor);
        return built([&] { return lc::challenge(L, actor_key(actor), event, fee); });
    }
    if (what == "advance") {
        const int64_t n = a.value("blocks", int64_t{1});
        if (n < 1)
            throw ScenarioError("advance needs at least one block");
        const size_t before = node_.rejections().size();
        const size_t notes_before = node_.notes().size();
        for (int64_t k = 0; k < n; ++k)
            node_.seal();
        result["ok"] = true;
        result["height"] = L.height();
        result["head"] = node_.head();
        Json redeemed = Json::array();
        for (const auto& tx : node_.open_block())
            if (tx.type == TxType::Redemption)
                redeemed.push_back(*tx.branch);
        result["redeemed"] = std::move(redeemed);
        Json notes = Json::array();
        for (size_t k = notes_before; k < node_.notes().size(); ++k)
            notes.push_back(node_.notes()[k]);
        result["notes"] = std::move(notes);
        if (node_.rejections().size() != before)
            throw RejectedError(node_.rejections().back().code,
                "automatic redemption rejected: " + node_.rejections().back().message);
        return result;
    }
    if (what == "report") {
        const std::string actor = string_field(a, "actor");
        const std::string branch = string_field(a, "branch", "main");
        const auto ballot = lc::ballot_for(L, branch);
        std::vector<consensus::Entry> entries;
        Json raw = a.at("entries");
        if (raw.is_object()) {
            Json list = Json::array();
            for (const auto& id : ballot) {
                Json cell = nullptr;
                for (const auto& [ref, v] : raw.items())
                    if (event_id(Json(ref)) == id)
                        cell = v;
                list.push_back(cell);
            }
            raw = std::move(list);
        }
        if (!raw.is_array() || raw.size() != ballot.size())
            throw ScenarioError("ballot has " + std::to_string(ballot.size()) + " events");
        for (size_t k = 0; k < raw.size(); ++k) {
            const Json& e = raw[k];
            if (e.is_null()) {
                entries.push_back(consensus::Entry::no_report());
            } else if (e.is_number()) {
                entries.push_back(consensus::Entry::of(Amount::from_double(e.get<double>()).to_double()));
            } else if (e.is_boolean()) {
                entries.push_back(consensus::Entry::of(e.get<bool>() ? 1.0 : 0.0));
            } else if (e.is_string()) {
                const std::string s = e.get<std::string>();
                const EventData& ev = L.state().events.at(ballot[k]).data;
                const auto pos = std::find(ev.labels.begin(), ev.labels.end(), s);
                if (pos != ev.labels.end())
                    entries.push_back(consensus::Entry::of(static_cast<double>(pos - ev.labels.begin())));
                else
                    entries.push_back(parse_entry(s));
            } else {
                throw ScenarioError("ballot entries are numbers, labels, \"invalid\" or \"no-report\"");
            }
        }
        note_actor(actor);
        lc::Reveal reveal;
        Json r = built([&] {
            auto [tx, rv] = lc::submit_report(L, actor_key(actor), branch, entries);
            reveal = std::move(rv);
            return tx;
        });
        if (r.value("ok", false)) {
            r["quorum"] = node_.open_block().back().vout[0].report->quorum.met;
            r["quorum_after"] = L.quorum(branch).met;
            if (a.value("reveal", true))
                node_.reveals()[reveal.report] = reveal;
            else
                node_.names()["withheld"][reveal.report.to_string()] = reveal.to_json();
            r["report"] = reveal.report.to_string();
        }
        return r;
    }
    if (what == "reveal") {
        const std::string actor = string_field(a, "actor");
        const std::string addr = actor_key(actor).address();
        Json& withheld = node_.names()["withheld"];
        for (const auto& [point, rj] : withheld.items()) {
            const auto rv = lc::Reveal::from_json(rj);
            const auto it = L.state().utxo.find(rv.report);
            if (it == L.state().utxo.end() || it->second.report->reporter != addr)
                continue;
            node_.reveals()[rv.report] = rv;
            withheld.erase(point);
            result["ok"] = true;
            result["report"] = rv.report.to_string();
            return result;
        }
        throw ScenarioError("no withheld report for " + actor);
    }
    if (what == "feeds_collect") {
        const std::string branch = string_field(a, "branch", "main");
        const auto events = L.open_events(branch);
        const auto bit = L.state().branches.find(branch);
        const int64_t cycle = bit == L.state().branches.end() ? 0 : bit->second.cycle;
        std::vector<KeyPair> keys;
        std::vector<std::unique_ptr<feeds::FeedSource>> sources;
        std::vector<Amount> weights;
        for (const auto& [actor, spec] : a.at("sources").items()) {
            const auto rep = L.holder_reputation(branch, cycle, actor_key(actor).address());
            if (!rep)
                throw ScenarioError(actor + " holds no reputation");
            note_actor(actor);
            keys.push_back(actor_key(actor));
            weights.push_back(*rep);
            if (spec.is_null()) {
                sources.push_back(std::make_unique<feeds::StaticFeedSource>(actor, std::nullopt));
            } else if (spec.is_object() && spec.contains("file")) {
                sources.push_back(std::make_unique<feeds::FileFeedSource>(spec.at("file").get<std::string>()));
            } else {
                std::map<Hash160, consensus::Entry> data;
                for (const auto& [ev, v] : spec.items()) {
                    const Hash160 id = event_id(Json(ev));
                    data[id] = v.is_string() ? parse_entry(v.get<std::string>())
                                             : consensus::Entry::of(Amount::from_double(v.get<double>()).to_double());
                }
                sources.push_back(std::make_unique<feeds::StaticFeedSource>(actor, std::move(data)));
            }
        }
        std::vector<feeds::Participant> parts;
        for (size_t k = 0; k < keys.size(); ++k)
            parts.push_back({&keys[k], sources[k].get(), weights[k]});
        const auto obs = feeds::collect(parts, events);
        auto& store = node_.observations()[branch];
        store.insert(store.end(), obs.begin(), obs.end());
        result["ok"] = true;
        result["observations"] = obs.size();
        return result;
    }
    if (what == "feeds_aggregate") {
        const std::string branch = string_field(a, "branch", "main");
        const auto& obs = node_.observations()[branch];
        const bool preview = a.contains("theta");
        const double theta = preview ? a.at("theta").get<double>() : L.config().theta;
        if (!(theta > 0.0 && theta <= 1.0))
            throw ScenarioError("theta must lie in (0, 1]");
        const auto decisions = feeds::aggregate(obs, L.open_events(branch), theta);
        Json ds = Json::array();
        bool all = !decisions.empty();
        for (const auto& d : decisions) {
            Json j;
            j["event"] = hex(d.event);
            j["resolved"] = d.resolved;
            j["value"] = d.resolved ? Json(entry_text(d.value)) : Json(nullptr);
            j["modal_weight"] = d.modal_weight.to_string();
            j["total_weight"] = d.total_weight.to_string();
            ds.push_back(std::move(j));
            all = all && d.resolved;
        }
        result["decisions"] = std::move(ds);
        if (preview) {
            result["ok"] = true;
            result["preview"] = true;
            result["resolved"] = all;
            return result;
        }
        std::string why;
        const auto tx = lc::redeem_feeds(L, branch, obs, &why);
        const std::string expect = a.value("expect", "ok");
        if (!tx) {
            result["ok"] = false;
            result["code"] = "vote-required";
            result["message"] = why;
            if (expect != "vote-required")
                throw ScenarioError("expected " + expect + ", got vote-required (" + why + ")");
            return result;
        }
        Json r = submit(*tx, a, result);
        if (r.value("ok", false)) {
            node_.observations().erase(branch);
            r["settlement"] = *tx->settlement;
        }
        return r;
    }
    if (what == "redeem") {
        const std::string branch = string_field(a, "branch", "main");
        std::string why;
        const auto tx = lc::redeem_vote(L, branch, node_.reveals(), &why);
        if (!tx)
            throw RejectedError(ValidationCode::TypeRule, "cannot redeem: " + why);
        Json r = submit(*tx, a, result);
        if (r.value("ok", false))
            r["settlement"] = *tx->settlement;
        return r;
    }
    if (what == "assert") {
        if (a.contains("balance")) {
            const Json& b = a.at("balance");
            const std::string addr = address_of(string_field(b, "actor"));
            const UnitKind u = parse_unit_kind(string_field(b, "units", "bitcoin"));
            const Amount want = amount_field(b, "value");
            const Amount got = L.balance(addr, u);
            if (got != want)
                throw ScenarioError("balance of " + b.at("actor").get<std::string>() + " is " + got.to_string() +
                    ", expected " + want.to_string());
        }
        if (a.contains("quorum")) {
            const Json& q = a.at("quorum");
            const auto got = L.quorum(string_field(q, "branch", "main"));
            if (q.contains("met") && got.met != q.at("met").get<bool>())
                throw ScenarioError(std::string("quorum met is ") + (got.met ? "true" : "false"));
            if (q.contains("reported") && got.reported != q.at("reported").get<int64_t>())
                throw ScenarioError("quorum reported is " + std::to_string(got.reported));
        }
        if (a.contains("settled")) {
            const Hash160 e = event_id(a.at("settled"));
            if (!L.state().events.at(e).settled)
                throw ScenarioError("event is not settled");
        }
        if (a.contains("reputation_total")) {
            Amount total;
            for (const auto& [p, o] : L.state().utxo)
                if (o.units == UnitKind::Reputation)
                    total += o.value;
            const Amount want = amount_field(a, "reputation_total");
            if (total != want)
                throw ScenarioError("reputation total is " + total.to_string());
        }
        result["ok"] = true;
        return result;
    }
    throw ScenarioError("unknown action \"" + what + "\"");
}

void Session::finish()
{
    if (!node_.open_block().empty())
        node_.seal(false);
}

Json Session::balances() const
{
    const Ledger& L = node_.ledger();
    Json out = Json::object();
    std::map<std::string, std::string> event_names;
    for (const auto& [name, id] : node_.names().at("events").items())
        event_names[id.get<std::string>()] = name;
    for (const auto& actor : actors()) {
        const std::string addr = actor_key(actor).address();
        Json b;
        b["address"] = addr;
        b["bitcoin"] = L.balance(addr, UnitKind::Bitcoin).to_string();
        b["reputation"] = L.balance(addr, UnitKind::Reputation).to_string();
        std::map<std::pair<std::string, int64_t>, Amount> shares;
        for (const auto& [p, o] : L.state().utxo)
            if (o.units == UnitKind::Shares && o.address == addr && o.event && o.outcome) {
                const std::string id = hex(*o.event);
                const auto nit = event_names.find(id);
                shares[{nit == event_names.end() ? id : nit->second, *o.outcome}] += o.value;
            }
        Json sj = Json::array();
        for (const auto& [k, v] : shares)
            sj.push_back(Json{{"event", k.first}, {"outcome", k.second}, {"shares", v.to_string()}});
        b["shares"] = std::move(sj);
        out[actor] = std::move(b);
    }
    return out;
}

Json Session::status() const
{
    const Ledger& L = node_.ledger();
    Json s;
    s["height"] = L.height();
    s["timestamp"] = L.timestamp_at(std::max<int64_t>(L.height(), 0));
    s["head"] = node_.head();
    s["state"] = to_hex(L.state().hash());
    s["open_block"] = node_.open_block().size();
    Amount rep;
    for (const auto& [p, o] : L.state().utxo)
        if (o.units == UnitKind::Reputation)
            rep += o.value;
    s["reputation_total"] = rep.to_string();
    Json branches = Json::object();
    for (const auto& [name, b] : L.state().branches) {
        const auto q = L.quorum(name);
        Json j;
        j["cycle"] = b.cycle;
        j["ballot"] = b.ballot.size();
        j["reported"] = q.reported;
        j["required"] = q.required;
        j["matured"] = q.matured;
        j["met"] = q.met;
        j["closed_height"] = b.closed_height ? Json(*b.closed_height) : Json(nullptr);
        branches[name] = std::move(j);
    }
    s["branches"] = std::move(branches);
    Json markets = Json::object();
    for (const auto& [name, id] : node_.names().at("markets").items()) {
        const Hash160 mid = hash160_from_hex(id.get<std::string>());
        const auto& m = L.state().markets.at(mid);
        Json j;
        j["id"] = id;
        j["redeemed"] = m.redeemed;
        j["closed"] = L.market_closed(mid);
        Json prices = Json::array();
        for (const auto& e : m.data.events)
            prices.push_back(prices_json(lmsr::prices(lc::book(L, mid, e))));
        j["prices"] = std::move(prices);
        markets[name] = std::move(j);
    }
    s["markets"] = std::move(markets);
    s["balances"] = balances();
    Json notes = Json::array();
    for (const auto& n : node_.notes())
        notes.push_back(n);
    s["notes"] = std::move(notes);
    return s;
}

Json run_scenario(const Json& scenario, const std::optional<std::string>& out_dir)
{
    if (!scenario.is_object())
        throw ScenarioError("scenario must be a JSON object");
    const std::string format = scenario.value("format", "");
    if (format != kScenarioFormat)
        throw ScenarioError("unsupported scenario format \"" + format + "\" (expected \"" + kScenarioFormat + "\")");
    Session session = Session::start(scenario);
    Json results = Json::array();
    Json prices = Json::array();
    Json redemptions = Json::array();
    const Json actions = scenario.value("actions", Json::array());
    for (const auto& action : actions) {
        Json r = session.execute(action);
        if (r.contains("prices") && r.value("ok", false))
            prices.push_back(Json{{"index", r["index"]}, {"market", r.value("market", "")},
                {"event", r.value("event", "")}, {"prices", r["prices"]}});
        if (r.contains("settlement"))
            redemptions.push_back(r["settlement"]);
        results.push_back(std::move(r));
    }
    session.finish();
    for (const auto& b : session.node().blocks())
        for (const auto& tx : b.txs)
            if (tx.type == TxType::Redemption) {
                bool seen = false;
                for (const auto& s : redemptions)
                    seen = seen || s == *tx.settlement;
                if (!seen)
                    redemptions.push_back(*tx.settlement);
            }
    if (out_dir)
        session.node().save(*out_dir);

    Json report;
    report["name"] = scenario.value("name", "");
    report["blocks"] = session.node().blocks().size();
    report["head"] = session.node().head();
    report["state"] = to_hex(session.node().ledger().state().hash());
    report["status"] = session.status();
    report["actions"] = std::move(results);
    report["prices"] = std::move(prices);
    report["redemptions"] = std::move(redemptions);
    Json rej = Json::array();
    for (const auto& r : session.node().rejections())
        rej.push_back(r.to_json());
    report["rejections"] = std::move(rej);
    report["conservation"] = conservation(session.node());
    return report;
}

Json conservation(const Node& node)
{
    std::map<UnitKind, Amount> genesis, issued, retired, held;
    for (const auto& b : node.blocks())
        for (const auto& tx : b.txs)
            for (const auto& [u, v] : tx.issued)
                (b.height == 0 ? genesis : issued)[u] += v;
    for (const auto& b : node.blocks())
        for (const auto& tx : b.txs)
            for (const auto& [u, v] : tx.retired)
                retired[u] += v;
    for (const auto& tx : node.open_block()) {
        for (const auto& [u, v] : tx.issued)
            issued[u] += v;
        for (const auto& [u, v] : tx.retired)
            retired[u] += v;
    }
    for (const auto& [p, o] : node.ledger().state().utxo)
        held[o.units] += o.value;
    Json out = Json::object();
    bool all = true;
    for (UnitKind u : {UnitKind::Bitcoin, UnitKind::Shares, UnitKind::Reputation}) {
        const bool ok = genesis[u] + issued[u] - retired[u] == held[u];
        all = all && ok;
        out[std::string(to_string(u))] = Json{{"genesis", genesis[u].to_string()}, {"issued", issued[u].to_string()},
            {"retired", retired[u].to_string()}, {"held", held[u].to_string()}, {"ok", ok}};
    }
    const bool rep_constant = issued[UnitKind::Reputation].is_zero() && retired[UnitKind::Reputation].is_zero() &&
        held[UnitKind::Reputation] == genesis[UnitKind::Reputation];
    out["reputation_constant"] = rep_constant;
    out["ok"] = all && rep_constant;
    return out;
}

}  // namespace augur
