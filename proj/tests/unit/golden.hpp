#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "augur/lifecycle.hpp"
#include "support.hpp"

namespace augur::test {

/// A transaction of each protocol type together with the ledger it spends from.
struct GoldenCase {
    std::string name;
    Ledger pre;
    Transaction tx;
};

inline std::vector<GoldenCase> golden_cases()
{
    namespace lc = augur::lifecycle;
    std::vector<GoldenCase> out;
    auto chain = market_chain();
    const Ledger& L = chain.node().ledger();
    const Hash160 weather = named_market(chain, "weather");
    const Hash160 rain = named_event(chain, "rain");

    EventData hail;
    hail.description = "Hail in Braga before noon";
    hail.branch = "main";
    hail.expiration = L.now() + 3000;
    out.push_back({"create_event", L, lc::create_event(L, actor_key("carol"), hail, Amount::parse("0.05"))});

    auto listed = run(chain, Json::parse(R"([
        {"do": "create_event", "actor": "carol", "name": "hail", "expires_in_blocks": 5},
        {"do": "create_event", "actor": "carol", "name": "fog", "expires_in_blocks": 5},
        {"do": "advance"}
    ])"));
    const Ledger& M = listed.node().ledger();
    out.push_back({"create_market", M,
        lc::create_market(M, actor_key("carol"), "sky", {named_event(listed, "hail"), named_event(listed, "fog")}, 3.0,
            0.02)});

    out.push_back({"buy", L, lc::buy(L, actor_key("dave"), weather, rain, 1, Amount::parse("2.5"))});
    out.push_back({"sell", L, lc::sell(L, actor_key("dave"), weather, rain, 1, Amount::parse("4"))});
    out.push_back({"report", L,
        lc::submit_report(L, actor_key("alice"), "main",
            {consensus::Entry::of(1), consensus::Entry::of(0), consensus::Entry::of(1)})
            .first});

    auto due = due_chain();
    const Ledger& D = due.node().ledger();
    out.push_back({"redemption", D, *lc::redeem_vote(D, "main", due.node().reveals())});
    return out;
}

/// Locking script the ledger runs for input `i`.
inline Script effective_lock(const Ledger& L, const Transaction& tx, size_t i)
{
    const TxOutput& spent = L.state().utxo.at(tx.vin[i].prevout);
    if (tx.type == TxType::Redemption)
        if (const auto owner = owner_of(spent))
            return scripts::consensus_claim(*owner);
    return spent.script;
}

inline ExecResult run_pair(const Ledger& L, const Transaction& tx, size_t i, const Script& lock, const Script& unlock)
{
    ExecContext ctx;
    ctx.tx = &tx;
    ctx.input_index = i;
    ctx.spent = &L.state().utxo.at(tx.vin[i].prevout);
    ctx.services = &L;
    return execute(unlock, lock, ctx);
}

/// Golden text: one lock/unlock pair per input, then the transaction JSON.
inline std::string golden_text(const GoldenCase& c)
{
    std::string s = "# " + std::string(to_string(c.tx.type)) + "\n";
    for (size_t i = 0; i < c.tx.vin.size(); ++i) {
        s += "vin " + std::to_string(i) + "\n";
        s += "  lock   " + effective_lock(c.pre, c.tx, i).to_string() + "\n";
        s += "  unlock " + c.tx.vin[i].script_sig.to_string() + "\n";
    }
    s += "tx\n" + c.tx.to_json().dump(2) + "\n";
    return s;
}

struct GoldenPair {
    size_t input = 0;
    Script lock;
    Script unlock;
};

struct GoldenFile {
    std::vector<GoldenPair> pairs;
    Json tx;
};

inline GoldenFile parse_golden(const std::string& text)
{
    GoldenFile g;
    const auto split = text.find("\ntx\n");
    if (split == std::string::npos)
        throw std::runtime_error("golden text has no tx section");
    std::istringstream in(text.substr(0, split));
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("vin ", 0) == 0) {
            g.pairs.push_back({std::stoul(line.substr(4)), {}, {}});
        } else if (line.rfind("  lock   ", 0) == 0) {
            g.pairs.back().lock = Script::parse(line.substr(9));
        } else if (line.rfind("  unlock ", 0) == 0) {
            g.pairs.back().unlock = Script::parse(line.substr(9));
        }
    }
    g.tx = Json::parse(text.substr(split + 4));
    return g;
}

inline std::string golden_path(const std::string& name)
{
    return std::string(AUGUR_GOLDEN_DIR) + "/" + name + ".golden";
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Every script obtained by deleting one token, replacing one opcode with
/// another, or flipping a bit in one push.
inline std::vector<Script> script_mutants(const Script& s)
{
    static const Opcode all[] = {Opcode::Dup, Opcode::Hash160, Opcode::EqualVerify, Opcode::CheckSig,
        Opcode::MarketCheck, Opcode::EventLookup, Opcode::IsBitcoin, Opcode::IsShares, Opcode::DataCheck,
        Opcode::Consensus, Opcode::PcaCheck};
    std::vector<Script> out;
    const auto& ops = s.ops();
    for (size_t k = 0; k < ops.size(); ++k) {
        auto removed = ops;
        removed.erase(removed.begin() + static_cast<std::ptrdiff_t>(k));
        out.emplace_back(removed);

        auto changed = ops;
        if (const auto* op = std::get_if<Opcode>(&ops[k])) {
            for (Opcode other : all)
                if (other != *op) {
                    changed[k] = other;
                    out.emplace_back(changed);
                }
            continue;
        }
        Bytes data = std::holds_alternative<Push>(ops[k]) ? std::get<Push>(ops[k]).data : std::get<WitnessPush>(ops[k]).data;
        if (data.empty())
            data.push_back(1);
        else
            data[data.size() / 2] ^= 0x01;
        if (std::holds_alternative<Push>(ops[k]))
            changed[k] = Push{data};
        else
            changed[k] = WitnessPush{data};
        out.emplace_back(changed);
    }
    return out;
}

inline Json mutate_leaf(const Json& v)
{
    if (v.is_boolean())
        return !v.get<bool>();
    if (v.is_number_integer())
        return v.get<int64_t>() + 1;
    if (v.is_number())
        return v.get<double>() * 1.5 + 0.001;
    if (v.is_null())
        return 0;
    std::string s = v.get<std::string>();
    if (s.empty())
        return "x";
    char& c = s.back();
    if (c >= '0' && c <= '8')
        ++c;
    else if (c == '9')
        c = '0';
    else if (c >= 'a' && c <= 'e')
        ++c;
    else if (c == 'f')
        c = 'a';
    else
        s += "x";
    return s;
}

struct MutationTally {
    size_t tried = 0;
    std::vector<std::string> survivors;
};

/// Mutates every JSON leaf of the transaction and every token of every
/// lock/unlock pair; each mutant must be rejected.
inline MutationTally mutate_golden(const Ledger& pre, const GoldenFile& g)
{
    MutationTally t;
    const Transaction tx = Transaction::from_json(g.tx);
    const Json flat = g.tx.flatten();
    for (const auto& [pointer, leaf] : flat.items()) {
        Json mutant = g.tx;
        mutant[Json::json_pointer(pointer)] = mutate_leaf(leaf);
        ++t.tried;
        bool rejected = true;
        try {
            rejected = !pre.validate(Transaction::from_json(mutant)).ok();
        } catch (const std::exception&) {
        }
        if (!rejected)
            t.survivors.push_back("tx " + pointer);
    }
    for (const auto& p : g.pairs) {
        for (const Script& lock : script_mutants(p.lock)) {
            ++t.tried;
            if (run_pair(pre, tx, p.input, lock, p.unlock))
                t.survivors.push_back("vin " + std::to_string(p.input) + " lock " + lock.to_string());
        }
        for (const Script& unlock : script_mutants(p.unlock)) {
            ++t.tried;
            if (run_pair(pre, tx, p.input, p.lock, unlock))
                t.survivors.push_back("vin " + std::to_string(p.input) + " unlock " + unlock.to_string());
        }
    }
    return t;
}

}  // namespace augur::test
