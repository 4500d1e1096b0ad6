#include "augur/script.hpp"

#include <array>
#include <cctype>

namespace augur {

namespace {

struct OpName {
    Opcode op;
    std::string_view name;
};

constexpr std::array<OpName, 11> kOpNames{{
    {Opcode::Dup, "OP_DUP"},
    {Opcode::Hash160, "OP_HASH160"},
    {Opcode::EqualVerify, "OP_EQUALVERIFY"},
    {Opcode::CheckSig, "OP_CHECKSIG"},
    {Opcode::MarketCheck, "OP_MARKETCHECK"},
    {Opcode::EventLookup, "OP_EVENTLOOKUP"},
    {Opcode::IsBitcoin, "OP_ISBITCOIN"},
    {Opcode::IsShares, "OP_ISSHARES"},
    {Opcode::DataCheck, "OP_DATACHECK"},
    {Opcode::Consensus, "OP_CONSENSUS"},
    {Opcode::PcaCheck, "OP_PCACHECK"},
}};

constexpr uint8_t kPushTag = 0x01;
constexpr uint8_t kWitnessTag = 0x02;

void append_u32(Bytes& out, uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<uint8_t>(v >> shift));
}

}  // namespace

std::string_view opcode_name(Opcode op)
{
    for (const auto& entry : kOpNames)
        if (entry.op == op)
            return entry.name;
    return "OP_UNKNOWN";
}

std::optional<Opcode> opcode_from_name(std::string_view name)
{
    if (name == "OP_CHECKDATA")
        return Opcode::DataCheck;
    for (const auto& entry : kOpNames)
        if (entry.name == name)
            return entry.op;
    return std::nullopt;
}

std::optional<Opcode> opcode_from_byte(uint8_t byte)
{
    for (const auto& entry : kOpNames)
        if (static_cast<uint8_t>(entry.op) == byte)
            return entry.op;
    return std::nullopt;
}

Script Script::parse(std::string_view text)
{
    std::vector<Instruction> ops;
    size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        size_t end = i;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end])))
            ++end;
        const std::string_view token = text.substr(i, end - i);
        i = end;

        const char open = token.front();
        const char close = token.back();
        if ((open == '<' && close == '>') || (open == '[' && close == ']')) {
            if (token.size() < 2)
                throw ScriptParseError("malformed push token");
            Bytes data;
            try {
                data = from_hex(token.substr(1, token.size() - 2));
            } catch (const std::invalid_argument& e) {
                throw ScriptParseError(std::string("bad push data: ") + e.what());
            }
            if (open == '<')
                ops.emplace_back(Push{std::move(data)});
            else
                ops.emplace_back(WitnessPush{std::move(data)});
            continue;
        }
        const auto op = opcode_from_name(token);
        if (!op)
            throw ScriptParseError("unknown opcode: " + std::string(token));
        ops.emplace_back(*op);
    }
    return Script(std::move(ops));
}

std::string Script::to_string() const
{
    std::string out;
    for (const auto& ins : ops_) {
        if (!out.empty())
            out.push_back(' ');
        if (const auto* op = std::get_if<Opcode>(&ins))
            out += opcode_name(*op);
        else if (const auto* p = std::get_if<Push>(&ins))
            out += "<" + to_hex(p->data) + ">";
        else
            out += "[" + to_hex(std::get<WitnessPush>(ins).data) + "]";
    }
    return out;
}

Bytes Script::serialize() const
{
    Bytes out;
    for (const auto& ins : ops_) {
        if (const auto* op = std::get_if<Opcode>(&ins)) {
            out.push_back(static_cast<uint8_t>(*op));
            continue;
        }
        const bool witness = std::holds_alternative<WitnessPush>(ins);
        const Bytes& data = witness ? std::get<WitnessPush>(ins).data : std::get<Push>(ins).data;
        out.push_back(witness ? kWitnessTag : kPushTag);
        append_u32(out, static_cast<uint32_t>(data.size()));
        out.insert(out.end(), data.begin(), data.end());
    }
    return out;
}

Script Script::deserialize(ByteView raw)
{
    std::vector<Instruction> ops;
    size_t i = 0;
    while (i < raw.size()) {
        const uint8_t b = raw[i++];
        if (b == kPushTag || b == kWitnessTag) {
            if (raw.size() - i < 4)
                throw ScriptParseError("truncated push length");
            uint32_t len = 0;
            for (int k = 0; k < 4; ++k)
                len = (len << 8) | raw[i++];
            if (raw.size() - i < len)
                throw ScriptParseError("truncated push data");
            Bytes data(raw.begin() + static_cast<std::ptrdiff_t>(i), raw.begin() + static_cast<std::ptrdiff_t>(i + len));
            i += len;
            if (b == kPushTag)
                ops.emplace_back(Push{std::move(data)});
            else
                ops.emplace_back(WitnessPush{std::move(data)});
            continue;
        }
        const auto op = opcode_from_byte(b);
        if (!op)
            throw ScriptParseError("unknown opcode byte");
        ops.emplace_back(*op);
    }
    return Script(std::move(ops));
}

namespace scripts {

Script pay_to_key_hash(const Hash160& key_hash)
{
    return Script().op(Opcode::Dup).op(Opcode::Hash160).push(key_hash).op(Opcode::EqualVerify).op(Opcode::CheckSig);
}

Script signature_unlock(const Signature& sig, const PublicKey& pubkey)
{
    return Script().push(sig).push(pubkey);
}

Script event_custody(const Hash160& event_id)
{
    return Script().op(Opcode::Dup).op(Opcode::Hash160).push(event_id).op(Opcode::EqualVerify).op(Opcode::MarketCheck);
}

Script market_data_unlock(const Hash160& market_id, const Bytes& market_data, const Bytes& event_data)
{
    return Script().push(market_id).push(market_data).push(event_data);
}

Script market_pool()
{
    return Script()
        .op(Opcode::Dup)
        .op(Opcode::Hash160)
        .op(Opcode::EventLookup)
        .op(Opcode::IsShares)
        .op(Opcode::MarketCheck);
}

Script share_pool()
{
    return Script()
        .op(Opcode::Dup)
        .op(Opcode::Hash160)
        .op(Opcode::EventLookup)
        .op(Opcode::IsBitcoin)
        .op(Opcode::MarketCheck);
}

Script event_id_unlock(const Hash160& event_id)
{
    return Script().push(event_id);
}

Script report_lock(const Hash160& key_hash)
{
    return Script()
        .op(Opcode::Dup)
        .op(Opcode::Hash160)
        .push(key_hash)
        .op(Opcode::EqualVerify)
        .op(Opcode::DataCheck)
        .op(Opcode::Consensus)
        .op(Opcode::PcaCheck)
        .op(Opcode::EqualVerify);
}

Script redemption_unlock(const PublicKey& pubkey, const Bytes& report_matrix, const Bytes& centered_matrix)
{
    return Script().push(pubkey).witness(report_matrix).witness(centered_matrix);
}

Script consensus_claim(const Hash160& key_hash)
{
    return Script()
        .op(Opcode::Dup)
        .op(Opcode::Hash160)
        .push(key_hash)
        .op(Opcode::EqualVerify)
        .op(Opcode::Consensus)
        .op(Opcode::PcaCheck)
        .op(Opcode::EqualVerify);
}

std::optional<Hash160> key_hash_of(const Script& lock)
{
    const auto& ops = lock.ops();
    if (ops.size() != 5)
        return std::nullopt;
    const auto is = [&](size_t i, Opcode op) {
        const auto* o = std::get_if<Opcode>(&ops[i]);
        return o && *o == op;
    };
    const auto* h = std::get_if<Push>(&ops[2]);
    if (!is(0, Opcode::Dup) || !is(1, Opcode::Hash160) || !h || h->data.size() != 20 || !is(3, Opcode::EqualVerify)
        || !is(4, Opcode::CheckSig))
        return std::nullopt;
    Hash160 out{};
    std::copy(h->data.begin(), h->data.end(), out.begin());
    return out;
}

}  // namespace scripts

}  // namespace augur
