#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "augur/crypto.hpp"

namespace augur {

/// Closed opcode set. Byte values for the first four follow Bitcoin; the
/// prediction-market extensions occupy the 0xc0 block.
enum class Opcode : uint8_t {
    Dup = 0x76,
    Hash160 = 0xa9,
    EqualVerify = 0x88,
    CheckSig = 0xac,
    MarketCheck = 0xc0,  // market id, market data, event data -> 1
    EventLookup = 0xc1,  // event id, hash -> market id, market data, event data, counter unit
    IsBitcoin = 0xc2,    // "bitcoin" -> (needs a bitcoin counter-leg input)
    IsShares = 0xc3,     // "shares" -> (needs a shares counter-leg input)
    DataCheck = 0xc4,    // reporter pubkey -> report id
    Consensus = 0xc5,    // report id or owner pubkey -> consensus result
    PcaCheck = 0xc6,     // consensus result -> 1, hash(recomputed centered), hash(supplied centered)
};

std::string_view opcode_name(Opcode op);
/// Accepts OP_CHECKDATA as an alias of OP_DATACHECK.
std::optional<Opcode> opcode_from_name(std::string_view name);
std::optional<Opcode> opcode_from_byte(uint8_t byte);

/// Stack data push, written `<hex>`.
struct Push {
    Bytes data;
    bool operator==(const Push&) const = default;
};

/// Input-attached payload (report matrices), written `[hex]`. Witness data
/// is handed to the interpreter context in order instead of being pushed,
/// so bulky matrices never count against stack item limits.
struct WitnessPush {
    Bytes data;
    bool operator==(const WitnessPush&) const = default;
};

using Instruction = std::variant<Opcode, Push, WitnessPush>;

class ScriptParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Script {
public:
    Script() = default;
    explicit Script(std::vector<Instruction> ops) : ops_(std::move(ops)) {}

    /// Whitespace-separated tokens: OP_* names, <hex> pushes, [hex] witness.
    static Script parse(std::string_view text);
    std::string to_string() const;

    /// Compact binary form: opcodes as their byte, pushes as
    /// 0x01 <u32 len> data, witness as 0x02 <u32 len> data.
    Bytes serialize() const;
    static Script deserialize(ByteView raw);

    const std::vector<Instruction>& ops() const { return ops_; }
    bool empty() const { return ops_.empty(); }

    Script& op(Opcode o)
    {
        ops_.emplace_back(o);
        return *this;
    }
    Script& push(Bytes data)
    {
        ops_.emplace_back(Push{std::move(data)});
        return *this;
    }
    template <size_t N>
    Script& push(const std::array<uint8_t, N>& data)
    {
        return push(Bytes(data.begin(), data.end()));
    }
    Script& push(std::string_view text) { return push(Bytes(text.begin(), text.end())); }
    Script& witness(Bytes data)
    {
        ops_.emplace_back(WitnessPush{std::move(data)});
        return *this;
    }

    bool operator==(const Script&) const = default;

private:
    std::vector<Instruction> ops_;
};

/// Standard locking/unlocking templates used by the protocol.
namespace scripts {

/// OP_DUP OP_HASH160 <h> OP_EQUALVERIFY OP_CHECKSIG
Script pay_to_key_hash(const Hash160& key_hash);
/// <sig> <pubkey>
Script signature_unlock(const Signature& sig, const PublicKey& pubkey);

/// OP_DUP OP_HASH160 <event id> OP_EQUALVERIFY OP_MARKETCHECK
/// Guards the CreateEvent fee output and bitcoin/shares held at an event address.
Script event_custody(const Hash160& event_id);
/// <market id> <market data> <event data>
Script market_data_unlock(const Hash160& market_id, const Bytes& market_data, const Bytes& event_data);

/// OP_DUP OP_HASH160 OP_EVENTLOOKUP OP_ISSHARES OP_MARKETCHECK (bitcoin pool)
Script market_pool();
/// OP_DUP OP_HASH160 OP_EVENTLOOKUP OP_ISBITCOIN OP_MARKETCHECK (share pool)
Script share_pool();
/// <event id>
Script event_id_unlock(const Hash160& event_id);

/// OP_DUP OP_HASH160 <h> OP_EQUALVERIFY OP_DATACHECK OP_CONSENSUS OP_PCACHECK OP_EQUALVERIFY
Script report_lock(const Hash160& key_hash);
/// <pubkey> [report matrix] [centered report matrix]
Script redemption_unlock(const PublicKey& pubkey, const Bytes& report_matrix, const Bytes& centered_matrix);

/// Lock executed when a Redemption claims a pay-to-key-hash output whose
/// owner did not sign: the CHECKSIG step is replaced by consensus checks.
/// OP_DUP OP_HASH160 <h> OP_EQUALVERIFY OP_CONSENSUS OP_PCACHECK OP_EQUALVERIFY
Script consensus_claim(const Hash160& key_hash);

/// Key hash of a pay-to-key-hash lock, if the script has exactly that shape.
std::optional<Hash160> key_hash_of(const Script& lock);

}  // namespace scripts

}  // namespace augur
