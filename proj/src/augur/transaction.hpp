#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augur/amount.hpp"
#include "augur/consensus.hpp"
#include "augur/crypto.hpp"
#include "augur/script.hpp"

namespace augur {

using Json = nlohmann::ordered_json;

/// Malformed or non-canonical transaction JSON.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TxType { CreateEvent, CreateMarket, Buy, Sell, Report, Redemption, Transfer, Faucet };

std::string_view to_string(TxType type);
TxType parse_tx_type(std::string_view text);

/// Whole shares minted per event by a CreateMarket coinbase output.
inline constexpr int64_t kSharesPerEvent = 1'000'000'000;

struct OutPoint {
    Hash160 txid{};
    uint32_t index = 0;
    auto operator<=>(const OutPoint&) const = default;
    std::string to_string() const;
    /// Inverse of to_string ("<txid hex>:<index>"); throws FormatError.
    static OutPoint parse(std::string_view text);
};

struct EventData {
    enum class Kind { Binary, Categorical, Scalar };

    std::string description;
    std::string branch;
    bool is_binary = true;
    std::vector<double> range{0.0, 1.0};  // binary and scalar
    std::vector<std::string> labels;      // categorical
    int64_t expiration = 0;
    std::string creator;
    std::optional<Hash160> stated_id;  // id field as parsed, if any

    Kind kind() const;
    /// Number of LMSR outcomes; scalar events use `scalar_bins` bins.
    size_t outcomes(size_t scalar_bins) const;
    consensus::EventScale scale() const;
    /// Throws FormatError when the range does not fit the kind.
    void validate() const;

    /// The id written is the stated one when present, so tampered payloads
    /// survive a round trip and are caught by validation.
    Json to_json(bool with_id = true) const;
    static EventData from_json(const Json& j);
    Bytes canonical() const;
    Hash160 id() const;
    Hash160 declared_id() const { return stated_id.value_or(id()); }
    std::string address() const;
};

struct MarketData {
    std::string title;
    std::string branch;
    std::vector<Hash160> events;
    double loss_limit = 1.0;
    double trading_fee = 0.0;
    Amount funding;
    std::string creator;
    std::optional<Hash160> stated_id;

    Json to_json(bool with_id = true) const;
    static MarketData from_json(const Json& j);
    Bytes canonical() const;
    Hash160 id() const;
    Hash160 declared_id() const { return stated_id.value_or(id()); }
    std::string address() const;
};

struct QuorumStatus {
    bool matured = false;
    int64_t reported = 0;
    int64_t required = 0;
    bool met = false;
    bool operator==(const QuorumStatus&) const = default;
};

/// Report payload. `outcomes` holds one salted commitment per ballot event;
/// the plaintext travels later as a reveal.
struct ReportData {
    std::string branch;
    int64_t cycle = 0;
    std::string reporter;
    std::vector<Hash160> events;
    std::vector<Hash160> outcomes;
    QuorumStatus quorum;
    std::optional<Hash160> stated_id;

    Json to_json(bool with_id = true) const;
    static ReportData from_json(const Json& j);
    Bytes canonical() const;
    Hash160 id() const;
    Hash160 declared_id() const { return stated_id.value_or(id()); }
};

/// Canonical text of a ballot entry: "no-report", "invalid" or the value
/// on the 10^-8 grid.
std::string entry_text(const consensus::Entry& entry);
consensus::Entry parse_entry(std::string_view text);
Hash160 entry_commitment(const Hash256& salt, const Hash160& event, const consensus::Entry& entry);

struct TxInput {
    OutPoint prevout;
    Amount value;
    UnitKind units = UnitKind::Bitcoin;
    std::optional<int64_t> outcome;
    std::optional<double> trading_fee;
    Script script_sig;
};

struct TxOutput {
    Amount value;
    UnitKind units = UnitKind::Bitcoin;
    std::optional<int64_t> outcome;
    std::optional<EventData> event_data;  // CreateEvent payload
    std::optional<Hash160> event;         // event reference
    std::optional<std::string> branch;
    std::optional<Hash160> market;        // custody outputs name their market
    std::optional<ReportData> report;
    std::optional<std::string> escrow;    // "reporter" or "challenge"
    std::optional<std::string> address;
    Script script;

    /// Event this output is attached to, from either the payload or the reference.
    std::optional<Hash160> event_id() const;
};

struct TradeData {
    Hash160 market{};
    Hash160 event{};
    int64_t outcome = 0;
    Amount shares;
    Amount cost;   // bitcoin paid (Buy) or received before fees (Sell)
    Amount fee;
    double price = 0.0;  // post-trade LMSR price of the outcome
};

struct Transaction {
    TxType type = TxType::Transfer;
    std::vector<TxInput> vin;
    std::vector<TxOutput> vout;

    std::optional<MarketData> market;  // CreateMarket
    std::optional<TradeData> trade;    // Buy, Sell
    std::optional<std::string> branch; // Report, Redemption
    std::optional<int64_t> cycle;
    std::optional<Json> settlement;    // Redemption body
    std::optional<Hash160> challenge;  // Transfer that challenges a feed result
    std::optional<std::string> memo;   // Faucet uniqueness tag
    std::map<UnitKind, Amount> issued;
    std::map<UnitKind, Amount> retired;

    Json to_json() const;
    static Transaction from_json(const Json& j);
    Bytes canonical() const;
    Hash160 txid() const;
    /// Message signed by input `index`: the canonical form with every
    /// scriptSig blanked, followed by the input index.
    Bytes sighash(size_t index) const;
};

Json output_json(const TxOutput& out, size_t n);
TxOutput output_from_json(const Json& j);

std::string hex(const Hash160& h);

}  // namespace augur
