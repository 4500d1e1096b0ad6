#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "augur/interpreter.hpp"
#include "augur/transaction.hpp"

namespace augur {

struct ChainConfig {
    int64_t genesis_time = 1'700'000'000;
    int64_t block_interval = 600;       // seconds per block
    int64_t quorum_required = 2;
    int64_t reveal_window = 2;          // blocks between close and redemption
    double alpha = 0.9;
    double blend = 0.2;
    double margin = 0.15;
    double theta = 0.95;
    double slippage = 0.005;
    Amount min_event_fee = Amount::parse("0.01");
    Amount challenge_fee = Amount::parse("0.1");
    size_t scalar_bins = 256;
    size_t max_tx_bytes = 256 * 1024;   // lifted for Redemption
    std::vector<PublicKey> keys;        // public key directory published at genesis

    Json to_json() const;
    static ChainConfig from_json(const Json& j);
    consensus::Params consensus_params() const { return {alpha, blend, margin}; }
};

enum class ValidationCode {
    Ok,
    Malformed,
    EmptyOutputs,
    MissingInput,
    DoubleSpend,
    UnitMismatch,
    ScriptFailure,
    Conservation,
    DuplicateEvent,
    TypeRule,
    MarketClosed,
    Slippage,
    InsufficientFunds,
    TooLarge,
};

std::string_view to_string(ValidationCode code);

class ValidationError : public std::runtime_error {
public:
    ValidationError(ValidationCode code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {
    }
    ValidationCode code() const { return code_; }

private:
    ValidationCode code_;
};

struct ValidationReport {
    ValidationCode code = ValidationCode::Ok;
    std::string message;
    bool ok() const { return code == ValidationCode::Ok; }
};

struct EventRecord {
    EventData data;
    OutPoint creation;
    Amount fee;
    std::optional<Hash160> market;
    bool settled = false;
    bool challenged = false;
    std::optional<Json> resolution;
};

struct MarketRecord {
    MarketData data;
    std::vector<std::vector<Amount>> q;  // outstanding shares per event and outcome
    int64_t created_height = 0;
    bool redeemed = false;
};

struct BranchState {
    int64_t cycle = 0;
    std::vector<Hash160> ballot;      // fixed by the first report of the cycle
    std::vector<OutPoint> reports;
    std::set<std::string> reporters;
    std::optional<int64_t> closed_height;
};

struct LedgerState {
    std::map<OutPoint, TxOutput> utxo;
    std::map<Hash160, EventRecord> events;
    std::map<Hash160, MarketRecord> markets;
    std::map<std::string, BranchState> branches;
    std::map<Hash160, PublicKey> keys;
    std::set<std::string> event_keys;   // creator|description|expiration
    std::map<Hash160, uint32_t> txs;    // every applied txid and its output count
    int64_t height = -1;                // last completed block

    Json to_json() const;
    Hash256 hash() const;
};

/// Single-writer UTXO ledger with protocol registries.
class Ledger : public ScriptServices {
public:
    explicit Ledger(ChainConfig config);

    const ChainConfig& config() const { return config_; }
    const LedgerState& state() const { return state_; }
    int64_t height() const { return state_.height; }
    int64_t timestamp_at(int64_t height) const { return config_.genesis_time + height * config_.block_interval; }
    /// Timestamp of the block currently being assembled.
    int64_t now() const { return timestamp_at(state_.height + 1); }

    ValidationReport validate(const Transaction& tx) const;
    /// Validates and applies in one indivisible step. Throws ValidationError
    /// (or whatever the fault hook throws) and leaves the state untouched.
    void apply(const Transaction& tx);
    /// Seals the block being assembled: advances the height and records
    /// quorum closures.
    void end_block();

    /// Invoked with a running counter before every output insertion; used by
    /// the fault-injection tests.
    void set_fault_hook(std::function<void(size_t)> hook) { fault_hook_ = std::move(hook); }

    Amount balance(const std::string& address, UnitKind units) const;
    QuorumStatus quorum(const std::string& branch, int64_t now) const;
    QuorumStatus quorum(const std::string& branch) const { return quorum(branch, now()); }
    /// Whether trading on the market is closed (quorum met or redeemed).
    bool market_closed(const Hash160& market) const;
    /// Events on the branch that sit in an unredeemed market, in market
    /// creation order.
    std::vector<Hash160> open_events(const std::string& branch) const;
    /// Branches whose redemption is due in the block being assembled.
    std::vector<std::string> due_redemptions() const;
    std::optional<PublicKey> key_for(const Hash160& key_hash) const;

    // ScriptServices
    std::optional<MarketData> find_market(const Hash160& id) const override;
    std::optional<EventData> find_event(const Hash160& id) const override;
    std::optional<Amount> holder_reputation(const std::string& branch, int64_t cycle,
        const std::string& holder) const override;
    consensus::Params consensus_params() const override { return config_.consensus_params(); }

private:
    void check(const Transaction& tx) const;
    void check_inputs(const Transaction& tx) const;
    void check_scripts(const Transaction& tx) const;
    void check_conservation(const Transaction& tx) const;
    void check_type_rules(const Transaction& tx) const;
    void commit(LedgerState& next, const Transaction& tx) const;

    ChainConfig config_;
    LedgerState state_;
    std::function<void(size_t)> fault_hook_;
};

/// Key hash locked by a pay-to-key-hash output, if any.
std::optional<Hash160> owner_of(const TxOutput& out);

}  // namespace augur
