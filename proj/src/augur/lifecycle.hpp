#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "augur/feeds.hpp"
#include "augur/ledger.hpp"
#include "augur/lmsr.hpp"

namespace augur::lifecycle {

/// A builder precondition does not hold (insufficient funds, closed market...).
class LifecycleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Coin {
    OutPoint point;
    TxOutput output;
};

/// Pay-to-key-hash output to a user address.
TxOutput pay_to(const std::string& address, UnitKind units, Amount value);
Hash160 key_hash_of_address(const std::string& address);

/// Unspent pay-to-key-hash outputs of `owner` with the given units, in
/// outpoint order. Share coins can be narrowed to one event and outcome.
std::vector<Coin> coins_of(const LedgerState& state, const Hash160& owner, UnitKind units,
    std::optional<Hash160> event = std::nullopt, std::optional<int64_t> outcome = std::nullopt);

/// Signs every input whose spent output is locked to `key`.
void sign_inputs(Transaction& tx, const LedgerState& state, const KeyPair& key);

Transaction faucet(std::vector<TxOutput> outputs, std::string memo);

Transaction create_event(const Ledger& ledger, const KeyPair& creator, EventData event, Amount fee);

/// Outputs of a CreateMarket: funding to the pool, one share coinbase per
/// event, then per event the reporter escrow half and the pool half of its
/// creation fee, then the creator's change.
std::vector<TxOutput> market_outputs(const MarketData& market, const std::vector<Amount>& event_fees, Amount change);
Amount market_funding(const MarketData& market, const std::vector<EventData>& events, size_t scalar_bins);
Transaction create_market(const Ledger& ledger, const KeyPair& creator, std::string title,
    const std::vector<Hash160>& events, double loss_limit, double trading_fee);

lmsr::LmsrState book(const Ledger& ledger, const Hash160& market, const Hash160& event);

struct Quote {
    Amount cost;          // bitcoin paid (buy) or received before fees (sell)
    Amount fee;
    double exact = 0.0;   // unrounded LMSR cost difference
    double price = 0.0;   // post-trade price of the outcome, on the 10^-9 grid
    std::vector<double> prices_after;
};
/// Positive `shares` quotes a buy, negative a sell.
Quote quote(const Ledger& ledger, const Hash160& market, const Hash160& event, int64_t outcome, Amount shares);

std::vector<TxOutput> buy_outputs(const MarketRecord& market, const TradeData& trade, const TxOutput& pool,
    const std::string& buyer, Amount buyer_in);
std::vector<TxOutput> sell_outputs(const MarketRecord& market, const TradeData& trade, const std::string& seller,
    Amount shares_in, Amount custody_in);
/// Creator half rounds down; the pool takes the rest.
std::pair<Amount, Amount> split_fee(Amount fee);

Transaction buy(const Ledger& ledger, const KeyPair& buyer, const Hash160& market, const Hash160& event,
    int64_t outcome, Amount shares);
Transaction sell(const Ledger& ledger, const KeyPair& seller, const Hash160& market, const Hash160& event,
    int64_t outcome, Amount shares);

/// Plain transfer; shares transfers name the event and outcome.
Transaction transfer(const Ledger& ledger, const KeyPair& from, const std::string& to, UnitKind units, Amount value,
    std::optional<Hash160> event = std::nullopt, std::optional<int64_t> outcome = std::nullopt);
Transaction challenge(const Ledger& ledger, const KeyPair& from, const Hash160& event, Amount fee);

/// Plaintext of a committed ballot, disclosed off-chain during the reveal window.
struct Reveal {
    OutPoint report;
    std::vector<consensus::Entry> entries;
    std::vector<Hash256> salts;

    Json to_json() const;
    static Reveal from_json(const Json& j);
};

Hash256 ballot_salt(const KeyPair& key, const std::string& branch, int64_t cycle, const Hash160& event);
/// Ballot for the next report on the branch: the fixed ballot of the
/// running cycle, or every open market event if nobody reported yet.
std::vector<Hash160> ballot_for(const Ledger& ledger, const std::string& branch);
std::pair<Transaction, Reveal> submit_report(const Ledger& ledger, const KeyPair& reporter, const std::string& branch,
    const std::vector<consensus::Entry>& entries);
bool reveal_matches(const ReportData& report, const Reveal& reveal);

/// Reputation attributed to each holder for the redemption of (branch, cycle):
/// pay-to-key-hash reputation plus that cycle's report outputs.
struct Holding {
    std::string holder;
    Hash160 key_hash{};
    Amount reputation;
    std::vector<OutPoint> plain;          // pay-to-key-hash reputation outputs
    std::optional<OutPoint> report;
};
std::vector<Holding> holdings(const LedgerState& state, const std::string& branch, int64_t cycle);

/// Redemption after a vote. Returns nullopt (with `why`) when consensus
/// cannot run, in which case the markets wait for a re-vote.
std::optional<Transaction> redeem_vote(const Ledger& ledger, const std::string& branch,
    const std::map<OutPoint, Reveal>& reveals, std::string* why = nullptr);

/// Redemption from feed observations; nullopt unless every ballot event
/// resolves, nothing was challenged and nobody reported this cycle.
std::optional<Transaction> redeem_feeds(const Ledger& ledger, const std::string& branch,
    const std::vector<feeds::Observation>& observations, std::string* why = nullptr);

/// Re-derives the Redemption from chain state and the data embedded in
/// `tx`; throws ValidationError when it cannot be rebuilt.
Transaction rebuild_redemption(const Ledger& ledger, const Transaction& tx);

/// Per-share settlement value of outcome `k` of an event.
double share_value(const EventData& event, size_t scalar_bins, const Json& outcome, size_t k,
    const std::vector<double>& close_prices);

}  // namespace augur::lifecycle
