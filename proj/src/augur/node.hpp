#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "augur/feeds.hpp"
#include "augur/ledger.hpp"
#include "augur/lifecycle.hpp"

namespace augur {

struct Block {
    int64_t height = 0;
    int64_t timestamp = 0;
    std::string prev;         // hex hash of the previous block, empty for genesis
    std::vector<Transaction> txs;
    std::string state_hash;   // ledger state after the block
    std::string hash;

    std::string compute_hash() const;
    Json to_json() const;
    static Block from_json(const Json& j);
};

struct Rejection {
    int64_t height = 0;
    std::string txid;
    std::string type;
    ValidationCode code = ValidationCode::Ok;
    std::string message;

    Json to_json() const;
};

class VerifyError : public std::runtime_error {
public:
    VerifyError(int64_t block, const std::string& message)
        : std::runtime_error("block " + std::to_string(block) + ": " + message), block_(block)
    {
    }
    int64_t block() const { return block_; }

private:
    int64_t block_;
};

/// A single-writer chain: the ledger, its sealed blocks, the block under
/// assembly and the off-chain data participants exchange (reveals, feed
/// observations, local names).
class Node {
public:
    explicit Node(ChainConfig config);

    /// Applies the genesis faucets as block 0 and seals it.
    static Node genesis(ChainConfig config, const std::vector<Transaction>& faucets);

    const Ledger& ledger() const { return ledger_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Transaction>& open_block() const { return open_; }
    const std::vector<Rejection>& rejections() const { return rejections_; }
    const std::vector<std::string>& notes() const { return notes_; }

    /// Validates and applies into the open block. On rejection the reason
    /// is recorded and returned; the chain is unchanged.
    ValidationReport submit(const Transaction& tx);

    /// Seals the open block. With `auto_redeem`, redemptions that become due
    /// are built from the stored reveals and placed first in the next block.
    void seal(bool auto_redeem = true);

    /// Runs due redemptions into the open block.
    void redeem_due();

    std::map<OutPoint, lifecycle::Reveal>& reveals() { return reveals_; }
    const std::map<OutPoint, lifecycle::Reveal>& reveals() const { return reveals_; }
    std::map<std::string, std::vector<feeds::Observation>>& observations() { return observations_; }
    Json& names() { return names_; }
    const Json& names() const { return names_; }

    /// Hash of the last sealed block, or empty.
    std::string head() const;

    /// blocks.jsonl, snapshot.json and offchain.json in `dir`.
    void save(const std::string& dir) const;
    static Node load(const std::string& dir);

    /// Re-executes a block log from genesis, checking every hash.
    static Node replay(const std::vector<Json>& lines);

private:
    Ledger ledger_;
    std::vector<Block> blocks_;
    std::vector<Transaction> open_;
    std::vector<Rejection> rejections_;
    std::vector<std::string> notes_;
    std::map<OutPoint, lifecycle::Reveal> reveals_;
    std::map<std::string, std::vector<feeds::Observation>> observations_;
    Json names_ = Json::object();
};

struct VerifyResult {
    bool ok = false;
    int64_t blocks = 0;
    std::string head;
    std::string message;

    Json to_json() const;
};

VerifyResult verify_log(const std::string& path);
VerifyResult verify_lines(const std::vector<Json>& lines);
std::vector<Json> read_jsonl(const std::string& path);

}  // namespace augur
