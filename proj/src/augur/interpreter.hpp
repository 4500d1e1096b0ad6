#pragma once

#include <optional>
#include <string>
#include <vector>

#include "augur/ballot.hpp"
#include "augur/script.hpp"
#include "augur/transaction.hpp"

namespace augur {

enum class ScriptError {
    None,
    Underflow,
    VerifyFailed,
    UnknownOpcode,
    LookupMiss,
    StackLimit,
    FalseResult,
    MissingWitness,
    ConsensusFailed,
};

std::string_view to_string(ScriptError error);

struct ScriptLimits {
    size_t max_stack = 64;
    size_t max_item = 1 << 20;
};

/// Ledger state the extension opcodes may consult.
class ScriptServices {
public:
    virtual ~ScriptServices() = default;
    virtual std::optional<MarketData> find_market(const Hash160& id) const = 0;
    virtual std::optional<EventData> find_event(const Hash160& id) const = 0;
    /// Reputation the ledger attributes to `holder` for the redemption of
    /// (branch, cycle); nullopt when the holder is not part of it.
    virtual std::optional<Amount> holder_reputation(const std::string& branch, int64_t cycle,
        const std::string& holder) const = 0;
    virtual consensus::Params consensus_params() const = 0;
};

struct ExecContext {
    const Transaction* tx = nullptr;
    size_t input_index = 0;
    const TxOutput* spent = nullptr;     // output being unlocked
    const ScriptServices* services = nullptr;
    ScriptLimits limits;

    // Filled while running the unlocking script.
    std::vector<Bytes> witness;
};

struct ExecResult {
    bool ok = false;
    ScriptError error = ScriptError::None;
    std::string detail;
    explicit operator bool() const { return ok; }
};

/// Runs `unlock` then `lock` on one shared stack. Succeeds iff nothing
/// failed and exactly one truthy item is left.
ExecResult execute(const Script& unlock, const Script& lock, ExecContext& ctx);

/// Maximum absolute difference tolerated between a supplied and a
/// recomputed centered report matrix.
inline constexpr double kCenteredTolerance = 1e-9;
inline constexpr double kReconstructionTolerance = 1e-10;

}  // namespace augur
