#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "augur/node.hpp"

namespace augur {

/// Bad scenario or action specification; names the failing action.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A transaction the scenario expected to succeed was rejected.
class RejectedError : public std::runtime_error {
public:
    RejectedError(ValidationCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
    ValidationCode code() const { return code_; }

private:
    ValidationCode code_;
};

/// Simulator wallet key for a named actor.
KeyPair actor_key(const std::string& name);

/// Drives a node with named actors, events and markets. Actions are JSON
/// objects with a "do" field; see README for the vocabulary.
class Session {
public:
    explicit Session(Node node) : node_(std::move(node)) {}

    /// Genesis from {"config": {...}, "actors": [...], "genesis": {...}}.
    static Session start(const Json& spec);

    /// Executes one action. A rejection matching the action's "expect"
    /// field is reported in the result; an unexpected one throws
    /// RejectedError. Malformed actions throw ScenarioError.
    Json execute(const Json& action);

    /// Seals the open block if it holds transactions.
    void finish();

    Json status() const;
    Json balances() const;

    Node& node() { return node_; }
    const Node& node() const { return node_; }

private:
    Json run_action(const Json& a);
    Json submit(const Transaction& tx, const Json& a, Json result);
    Hash160 event_id(const Json& ref) const;
    Hash160 market_id(const Json& ref) const;
    std::string address_of(const std::string& who) const;
    void note_actor(const std::string& name);
    int64_t outcome_of(const Hash160& event, const Json& a) const;
    std::vector<std::string> actors() const;

    Node node_;
    int64_t index_ = 0;
};

/// Per-unit supply check: genesis + issued - retired equals the unspent
/// total, and reputation supply never changes after genesis.
Json conservation(const Node& node);

inline constexpr const char* kScenarioFormat = "augur-scenario/1";

/// Runs a whole scenario; writes the chain to `out_dir` when given.
/// Returns the run report.
Json run_scenario(const Json& scenario, const std::optional<std::string>& out_dir = std::nullopt);

}  // namespace augur
