#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "augur/transaction.hpp"

namespace augur::feeds {

/// A reputation holder's signed statement of what its feed reported.
struct Observation {
    std::string holder;        // user address
    Hash160 event{};
    consensus::Entry value;
    Amount weight;             // holder reputation at the snapshot
    Signature signature{};

    /// Bytes covered by the signature.
    Bytes message() const;
    Json to_json() const;
    static Observation from_json(const Json& j);
};

Observation sign_observation(const KeyPair& key, const Hash160& event, const consensus::Entry& value, Amount weight);
bool verify_observation(const Observation& obs, const PublicKey& key);

struct Decision {
    Hash160 event{};
    bool resolved = false;
    consensus::Entry value;    // modal outcome (meaningful when resolved)
    Amount modal_weight;
    Amount total_weight;
};

/// Resolution requires the modal outcome's weight share to reach theta,
/// compared exactly in base units. theta is taken on the 10^-8 grid.
Decision decide(const Hash160& event, const std::map<std::string, Amount>& tally, double theta);

/// One decision per event in `events`; events nobody observed are vote-required.
std::vector<Decision> aggregate(const std::vector<Observation>& observations, const std::vector<Hash160>& events,
    double theta);

/// Outcome source. fetch() returns nullopt when the source is unreachable.
class FeedSource {
public:
    virtual ~FeedSource() = default;
    virtual std::string id() const = 0;
    virtual std::optional<std::map<Hash160, consensus::Entry>> fetch() const = 0;
};

/// JSON map of event id -> outcome (number or "invalid") on disk.
class FileFeedSource : public FeedSource {
public:
    explicit FileFeedSource(std::string path) : path_(std::move(path)) {}
    std::string id() const override { return "file:" + path_; }
    std::optional<std::map<Hash160, consensus::Entry>> fetch() const override;

private:
    std::string path_;
};

/// In-memory source, also used as a test double.
class StaticFeedSource : public FeedSource {
public:
    StaticFeedSource(std::string name, std::optional<std::map<Hash160, consensus::Entry>> data)
        : name_(std::move(name)), data_(std::move(data))
    {
    }
    std::string id() const override { return name_; }
    std::optional<std::map<Hash160, consensus::Entry>> fetch() const override { return data_; }

private:
    std::string name_;
    std::optional<std::map<Hash160, consensus::Entry>> data_;
};

#ifdef AUGUR_HTTP_FEEDS
/// GET http://host:port/path returning the same JSON map as FileFeedSource.
class HttpFeedSource : public FeedSource {
public:
    HttpFeedSource(std::string host, int port, std::string path);
    std::string id() const override;
    std::optional<std::map<Hash160, consensus::Entry>> fetch() const override;

private:
    std::string host_;
    int port_;
    std::string path_;
};
#endif

std::map<Hash160, consensus::Entry> parse_feed(const Json& j);

struct Participant {
    const KeyPair* key = nullptr;
    const FeedSource* source = nullptr;
    Amount weight;
};

/// Queries every participant's source and signs one observation per
/// requested event it answers. Unreachable sources abstain.
std::vector<Observation> collect(const std::vector<Participant>& participants, const std::vector<Hash160>& events);

}  // namespace augur::feeds
