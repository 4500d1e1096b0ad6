#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "augur/transaction.hpp"

namespace augur {

/// One reputation holder's row in a Redemption's report-matrix witness.
struct BallotRow {
    std::string holder;                // user address
    Amount reputation;
    std::optional<OutPoint> report;    // Report output, if the holder reported
    std::vector<consensus::Entry> entries;
    std::vector<Hash256> salts;        // empty when nothing was revealed
};

/// Report matrix as written into a Redemption scriptSig.
struct BallotMatrix {
    std::string branch;
    int64_t cycle = 0;
    std::vector<Hash160> events;
    std::vector<consensus::EventScale> scales;
    std::vector<BallotRow> rows;

    Json to_json() const;
    static BallotMatrix from_json(const Json& j);
    Bytes serialize() const;
    static BallotMatrix parse(ByteView raw);

    consensus::ReportMatrix report_matrix() const;
    const BallotRow* row_for(const std::string& holder) const;
};

Json scale_json(const consensus::EventScale& scale);
consensus::EventScale scale_of(const Json& j);

/// Fixed 9-decimal rendering used wherever floating-point consensus values
/// are serialized, so logs hash identically across platforms.
std::string fixed9(double value);

Bytes serialize_matrix(const Eigen::MatrixXd& m);
/// Throws FormatError on malformed input.
Eigen::MatrixXd parse_matrix(ByteView raw);

Json consensus_json(const consensus::ConsensusResult& result);

}  // namespace augur
