#include "augur/ballot.hpp"

#include <cmath>
#include <cstdio>

namespace augur {

namespace {

Bytes to_bytes(const std::string& s)
{
    return Bytes(s.begin(), s.end());
}

Json parse_json(ByteView raw)
{
    try {
        return Json::parse(raw.begin(), raw.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed witness: ") + e.what());
    }
}

Hash256 salt_of(const std::string& text)
{
    const Bytes b = from_hex(text);
    if (b.size() != 32)
        throw FormatError("salt must be 32 bytes");
    Hash256 out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

}  // namespace

std::string fixed9(double value)
{
    if (!std::isfinite(value))
        throw FormatError("non-finite consensus value");
    double rounded = std::nearbyint(value * 1e9) / 1e9;
    if (rounded == 0.0)
        rounded = 0.0;  // no "-0.000000000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", rounded);
    return buf;
}

Json scale_json(const consensus::EventScale& scale)
{
    using Kind = consensus::EventScale::Kind;
    Json j;
    switch (scale.kind) {
    case Kind::Binary:
        j["kind"] = "binary";
        break;
    case Kind::Categorical:
        j["kind"] = "categorical";
        j["categories"] = scale.categories;
        break;
    case Kind::Scalar:
        j["kind"] = "scalar";
        j["lower"] = scale.lower;
        j["upper"] = scale.upper;
        break;
    }
    return j;
}

consensus::EventScale scale_of(const Json& j)
{
    using Kind = consensus::EventScale::Kind;
    consensus::EventScale s;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "binary") {
            s.kind = Kind::Binary;
        } else if (kind == "categorical") {
            s.kind = Kind::Categorical;
            s.categories = j.at("categories").get<size_t>();
        } else if (kind == "scalar") {
            s.kind = Kind::Scalar;
            s.lower = j.at("lower").get<double>();
            s.upper = j.at("upper").get<double>();
        } else {
            throw FormatError("unknown scale kind: " + kind);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad scale: ") + e.what());
    }
    return s;
}

Json BallotMatrix::to_json() const
{
    Json j;
    j["branch"] = branch;
    j["cycle"] = cycle;
    Json ev = Json::array();
    for (const auto& e : events)
        ev.push_back(hex(e));
    j["events"] = std::move(ev);
    Json sc = Json::array();
    for (const auto& s : scales)
        sc.push_back(scale_json(s));
    j["scales"] = std::move(sc);
    Json rs = Json::array();
    for (const auto& row : rows) {
        Json r;
        r["holder"] = row.holder;
        r["reputation"] = row.reputation.to_string();
        r["report"] = row.report ? Json(row.report->to_string()) : Json(nullptr);
        Json entries = Json::array();
        for (const auto& e : row.entries)
            entries.push_back(entry_text(e));
        r["entries"] = std::move(entries);
        Json salts = Json::array();
        for (const auto& s : row.salts)
            salts.push_back(to_hex(s));
        r["salts"] = std::move(salts);
        rs.push_back(std::move(r));
    }
    j["rows"] = std::move(rs);
    return j;
}

BallotMatrix BallotMatrix::from_json(const Json& j)
{
    BallotMatrix m;
    try {
        m.branch = j.at("branch").get<std::string>();
        m.cycle = j.at("cycle").get<int64_t>();
        for (const auto& e : j.at("events"))
            m.events.push_back(hash160_from_hex(e.get<std::string>()));
        for (const auto& s : j.at("scales"))
            m.scales.push_back(scale_of(s));
        for (const auto& r : j.at("rows")) {
            BallotRow row;
            row.holder = r.at("holder").get<std::string>();
            row.reputation = Amount::parse(r.at("reputation").get<std::string>());
            if (!r.at("report").is_null()) {
                row.report = OutPoint::parse(r.at("report").get<std::string>());
            }
            for (const auto& e : r.at("entries"))
                row.entries.push_back(parse_entry(e.get<std::string>()));
            for (const auto& s : r.at("salts"))
                row.salts.push_back(salt_of(s.get<std::string>()));
            m.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad report matrix: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad report matrix: ") + e.what());
    } catch (const std::out_of_range& e) {
        throw FormatError(std::string("bad report matrix: ") + e.what());
    }
    if (m.scales.size() != m.events.size())
        throw FormatError("report matrix needs one scale per event");
    for (const auto& row : m.rows) {
        if (row.entries.size() != m.events.size())
            throw FormatError("report matrix row has the wrong width");
        if (!row.salts.empty() && row.salts.size() != m.events.size())
            throw FormatError("report matrix row has the wrong number of salts");
    }
    return m;
}

Bytes BallotMatrix::serialize() const
{
    return to_bytes(to_json().dump());
}

BallotMatrix BallotMatrix::parse(ByteView raw)
{
    return from_json(parse_json(raw));
}

consensus::ReportMatrix BallotMatrix::report_matrix() const
{
    consensus::ReportMatrix m;
    m.scales = scales;
    for (const auto& row : rows) {
        m.reporters.push_back(row.holder);
        m.reputation.push_back(row.reputation);
        m.entries.push_back(row.entries);
    }
    return m;
}

const BallotRow* BallotMatrix::row_for(const std::string& holder) const
{
    for (const auto& row : rows)
        if (row.holder == holder)
            return &row;
    return nullptr;
}

Bytes serialize_matrix(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(fixed9(m(i, j)));
        rows.push_back(std::move(row));
    }
    return to_bytes(rows.dump());
}

Eigen::MatrixXd parse_matrix(ByteView raw)
{
    const Json rows = parse_json(raw);
    if (!rows.is_array())
        throw FormatError("matrix must be an array of rows");
    const size_t n = rows.size();
    const size_t m = n == 0 ? 0 : rows[0].size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (size_t i = 0; i < n; ++i) {
        if (!rows[i].is_array() || rows[i].size() != m)
            throw FormatError("matrix rows must have equal length");
        for (size_t j = 0; j < m; ++j) {
            if (!rows[i][j].is_string())
                throw FormatError("matrix entries are decimal strings");
            try {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::stod(rows[i][j].get<std::string>());
            } catch (const std::exception&) {
                throw FormatError("bad matrix entry");
            }
        }
    }
    return out;
}

Json consensus_json(const consensus::ConsensusResult& result)
{
    Json j;
    Json outcomes = Json::array();
    for (const auto& o : result.outcomes) {
        Json e;
        e["invalid"] = o.invalid;
        e["unresolvable"] = o.unresolvable;
        e["mean"] = fixed9(o.unit_mean);
        e["value"] = o.invalid ? Json(nullptr) : Json(fixed9(o.value));
        outcomes.push_back(std::move(e));
    }
    j["outcomes"] = std::move(outcomes);
    Json rep = Json::array();
    for (const auto& r : result.reputation)
        rep.push_back(r.to_string());
    j["reputation"] = std::move(rep);
    const auto& d = result.diagnostics;
    Json diag;
    Json ev = Json::array();
    for (double v : d.eigenvalues)
        ev.push_back(fixed9(v));
    diag["eigenvalues"] = std::move(ev);
    Json cum = Json::array();
    for (double v : d.cumulative)
        cum.push_back(fixed9(v));
    diag["cumulative"] = std::move(cum);
    diag["components"] = d.components;
    diag["degenerate"] = d.degenerate;
    Json conf = Json::array();
    for (double v : d.conformity)
        conf.push_back(fixed9(v));
    diag["conformity"] = std::move(conf);
    j["diagnostics"] = std::move(diag);
    return j;
}

}  // namespace augur
