#include "augur/augur.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "augur/scenario.hpp"

struct augur_node {
    std::string dir;
    augur::Session session;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out)
        std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

augur_status fail(augur_status status, const std::string& message)
{
    last_error = message;
    return status;
}

augur_status emit(const augur::Json& j, char** out)
{
    if (out)
        *out = dup(j.dump(2));
    last_error.clear();
    return AUGUR_OK;
}

template <typename F>
augur_status guard(F&& body)
{
    try {
        return body();
    } catch (const augur::RejectedError& e) {
        return fail(AUGUR_ERR_VALIDATION, e.what());
    } catch (const augur::ValidationError& e) {
        return fail(AUGUR_ERR_VALIDATION, e.what());
    } catch (const augur::VerifyError& e) {
        return fail(AUGUR_ERR_VALIDATION, e.what());
    } catch (const augur::ScenarioError& e) {
        return fail(AUGUR_ERR_SCENARIO, e.what());
    } catch (const augur::FormatError& e) {
        return fail(AUGUR_ERR_ARGUMENT, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(AUGUR_ERR_ARGUMENT, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(AUGUR_ERR_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(AUGUR_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(AUGUR_ERR_INTERNAL, e.what());
    }
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) {
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

augur::consensus::EventScale parse_scale(const std::string& text)
{
    using augur::consensus::EventScale;
    const auto parts = split(text, ':');
    EventScale s;
    if (parts.empty() || parts[0] == "binary") {
        s.kind = EventScale::Kind::Binary;
    } else if (parts[0] == "categorical" && parts.size() == 2) {
        s.kind = EventScale::Kind::Categorical;
        s.categories = std::stoul(parts[1]);
    } else if (parts[0] == "scalar" && parts.size() == 3) {
        s.kind = EventScale::Kind::Scalar;
        s.lower = std::stod(parts[1]);
        s.upper = std::stod(parts[2]);
    } else {
        throw std::invalid_argument("bad column scale \"" + text + "\"");
    }
    return s;
}

}  // namespace

extern "C" {

void augur_free(char* text)
{
    std::free(text);
}

const char* augur_last_error(void)
{
    return last_error.c_str();
}

const char* augur_version(void)
{
    return "0.1.0";
}

augur_status augur_node_init(const char* dir, const char* spec_json, augur_node** out)
{
    if (!dir || !spec_json || !out)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        if (std::filesystem::exists(std::filesystem::path(dir) / "blocks.jsonl"))
            return fail(AUGUR_ERR_IO, std::string("chain already exists in ") + dir);
        auto session = augur::Session::start(augur::Json::parse(spec_json));
        session.node().save(dir);
        *out = new augur_node{dir, std::move(session)};
        last_error.clear();
        return AUGUR_OK;
    });
}

augur_status augur_node_open(const char* dir, augur_node** out)
{
    if (!dir || !out)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        if (!std::filesystem::exists(std::filesystem::path(dir) / "blocks.jsonl"))
            return fail(AUGUR_ERR_IO, std::string("no chain in ") + dir);
        *out = new augur_node{dir, augur::Session(augur::Node::load(dir))};
        last_error.clear();
        return AUGUR_OK;
    });
}

augur_status augur_node_close(augur_node* node)
{
    if (!node)
        return AUGUR_OK;
    const augur_status s = guard([&] {
        node->session.node().save(node->dir);
        return AUGUR_OK;
    });
    delete node;
    return s;
}

augur_status augur_node_execute(augur_node* node, const char* action_json, char** result_json)
{
    if (!node || !action_json)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    const augur_status s = guard([&] {
        const augur::Json r = node->session.execute(augur::Json::parse(action_json));
        return emit(r, result_json);
    });
    const std::string err = last_error;
    const augur_status saved = guard([&] {
        node->session.node().save(node->dir);
        return AUGUR_OK;
    });
    if (s != AUGUR_OK) {
        last_error = err;
        return s;
    }
    return saved;
}

augur_status augur_node_status(const augur_node* node, char** status_json)
{
    if (!node)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] { return emit(node->session.status(), status_json); });
}

augur_status augur_node_quote(const augur_node* node, const char* market, const char* event, int outcome,
    const char* shares, char** quote_json)
{
    if (!node || !market || !shares)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        augur::Json a;
        a["do"] = "quote";
        a["market"] = market;
        if (event)
            a["event"] = event;
        a["outcome"] = outcome;
        std::string s = shares;
        if (!s.empty() && s[0] == '-') {
            a["side"] = "sell";
            s = s.substr(1);
        }
        a["shares"] = s;
        augur::Session copy = node->session;
        return emit(copy.execute(a), quote_json);
    });
}

augur_status augur_simrun(const char* scenario_json, const char* out_dir, char** report_json)
{
    if (!scenario_json)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        augur::Json scenario;
        try {
            scenario = augur::Json::parse(scenario_json);
        } catch (const nlohmann::json::exception& e) {
            throw augur::ScenarioError(std::string("scenario is not JSON: ") + e.what());
        }
        std::optional<std::string> dir;
        if (out_dir)
            dir = out_dir;
        return emit(augur::run_scenario(scenario, dir), report_json);
    });
}

augur_status augur_verify_log(const char* path, char** report_json)
{
    if (!path)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        if (!std::filesystem::exists(path))
            return fail(AUGUR_ERR_IO, std::string("no such file: ") + path);
        const augur::VerifyResult r = augur::verify_log(path);
        emit(r.to_json(), report_json);
        if (!r.ok)
            return fail(AUGUR_ERR_VALIDATION, r.message);
        return AUGUR_OK;
    });
}

augur_status augur_consensus_csv(const char* csv, const char* params_json, char** result_json)
{
    if (!csv)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        namespace cs = augur::consensus;
        cs::Params params;
        if (params_json) {
            const auto p = augur::Json::parse(params_json);
            params.alpha = p.value("alpha", params.alpha);
            params.blend = p.value("blend", params.blend);
            params.margin = p.value("margin", params.margin);
        }
        std::istringstream in(csv);
        std::string line;
        std::vector<std::vector<std::string>> rows;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#')
                continue;
            rows.push_back(split(line, ','));
        }
        if (rows.size() < 2)
            throw std::invalid_argument("CSV needs a header and at least one row");
        const auto& header = rows.front();
        if (header.size() < 3)
            throw std::invalid_argument("header is reporter,reputation,<column>...");
        cs::ReportMatrix m;
        for (size_t c = 2; c < header.size(); ++c)
            m.scales.push_back(parse_scale(header[c]));
        for (size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() != header.size())
                throw std::invalid_argument("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                    " cells, header has " + std::to_string(header.size()));
            m.reporters.push_back(row[0]);
            m.reputation.push_back(augur::Amount::parse(row[1]));
            std::vector<cs::Entry> entries;
            for (size_t c = 2; c < row.size(); ++c) {
                if (row[c].empty() || row[c] == "no-report")
                    entries.push_back(cs::Entry::no_report());
                else if (row[c] == "invalid")
                    entries.push_back(cs::Entry::invalid());
                else
                    entries.push_back(cs::Entry::of(std::stod(row[c])));
            }
            m.entries.push_back(std::move(entries));
        }
        const cs::ConsensusResult result = cs::run(m, params);
        augur::Json j = augur::consensus_json(result);
        j["reporters"] = m.reporters;
        j["centered"] = augur::Json::parse(augur::serialize_matrix(result.centered));
        augur::Json scores = augur::Json::array();
        for (double v : result.diagnostics.scores)
            scores.push_back(augur::fixed9(v));
        j["diagnostics"]["scores"] = std::move(scores);
        return emit(j, result_json);
    });
}

augur_status augur_feeds_aggregate(const char* request_json, char** result_json)
{
    if (!request_json)
        return fail(AUGUR_ERR_ARGUMENT, "null argument");
    return guard([&] {
        const auto req = augur::Json::parse(request_json);
        std::vector<augur::feeds::Observation> obs;
        for (const auto& o : req.at("observations")) {
            augur::feeds::Observation x;
            x.holder = o.value("holder", "");
            x.event = augur::hash160_from_hex(o.at("event").get<std::string>());
            const auto& v = o.at("value");
            x.value = v.is_string() ? augur::parse_entry(v.get<std::string>())
                                    : augur::consensus::Entry::of(v.get<double>());
            const auto& w = o.at("weight");
            x.weight = w.is_string() ? augur::Amount::parse(w.get<std::string>())
                                     : augur::Amount::from_double(w.get<double>());
            obs.push_back(std::move(x));
        }
        std::vector<augur::Hash160> events;
        for (const auto& e : req.at("events"))
            events.push_back(augur::hash160_from_hex(e.get<std::string>()));
        const auto decisions = augur::feeds::aggregate(obs, events, req.value("theta", 0.95));
        augur::Json out = augur::Json::array();
        for (const auto& d : decisions) {
            augur::Json j;
            j["event"] = augur::hex(d.event);
            j["resolved"] = d.resolved;
            j["value"] = d.resolved ? augur::Json(augur::entry_text(d.value)) : augur::Json(nullptr);
            j["modal_weight"] = d.modal_weight.to_string();
            j["total_weight"] = d.total_weight.to_string();
            out.push_back(std::move(j));
        }
        return emit(augur::Json{{"decisions", out}}, result_json);
    });
}

}  // extern "C"
