#include "augur/feeds.hpp"

#include <cmath>
#include <fstream>

#ifdef AUGUR_HTTP_FEEDS
#include <httplib.h>
#endif

namespace augur::feeds {

Bytes Observation::message() const
{
    Json j;
    j["holder"] = holder;
    j["event"] = hex(event);
    j["value"] = entry_text(value);
    j["weight"] = weight.to_string();
    const std::string text = "augur-feed:" + j.dump();
    return Bytes(text.begin(), text.end());
}

Json Observation::to_json() const
{
    Json j;
    j["holder"] = holder;
    j["event"] = hex(event);
    j["value"] = entry_text(value);
    j["weight"] = weight.to_string();
    j["signature"] = to_hex(signature);
    return j;
}

Observation Observation::from_json(const Json& j)
{
    Observation o;
    try {
        o.holder = j.at("holder").get<std::string>();
        o.event = hash160_from_hex(j.at("event").get<std::string>());
        o.value = parse_entry(j.at("value").get<std::string>());
        o.weight = Amount::parse(j.at("weight").get<std::string>());
        const Bytes sig = from_hex(j.at("signature").get<std::string>());
        if (sig.size() != o.signature.size())
            throw FormatError("signature must be 64 bytes");
        std::copy(sig.begin(), sig.end(), o.signature.begin());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad observation: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad observation: ") + e.what());
    }
    return o;
}

Observation sign_observation(const KeyPair& key, const Hash160& event, const consensus::Entry& value, Amount weight)
{
    Observation o;
    o.holder = key.address();
    o.event = event;
    o.value = value;
    o.weight = weight;
    o.signature = key.sign(o.message());
    return o;
}

bool verify_observation(const Observation& obs, const PublicKey& key)
{
    if (encode_address(hash160(key), AddressVersion::User) != obs.holder)
        return false;
    return verify_signature(obs.message(), obs.signature, key);
}

Decision decide(const Hash160& event, const std::map<std::string, Amount>& tally, double theta)
{
    if (!(theta > 0.5 && theta <= 1.0))
        throw std::invalid_argument("theta must lie in (0.5, 1]");
    Decision d;
    d.event = event;
    std::string modal;
    for (const auto& [value, weight] : tally) {
        d.total_weight += weight;
        if (modal.empty() || weight > d.modal_weight) {
            modal = value;
            d.modal_weight = weight;
        }
    }
    if (d.total_weight.units() <= 0)
        return d;
    const auto theta_units = static_cast<__int128>(std::llround(theta * Amount::kUnitsPerCoin));
    const __int128 lhs = static_cast<__int128>(d.modal_weight.units()) * Amount::kUnitsPerCoin;
    const __int128 rhs = theta_units * d.total_weight.units();
    d.resolved = lhs >= rhs;
    if (d.resolved)
        d.value = parse_entry(modal);
    return d;
}

std::vector<Decision> aggregate(const std::vector<Observation>& observations, const std::vector<Hash160>& events,
    double theta)
{
    std::map<Hash160, std::map<std::string, Amount>> tallies;
    for (const auto& o : observations)
        tallies[o.event][entry_text(o.value)] += o.weight;
    std::vector<Decision> out;
    for (const auto& e : events)
        out.push_back(decide(e, tallies[e], theta));
    return out;
}

std::map<Hash160, consensus::Entry> parse_feed(const Json& j)
{
    if (!j.is_object())
        throw FormatError("feed must map event ids to outcomes");
    std::map<Hash160, consensus::Entry> out;
    for (const auto& [key, value] : j.items()) {
        const Hash160 event = hash160_from_hex(key);
        if (value.is_string() && value.get<std::string>() == "invalid")
            out[event] = consensus::Entry::invalid();
        else if (value.is_number())
            out[event] = consensus::Entry::of(Amount::from_double(value.get<double>()).to_double());
        else
            throw FormatError("feed outcome must be a number or \"invalid\"");
    }
    return out;
}

std::optional<std::map<Hash160, consensus::Entry>> FileFeedSource::fetch() const
{
    std::ifstream in(path_);
    if (!in)
        return std::nullopt;
    try {
        return parse_feed(Json::parse(in));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

#ifdef AUGUR_HTTP_FEEDS
HttpFeedSource::HttpFeedSource(std::string host, int port, std::string path)
    : host_(std::move(host)), port_(port), path_(std::move(path))
{
}

std::string HttpFeedSource::id() const
{
    return "http://" + host_ + ":" + std::to_string(port_) + path_;
}

std::optional<std::map<Hash160, consensus::Entry>> HttpFeedSource::fetch() const
{
    httplib::Client client(host_, port_);
    client.set_connection_timeout(2);
    client.set_read_timeout(2);
    auto res = client.Get(path_);
    if (!res || res->status != 200)
        return std::nullopt;
    try {
        return parse_feed(Json::parse(res->body));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}
#endif

std::vector<Observation> collect(const std::vector<Participant>& participants, const std::vector<Hash160>& events)
{
    std::vector<Observation> out;
    for (const auto& p : participants) {
        if (!p.key || !p.source || p.weight.units() <= 0)
            continue;
        const auto data = p.source->fetch();
        if (!data)
            continue;
        for (const auto& e : events) {
            const auto it = data->find(e);
            if (it != data->end())
                out.push_back(sign_observation(*p.key, e, it->second, p.weight));
        }
    }
    return out;
}

}  // namespace augur::feeds
