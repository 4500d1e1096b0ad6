#include "augur/node.hpp"

#include <filesystem>
#include <fstream>

namespace augur {

namespace {

std::string hash_hex(const Hash256& h)
{
    return to_hex(h);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
        out << text;
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Block

std::string Block::compute_hash() const
{
    Json h;
    h["height"] = height;
    h["timestamp"] = timestamp;
    h["prev"] = prev;
    Json ids = Json::array();
    for (const auto& tx : txs)
        ids.push_back(hex(tx.txid()));
    h["txids"] = std::move(ids);
    h["state"] = state_hash;
    return hash_hex(sha256(as_bytes(h.dump())));
}

Json Block::to_json() const
{
    Json j;
    j["height"] = height;
    j["timestamp"] = timestamp;
    j["prev"] = prev;
    Json arr = Json::array();
    for (const auto& tx : txs)
        arr.push_back(tx.to_json());
    j["txs"] = std::move(arr);
    j["state"] = state_hash;
    j["hash"] = hash;
    return j;
}

Block Block::from_json(const Json& j)
{
    Block b;
    try {
        b.height = j.at("height").get<int64_t>();
        b.timestamp = j.at("timestamp").get<int64_t>();
        b.prev = j.at("prev").get<std::string>();
        for (const auto& t : j.at("txs"))
            b.txs.push_back(Transaction::from_json(t));
        b.state_hash = j.at("state").get<std::string>();
        b.hash = j.at("hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad block: ") + e.what());
    }
    return b;
}

Json Rejection::to_json() const
{
    Json j;
    j["height"] = height;
    j["txid"] = txid;
    j["type"] = type;
    j["code"] = std::string(augur::to_string(code));
    j["message"] = message;
    return j;
}

// ---------------------------------------------------------------------------
// Node

Node::Node(ChainConfig config) : ledger_(std::move(config)) {}

Node Node::genesis(ChainConfig config, const std::vector<Transaction>& faucets)
{
    Node node(std::move(config));
    for (const auto& tx : faucets) {
        const auto r = node.submit(tx);
        if (!r.ok())
            throw ValidationError(r.code, "genesis: " + r.message);
    }
    node.seal(false);
    return node;
}

ValidationReport Node::submit(const Transaction& tx)
{
    ValidationReport r = ledger_.validate(tx);
    if (r.ok()) {
        try {
            ledger_.apply(tx);
        } catch (const ValidationError& e) {
            r.code = e.code();
            r.message = e.what();
        }
    }
    if (r.ok())
        open_.push_back(tx);
    else
        rejections_.push_back({ledger_.height() + 1, hex(tx.txid()), std::string(to_string(tx.type)), r.code, r.message});
    return r;
}

void Node::seal(bool auto_redeem)
{
    ledger_.end_block();
    Block b;
    b.height = ledger_.height();
    b.timestamp = ledger_.timestamp_at(b.height);
    b.prev = head();
    b.txs = std::move(open_);
    open_.clear();
    b.state_hash = hash_hex(ledger_.state().hash());
    b.hash = b.compute_hash();
    blocks_.push_back(std::move(b));
    if (auto_redeem)
        redeem_due();
}

void Node::redeem_due()
{
    for (const auto& branch : ledger_.due_redemptions()) {
        std::string why;
        const auto tx = lifecycle::redeem_vote(ledger_, branch, reveals_, &why);
        if (!tx) {
            notes_.push_back("block " + std::to_string(ledger_.height() + 1) + ": redemption of " + branch +
                " deferred: " + why);
            continue;
        }
        const auto r = submit(*tx);
        if (!r.ok())
            notes_.push_back("block " + std::to_string(ledger_.height() + 1) + ": redemption of " + branch +
                " rejected: " + r.message);
    }
}

std::string Node::head() const
{
    return blocks_.empty() ? std::string() : blocks_.back().hash;
}

void Node::save(const std::string& dir) const
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::string log;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        Json line = blocks_[i].to_json();
        if (i == 0)
            line["config"] = ledger_.config().to_json();
        log += line.dump() + "\n";
    }
    write_file(fs::path(dir) / "blocks.jsonl", log);

    Json snap = ledger_.state().to_json();
    snap["head"] = head();
    write_file(fs::path(dir) / "snapshot.json", snap.dump(1) + "\n");

    Json off;
    off["names"] = names_;
    Json rv = Json::array();
    for (const auto& [p, r] : reveals_)
        rv.push_back(r.to_json());
    off["reveals"] = std::move(rv);
    Json ob = Json::object();
    for (const auto& [branch, list] : observations_) {
        Json arr = Json::array();
        for (const auto& o : list)
            arr.push_back(o.to_json());
        ob[branch] = std::move(arr);
    }
    off["observations"] = std::move(ob);
    Json open = Json::array();
    for (const auto& tx : open_)
        open.push_back(tx.to_json());
    off["open_block"] = std::move(open);
    Json rej = Json::array();
    for (const auto& r : rejections_)
        rej.push_back(r.to_json());
    off["rejections"] = std::move(rej);
    off["notes"] = notes_;
    write_file(fs::path(dir) / "offchain.json", off.dump(1) + "\n");
}

Node Node::load(const std::string& dir)
{
    namespace fs = std::filesystem;
    Node node = replay(read_jsonl((fs::path(dir) / "blocks.jsonl").string()));
    const fs::path off_path = fs::path(dir) / "offchain.json";
    if (!fs::exists(off_path))
        return node;
    const Json off = read_json(off_path);
    try {
        node.names_ = off.at("names");
        for (const auto& r : off.at("reveals")) {
            auto rv = lifecycle::Reveal::from_json(r);
            node.reveals_[rv.report] = std::move(rv);
        }
        for (const auto& [branch, list] : off.at("observations").items())
            for (const auto& o : list)
                node.observations_[branch].push_back(feeds::Observation::from_json(o));
        for (const auto& t : off.at("open_block")) {
            const auto r = node.submit(Transaction::from_json(t));
            if (!r.ok())
                throw FormatError("open block no longer applies: " + r.message);
        }
        node.rejections_.clear();
        for (const auto& n : off.at("notes"))
            node.notes_.push_back(n.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad offchain.json: ") + e.what());
    }
    return node;
}

Node Node::replay(const std::vector<Json>& lines)
{
    if (lines.empty())
        throw VerifyError(0, "empty block log");
    ChainConfig config;
    try {
        config = ChainConfig::from_json(lines.front().at("config"));
    } catch (const std::exception& e) {
        throw VerifyError(0, std::string("bad genesis config: ") + e.what());
    }
    Node node(config);
    for (size_t i = 0; i < lines.size(); ++i) {
        const auto h = static_cast<int64_t>(i);
        Block b;
        try {
            Json line = lines[i];
            if (i > 0 && line.contains("config"))
                throw FormatError("config only appears in the genesis block");
            line.erase("config");
            b = Block::from_json(line);
        } catch (const std::exception& e) {
            throw VerifyError(h, e.what());
        }
        if (b.height != h)
            throw VerifyError(h, "height out of sequence");
        if (b.timestamp != node.ledger_.timestamp_at(h))
            throw VerifyError(h, "timestamp does not follow the block schedule");
        if (b.prev != node.head())
            throw VerifyError(h, "previous hash does not match");
        if (b.txs.empty() && h == 0)
            throw VerifyError(h, "genesis block is empty");
        for (size_t t = 0; t < b.txs.size(); ++t) {
            if (h == 0 && b.txs[t].type != TxType::Faucet)
                throw VerifyError(h, "genesis holds only faucets");
            const auto r = node.submit(b.txs[t]);
            if (!r.ok())
                throw VerifyError(h, "tx " + std::to_string(t) + " (" + hex(b.txs[t].txid()) + ") rejected: " +
                    std::string(to_string(r.code)) + ": " + r.message);
        }
        node.seal(false);
        const Block& got = node.blocks_.back();
        if (got.state_hash != b.state_hash)
            throw VerifyError(h, "state hash does not match");
        if (got.hash != b.hash || b.compute_hash() != b.hash)
            throw VerifyError(h, "block hash does not match");
    }
    return node;
}

std::vector<Json> read_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::vector<Json> out;
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw VerifyError(static_cast<int64_t>(out.size()), "line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

Json VerifyResult::to_json() const
{
    Json j;
    j["ok"] = ok;
    j["blocks"] = blocks;
    j["head"] = head;
    j["message"] = message;
    return j;
}

VerifyResult verify_lines(const std::vector<Json>& lines)
{
    VerifyResult r;
    try {
        const Node node = Node::replay(lines);
        r.ok = true;
        r.blocks = static_cast<int64_t>(node.blocks().size());
        r.head = node.head();
        r.message = "ok";
    } catch (const VerifyError& e) {
        r.blocks = e.block();
        r.message = e.what();
    } catch (const std::exception& e) {
        r.message = e.what();
    }
    return r;
}

VerifyResult verify_log(const std::string& path)
{
    try {
        return verify_lines(read_jsonl(path));
    } catch (const std::exception& e) {
        VerifyResult r;
        r.message = e.what();
        return r;
    }
}

}  // namespace augur
