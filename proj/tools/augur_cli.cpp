#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "augur/augur.h"

namespace {

using Json = nlohmann::ordered_json;

int exit_code(augur_status s)
{
    switch (s) {
    case AUGUR_OK:
        return 0;
    case AUGUR_ERR_VALIDATION:
        return 1;
    case AUGUR_ERR_SCENARIO:
        return 2;
    default:
        return 3;
    }
}

enum class View { Generic, Status, Simrun, Verify };

bool json_out = false;

std::string cell(const Json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_null())
        return "-";
    return v.dump();
}

void print_table(const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& rows)
{
    std::vector<size_t> width(head.size());
    for (size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& r : rows)
            width[c] = std::max(width[c], r[c].size());
    }
    const auto line = [&](const std::vector<std::string>& r) {
        std::string out;
        for (size_t c = 0; c < r.size(); ++c) {
            out += r[c];
            if (c + 1 < r.size())
                out += std::string(width[c] - r[c].size() + 2, ' ');
        }
        std::cout << out << "\n";
    };
    line(head);
    for (const auto& r : rows)
        line(r);
}

void print_status(const Json& s)
{
    std::cout << "height " << s.at("height") << "  head " << cell(s.at("head")) << "\n"
              << "state  " << cell(s.at("state")) << "\n"
              << "reputation total " << cell(s.at("reputation_total")) << "\n";
    if (!s.at("branches").empty()) {
        std::cout << "\n";
        std::vector<std::vector<std::string>> rows;
        for (const auto& [name, b] : s.at("branches").items())
            rows.push_back({name, cell(b.at("cycle")), cell(b.at("reported")) + "/" + cell(b.at("required")),
                cell(b.at("matured")), cell(b.at("met")), cell(b.at("closed_height"))});
        print_table({"branch", "cycle", "reports", "matured", "quorum", "closed"}, rows);
    }
    if (!s.at("markets").empty()) {
        std::cout << "\n";
        std::vector<std::vector<std::string>> rows;
        for (const auto& [name, m] : s.at("markets").items()) {
            std::string prices;
            for (const auto& ev : m.at("prices")) {
                if (!prices.empty())
                    prices += " | ";
                for (size_t i = 0; i < ev.size() && i < 8; ++i)
                    prices += (i ? " " : "") + cell(ev[i]);
                if (ev.size() > 8)
                    prices += " ...";
            }
            const std::string state = m.at("redeemed").get<bool>() ? "redeemed"
                : m.at("closed").get<bool>()                       ? "closed"
                                                                    : "open";
            rows.push_back({name, state, prices});
        }
        print_table({"market", "state", "prices"}, rows);
    }
    if (!s.at("balances").empty()) {
        std::cout << "\n";
        std::vector<std::vector<std::string>> rows;
        for (const auto& [name, b] : s.at("balances").items())
            rows.push_back({name, cell(b.at("bitcoin")), cell(b.at("reputation")),
                std::to_string(b.at("shares").size())});
        print_table({"actor", "bitcoin", "reputation", "share lots"}, rows);
    }
    for (const auto& n : s.value("notes", Json::array()))
        std::cout << "note: " << cell(n) << "\n";
}

void print_generic(const Json& j)
{
    if (!j.is_object()) {
        std::cout << cell(j) << "\n";
        return;
    }
    for (const auto& [k, v] : j.items())
        std::cout << k << ": " << cell(v) << "\n";
}

void print_simrun(const Json& r)
{
    std::cout << "scenario " << cell(r.at("name")) << ": " << r.at("blocks") << " blocks\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : r.at("actions")) {
        std::string detail;
        for (const char* key : {"txid", "cost", "fee", "message"})
            if (a.contains(key))
                detail += std::string(detail.empty() ? "" : "  ") + key + "=" + cell(a.at(key));
        rows.push_back({cell(a.at("index")), cell(a.value("do", Json("?"))), cell(a.value("code", Json("ok"))), detail});
    }
    print_table({"#", "action", "result", "detail"}, rows);
    std::cout << "\n";
    print_status(r.at("status"));
}

void print_verify(const Json& r)
{
    if (r.value("ok", false))
        std::cout << "ok: " << r.at("blocks") << " blocks, head " << cell(r.at("head")) << "\n";
    else
        std::cout << "FAILED after " << r.at("blocks") << " blocks: " << cell(r.at("message")) << "\n";
}

int report(augur_status s, char* out, View view = View::Generic)
{
    if (out) {
        const Json j = Json::parse(out);
        augur_free(out);
        if (json_out)
            std::cout << j.dump(2) << "\n";
        else if (view == View::Status)
            print_status(j);
        else if (view == View::Simrun)
            print_simrun(j);
        else if (view == View::Verify)
            print_verify(j);
        else
            print_generic(j);
    }
    if (s != AUGUR_OK)
        std::cerr << "error: " << augur_last_error() << "\n";
    return exit_code(s);
}

bool read_text(const std::string& path, std::string& text)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    return true;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(item);
    return out;
}

Json entry_json(const std::string& s)
{
    if (s == "invalid" || s == "no-report")
        return s;
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    return s;
}

int execute(const std::string& dir, const Json& action)
{
    augur_node* node = nullptr;
    augur_status s = augur_node_open(dir.c_str(), &node);
    if (s != AUGUR_OK)
        return report(s, nullptr);
    char* out = nullptr;
    s = augur_node_execute(node, action.dump().c_str(), &out);
    const int code = report(s, out);
    const augur_status closed = augur_node_close(node);
    if (code == 0 && closed != AUGUR_OK)
        return report(closed, nullptr);
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Augur prediction-market simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string dir = "augur-data";
    app.add_option("-d,--data", dir, "Chain directory")->capture_default_str();
    app.add_flag("--json", json_out, "Machine-readable JSON output");
    int code = 0;

    // simrun
    auto* simrun = app.add_subcommand("simrun", "Run a scenario file");
    std::string scenario_path, out_dir;
    bool quiet = false;
    simrun->add_option("scenario", scenario_path, "Scenario JSON")->required();
    simrun->add_option("-o,--out", out_dir, "Write blocks.jsonl, snapshot.json and offchain.json here");
    simrun->add_flag("-q,--quiet", quiet, "Print only the head hash");
    simrun->callback([&] {
        std::string text;
        if (!read_text(scenario_path, text)) {
            std::cerr << "error: cannot read " << scenario_path << "\n";
            code = 3;
            return;
        }
        char* out = nullptr;
        const augur_status s = augur_simrun(text.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), &out);
        if (quiet && s == AUGUR_OK && out) {
            std::cout << Json::parse(out).at("head").get<std::string>() << "\n";
            augur_free(out);
            code = 0;
            return;
        }
        code = report(s, out, View::Simrun);
    });

    // verify
    auto* verify = app.add_subcommand("verify", "Replay a block log from genesis");
    std::string log_path;
    verify->add_option("log", log_path, "blocks.jsonl or a chain directory")->required();
    verify->callback([&] {
        std::string path = log_path;
        std::ifstream probe(path + "/blocks.jsonl");
        if (probe)
            path += "/blocks.jsonl";
        char* out = nullptr;
        const augur_status s = augur_verify_log(path.c_str(), &out);
        code = report(s, out, View::Verify);
    });

    // init
    auto* init = app.add_subcommand("init", "Create a chain from a genesis spec");
    std::string spec_path;
    init->add_option("spec", spec_path, "JSON with config, actors and genesis")->required();
    init->callback([&] {
        std::string text;
        if (!read_text(spec_path, text)) {
            std::cerr << "error: cannot read " << spec_path << "\n";
            code = 3;
            return;
        }
        augur_node* node = nullptr;
        augur_status s = augur_node_init(dir.c_str(), text.c_str(), &node);
        if (s == AUGUR_OK) {
            char* out = nullptr;
            s = augur_node_status(node, &out);
            code = report(s, out, View::Status);
            augur_node_close(node);
        } else {
            code = report(s, nullptr);
        }
    });

    // event create
    auto* event = app.add_subcommand("event", "Event commands");
    event->require_subcommand(1);
    auto* ev_create = event->add_subcommand("create", "Create an event");
    std::string actor, name, description, branch = "main", kind = "binary", labels, range, fee;
    int64_t expires = 2;
    ev_create->add_option("--actor", actor)->required();
    ev_create->add_option("--name", name)->required();
    ev_create->add_option("--description", description);
    ev_create->add_option("--branch", branch)->capture_default_str();
    ev_create->add_option("--kind", kind)->check(CLI::IsMember({"binary", "categorical", "scalar"}))->capture_default_str();
    ev_create->add_option("--labels", labels, "Comma-separated categorical labels");
    ev_create->add_option("--range", range, "lo,hi for scalar events");
    ev_create->add_option("--expires-in-blocks", expires)->capture_default_str();
    ev_create->add_option("--fee", fee);
    ev_create->callback([&] {
        Json a{{"do", "create_event"}, {"actor", actor}, {"name", name}, {"branch", branch}, {"kind", kind},
            {"expires_in_blocks", expires}};
        if (!description.empty())
            a["description"] = description;
        if (!labels.empty())
            a["labels"] = split_list(labels);
        if (!range.empty()) {
            Json r = Json::array();
            for (const auto& x : split_list(range))
                r.push_back(std::stod(x));
            a["range"] = r;
        }
        if (!fee.empty())
            a["fee"] = fee;
        code = execute(dir, a);
    });

    // market create
    auto* market = app.add_subcommand("market", "Market commands");
    market->require_subcommand(1);
    auto* mk_create = market->add_subcommand("create", "Create a market over events");
    std::string events, title;
    double loss_limit = 10.0, trading_fee = 0.01;
    mk_create->add_option("--actor", actor)->required();
    mk_create->add_option("--name", name)->required();
    mk_create->add_option("--title", title);
    mk_create->add_option("--events", events, "Comma-separated event names or ids")->required();
    mk_create->add_option("--loss-limit", loss_limit)->capture_default_str();
    mk_create->add_option("--trading-fee", trading_fee)->capture_default_str();
    mk_create->callback([&] {
        Json a{{"do", "create_market"}, {"actor", actor}, {"name", name}, {"events", split_list(events)},
            {"loss_limit", loss_limit}, {"trading_fee", trading_fee}};
        if (!title.empty())
            a["title"] = title;
        code = execute(dir, a);
    });

    // trade
    auto* trade = app.add_subcommand("trade", "Trading commands");
    trade->require_subcommand(1);
    std::string t_market, t_event, shares, outcome_label;
    int64_t outcome = -1;
    double value = 0.0;
    bool sell_side = false;
    const auto trade_action = [&](const std::string& what) {
        Json a{{"do", what}, {"market", t_market}, {"shares", shares}};
        if (!actor.empty())
            a["actor"] = actor;
        if (!t_event.empty())
            a["event"] = t_event;
        if (!outcome_label.empty())
            a["outcome"] = outcome_label;
        else if (outcome >= 0)
            a["outcome"] = outcome;
        else
            a["value"] = value;
        if (sell_side)
            a["side"] = "sell";
        return a;
    };
    for (const char* side : {"buy", "sell", "quote"}) {
        auto* cmd = trade->add_subcommand(side, std::string("Trade: ") + side);
        if (std::string(side) != "quote")
            cmd->add_option("--actor", actor)->required();
        else
            cmd->add_flag("--sell", sell_side, "Quote a sale");
        cmd->add_option("--market", t_market)->required();
        cmd->add_option("--event", t_event, "Defaults to the market's first event");
        auto* oc = cmd->add_option("--outcome", outcome, "Outcome index");
        auto* ol = cmd->add_option("--label", outcome_label, "Categorical outcome label");
        auto* ov = cmd->add_option("--value", value, "Scalar value (selects its bin)");
        oc->excludes(ol)->excludes(ov);
        ol->excludes(ov);
        cmd->add_option("--shares", shares)->required();
        const std::string what = side;
        cmd->callback([&, what, cmd] {
            if (outcome < 0 && outcome_label.empty() && cmd->count("--value") == 0) {
                std::cerr << "error: give --outcome, --label or --value\n";
                code = 2;
                return;
            }
            code = execute(dir, trade_action(what));
        });
    }

    // report
    auto* rep = app.add_subcommand("report", "Reporting commands");
    rep->require_subcommand(1);
    auto* rep_submit = rep->add_subcommand("submit", "Commit a ballot");
    std::string entries;
    bool withhold = false;
    rep_submit->add_option("--actor", actor)->required();
    rep_submit->add_option("--branch", branch)->capture_default_str();
    rep_submit->add_option("--entries", entries, "Comma-separated: value, label, invalid or no-report")->required();
    rep_submit->add_flag("--withhold", withhold, "Keep the plaintext until `report reveal`");
    rep_submit->callback([&] {
        Json list = Json::array();
        for (const auto& e : split_list(entries))
            list.push_back(entry_json(e));
        code = execute(dir, Json{{"do", "report"}, {"actor", actor}, {"branch", branch}, {"entries", list},
                                {"reveal", !withhold}});
    });
    auto* rep_reveal = rep->add_subcommand("reveal", "Disclose a withheld ballot");
    rep_reveal->add_option("--actor", actor)->required();
    rep_reveal->callback([&] { code = execute(dir, Json{{"do", "reveal"}, {"actor", actor}}); });

    // redeem
    auto* redeem = app.add_subcommand("redeem", "Redeem a branch after its reveal window");
    redeem->add_option("--branch", branch)->capture_default_str();
    redeem->callback([&] { code = execute(dir, Json{{"do", "redeem"}, {"branch", branch}}); });

    // status
    auto* status = app.add_subcommand("status", "Chain, market and balance summary");
    status->callback([&] {
        augur_node* node = nullptr;
        augur_status s = augur_node_open(dir.c_str(), &node);
        if (s != AUGUR_OK) {
            code = report(s, nullptr);
            return;
        }
        char* out = nullptr;
        s = augur_node_status(node, &out);
        code = report(s, out, View::Status);
        augur_node_close(node);
    });

    // advance
    auto* advance = app.add_subcommand("advance", "Seal blocks");
    int64_t blocks = 1;
    advance->add_option("-n,--blocks", blocks)->capture_default_str();
    advance->callback([&] { code = execute(dir, Json{{"do", "advance"}, {"blocks", blocks}}); });

    // feeds
    auto* feeds = app.add_subcommand("feeds", "Feed resolution commands");
    feeds->require_subcommand(1);
    auto* f_collect = feeds->add_subcommand("collect", "Query feed sources and store signed observations");
    std::vector<std::string> sources;
    f_collect->add_option("--branch", branch)->capture_default_str();
    f_collect->add_option("--source", sources, "actor=path.json or actor=unreachable")->required();
    f_collect->callback([&] {
        Json src = Json::object();
        for (const auto& s : sources) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                std::cerr << "error: --source expects actor=path\n";
                code = 2;
                return;
            }
            const std::string who = s.substr(0, eq), where = s.substr(eq + 1);
            src[who] = where == "unreachable" ? Json(nullptr) : Json{{"file", where}};
        }
        code = execute(dir, Json{{"do", "feeds_collect"}, {"branch", branch}, {"sources", src}});
    });
    auto* f_agg = feeds->add_subcommand("aggregate", "Resolve the branch from stored observations");
    double threshold = 0.0;
    f_agg->add_option("--branch", branch)->capture_default_str();
    f_agg->add_option("--threshold", threshold, "Preview decisions at this theta without redeeming")
        ->check(CLI::Range(0.0, 1.0));
    f_agg->callback([&] {
        Json a{{"do", "feeds_aggregate"}, {"branch", branch}};
        if (f_agg->count("--threshold"))
            a["theta"] = threshold;
        augur_node* node = nullptr;
        augur_status s = augur_node_open(dir.c_str(), &node);
        if (s != AUGUR_OK) {
            code = report(s, nullptr);
            return;
        }
        char* out = nullptr;
        s = augur_node_execute(node, a.dump().c_str(), &out);
        if (s == AUGUR_ERR_SCENARIO && std::string(augur_last_error()).find("vote-required") != std::string::npos) {
            std::cout << "vote required: " << augur_last_error() << "\n";
            s = AUGUR_OK;
        }
        code = report(s, out);
        augur_node_close(node);
    });
    auto* f_chal = feeds->add_subcommand("challenge", "Escrow a challenge fee to force a vote");
    std::string c_event;
    f_chal->add_option("--actor", actor)->required();
    f_chal->add_option("--event", c_event)->required();
    f_chal->add_option("--fee", fee);
    f_chal->callback([&] {
        Json a{{"do", "challenge"}, {"actor", actor}, {"event", c_event}};
        if (!fee.empty())
            a["fee"] = fee;
        code = execute(dir, a);
    });

    // consensus
    auto* cons = app.add_subcommand("consensus", "Run consensus over a CSV report matrix");
    std::string csv_path;
    double alpha = 0.9, blend = 0.2, margin = 0.15;
    cons->add_option("csv", csv_path)->required();
    cons->add_option("--alpha", alpha)->capture_default_str();
    cons->add_option("--blend", blend)->capture_default_str();
    cons->add_option("--margin", margin)->capture_default_str();
    cons->callback([&] {
        std::string text;
        if (!read_text(csv_path, text)) {
            std::cerr << "error: cannot read " << csv_path << "\n";
            code = 3;
            return;
        }
        const Json params{{"alpha", alpha}, {"blend", blend}, {"margin", margin}};
        char* out = nullptr;
        const augur_status s = augur_consensus_csv(text.c_str(), params.dump().c_str(), &out);
        code = report(s, out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    return code;
}
