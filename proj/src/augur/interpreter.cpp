#include "augur/interpreter.hpp"

#include <algorithm>

namespace augur {

namespace {

struct Failure {
    ScriptError error;
    std::string detail;
};

bool truthy(const Bytes& item)
{
    return std::any_of(item.begin(), item.end(), [](uint8_t b) { return b != 0; });
}

Bytes as_item(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

template <size_t N>
Bytes as_item(const std::array<uint8_t, N>& a)
{
    return Bytes(a.begin(), a.end());
}

class Machine {
public:
    explicit Machine(ExecContext& ctx) : ctx_(ctx) {}

    void run(const Script& script, bool unlocking)
    {
        for (const auto& ins : script.ops()) {
            if (const auto* push = std::get_if<Push>(&ins)) {
                push_item(push->data);
            } else if (const auto* w = std::get_if<WitnessPush>(&ins)) {
                if (!unlocking)
                    fail(ScriptError::VerifyFailed, "witness data in a locking script");
                if (w->data.size() > ctx_.limits.max_item)
                    fail(ScriptError::StackLimit, "witness item too large");
                ctx_.witness.push_back(w->data);
            } else {
                step(std::get<Opcode>(ins));
            }
        }
    }

    const std::vector<Bytes>& stack() const { return stack_; }

private:
    [[noreturn]] void fail(ScriptError e, std::string detail) { throw Failure{e, std::move(detail)}; }

    void push_item(Bytes item)
    {
        if (item.size() > ctx_.limits.max_item)
            fail(ScriptError::StackLimit, "stack item too large");
        if (stack_.size() >= ctx_.limits.max_stack)
            fail(ScriptError::StackLimit, "stack depth exceeded");
        stack_.push_back(std::move(item));
    }

    Bytes pop()
    {
        if (stack_.empty())
            fail(ScriptError::Underflow, "stack underflow");
        Bytes top = std::move(stack_.back());
        stack_.pop_back();
        return top;
    }

    const Transaction& tx() const { return *ctx_.tx; }

    void step(Opcode op)
    {
        switch (op) {
        case Opcode::Dup: {
            if (stack_.empty())
                fail(ScriptError::Underflow, "OP_DUP on empty stack");
            push_item(stack_.back());
            break;
        }
        case Opcode::Hash160: {
            const Bytes top = pop();
            push_item(as_item(hash160(top)));
            break;
        }
        case Opcode::EqualVerify: {
            const Bytes a = pop();
            const Bytes b = pop();
            if (a != b)
                fail(ScriptError::VerifyFailed, "OP_EQUALVERIFY mismatch");
            break;
        }
        case Opcode::CheckSig:
            check_sig();
            break;
        case Opcode::MarketCheck:
            market_check();
            break;
        case Opcode::EventLookup:
            event_lookup();
            break;
        case Opcode::IsBitcoin:
            counter_leg(UnitKind::Bitcoin);
            break;
        case Opcode::IsShares:
            counter_leg(UnitKind::Shares);
            break;
        case Opcode::DataCheck:
            data_check();
            break;
        case Opcode::Consensus:
            run_consensus();
            break;
        case Opcode::PcaCheck:
            pca_check();
            break;
        default:
            fail(ScriptError::UnknownOpcode, "unknown opcode");
        }
    }

    void check_sig()
    {
        const Bytes pubkey = pop();
        const Bytes sig = pop();
        bool ok = false;
        if (sig.size() == 64) {
            Signature s{};
            std::copy(sig.begin(), sig.end(), s.begin());
            ok = verify_signature(tx().sighash(ctx_.input_index), s, pubkey);
        }
        push_item(Bytes{static_cast<uint8_t>(ok ? 1 : 0)});
    }

    bool tx_references_market(const Hash160& id) const
    {
        switch (tx().type) {
        case TxType::CreateMarket:
            return tx().market && tx().market->declared_id() == id;
        case TxType::Buy:
        case TxType::Sell:
            return tx().trade && tx().trade->market == id;
        case TxType::Redemption: {
            if (!tx().settlement || !tx().settlement->contains("markets"))
                return false;
            const std::string want = hex(id);
            for (const auto& m : (*tx().settlement)["markets"])
                if (m.is_string() && m.get<std::string>() == want)
                    return true;
            return false;
        }
        default:
            return false;
        }
    }

    void market_check()
    {
        const Bytes event_data = pop();
        const Bytes market_data = pop();
        const Bytes market_hash = pop();
        if (market_hash.size() != 20 || as_item(hash160(market_data)) != market_hash)
            fail(ScriptError::VerifyFailed, "market data does not hash to the market id");
        MarketData market;
        try {
            market = MarketData::from_json(Json::parse(market_data.begin(), market_data.end()));
        } catch (const std::exception& e) {
            fail(ScriptError::VerifyFailed, std::string("unreadable market data: ") + e.what());
        }
        const Hash160 event_id = hash160(event_data);
        if (std::find(market.events.begin(), market.events.end(), event_id) == market.events.end())
            fail(ScriptError::VerifyFailed, "event is not part of the market");
        Hash160 mid{};
        std::copy(market_hash.begin(), market_hash.end(), mid.begin());
        if (ctx_.spent && ctx_.spent->market && *ctx_.spent->market != mid)
            fail(ScriptError::VerifyFailed, "output belongs to a different market");
        if (ctx_.spent && ctx_.spent->event_id() && *ctx_.spent->event_id() != event_id)
            fail(ScriptError::VerifyFailed, "output belongs to a different event");
        if (!tx_references_market(mid))
            fail(ScriptError::VerifyFailed, "spending transaction does not reference the market");
        push_item(Bytes{1});
    }

    void event_lookup()
    {
        const Bytes h = pop();
        const Bytes x = pop();
        if (as_item(hash160(x)) != h)
            fail(ScriptError::VerifyFailed, "event reference does not match its hash");
        if (x.size() != 20)
            fail(ScriptError::LookupMiss, "event id must be 20 bytes");
        if (!ctx_.services || !ctx_.spent || !ctx_.spent->market)
            fail(ScriptError::LookupMiss, "no market registry for this output");
        const auto market = ctx_.services->find_market(*ctx_.spent->market);
        if (!market)
            fail(ScriptError::LookupMiss, "unknown market");
        Hash160 eid{};
        std::copy(x.begin(), x.end(), eid.begin());
        if (std::find(market->events.begin(), market->events.end(), eid) == market->events.end())
            fail(ScriptError::LookupMiss, "event is not part of the market");
        const auto event = ctx_.services->find_event(eid);
        if (!event)
            fail(ScriptError::LookupMiss, "unknown event");
        if (ctx_.spent->event && *ctx_.spent->event != eid)
            fail(ScriptError::VerifyFailed, "pool output belongs to a different event");
        push_item(as_item(market->declared_id()));
        push_item(market->canonical());
        push_item(event->canonical());
        // The pool trades against the other unit; the counter-leg opcode
        // consumes this tag.
        if (ctx_.spent->units == UnitKind::Reputation)
            fail(ScriptError::VerifyFailed, "reputation cannot sit in a market pool");
        push_item(as_item(to_string(ctx_.spent->units == UnitKind::Shares ? UnitKind::Bitcoin : UnitKind::Shares)));
    }

    void counter_leg(UnitKind kind)
    {
        if (pop() != as_item(to_string(kind)))
            fail(ScriptError::VerifyFailed, std::string("pool does not trade against ") + std::string(to_string(kind)));
        for (size_t i = 0; i < tx().vin.size(); ++i)
            if (i != ctx_.input_index && tx().vin[i].units == kind)
                return;
        fail(ScriptError::VerifyFailed, std::string("no ") + std::string(to_string(kind)) + " counter-leg");
    }

    const ReportData& spent_report()
    {
        if (!ctx_.spent || !ctx_.spent->report)
            fail(ScriptError::VerifyFailed, "output carries no report");
        return *ctx_.spent->report;
    }

    BallotMatrix witness_matrix()
    {
        if (ctx_.witness.empty())
            fail(ScriptError::MissingWitness, "report matrix missing from scriptSig");
        try {
            return BallotMatrix::parse(ctx_.witness[0]);
        } catch (const std::exception& e) {
            fail(ScriptError::VerifyFailed, std::string("unreadable report matrix: ") + e.what());
        }
    }

    void data_check()
    {
        const Bytes pubkey = pop();
        const ReportData& report = spent_report();
        if (encode_address(hash160(pubkey), AddressVersion::User) != report.reporter)
            fail(ScriptError::VerifyFailed, "key does not belong to the reporter");
        if (report.declared_id() != report.id())
            fail(ScriptError::VerifyFailed, "report fields do not hash to the report id");
        push_item(as_item(report.declared_id()));
        if (ctx_.witness.empty())
            return;
        const BallotMatrix matrix = witness_matrix();
        const BallotRow* row = matrix.row_for(report.reporter);
        if (!row)
            fail(ScriptError::VerifyFailed, "reporter missing from the report matrix");
        if (matrix.branch != report.branch || matrix.cycle != report.cycle)
            fail(ScriptError::VerifyFailed, "report belongs to another ballot");
        if (matrix.events != report.events)
            fail(ScriptError::VerifyFailed, "report ballot differs from the matrix columns");
        const OutPoint here = tx().vin[ctx_.input_index].prevout;
        if (!row->report || *row->report != here)
            fail(ScriptError::VerifyFailed, "matrix row does not point at this report");
        if (row->salts.empty()) {
            // Unrevealed: the row must carry no information.
            for (const auto& e : row->entries)
                if (e.present())
                    fail(ScriptError::VerifyFailed, "unrevealed row holds entries");
            return;
        }
        for (size_t k = 0; k < report.events.size(); ++k)
            if (entry_commitment(row->salts[k], report.events[k], row->entries[k]) != report.outcomes[k])
                fail(ScriptError::VerifyFailed, "revealed entry does not match its commitment");
    }

    /// The holder is named by its report id (after OP_DATACHECK) or, for a
    /// plain reputation output, by the owner's public key.
    void consume_holder()
    {
        const Bytes holder = pop();
        if (!ctx_.spent)
            fail(ScriptError::VerifyFailed, "no spent output");
        if (ctx_.spent->report) {
            if (holder != as_item(ctx_.spent->report->declared_id()))
                fail(ScriptError::VerifyFailed, "holder is not the report being redeemed");
            return;
        }
        const auto owner = scripts::key_hash_of(ctx_.spent->script);
        if (!owner || as_item(hash160(holder)) != as_item(*owner))
            fail(ScriptError::VerifyFailed, "holder key does not own the output");
    }

    void run_consensus()
    {
        consume_holder();
        const BallotMatrix matrix = witness_matrix();
        const consensus::Params params = ctx_.services ? ctx_.services->consensus_params() : consensus::Params{};
        try {
            const auto result = consensus::run(matrix.report_matrix(), params);
            push_item(as_item(consensus_json(result).dump()));
        } catch (const std::exception& e) {
            fail(ScriptError::ConsensusFailed, e.what());
        }
    }

    void pca_check()
    {
        const Bytes result = pop();
        try {
            (void)Json::parse(result.begin(), result.end()).at("reputation");
        } catch (const std::exception&) {
            fail(ScriptError::VerifyFailed, "no consensus result on the stack");
        }
        const BallotMatrix matrix = witness_matrix();
        if (ctx_.witness.size() < 2)
            fail(ScriptError::MissingWitness, "centered report matrix missing from scriptSig");

        if (ctx_.services) {
            for (const auto& row : matrix.rows) {
                const auto rep = ctx_.services->holder_reputation(matrix.branch, matrix.cycle, row.holder);
                if (!rep || *rep != row.reputation)
                    fail(ScriptError::VerifyFailed, "matrix weight differs from the holder's reputation");
            }
            for (size_t k = 0; k < matrix.events.size(); ++k) {
                const auto ev = ctx_.services->find_event(matrix.events[k]);
                if (!ev)
                    fail(ScriptError::LookupMiss, "matrix column names an unknown event");
                const auto want = scale_json(ev->scale());
                if (want != scale_json(matrix.scales[k]))
                    fail(ScriptError::VerifyFailed, "matrix column scale differs from the event");
            }
        }

        Eigen::MatrixXd supplied;
        try {
            supplied = parse_matrix(ctx_.witness[1]);
        } catch (const std::exception& e) {
            fail(ScriptError::VerifyFailed, std::string("unreadable centered matrix: ") + e.what());
        }
        consensus::CenteredMatrix centered;
        Eigen::MatrixXd sigma;
        consensus::Decomposition dec;
        try {
            const auto rm = matrix.report_matrix();
            centered = consensus::center(rm);
            sigma = consensus::weighted_covariance(centered.values, rm.weights());
            dec = consensus::decompose(sigma);
        } catch (const std::exception& e) {
            fail(ScriptError::ConsensusFailed, e.what());
        }
        if (supplied.rows() != centered.values.rows() || supplied.cols() != centered.values.cols())
            fail(ScriptError::VerifyFailed, "centered matrix has the wrong shape");
        if ((supplied - centered.values).cwiseAbs().maxCoeff() > kCenteredTolerance)
            fail(ScriptError::VerifyFailed, "centered matrix differs from the recomputation");
        const Eigen::MatrixXd rebuilt = dec.eigenvectors * dec.eigenvalues.asDiagonal() * dec.eigenvectors.transpose();
        if (sigma.size() > 0 && (rebuilt - sigma).cwiseAbs().maxCoeff() > kReconstructionTolerance)
            fail(ScriptError::VerifyFailed, "eigendecomposition does not reconstruct the covariance");

        push_item(Bytes{1});
        push_item(as_item(hash160(serialize_matrix(centered.values))));
        push_item(as_item(hash160(ctx_.witness[1])));
    }

    ExecContext& ctx_;
    std::vector<Bytes> stack_;
};

}  // namespace

std::string_view to_string(ScriptError error)
{
    switch (error) {
    case ScriptError::None:
        return "none";
    case ScriptError::Underflow:
        return "stack underflow";
    case ScriptError::VerifyFailed:
        return "verify failed";
    case ScriptError::UnknownOpcode:
        return "unknown opcode";
    case ScriptError::LookupMiss:
        return "lookup miss";
    case ScriptError::StackLimit:
        return "stack limit";
    case ScriptError::FalseResult:
        return "false result";
    case ScriptError::MissingWitness:
        return "missing witness";
    case ScriptError::ConsensusFailed:
        return "consensus failed";
    }
    return "unknown";
}

ExecResult execute(const Script& unlock, const Script& lock, ExecContext& ctx)
{
    if (!ctx.tx || ctx.input_index >= ctx.tx->vin.size())
        return {false, ScriptError::VerifyFailed, "no spending transaction"};
    ctx.witness.clear();
    Machine vm(ctx);
    try {
        vm.run(unlock, true);
        vm.run(lock, false);
    } catch (const Failure& f) {
        return {false, f.error, f.detail};
    }
    if (vm.stack().size() != 1 || !truthy(vm.stack().back()))
        return {false, ScriptError::FalseResult,
            vm.stack().size() > 1 ? "script left extra stack items" : "script left a false result"};
    return {true, ScriptError::None, {}};
}

}  // namespace augur
