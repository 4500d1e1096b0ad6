#include "augur/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace augur::consensus {

namespace {

// Total variance below this is treated as no dispersion at all.
constexpr double kVarianceFloor = 1e-20;

Eigen::VectorXd weighted_column_means(const Eigen::MatrixXd& x, const Eigen::VectorXd& w)
{
    return (x.transpose() * w) / w.sum();
}

// Squared distance between the outcome vector produced by weights `w` and
// the reputation-weighted mean `reference`.
double outcome_shift(const Eigen::MatrixXd& filled, const Eigen::VectorXd& w, const Eigen::VectorXd& reference)
{
    if (w.sum() <= 0.0)
        return std::numeric_limits<double>::infinity();
    return (weighted_column_means(filled, w) - reference).squaredNorm();
}

Eigen::VectorXd normalized_conformity(const Eigen::VectorXd& scores)
{
    const double lo = scores.minCoeff();
    const double hi = scores.maxCoeff();
    if (hi - lo <= 1e-12)
        return Eigen::VectorXd::Ones(scores.size());
    return (scores.array() - lo) / (hi - lo);
}

}  // namespace

double EventScale::to_unit(double raw) const
{
    switch (kind) {
    case Kind::Binary:
        if (raw < 0.0 || raw > 1.0)
            throw ConsensusError("binary report outside [0, 1]");
        return raw;
    case Kind::Categorical:
        if (categories < 2 || raw < 0.0 || raw > static_cast<double>(categories - 1))
            throw ConsensusError("categorical report outside label range");
        return raw / static_cast<double>(categories - 1);
    case Kind::Scalar:
        if (!(lower < upper) || raw < lower || raw > upper)
            throw ConsensusError("scalar report outside [a, b]");
        return (raw - lower) / (upper - lower);
    }
    return raw;
}

double EventScale::from_unit(double unit) const
{
    switch (kind) {
    case Kind::Binary: return unit;
    case Kind::Categorical: return unit * static_cast<double>(categories - 1);
    case Kind::Scalar: return lower + unit * (upper - lower);
    }
    return unit;
}

void ReportMatrix::validate() const
{
    if (reputation.size() != reporters.size() || entries.size() != reporters.size())
        throw ConsensusError("report matrix row count mismatch");
    for (const auto& row : entries)
        if (row.size() != scales.size())
            throw ConsensusError("report matrix column count mismatch");
    for (Amount r : reputation)
        if (r.units() <= 0)
            throw ConsensusError("reporter weights must be positive");
}

Eigen::VectorXd ReportMatrix::weights() const
{
    Eigen::VectorXd w(static_cast<Eigen::Index>(rows()));
    for (size_t i = 0; i < rows(); ++i)
        w(static_cast<Eigen::Index>(i)) = reputation[i].to_double();
    return w;
}

CenteredMatrix center(const ReportMatrix& matrix)
{
    matrix.validate();
    if (matrix.rows() < 2)
        throw ConsensusError("consensus needs at least two reporters; re-vote required");
    if (matrix.columns() == 0)
        throw ConsensusError("report matrix has no events");

    const auto n = static_cast<Eigen::Index>(matrix.rows());
    const auto m = static_cast<Eigen::Index>(matrix.columns());
    const Eigen::VectorXd w = matrix.weights();

    CenteredMatrix out;
    out.filled.resize(n, m);
    out.column_mean.resize(m);
    out.unresolvable.assign(matrix.columns(), false);

    for (Eigen::Index j = 0; j < m; ++j) {
        const EventScale& scale = matrix.scales[static_cast<size_t>(j)];
        double present_weight = 0.0;
        double present_sum = 0.0;
        std::optional<double> common;
        bool all_equal = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Entry& e = matrix.entries[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (!e.present())
                continue;
            const double u = e.kind == Entry::Kind::Invalid ? 0.5 : scale.to_unit(e.value);
            out.filled(i, j) = u;
            present_weight += w(i);
            present_sum += w(i) * u;
            if (!common)
                common = u;
            else if (*common != u)
                all_equal = false;
        }
        double fill = 0.5;
        if (!common)
            out.unresolvable[static_cast<size_t>(j)] = true;
        else
            fill = all_equal ? *common : present_sum / present_weight;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!matrix.entries[static_cast<size_t>(i)][static_cast<size_t>(j)].present())
                out.filled(i, j) = fill;
        // A column where every row carries the same value centers to exact zero.
        out.column_mean(j) = (all_equal && common) ? *common : (out.filled.col(j).dot(w)) / w.sum();
        if (!common)
            out.column_mean(j) = fill;
    }
    out.values = out.filled.rowwise() - out.column_mean.transpose();
    return out;
}

Eigen::MatrixXd center_dense(const Eigen::MatrixXd& values, const Eigen::VectorXd& weights)
{
    if (values.rows() != weights.size())
        throw ConsensusError("weight vector does not match matrix rows");
    const Eigen::VectorXd mean = weighted_column_means(values, weights);
    return values.rowwise() - mean.transpose();
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& centered, const Eigen::VectorXd& weights)
{
    if (centered.rows() != weights.size())
        throw ConsensusError("weight vector does not match matrix rows");
    const double total = weights.sum();
    const double denom = total * total - weights.squaredNorm();
    if (!(denom > 0.0))
        throw ConsensusError("weighted covariance undefined for a single reporter; re-vote required");
    Eigen::MatrixXd sigma = centered.transpose() * weights.asDiagonal() * centered;
    sigma *= total / denom;
    // Enforce exact symmetry against rounding in the triple product.
    return 0.5 * (sigma + sigma.transpose());
}

Decomposition decompose(const Eigen::MatrixXd& sigma)
{
    if (sigma.rows() != sigma.cols())
        throw ConsensusError("covariance must be square");
    const double scale = 1.0 + sigma.cwiseAbs().maxCoeff();
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ConsensusError("covariance must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
    if (solver.info() != Eigen::Success)
        throw ConsensusError("eigendecomposition failed");

    const auto n = sigma.rows();
    Decomposition d;
    d.eigenvalues.resize(n);
    d.eigenvectors.resize(n, n);
    // Eigen returns ascending order.
    for (Eigen::Index k = 0; k < n; ++k) {
        d.eigenvalues(k) = solver.eigenvalues()(n - 1 - k);
        Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - k);
        // First coordinate within rounding of the largest magnitude is made
        // positive, so near-symmetric vectors get the same sign regardless of
        // row order.
        const double peak = v.cwiseAbs().maxCoeff();
        Eigen::Index pivot = 0;
        while (std::fabs(v(pivot)) < peak - 1e-9)
            ++pivot;
        if (v(pivot) < 0.0)
            v = -v;
        d.eigenvectors.col(k) = v;
    }
    return d;
}

ComponentSelection select_components(const Eigen::VectorXd& eigenvalues, double alpha)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConsensusError("variance threshold must lie in (0, 1]");
    ComponentSelection sel;
    const auto n = eigenvalues.size();
    // Tiny negative eigenvalues are rounding noise on a PSD matrix.
    const Eigen::VectorXd lambda = eigenvalues.cwiseMax(0.0);
    const double total = lambda.sum();
    if (n == 0 || total <= kVarianceFloor) {
        sel.degenerate = true;
        return sel;
    }
    double running = 0.0;
    sel.cumulative.reserve(static_cast<size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        running += lambda(k);
        sel.cumulative.push_back(k + 1 == n ? 1.0 : running / total);
    }
    sel.count = static_cast<size_t>(n);
    for (size_t k = 0; k < sel.cumulative.size(); ++k) {
        if (sel.cumulative[k] >= alpha) {
            sel.count = k + 1;
            break;
        }
    }
    return sel;
}

Eigen::VectorXd coordination_vector(const Eigen::MatrixXd& eigenvectors, const ComponentSelection& selection)
{
    if (selection.degenerate)
        throw ConsensusError("coordination vector undefined for a degenerate spectrum");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(eigenvectors.rows());
    for (size_t i = 0; i < selection.count; ++i)
        v += eigenvectors.col(static_cast<Eigen::Index>(i));
    return v;
}

Outcome resolve(const EventScale& scale, double unit_mean, double invalid_share, double margin)
{
    Outcome o;
    o.unit_mean = unit_mean;
    if (invalid_share > 0.5) {
        o.invalid = true;
        return o;
    }
    switch (scale.kind) {
    case EventScale::Kind::Binary:
        if (unit_mean >= 0.5 + margin)
            o.value = 1.0;
        else if (unit_mean <= 0.5 - margin)
            o.value = 0.0;
        else
            o.invalid = true;
        break;
    case EventScale::Kind::Categorical: {
        const double t = scale.from_unit(unit_mean);
        const double idx = std::round(t);
        if (std::fabs(t - idx) <= 0.5 - margin)
            o.value = idx;
        else
            o.invalid = true;
        break;
    }
    case EventScale::Kind::Scalar:
        o.value = scale.from_unit(unit_mean);
        break;
    }
    return o;
}

std::vector<Amount> apportion(const std::vector<double>& targets, Amount total)
{
    if (targets.empty())
        return {};
    long double sum = 0.0L;
    for (double t : targets) {
        if (!(t >= 0.0) || !std::isfinite(t))
            throw ConsensusError("apportion targets must be finite and non-negative");
        sum += t;
    }
    if (sum <= 0.0L)
        throw ConsensusError("apportion targets sum to zero");

    const long double units = static_cast<long double>(total.units());
    std::vector<int64_t> base(targets.size());
    std::vector<long double> frac(targets.size());
    int64_t assigned = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const long double share = static_cast<long double>(targets[i]) / sum * units;
        base[i] = static_cast<int64_t>(std::floor(share));
        frac[i] = share - static_cast<long double>(base[i]);
        assigned += base[i];
    }
    int64_t remainder = total.units() - assigned;
    std::vector<size_t> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return frac[a] > frac[b]; });
    // Floors can only undershoot, but guard both directions against rounding.
    for (size_t k = 0; remainder != 0; k = (k + 1) % order.size()) {
        if (remainder > 0) {
            ++base[order[k]];
            --remainder;
        } else if (base[order[order.size() - 1 - k]] > 0) {
            --base[order[order.size() - 1 - k]];
            ++remainder;
        }
    }
    std::vector<Amount> out;
    out.reserve(base.size());
    for (int64_t b : base)
        out.push_back(Amount::from_units(b));
    return out;
}

ConsensusResult run(const ReportMatrix& matrix, const Params& params)
{
    if (!(params.blend >= 0.0 && params.blend <= 1.0))
        throw ConsensusError("blend factor must lie in [0, 1]");
    CenteredMatrix c = center(matrix);
    const Eigen::VectorXd w = matrix.weights();
    const auto n = static_cast<Eigen::Index>(matrix.rows());
    const auto m = static_cast<Eigen::Index>(matrix.columns());

    ConsensusResult result;
    result.centered = c.values;
    Diagnostics& diag = result.diagnostics;

    Eigen::VectorXd conformity = Eigen::VectorXd::Ones(n);
    const Eigen::MatrixXd sigma = weighted_covariance(c.values, w);
    const Decomposition dec = decompose(sigma);
    ComponentSelection sel = select_components(dec.eigenvalues, params.alpha);
    diag.eigenvalues.assign(dec.eigenvalues.data(), dec.eigenvalues.data() + m);
    diag.cumulative = sel.cumulative;
    diag.components = sel.count;
    diag.degenerate = sel.degenerate;

    if (!sel.degenerate) {
        // Orient each selected component so that rewarding its high scorers
        // moves the outcomes least away from the reputation-weighted mean,
        // i.e. the majority is the conforming side.
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
        for (size_t k = 0; k < sel.count; ++k) {
            const Eigen::VectorXd s = dec.eigenvectors.col(static_cast<Eigen::Index>(k));
            const Eigen::VectorXd scores = c.values * s;
            const Eigen::VectorXd up = normalized_conformity(scores);
            const Eigen::VectorXd down = normalized_conformity(-scores);
            const double shift_up = outcome_shift(c.filled, up.cwiseProduct(w), c.column_mean);
            const double shift_down = outcome_shift(c.filled, down.cwiseProduct(w), c.column_mean);
            const double tie = 1e-12 * std::max(1.0, shift_up + shift_down);
            v += (shift_down < shift_up - tie) ? Eigen::VectorXd(-s) : s;
        }
        const Eigen::VectorXd scores = c.values * v;
        conformity = normalized_conformity(scores);
        diag.coordination.assign(v.data(), v.data() + m);
        diag.scores.assign(scores.data(), scores.data() + n);
    }

    // Absent cells earn nothing: scale conformity by the fraction of the
    // ballot each reporter actually filled in.
    Eigen::VectorXd factor(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = matrix.entries[static_cast<size_t>(i)];
        const auto present = std::count_if(row.begin(), row.end(), [](const Entry& e) { return e.present(); });
        factor(i) = conformity(i) * static_cast<double>(present) / static_cast<double>(m);
    }
    diag.conformity.assign(factor.data(), factor.data() + n);

    Amount total;
    for (Amount r : matrix.reputation)
        total += r;
    const bool uniform = (factor.array() == factor(0)).all();
    const double reward_mass = factor.dot(w);
    if (uniform || reward_mass <= 0.0) {
        result.reputation = matrix.reputation;
    } else {
        std::vector<double> targets(static_cast<size_t>(n));
        const double R = w.sum();
        for (Eigen::Index i = 0; i < n; ++i)
            targets[static_cast<size_t>(i)]
                = (1.0 - params.blend) * w(i) + params.blend * R * (factor(i) * w(i) / reward_mass);
        result.reputation = apportion(targets, total);
    }

    // Outcomes: conformity-and-reputation-weighted means over present cells.
    for (Eigen::Index j = 0; j < m; ++j) {
        const EventScale& scale = matrix.scales[static_cast<size_t>(j)];
        if (c.unresolvable[static_cast<size_t>(j)]) {
            Outcome o;
            o.invalid = true;
            o.unresolvable = true;
            result.outcomes.push_back(o);
            continue;
        }
        double rep_present = 0.0;
        double rep_invalid = 0.0;
        double wsum = 0.0;
        double wx = 0.0;
        std::optional<double> common;
        bool all_equal = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Entry& e = matrix.entries[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (!e.present())
                continue;
            const double u = c.filled(i, j);
            rep_present += w(i);
            if (e.kind == Entry::Kind::Invalid)
                rep_invalid += w(i);
            wsum += factor(i) * w(i);
            wx += factor(i) * w(i) * u;
            if (!common)
                common = u;
            else if (*common != u)
                all_equal = false;
        }
        double mean = 0.0;
        if (all_equal) {
            mean = *common;
        } else if (wsum > 0.0) {
            mean = wx / wsum;
        } else {
            double plain = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (matrix.entries[static_cast<size_t>(i)][static_cast<size_t>(j)].present())
                    plain += w(i) * c.filled(i, j);
            mean = plain / rep_present;
        }
        result.outcomes.push_back(resolve(scale, mean, rep_invalid / rep_present, params.margin));
    }
    return result;
}

}  // namespace augur::consensus
