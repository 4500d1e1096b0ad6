#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "augur/amount.hpp"

namespace augur::consensus {

class ConsensusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How a column's raw report values map onto the common [0, 1] scale and
/// back to an outcome.
struct EventScale {
    enum class Kind { Binary, Categorical, Scalar };
    Kind kind = Kind::Binary;
    size_t categories = 2;  // categorical only
    double lower = 0.0;     // scalar only
    double upper = 1.0;

    double to_unit(double raw) const;
    double from_unit(double unit) const;
};

/// One ballot cell after reveal.
struct Entry {
    enum class Kind { Value, NoReport, Invalid };
    Kind kind = Kind::NoReport;
    double value = 0.0;  // raw outcome value, meaningful for Kind::Value

    static Entry of(double v) { return {Kind::Value, v}; }
    static Entry no_report() { return {Kind::NoReport, 0.0}; }
    static Entry invalid() { return {Kind::Invalid, 0.0}; }
    bool present() const { return kind != Kind::NoReport; }
    bool operator==(const Entry&) const = default;
};

/// Reporters in rows (weighted by reputation), events in columns.
struct ReportMatrix {
    std::vector<std::string> reporters;
    std::vector<Amount> reputation;
    std::vector<EventScale> scales;
    std::vector<std::vector<Entry>> entries;  // [row][column]

    size_t rows() const { return reporters.size(); }
    size_t columns() const { return scales.size(); }
    /// Throws ConsensusError on shape mismatch or non-positive weights.
    void validate() const;
    Eigen::VectorXd weights() const;
};

struct CenteredMatrix {
    Eigen::MatrixXd values;           // dense unit-scale matrix minus column means
    Eigen::VectorXd column_mean;      // reputation-weighted mean <c>
    Eigen::MatrixXd filled;           // unit-scale matrix after imputation
    std::vector<bool> unresolvable;   // columns with no present entry
};

/// Maps entries to the unit scale (INVALID -> 0.5), imputes NO-REPORT cells
/// with the reputation-weighted mean of the column's present entries, then
/// subtracts <c>_j = (1/R) sum_i r_i c_ij. Requires >= 2 rows, >= 1 column.
CenteredMatrix center(const ReportMatrix& matrix);

/// Centers an already-dense unit-scale matrix with the given weights.
Eigen::MatrixXd center_dense(const Eigen::MatrixXd& values, const Eigen::VectorXd& weights);

/// Unbiased weighted covariance R/(R^2 - sum r^2) * sum_i r_i c_i^T c_i over
/// the rows of an already centered matrix. Throws when the denominator
/// vanishes (a single effective reporter).
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& centered, const Eigen::VectorXd& weights);

struct Decomposition {
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues[i]
};

/// Symmetric eigendecomposition. Rejects non-symmetric input.
Decomposition decompose(const Eigen::MatrixXd& sigma);

struct ComponentSelection {
    size_t count = 0;                 // n
    std::vector<double> cumulative;   // alpha_k, k = 1..N
    bool degenerate = false;          // all eigenvalues zero
};

/// alpha_k = sum_{i<=k} lambda_i / sum_j lambda_j; n is the smallest k with
/// alpha_k >= alpha. All-zero spectra are flagged degenerate.
ComponentSelection select_components(const Eigen::VectorXd& eigenvalues, double alpha);

/// Sum of the selected eigenvectors. A component i is included while the
/// variance explained before it is still short of alpha, so component n
/// (the one that crosses the threshold) is part of the sum.
Eigen::VectorXd coordination_vector(const Eigen::MatrixXd& eigenvectors, const ComponentSelection& selection);

struct Params {
    double alpha = 0.9;    // variance threshold
    double blend = 0.2;    // weight of the conformity-based reputation
    double margin = 0.15;  // dead zone half-width around 0.5
};

struct Outcome {
    bool invalid = false;
    bool unresolvable = false;
    double unit_mean = 0.5;  // conformity-weighted mean on the unit scale
    double value = 0.0;      // resolved raw outcome (undefined when invalid)
};

struct Diagnostics {
    std::vector<double> eigenvalues;
    std::vector<double> cumulative;
    size_t components = 0;
    std::vector<double> coordination;
    std::vector<double> scores;
    std::vector<double> conformity;
    bool degenerate = false;
};

struct ConsensusResult {
    std::vector<Outcome> outcomes;      // per column
    std::vector<Amount> reputation;     // per row, sums to the input total
    Eigen::MatrixXd centered;           // the centered report matrix
    Diagnostics diagnostics;
};

/// Resolves a unit-scale mean to an outcome for the given scale: binary and
/// categorical values inside the dead zone become INVALID.
Outcome resolve(const EventScale& scale, double unit_mean, double invalid_share, double margin);

/// Full pipeline: center, covariance, decomposition, component selection,
/// conformity scoring, outcome resolution and zero-sum redistribution.
ConsensusResult run(const ReportMatrix& matrix, const Params& params = {});

/// Splits `total` into integer base units proportional to `targets`
/// (largest remainder, ties to the lower index). The result sums to total.
std::vector<Amount> apportion(const std::vector<double>& targets, Amount total);

}  // namespace augur::consensus
