#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prens/dataset.hpp"
#include "prens/family.hpp"
#include "prens/penalized_glm.hpp"
#include "prens/rulegen.hpp"

namespace prens {

enum class TermKind { rule, linear };

/// One selected ensemble member. Linear terms keep their winsorizing
/// cutpoints and the scale factor used during fitting; their coefficients are
/// stored on the original (winsorized, unscaled) variable scale.
struct Term {
    TermKind kind = TermKind::rule;
    std::string name;

    std::vector<Condition> conditions; // rule terms
    double support = 0.0;

    std::string variable; // linear terms
    WinsorCutpoints winsor;
    double scale = 1.0;

    Eigen::VectorXd coef; // one entry per response
    double sd = 0.0;      // training sd: rules sqrt(p(1-p)), linear terms sd of winsorized values
    bool confirmatory = false;

    std::string description() const;
};

struct FitConfig {
    Family family = Family::gaussian;

    enum class Type { rules, linear, both };
    Type type = Type::both;

    BoostConfig boost; // rule generation settings; family is filled in at fit time

    int nlambda = 100;
    double lambda_min_ratio = 0.0; // 0 = automatic
    int nfolds = 10;
    CvRule cv_rule = CvRule::one_se;
    BinomialLoss binomial_loss = BinomialLoss::brier;

    double winsor_lower = 0.05;
    double winsor_upper = 0.95;
    double linear_sd_target = 0.4;

    // rule expressions ("trt in {TES}") or numeric variable names; fitted unpenalized
    std::vector<std::string> confirmatory;

    enum class Constraint { none, nonneg, nonpos };
    Constraint constraint = Constraint::none;

    std::uint64_t seed = 42;
    int threads = 0; // 0 = default_threads()
};

struct TrainingSummary {
    std::size_t n = 0;
    Eigen::VectorXd response_sd; // sample sd per response
};

struct FittedEnsemble {
    Family family = Family::gaussian;
    std::vector<std::string> response_names;
    Eigen::VectorXd intercept; // per response
    std::vector<Term> terms;   // selected terms only
    std::vector<ColumnSpec> schema; // training predictor schema
    TrainingSummary training;
    CvCurve cv;
    FitConfig config; // echo of the fit settings

    std::vector<ColumnSpec> used_columns() const; // schema entries referenced by terms
};

struct DesignResult {
    Eigen::MatrixXd x;
    std::vector<Term> terms; // per-column metadata, coefficients not yet filled
    std::vector<std::string> warnings;
};

/// Initial-ensemble design: one 0/1 column per rule, then confirmatory rules,
/// then (unless type = rules) winsorized linear terms scaled to the target sd.
/// Categorical predictors enter through rules only. Zero-variance linear
/// columns are dropped with a warning.
DesignResult build_design_matrix(const DataSet& data, const RuleSet& rules,
                                 const std::vector<Rule>& confirmatory_rules,
                                 const FitConfig& config);

/// Full pipeline: rule generation, design assembly, cross-validated lasso,
/// selected-term extraction. Deterministic given config.seed. An
/// intercept-only result is valid.
FittedEnsemble fit_pre(const DataSet& data, const FitConfig& config);

enum class PredictScale { link, response };

Eigen::MatrixXd predict(const FittedEnsemble& ensemble, const DataSet& newdata,
                        PredictScale scale = PredictScale::response);

/// Per-observation decomposition: raw values of the variables the ensemble
/// uses, 0/1 rule codings, per-term contributions with their link-scale sum
/// and the response-scale prediction.
struct Explanation {
    std::vector<std::string> variables;
    std::vector<std::vector<std::string>> values; // row-major, values[i][v]
    std::vector<std::string> rule_names;
    Eigen::MatrixXd rule_matrix; // n x rules
    std::vector<std::string> term_names; // "(Intercept)" then each term
    std::vector<Eigen::MatrixXd> contributions; // per response, n x (1 + terms)
    Eigen::MatrixXd link;     // n x q
    Eigen::MatrixXd response; // n x q
};

Explanation explain(const FittedEnsemble& ensemble, const DataSet& newdata);

// versioned JSON document; round-trips losslessly
std::string serialize(const FittedEnsemble& ensemble);
FittedEnsemble deserialize(const std::string& text);
void save_model(const FittedEnsemble& ensemble, const std::string& path);
FittedEnsemble load_model(const std::string& path);

// response matrix for the configured family; binomial accepts a numeric 0/1
// column or a two-level categorical column (second level is the target class)
Eigen::MatrixXd response_matrix(const DataSet& data, Family family);

} // namespace prens
