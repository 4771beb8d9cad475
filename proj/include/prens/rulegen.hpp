#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prens/dataset.hpp"
#include "prens/family.hpp"
#include "prens/rng.hpp"
#include "prens/tree.hpp"

namespace prens {

struct Rule {
    std::string name; // "rule<k>" once the initial ensemble is assembled
    std::vector<Condition> conditions;
    double support = 0.0; // training fraction matched
    int tree_index = -1;
    int node_id = -1;

    std::string describe() const { return describe_conditions(conditions); }
};

struct BoostConfig {
    Family family = Family::gaussian;
    int ntrees = 500;
    double learnrate = 0.01;
    double sampfrac = 0.5;
    TreeConfig tree;
};

struct RuleSet {
    std::vector<Rule> rules;

    std::string dump() const; // one description per line
};

// gradient of the squared-error/log-likelihood fit: y - mean(eta), per column
Eigen::MatrixXd pseudo_response(Family family, const Eigen::MatrixXd& y, const Eigen::MatrixXd& eta);

// boosting cold start: mean / log-odds / log-mean per response
Eigen::RowVectorXd initial_eta(Family family, const Eigen::MatrixXd& y);

// one rule per non-root node: the conjunction of conditions on the root path
std::vector<Rule> extract_rules(const Tree& tree, int tree_index);

// 0/1 membership of every row
std::vector<char> rule_indicator(const DataSet& data, const Rule& rule);

/// Drop rules whose training indicator is constant, and keep only the
/// earliest rule of every identical-or-complement group. `reserved` indicators
/// (e.g. confirmatory rules) claim their group without appearing in the output.
RuleSet dedup_rules(std::vector<Rule> rules, const DataSet& data,
                    const std::vector<std::vector<char>>& reserved = {});

/// Boosted rule generation: ntrees subsampled trees grown on the gradient
/// pseudo-response, eta updated on all rows with step learnrate, then dedup.
/// Deterministic given rng's seed; with learnrate 0 trees are independent and
/// grown concurrently.
RuleSet generate_rules(const DataSet& data, const std::vector<int>& predictors,
                       const Eigen::MatrixXd& y, const BoostConfig& config, Rng rng,
                       int threads = 1, const std::vector<std::vector<char>>& reserved = {});

} // namespace prens
