#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prens/dataset.hpp"
#include "prens/rng.hpp"

namespace prens {

enum class ConditionKind { numeric_le, numeric_gt, set_in };

/// One split-path condition: `x <= t`, `x > t` or `x in {a, b}`.
struct Condition {
    std::string variable;
    ConditionKind kind = ConditionKind::numeric_le;
    double threshold = 0.0;
    std::vector<std::string> levels; // set_in only, in training level order

    std::string describe() const;
    bool matches(const DataSet& data, std::size_t row) const;
};

// "IDS > 10  &  LCImax > 0.263" (Table-style rule description)
std::string describe_conditions(const std::vector<Condition>& conditions);

// inverse of describe_conditions; accepts <=, > and `in {a, b}` conjunctions
std::vector<Condition> parse_conditions(const std::string& text);

// complement against the variable's full level list / the paired comparison
Condition negate_condition(const Condition& c, const DataSet& data);

struct TreeConfig {
    int maxdepth = 3;
    int minsplit = 20;
    int minbucket = 7;
    double alpha = 0.05;
    enum class Algorithm { unbiased, exhaustive };
    Algorithm algorithm = Algorithm::unbiased;
    std::optional<int> mtry; // candidates sampled per split when set
};

struct TreeNode {
    int depth = 0;
    double value = 0.0; // mean response of the node's rows
    std::size_t n = 0;
    // internal nodes carry the left-child condition and its complement
    std::optional<Condition> cond;
    std::optional<Condition> cond_right;
    int left = -1;
    int right = -1;
    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // preorder, root first

    double predict(const DataSet& data, std::size_t row) const;
    std::vector<double> predict_all(const DataSet& data) const;
    std::string print() const;
};

/// Variable at which to split `rows`, or nullopt to stop.
/// unbiased: per-candidate association test (numeric: n*r^2 ~ chisq(1);
/// categorical: n*eta^2 ~ chisq(k-1)), Bonferroni-adjusted, minimum adjusted
/// p <= alpha wins. exhaustive: variable with the largest squared-error
/// reduction over its admissible splits.
std::optional<int> select_split_variable(const DataSet& data, const std::vector<std::size_t>& rows,
                                         const std::vector<double>& response,
                                         const std::vector<int>& candidates, const TreeConfig& config,
                                         Rng& rng);

/// Best left-child condition for one variable; numeric thresholds at midpoints
/// between adjacent distinct values (ties toward the smaller threshold),
/// categorical partitions along the child-mean ordering of levels. nullopt if
/// no split leaves both children with >= minbucket rows.
std::optional<Condition> best_split(const DataSet& data, const std::vector<std::size_t>& rows,
                                    int column, const std::vector<double>& response, int minbucket);

Tree grow_tree(const DataSet& data, const std::vector<std::size_t>& rows,
               const std::vector<double>& response, const TreeConfig& config, Rng& rng,
               const std::vector<int>& candidates);

} // namespace prens
