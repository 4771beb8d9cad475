#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prens/dataset.hpp"
#include "prens/ensemble.hpp"

namespace prens {

struct ImportanceEntry {
    std::string name;          // term name or variable name
    Eigen::VectorXd importance; // per response (single entry when response is fixed)
};

/// |coefficient| * training sd per term; standardized divides by the response
/// sd. Intercept excluded. Entries are sorted by decreasing importance of the
/// first reported response, ties kept in fit order.
std::vector<ImportanceEntry> term_importance(const FittedEnsemble& ensemble,
                                             std::optional<int> response = std::nullopt,
                                             bool standardized = false);

/// Per-variable totals: the variable's linear-term importance plus, for every
/// rule mentioning it, the rule's importance divided by its condition count
/// (once per condition). Variables with zero importance are omitted.
std::vector<ImportanceEntry> variable_importance(const FittedEnsemble& ensemble,
                                                 std::optional<int> response = std::nullopt,
                                                 bool standardized = false);

struct PdAxis {
    std::string variable;
    bool categorical = false;
    std::vector<double> values;       // numeric grid (categorical: level codes)
    std::vector<std::string> labels;  // categorical level labels
    std::size_t size() const { return categorical ? labels.size() : values.size(); }
};

struct PdResult {
    std::vector<PdAxis> axes;  // 1 or 2
    Eigen::MatrixXd pd;        // (grid points) x responses; bivariate rows ordered
                               // axis0-major: row = i0 * axes[1].size() + i1
};

/// Expected prediction with the target variable(s) forced to each grid value,
/// averaged over the training rows. Default grid: distinct observed values,
/// numeric capped at `max_grid` quantile-spaced points; categorical uses all
/// levels. `grid` overrides the first (numeric) axis when given.
PdResult partial_dependence(const FittedEnsemble& ensemble, const DataSet& data,
                            const std::vector<std::string>& variables,
                            int max_grid = 20,
                            PredictScale scale = PredictScale::response,
                            const std::vector<double>& grid = {});

} // namespace prens
