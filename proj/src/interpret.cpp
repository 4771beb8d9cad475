#include "prens/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace prens {

namespace {

// importance vectors per term in fit order, optionally standardized / sliced
std::vector<Eigen::VectorXd> raw_importances(const FittedEnsemble& ensemble,
                                             std::optional<int> response, bool standardized) {
    const Eigen::Index q = ensemble.intercept.size();
    if (response && (*response < 0 || *response >= q)) {
        throw std::invalid_argument("response index out of range");
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(ensemble.terms.size());
    for (const auto& term : ensemble.terms) {
        Eigen::VectorXd imp = term.coef.cwiseAbs() * term.sd;
        if (standardized) {
            for (Eigen::Index c = 0; c < q; ++c) {
                const double rsd = ensemble.training.response_sd(c);
                imp(c) = rsd > 0.0 ? imp(c) / rsd : 0.0;
            }
        }
        if (response) {
            Eigen::VectorXd one(1);
            one(0) = imp(*response);
            imp = one;
        }
        out.push_back(std::move(imp));
    }
    return out;
}

void sort_entries(std::vector<ImportanceEntry>& entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
        return a.importance(0) > b.importance(0);
    });
}

} // namespace

std::vector<ImportanceEntry> term_importance(const FittedEnsemble& ensemble,
                                             std::optional<int> response, bool standardized) {
    const auto imps = raw_importances(ensemble, response, standardized);
    std::vector<ImportanceEntry> out;
    out.reserve(imps.size());
    for (std::size_t t = 0; t < imps.size(); ++t) {
        out.push_back({ensemble.terms[t].name, imps[t]});
    }
    sort_entries(out);
    return out;
}

std::vector<ImportanceEntry> variable_importance(const FittedEnsemble& ensemble,
                                                 std::optional<int> response, bool standardized) {
    const auto imps = raw_importances(ensemble, response, standardized);
    const Eigen::Index width = imps.empty() ? (response ? 1 : ensemble.intercept.size())
                                            : imps[0].size();
    std::vector<std::string> order;     // first-mention order
    std::vector<Eigen::VectorXd> total;
    auto accumulate = [&](const std::string& variable, const Eigen::VectorXd& amount) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == variable) {
                total[i] += amount;
                return;
            }
        }
        order.push_back(variable);
        total.push_back(amount);
    };

    for (std::size_t t = 0; t < ensemble.terms.size(); ++t) {
        const Term& term = ensemble.terms[t];
        if (term.kind == TermKind::linear) {
            accumulate(term.variable, imps[t]);
        } else {
            const double share = 1.0 / static_cast<double>(term.conditions.size());
            for (const auto& cond : term.conditions) {
                accumulate(cond.variable, imps[t] * share);
            }
        }
    }

    std::vector<ImportanceEntry> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (total[i].cwiseAbs().maxCoeff() == 0.0) continue; // zero-importance variables are omitted
        out.push_back({order[i], total[i]});
    }
    if (out.empty() && width > 0) return out;
    sort_entries(out);
    return out;
}

PdResult partial_dependence(const FittedEnsemble& ensemble, const DataSet& data,
                            const std::vector<std::string>& variables, int max_grid,
                            PredictScale scale, const std::vector<double>& grid) {
    if (variables.empty() || variables.size() > 2) {
        throw std::invalid_argument("partial_dependence: need one or two variables");
    }
    PdResult out;
    for (const auto& name : variables) {
        const int j = data.find_column(name);
        if (j < 0) throw std::invalid_argument("unknown variable '" + name + "'");
        PdAxis axis;
        axis.variable = name;
        const auto& spec = data.spec(static_cast<std::size_t>(j));
        if (spec.kind == ColumnKind::categorical) {
            axis.categorical = true;
            axis.labels = spec.levels;
            for (std::size_t k = 0; k < spec.levels.size(); ++k) {
                axis.values.push_back(static_cast<double>(k));
            }
        } else if (!grid.empty() && name == variables.front()) {
            axis.values = grid;
        } else {
            std::set<double> distinct(data.numeric(static_cast<std::size_t>(j)).begin(),
                                      data.numeric(static_cast<std::size_t>(j)).end());
            if (static_cast<int>(distinct.size()) <= max_grid) {
                axis.values.assign(distinct.begin(), distinct.end());
            } else {
                // quantile-spaced grid over the observed values
                std::set<double> pts;
                for (int k = 0; k < max_grid; ++k) {
                    pts.insert(quantile_type7(data.numeric(static_cast<std::size_t>(j)),
                                              static_cast<double>(k) / static_cast<double>(max_grid - 1)));
                }
                axis.values.assign(pts.begin(), pts.end());
            }
        }
        out.axes.push_back(std::move(axis));
    }

    // the ensemble may not reference the PD variable at all, so conform to the
    // union of the used columns and the target variables
    std::vector<ColumnSpec> wanted = ensemble.used_columns();
    for (const auto& name : variables) {
        if (std::none_of(wanted.begin(), wanted.end(),
                         [&](const ColumnSpec& s) { return s.name == name; })) {
            for (const auto& spec : ensemble.schema) {
                if (spec.name == name) {
                    wanted.push_back(spec);
                    break;
                }
            }
            if (std::none_of(wanted.begin(), wanted.end(),
                             [&](const ColumnSpec& s) { return s.name == name; })) {
                // variable unknown to the model: take it from the data as-is
                wanted.push_back(data.spec(data.column_index(name)));
            }
        }
    }
    DataSet base = data.select_columns(wanted);

    const std::size_t n0 = out.axes[0].size();
    const std::size_t n1 = out.axes.size() == 2 ? out.axes[1].size() : 1;
    const Eigen::Index q = ensemble.intercept.size();
    out.pd.resize(static_cast<Eigen::Index>(n0 * n1), q);

    // rebuild the target column(s) per grid point and average the predictions
    auto with_value = [&](const DataSet& src, const std::string& variable, const PdAxis& axis,
                          std::size_t grid_index) {
        DataSet modified;
        for (std::size_t j = 0; j < src.n_cols(); ++j) {
            const auto& spec = src.spec(j);
            if (spec.name != variable) {
                if (spec.kind == ColumnKind::numeric) {
                    modified.add_numeric(spec.name, src.numeric(j));
                } else {
                    modified.add_categorical(spec.name, src.codes(j), spec.levels);
                }
                continue;
            }
            if (axis.categorical) {
                std::vector<int> codes(src.n_rows(), static_cast<int>(axis.values[grid_index]));
                modified.add_categorical(spec.name, std::move(codes), spec.levels);
            } else {
                std::vector<double> v(src.n_rows(), axis.values[grid_index]);
                modified.add_numeric(spec.name, std::move(v));
            }
        }
        return modified;
    };

    for (std::size_t i0 = 0; i0 < n0; ++i0) {
        DataSet d0 = with_value(base, out.axes[0].variable, out.axes[0], i0);
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
            const DataSet& point =
                out.axes.size() == 2 ? (d0 = with_value(d0, out.axes[1].variable, out.axes[1], i1), d0)
                                     : d0;
            const Eigen::MatrixXd pred = predict(ensemble, point, scale);
            out.pd.row(static_cast<Eigen::Index>(i0 * n1 + i1)) = pred.colwise().mean();
        }
    }
    return out;
}

} // namespace prens
