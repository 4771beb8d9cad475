#include "prens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prens/parallel.hpp"
#include "prens/strings.hpp"

namespace prens {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kModelVersion = 1;

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int resolve_threads(const FitConfig& config) {
    return config.threads > 0 ? config.threads : default_threads();
}

void validate_conditions_against(const std::vector<Condition>& conditions, const DataSet& data) {
    for (const auto& cond : conditions) {
        const int j = data.find_column(cond.variable);
        if (j < 0) throw std::invalid_argument("rule mentions unknown variable '" + cond.variable + "'");
        const auto& spec = data.spec(static_cast<std::size_t>(j));
        if (cond.kind == ConditionKind::set_in) {
            if (spec.kind != ColumnKind::categorical) {
                throw std::invalid_argument("variable '" + cond.variable + "' is not categorical");
            }
            for (const auto& level : cond.levels) {
                if (std::find(spec.levels.begin(), spec.levels.end(), level) == spec.levels.end()) {
                    throw std::invalid_argument("unknown level '" + level + "' for variable '" +
                                                cond.variable + "'");
                }
            }
        } else if (spec.kind != ColumnKind::numeric) {
            throw std::invalid_argument("variable '" + cond.variable + "' is not numeric");
        }
    }
}

// term values against conformed data: rules 0/1, linear terms clamped to
// their training cutpoints (original scale)
Eigen::MatrixXd term_value_matrix(const std::vector<Term>& terms, const DataSet& data) {
    const std::size_t n = data.n_rows();
    Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(terms.size()));
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const Term& term = terms[t];
        if (term.kind == TermKind::rule) {
            Rule r;
            r.conditions = term.conditions;
            const auto ind = rule_indicator(data, r);
            for (std::size_t i = 0; i < n; ++i) {
                v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = ind[i];
            }
        } else {
            const auto& x = data.numeric(data.column_index(term.variable));
            for (std::size_t i = 0; i < n; ++i) {
                v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
                    std::clamp(x[i], term.winsor.lower, term.winsor.upper);
            }
        }
    }
    return v;
}

Eigen::MatrixXd coef_matrix(const FittedEnsemble& ensemble) {
    const Eigen::Index q = ensemble.intercept.size();
    Eigen::MatrixXd coef(static_cast<Eigen::Index>(ensemble.terms.size()), q);
    for (std::size_t t = 0; t < ensemble.terms.size(); ++t) {
        coef.row(static_cast<Eigen::Index>(t)) = ensemble.terms[t].coef.transpose();
    }
    return coef;
}

DataSet conform(const FittedEnsemble& ensemble, const DataSet& newdata) {
    return newdata.select_columns(ensemble.used_columns());
}

const char* constraint_name(FitConfig::Constraint c) {
    switch (c) {
        case FitConfig::Constraint::none: return "none";
        case FitConfig::Constraint::nonneg: return "nonneg";
        case FitConfig::Constraint::nonpos: return "nonpos";
    }
    return "?";
}

const char* type_name(FitConfig::Type t) {
    switch (t) {
        case FitConfig::Type::rules: return "rules";
        case FitConfig::Type::linear: return "linear";
        case FitConfig::Type::both: return "both";
    }
    return "?";
}

ordered_json config_to_json(const FitConfig& c) {
    ordered_json js;
    js["family"] = family_name(c.family);
    js["type"] = type_name(c.type);
    js["ntrees"] = c.boost.ntrees;
    js["learnrate"] = c.boost.learnrate;
    js["sampfrac"] = c.boost.sampfrac;
    js["maxdepth"] = c.boost.tree.maxdepth;
    js["minsplit"] = c.boost.tree.minsplit;
    js["minbucket"] = c.boost.tree.minbucket;
    js["alpha"] = c.boost.tree.alpha;
    js["algorithm"] =
        c.boost.tree.algorithm == TreeConfig::Algorithm::unbiased ? "unbiased" : "exhaustive";
    if (c.boost.tree.mtry) {
        js["mtry"] = *c.boost.tree.mtry;
    } else {
        js["mtry"] = nullptr;
    }
    js["nlambda"] = c.nlambda;
    js["lambda_min_ratio"] = c.lambda_min_ratio;
    js["nfolds"] = c.nfolds;
    js["cv_rule"] = c.cv_rule == CvRule::one_se ? "1se" : "min";
    js["binomial_loss"] = c.binomial_loss == BinomialLoss::brier ? "brier" : "deviance";
    js["winsor_lower"] = c.winsor_lower;
    js["winsor_upper"] = c.winsor_upper;
    js["linear_sd_target"] = c.linear_sd_target;
    js["confirmatory"] = c.confirmatory;
    js["constraint"] = constraint_name(c.constraint);
    js["seed"] = c.seed;
    return js;
}

FitConfig config_from_json(const ordered_json& js) {
    FitConfig c;
    c.family = family_from_string(js.at("family").get<std::string>());
    const std::string type = js.at("type").get<std::string>();
    if (type == "rules") {
        c.type = FitConfig::Type::rules;
    } else if (type == "linear") {
        c.type = FitConfig::Type::linear;
    } else {
        c.type = FitConfig::Type::both;
    }
    c.boost.ntrees = js.at("ntrees").get<int>();
    c.boost.learnrate = js.at("learnrate").get<double>();
    c.boost.sampfrac = js.at("sampfrac").get<double>();
    c.boost.tree.maxdepth = js.at("maxdepth").get<int>();
    c.boost.tree.minsplit = js.at("minsplit").get<int>();
    c.boost.tree.minbucket = js.at("minbucket").get<int>();
    c.boost.tree.alpha = js.at("alpha").get<double>();
    c.boost.tree.algorithm = js.at("algorithm").get<std::string>() == "exhaustive"
                                 ? TreeConfig::Algorithm::exhaustive
                                 : TreeConfig::Algorithm::unbiased;
    if (!js.at("mtry").is_null()) c.boost.tree.mtry = js.at("mtry").get<int>();
    c.nlambda = js.at("nlambda").get<int>();
    c.lambda_min_ratio = js.at("lambda_min_ratio").get<double>();
    c.nfolds = js.at("nfolds").get<int>();
    c.cv_rule = js.at("cv_rule").get<std::string>() == "min" ? CvRule::min : CvRule::one_se;
    c.binomial_loss = js.at("binomial_loss").get<std::string>() == "deviance"
                          ? BinomialLoss::deviance
                          : BinomialLoss::brier;
    c.winsor_lower = js.at("winsor_lower").get<double>();
    c.winsor_upper = js.at("winsor_upper").get<double>();
    c.linear_sd_target = js.at("linear_sd_target").get<double>();
    c.confirmatory = js.at("confirmatory").get<std::vector<std::string>>();
    const std::string constraint = js.at("constraint").get<std::string>();
    if (constraint == "nonneg") {
        c.constraint = FitConfig::Constraint::nonneg;
    } else if (constraint == "nonpos") {
        c.constraint = FitConfig::Constraint::nonpos;
    }
    c.seed = js.at("seed").get<std::uint64_t>();
    return c;
}

ordered_json condition_to_json(const Condition& c) {
    ordered_json js;
    js["variable"] = c.variable;
    switch (c.kind) {
        case ConditionKind::numeric_le:
            js["op"] = "le";
            js["threshold"] = c.threshold;
            break;
        case ConditionKind::numeric_gt:
            js["op"] = "gt";
            js["threshold"] = c.threshold;
            break;
        case ConditionKind::set_in:
            js["op"] = "in";
            js["levels"] = c.levels;
            break;
    }
    return js;
}

Condition condition_from_json(const ordered_json& js) {
    Condition c;
    c.variable = js.at("variable").get<std::string>();
    const std::string op = js.at("op").get<std::string>();
    if (op == "le") {
        c.kind = ConditionKind::numeric_le;
        c.threshold = js.at("threshold").get<double>();
    } else if (op == "gt") {
        c.kind = ConditionKind::numeric_gt;
        c.threshold = js.at("threshold").get<double>();
    } else if (op == "in") {
        c.kind = ConditionKind::set_in;
        c.levels = js.at("levels").get<std::vector<std::string>>();
    } else {
        throw std::runtime_error("model file: unknown condition op '" + op + "'");
    }
    return c;
}

} // namespace

std::string Term::description() const {
    if (kind == TermKind::rule) return describe_conditions(conditions);
    return format_double(winsor.lower) + " <= " + variable + " <= " + format_double(winsor.upper);
}

std::vector<ColumnSpec> FittedEnsemble::used_columns() const {
    std::vector<ColumnSpec> out;
    auto add = [&](const std::string& name) {
        for (const auto& spec : out) {
            if (spec.name == name) return;
        }
        for (const auto& spec : schema) {
            if (spec.name == name) {
                out.push_back(spec);
                return;
            }
        }
        throw std::logic_error("ensemble term references unknown column '" + name + "'");
    };
    for (const auto& term : terms) {
        if (term.kind == TermKind::rule) {
            for (const auto& cond : term.conditions) add(cond.variable);
        } else {
            add(term.variable);
        }
    }
    return out;
}

Eigen::MatrixXd response_matrix(const DataSet& data, Family family) {
    const auto& names = data.response_names();
    if (names.empty()) throw std::invalid_argument("no response columns set");
    const std::size_t q = names.size();
    if (family == Family::mgaussian) {
        if (q < 2) throw std::invalid_argument("mgaussian needs at least two response columns");
    } else if (q != 1) {
        throw std::invalid_argument(std::string(family_name(family)) +
                                    " family expects a single response column");
    }
    const std::size_t n = data.n_rows();
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    for (std::size_t c = 0; c < q; ++c) {
        const std::size_t j = data.column_index(names[c]);
        if (data.spec(j).kind == ColumnKind::categorical) {
            if (family != Family::binomial || data.spec(j).levels.size() != 2) {
                throw std::invalid_argument("response column '" + names[c] +
                                            "' must be numeric for this family");
            }
            const auto& codes = data.codes(j);
            for (std::size_t i = 0; i < n; ++i) {
                y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = codes[i];
            }
        } else {
            const auto& v = data.numeric(j);
            for (std::size_t i = 0; i < n; ++i) {
                y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[i];
            }
        }
    }
    if (family == Family::binomial) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            if (y(i, 0) != 0.0 && y(i, 0) != 1.0) {
                throw std::invalid_argument("binomial response must be 0/1 or a two-level factor");
            }
        }
    }
    return y;
}

DesignResult build_design_matrix(const DataSet& data, const RuleSet& rules,
                                 const std::vector<Rule>& confirmatory_rules,
                                 const FitConfig& config) {
    const std::size_t n = data.n_rows();
    DesignResult out;
    std::vector<Eigen::VectorXd> columns;

    auto add_rule_column = [&](const Rule& rule, bool confirmatory) {
        const auto ind = rule_indicator(data, rule);
        Eigen::VectorXd col(static_cast<Eigen::Index>(n));
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n; ++i) {
            col(static_cast<Eigen::Index>(i)) = ind[i];
            ones += static_cast<std::size_t>(ind[i]);
        }
        const double support = static_cast<double>(ones) / static_cast<double>(n);
        if (confirmatory && (ones == 0 || ones == n)) {
            out.warnings.push_back("confirmatory rule '" + rule.describe() +
                                   "' matches " + (ones == 0 ? "no" : "all") + " training rows");
        }
        Term term;
        term.kind = TermKind::rule;
        term.name = confirmatory ? rule.describe() : rule.name;
        term.conditions = rule.conditions;
        term.support = support;
        term.sd = std::sqrt(support * (1.0 - support));
        term.confirmatory = confirmatory;
        out.terms.push_back(std::move(term));
        columns.push_back(std::move(col));
    };

    if (config.type != FitConfig::Type::linear) {
        for (const auto& rule : rules.rules) add_rule_column(rule, false);
    }
    for (const auto& rule : confirmatory_rules) add_rule_column(rule, true);

    const bool want_linear = config.type != FitConfig::Type::rules;
    std::vector<std::string> confirm_set(config.confirmatory);
    for (int j : data.predictor_columns()) {
        const auto& spec = data.spec(static_cast<std::size_t>(j));
        if (spec.kind != ColumnKind::numeric) continue;
        const bool confirmatory =
            std::find(confirm_set.begin(), confirm_set.end(), spec.name) != confirm_set.end();
        if (!want_linear && !confirmatory) continue;
        auto [winsorized, cut] =
            winsorize(data.numeric(static_cast<std::size_t>(j)), config.winsor_lower,
                      config.winsor_upper, spec.name);
        const double sd = sample_sd(winsorized);
        if (!(sd > 0.0)) {
            out.warnings.push_back("linear term '" + spec.name + "' dropped (zero variance)");
            continue;
        }
        const double scale = config.linear_sd_target / sd;
        Eigen::VectorXd col(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            col(static_cast<Eigen::Index>(i)) = winsorized[i] * scale;
        }
        Term term;
        term.kind = TermKind::linear;
        term.name = spec.name;
        term.variable = spec.name;
        term.winsor = cut;
        term.scale = scale;
        term.sd = sd;
        term.confirmatory = confirmatory;
        out.terms.push_back(std::move(term));
        columns.push_back(std::move(col));
    }

    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out.x.col(static_cast<Eigen::Index>(c)) = columns[c];
    }
    return out;
}

FittedEnsemble fit_pre(const DataSet& data, const FitConfig& config) {
    if (data.n_rows() < 2) throw std::invalid_argument("fit_pre: need at least two rows");
    const Eigen::MatrixXd y = response_matrix(data, config.family);
    const std::vector<int> predictors = data.predictor_columns();
    if (predictors.empty()) throw std::invalid_argument("fit_pre: no predictor columns");
    const int threads = resolve_threads(config);
    Rng rng(config.seed);

    // confirmatory entries: a numeric predictor name makes that linear term
    // unpenalized; anything else must parse as a rule over the predictors
    std::vector<Rule> confirm_rules;
    for (const auto& entry : config.confirmatory) {
        const int j = data.find_column(entry);
        if (j >= 0 && !data.is_response(static_cast<std::size_t>(j))) {
            if (data.spec(static_cast<std::size_t>(j)).kind != ColumnKind::numeric) {
                throw std::invalid_argument("confirmatory variable '" + entry +
                                            "' is categorical; use a rule like \"" + entry +
                                            " in {level}\"");
            }
            continue; // handled as an unpenalized linear term
        }
        Rule rule;
        rule.conditions = parse_conditions(entry);
        validate_conditions_against(rule.conditions, data);
        for (const auto& cond : rule.conditions) {
            const std::size_t cj = data.column_index(cond.variable);
            if (data.is_response(cj)) {
                throw std::invalid_argument("confirmatory rule mentions response '" + cond.variable + "'");
            }
        }
        confirm_rules.push_back(std::move(rule));
    }

    RuleSet rules;
    if (config.type != FitConfig::Type::linear) {
        BoostConfig boost = config.boost;
        boost.family = config.family;
        std::vector<std::vector<char>> reserved;
        reserved.reserve(confirm_rules.size());
        for (const auto& rule : confirm_rules) reserved.push_back(rule_indicator(data, rule));
        rules = generate_rules(data, predictors, y, boost, rng.derive(1), threads, reserved);
    }

    DesignResult design = build_design_matrix(data, rules, confirm_rules, config);

    PenaltySpec spec;
    spec.nlambda = config.nlambda;
    spec.lambda_min_ratio = config.lambda_min_ratio;
    const Eigen::Index p = design.x.cols();
    spec.penalty_factor.assign(static_cast<std::size_t>(p), 1.0);
    for (std::size_t t = 0; t < design.terms.size(); ++t) {
        if (design.terms[t].confirmatory) spec.penalty_factor[t] = 0.0;
    }
    if (config.constraint == FitConfig::Constraint::nonneg) {
        spec.lower.assign(static_cast<std::size_t>(p), 0.0);
    } else if (config.constraint == FitConfig::Constraint::nonpos) {
        spec.upper.assign(static_cast<std::size_t>(p), 0.0);
    }

    const CvFit cv = cv_select(design.x, y, config.family, spec, config.nfolds, config.cv_rule,
                               rng.derive(2), threads, config.binomial_loss);

    FittedEnsemble out;
    out.family = config.family;
    out.response_names = data.response_names();
    out.intercept = cv.intercept;
    out.cv = cv.curve;
    out.config = config;
    out.config.boost.family = config.family;
    for (int j : predictors) out.schema.push_back(data.spec(static_cast<std::size_t>(j)));

    for (std::size_t t = 0; t < design.terms.size(); ++t) {
        Term term = design.terms[t];
        Eigen::VectorXd coef = cv.coef.row(static_cast<Eigen::Index>(t)).transpose();
        if (!term.confirmatory && coef.cwiseAbs().maxCoeff() == 0.0) continue;
        if (term.kind == TermKind::linear) coef *= term.scale; // back to the original variable scale
        term.coef = std::move(coef);
        out.terms.push_back(std::move(term));
    }

    out.training.n = data.n_rows();
    out.training.response_sd.resize(y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        std::vector<double> col(static_cast<std::size_t>(y.rows()));
        for (Eigen::Index i = 0; i < y.rows(); ++i) col[static_cast<std::size_t>(i)] = y(i, c);
        out.training.response_sd(c) = sample_sd(col);
    }
    return out;
}

Eigen::MatrixXd predict(const FittedEnsemble& ensemble, const DataSet& newdata, PredictScale scale) {
    const DataSet conformed = conform(ensemble, newdata);
    const Eigen::MatrixXd v = term_value_matrix(ensemble.terms, conformed);
    Eigen::MatrixXd link = v * coef_matrix(ensemble);
    link.rowwise() += ensemble.intercept.transpose();
    if (scale == PredictScale::link) return link;
    for (Eigen::Index i = 0; i < link.rows(); ++i) {
        for (Eigen::Index c = 0; c < link.cols(); ++c) {
            link(i, c) = link_inverse(ensemble.family, link(i, c));
        }
    }
    return link;
}

Explanation explain(const FittedEnsemble& ensemble, const DataSet& newdata) {
    const DataSet conformed = conform(ensemble, newdata);
    const std::size_t n = conformed.n_rows();
    const Eigen::Index q = ensemble.intercept.size();
    const Eigen::MatrixXd v = term_value_matrix(ensemble.terms, conformed);

    Explanation out;
    for (std::size_t j = 0; j < conformed.n_cols(); ++j) {
        out.variables.push_back(conformed.spec(j).name);
    }
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i].reserve(conformed.n_cols());
        for (std::size_t j = 0; j < conformed.n_cols(); ++j) {
            out.values[i].push_back(conformed.display_value(i, j));
        }
    }

    std::vector<Eigen::Index> rule_cols;
    for (std::size_t t = 0; t < ensemble.terms.size(); ++t) {
        if (ensemble.terms[t].kind == TermKind::rule) {
            out.rule_names.push_back(ensemble.terms[t].name);
            rule_cols.push_back(static_cast<Eigen::Index>(t));
        }
    }
    out.rule_matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rule_cols.size()));
    for (std::size_t c = 0; c < rule_cols.size(); ++c) {
        out.rule_matrix.col(static_cast<Eigen::Index>(c)) = v.col(rule_cols[c]);
    }

    out.term_names.push_back("(Intercept)");
    for (const auto& term : ensemble.terms) out.term_names.push_back(term.name);

    out.link.resize(static_cast<Eigen::Index>(n), q);
    out.contributions.assign(static_cast<std::size_t>(q),
                             Eigen::MatrixXd(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(ensemble.terms.size()) + 1));
    for (Eigen::Index c = 0; c < q; ++c) {
        auto& contrib = out.contributions[static_cast<std::size_t>(c)];
        contrib.col(0).setConstant(ensemble.intercept(c));
        for (std::size_t t = 0; t < ensemble.terms.size(); ++t) {
            contrib.col(static_cast<Eigen::Index>(t) + 1) =
                v.col(static_cast<Eigen::Index>(t)) * ensemble.terms[t].coef(c);
        }
        out.link.col(c) = contrib.rowwise().sum();
    }
    out.response = out.link;
    for (Eigen::Index i = 0; i < out.response.rows(); ++i) {
        for (Eigen::Index c = 0; c < q; ++c) {
            out.response(i, c) = link_inverse(ensemble.family, out.response(i, c));
        }
    }
    return out;
}

std::string serialize(const FittedEnsemble& ensemble) {
    ordered_json js;
    js["format"] = "prens.model";
    js["version"] = kModelVersion;
    js["family"] = family_name(ensemble.family);
    js["responses"] = ensemble.response_names;
    js["intercept"] = std::vector<double>(ensemble.intercept.data(),
                                          ensemble.intercept.data() + ensemble.intercept.size());

    ordered_json schema = ordered_json::array();
    for (const auto& spec : ensemble.schema) {
        ordered_json col;
        col["name"] = spec.name;
        col["kind"] = spec.kind == ColumnKind::numeric ? "numeric" : "categorical";
        if (spec.kind == ColumnKind::categorical) col["levels"] = spec.levels;
        schema.push_back(std::move(col));
    }
    js["schema"] = std::move(schema);

    ordered_json terms = ordered_json::array();
    for (const auto& term : ensemble.terms) {
        ordered_json t;
        t["kind"] = term.kind == TermKind::rule ? "rule" : "linear";
        t["name"] = term.name;
        if (term.kind == TermKind::rule) {
            ordered_json conds = ordered_json::array();
            for (const auto& c : term.conditions) conds.push_back(condition_to_json(c));
            t["conditions"] = std::move(conds);
            t["support"] = term.support;
        } else {
            t["variable"] = term.variable;
            t["winsor"] = {{"lower", term.winsor.lower},
                           {"upper", term.winsor.upper},
                           {"lower_pct", term.winsor.lower_pct},
                           {"upper_pct", term.winsor.upper_pct}};
            t["scale"] = term.scale;
        }
        t["sd"] = term.sd;
        t["confirmatory"] = term.confirmatory;
        t["coef"] = std::vector<double>(term.coef.data(), term.coef.data() + term.coef.size());
        terms.push_back(std::move(t));
    }
    js["terms"] = std::move(terms);

    js["training"] = {{"n", ensemble.training.n},
                      {"response_sd",
                       std::vector<double>(ensemble.training.response_sd.data(),
                                           ensemble.training.response_sd.data() +
                                               ensemble.training.response_sd.size())}};

    js["cv"] = {{"lambda", ensemble.cv.lambda},     {"mean_error", ensemble.cv.mean_error},
                {"se", ensemble.cv.se},             {"index_min", ensemble.cv.index_min},
                {"index_1se", ensemble.cv.index_1se}, {"lambda_min", ensemble.cv.lambda_min},
                {"lambda_1se", ensemble.cv.lambda_1se}};

    js["config"] = config_to_json(ensemble.config);
    return js.dump(2) + "\n";
}

FittedEnsemble deserialize(const std::string& text) {
    ordered_json js;
    try {
        js = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!js.is_object() || js.value("format", "") != "prens.model") {
        throw std::runtime_error("not a prens model file");
    }
    if (js.value("version", -1) != kModelVersion) {
        throw std::runtime_error("unsupported model version " + js.value("version", ordered_json()).dump());
    }
    try {
        FittedEnsemble out;
        out.family = family_from_string(js.at("family").get<std::string>());
        out.response_names = js.at("responses").get<std::vector<std::string>>();
        const auto icept = js.at("intercept").get<std::vector<double>>();
        out.intercept = Eigen::Map<const Eigen::VectorXd>(icept.data(),
                                                          static_cast<Eigen::Index>(icept.size()));
        for (const auto& col : js.at("schema")) {
            ColumnSpec spec;
            spec.name = col.at("name").get<std::string>();
            if (col.at("kind").get<std::string>() == "numeric") {
                spec.kind = ColumnKind::numeric;
            } else {
                spec.kind = ColumnKind::categorical;
                spec.levels = col.at("levels").get<std::vector<std::string>>();
            }
            out.schema.push_back(std::move(spec));
        }
        for (const auto& t : js.at("terms")) {
            Term term;
            term.kind = t.at("kind").get<std::string>() == "rule" ? TermKind::rule : TermKind::linear;
            term.name = t.at("name").get<std::string>();
            if (term.kind == TermKind::rule) {
                for (const auto& c : t.at("conditions")) term.conditions.push_back(condition_from_json(c));
                term.support = t.at("support").get<double>();
            } else {
                term.variable = t.at("variable").get<std::string>();
                const auto& w = t.at("winsor");
                term.winsor.variable = term.variable;
                term.winsor.lower = w.at("lower").get<double>();
                term.winsor.upper = w.at("upper").get<double>();
                term.winsor.lower_pct = w.at("lower_pct").get<double>();
                term.winsor.upper_pct = w.at("upper_pct").get<double>();
                term.scale = t.at("scale").get<double>();
            }
            term.sd = t.at("sd").get<double>();
            term.confirmatory = t.at("confirmatory").get<bool>();
            const auto coef = t.at("coef").get<std::vector<double>>();
            term.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                          static_cast<Eigen::Index>(coef.size()));
            if (term.coef.size() != out.intercept.size()) {
                throw std::runtime_error("term '" + term.name + "' coefficient count mismatch");
            }
            out.terms.push_back(std::move(term));
        }
        const auto& training = js.at("training");
        out.training.n = training.at("n").get<std::size_t>();
        const auto rsd = training.at("response_sd").get<std::vector<double>>();
        out.training.response_sd =
            Eigen::Map<const Eigen::VectorXd>(rsd.data(), static_cast<Eigen::Index>(rsd.size()));
        const auto& cv = js.at("cv");
        out.cv.lambda = cv.at("lambda").get<std::vector<double>>();
        out.cv.mean_error = cv.at("mean_error").get<std::vector<double>>();
        out.cv.se = cv.at("se").get<std::vector<double>>();
        out.cv.index_min = cv.at("index_min").get<int>();
        out.cv.index_1se = cv.at("index_1se").get<int>();
        out.cv.lambda_min = cv.at("lambda_min").get<double>();
        out.cv.lambda_1se = cv.at("lambda_1se").get<double>();
        out.config = config_from_json(js.at("config"));
        return out;
    } catch (const ordered_json::exception& e) {
        throw std::runtime_error(std::string("corrupted model file: ") + e.what());
    }
}

void save_model(const FittedEnsemble& ensemble, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << serialize(ensemble);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

FittedEnsemble load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

} // namespace prens
