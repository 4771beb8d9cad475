#include "prens/rulegen.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "prens/parallel.hpp"

namespace prens {

namespace {

double mean_from_eta(Family family, double eta) {
    switch (family) {
        case Family::binomial: return logistic(eta);
        case Family::poisson: return std::exp(eta);
        default: return eta;
    }
}

// pack an indicator into bytes, flipped so the first bit is 0; identical keys
// <=> identical or exactly complementary training vectors
std::string indicator_key(const std::vector<char>& ind) {
    const bool flip = !ind.empty() && ind[0] != 0;
    std::string key((ind.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < ind.size(); ++i) {
        const bool bit = flip ? ind[i] == 0 : ind[i] != 0;
        if (bit) key[i / 8] = static_cast<char>(key[i / 8] | (1 << (i % 8)));
    }
    return key;
}

} // namespace

Eigen::MatrixXd pseudo_response(Family family, const Eigen::MatrixXd& y, const Eigen::MatrixXd& eta) {
    if (y.rows() != eta.rows() || y.cols() != eta.cols()) {
        throw std::invalid_argument("pseudo_response: y and eta are not conformable");
    }
    if (!eta.allFinite()) throw std::invalid_argument("pseudo_response: eta contains non-finite values");
    Eigen::MatrixXd out(y.rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            out(r, c) = y(r, c) - mean_from_eta(family, eta(r, c));
        }
    }
    return out;
}

Eigen::RowVectorXd initial_eta(Family family, const Eigen::MatrixXd& y) {
    Eigen::RowVectorXd eta0 = y.colwise().mean();
    if (family == Family::binomial) {
        const double p = std::clamp(eta0(0), 1e-12, 1.0 - 1e-12);
        eta0(0) = std::log(p / (1.0 - p));
    } else if (family == Family::poisson) {
        eta0(0) = std::log(std::max(eta0(0), 1e-12));
    }
    return eta0;
}

std::vector<Rule> extract_rules(const Tree& tree, int tree_index) {
    std::vector<Rule> out;
    if (tree.nodes.empty() || tree.nodes[0].is_leaf()) return out;
    std::vector<Condition> path;
    auto walk = [&](auto&& self, int idx) -> void {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
        if (idx != 0) {
            Rule r;
            r.conditions = path;
            r.tree_index = tree_index;
            r.node_id = idx;
            out.push_back(std::move(r));
        }
        if (node.is_leaf()) return;
        path.push_back(*node.cond);
        self(self, node.left);
        path.back() = *node.cond_right;
        self(self, node.right);
        path.pop_back();
    };
    walk(walk, 0);
    return out;
}

std::vector<char> rule_indicator(const DataSet& data, const Rule& rule) {
    std::vector<char> ind(data.n_rows(), 1);
    for (const auto& cond : rule.conditions) {
        const std::size_t j = data.column_index(cond.variable);
        if (cond.kind == ConditionKind::set_in) {
            const auto& spec = data.spec(j);
            std::vector<char> in_set(spec.levels.size(), 0);
            for (std::size_t k = 0; k < spec.levels.size(); ++k) {
                if (std::find(cond.levels.begin(), cond.levels.end(), spec.levels[k]) != cond.levels.end()) {
                    in_set[k] = 1;
                }
            }
            const auto& codes = data.codes(j);
            for (std::size_t i = 0; i < ind.size(); ++i) {
                if (ind[i] && !in_set[static_cast<std::size_t>(codes[i])]) ind[i] = 0;
            }
        } else {
            const auto& x = data.numeric(j);
            const bool le = cond.kind == ConditionKind::numeric_le;
            for (std::size_t i = 0; i < ind.size(); ++i) {
                if (!ind[i]) continue;
                const bool ok = le ? x[i] <= cond.threshold : x[i] > cond.threshold;
                if (!ok) ind[i] = 0;
            }
        }
    }
    return ind;
}

RuleSet dedup_rules(std::vector<Rule> rules, const DataSet& data,
                    const std::vector<std::vector<char>>& reserved) {
    std::unordered_map<std::string, int> seen;
    for (const auto& ind : reserved) {
        if (ind.size() != data.n_rows()) {
            throw std::invalid_argument("dedup_rules: reserved indicator length mismatch");
        }
        seen.emplace(indicator_key(ind), -1);
    }
    RuleSet out;
    for (auto& rule : rules) {
        const auto ind = rule_indicator(data, rule);
        std::size_t ones = 0;
        for (char b : ind) ones += static_cast<std::size_t>(b);
        if (ones == 0 || ones == ind.size()) continue; // constant rule
        const auto key = indicator_key(ind);
        if (seen.find(key) != seen.end()) continue;
        seen.emplace(key, static_cast<int>(out.rules.size()));
        rule.support = static_cast<double>(ones) / static_cast<double>(ind.size());
        out.rules.push_back(std::move(rule));
    }
    for (std::size_t i = 0; i < out.rules.size(); ++i) {
        out.rules[i].name = "rule" + std::to_string(i + 1);
    }
    return out;
}

RuleSet generate_rules(const DataSet& data, const std::vector<int>& predictors,
                       const Eigen::MatrixXd& y, const BoostConfig& config, Rng rng,
                       int threads, const std::vector<std::vector<char>>& reserved) {
    if (config.ntrees < 1) throw std::invalid_argument("generate_rules: ntrees must be >= 1");
    if (!(config.learnrate >= 0.0 && config.learnrate <= 1.0)) {
        throw std::invalid_argument("generate_rules: learnrate must be in [0, 1]");
    }
    if (predictors.empty()) throw std::invalid_argument("generate_rules: no predictor columns");
    const std::size_t n = data.n_rows();
    const Eigen::Index q = y.cols();
    if (static_cast<std::size_t>(y.rows()) != n) {
        throw std::invalid_argument("generate_rules: response length mismatch");
    }

    Eigen::MatrixXd eta = initial_eta(config.family, y).replicate(static_cast<Eigen::Index>(n), 1);

    std::vector<Tree> trees(static_cast<std::size_t>(config.ntrees));
    auto fit_one = [&](std::size_t t) {
        Rng tree_rng = rng.derive(t);
        const auto rows = subsample_indices(n, config.sampfrac, tree_rng);
        const Eigen::Index response_col = static_cast<Eigen::Index>(t) % q;
        const Eigen::MatrixXd grad =
            pseudo_response(config.family, y.col(response_col), eta.col(response_col));
        std::vector<double> target(n);
        for (std::size_t i = 0; i < n; ++i) target[i] = grad(static_cast<Eigen::Index>(i), 0);
        trees[t] = grow_tree(data, rows, target, config.tree, tree_rng, predictors);
    };

    if (config.learnrate == 0.0) {
        // no sequential dependence; trees are independent
        parallel_for(static_cast<std::size_t>(config.ntrees), threads, fit_one);
    } else {
        for (std::size_t t = 0; t < static_cast<std::size_t>(config.ntrees); ++t) {
            fit_one(t);
            const auto pred = trees[t].predict_all(data);
            const Eigen::Index response_col = static_cast<Eigen::Index>(t) % q;
            for (std::size_t i = 0; i < n; ++i) {
                eta(static_cast<Eigen::Index>(i), response_col) += config.learnrate * pred[i];
            }
        }
    }

    std::vector<Rule> raw;
    for (std::size_t t = 0; t < trees.size(); ++t) {
        auto tree_rules = extract_rules(trees[t], static_cast<int>(t));
        raw.insert(raw.end(), std::make_move_iterator(tree_rules.begin()),
                   std::make_move_iterator(tree_rules.end()));
    }
    return dedup_rules(std::move(raw), data, reserved);
}

std::string RuleSet::dump() const {
    std::string out;
    for (const auto& r : rules) {
        out += r.name + ": " + r.describe() + '\n';
    }
    return out;
}

} // namespace prens
