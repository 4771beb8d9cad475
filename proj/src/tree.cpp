#include "prens/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "prens/strings.hpp"

namespace prens {

namespace {

double chisq_sf(double x, double df) {
    if (!(x > 0.0)) return 1.0;
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, x));
}

struct ScanResult {
    double reduction = -1.0; // between-child sum of squares gained
    Condition cond;
};

// best threshold for a numeric column; thresholds at midpoints between
// adjacent distinct values, scanned ascending so ties keep the smaller one
std::optional<ScanResult> scan_numeric(const DataSet& data, const std::vector<std::size_t>& rows,
                                       int column, const std::vector<double>& response,
                                       int minbucket) {
    const auto& x = data.numeric(static_cast<std::size_t>(column));
    const std::size_t m = rows.size();
    std::vector<std::pair<double, double>> xy(m);
    for (std::size_t i = 0; i < m; ++i) xy[i] = {x[rows[i]], response[rows[i]]};
    std::sort(xy.begin(), xy.end());

    double total = 0.0;
    for (const auto& p : xy) total += p.second;

    std::optional<ScanResult> best;
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        left_sum += xy[i].second;
        if (xy[i].first == xy[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = m - nl;
        if (nl < static_cast<std::size_t>(minbucket) || nr < static_cast<std::size_t>(minbucket)) continue;
        const double right_sum = total - left_sum;
        const double reduction = left_sum * left_sum / static_cast<double>(nl) +
                                 right_sum * right_sum / static_cast<double>(nr) -
                                 total * total / static_cast<double>(m);
        if (!best || reduction > best->reduction) {
            ScanResult r;
            r.reduction = reduction;
            r.cond.variable = data.spec(static_cast<std::size_t>(column)).name;
            r.cond.kind = ConditionKind::numeric_le;
            r.cond.threshold = 0.5 * (xy[i].first + xy[i + 1].first);
            best = std::move(r);
        }
    }
    return best;
}

// best binary partition of a categorical column; levels ordered by their
// child mean, cut along that ordering
std::optional<ScanResult> scan_categorical(const DataSet& data, const std::vector<std::size_t>& rows,
                                           int column, const std::vector<double>& response,
                                           int minbucket) {
    const std::size_t j = static_cast<std::size_t>(column);
    const auto& codes = data.codes(j);
    const std::size_t nlevels = data.spec(j).levels.size();
    std::vector<double> sum(nlevels, 0.0);
    std::vector<std::size_t> count(nlevels, 0);
    for (std::size_t r : rows) {
        sum[static_cast<std::size_t>(codes[r])] += response[r];
        ++count[static_cast<std::size_t>(codes[r])];
    }
    std::vector<int> present;
    for (std::size_t k = 0; k < nlevels; ++k) {
        if (count[k] > 0) present.push_back(static_cast<int>(k));
    }
    if (present.size() < 2) return std::nullopt;
    std::sort(present.begin(), present.end(), [&](int a, int b) {
        const double ma = sum[static_cast<std::size_t>(a)] / static_cast<double>(count[static_cast<std::size_t>(a)]);
        const double mb = sum[static_cast<std::size_t>(b)] / static_cast<double>(count[static_cast<std::size_t>(b)]);
        if (ma != mb) return ma < mb;
        return a < b;
    });

    const std::size_t m = rows.size();
    double total = 0.0;
    for (std::size_t r : rows) total += response[r];

    std::optional<ScanResult> best;
    double left_sum = 0.0;
    std::size_t nl = 0;
    for (std::size_t cut = 0; cut + 1 < present.size(); ++cut) {
        const std::size_t k = static_cast<std::size_t>(present[cut]);
        left_sum += sum[k];
        nl += count[k];
        const std::size_t nr = m - nl;
        if (nl < static_cast<std::size_t>(minbucket) || nr < static_cast<std::size_t>(minbucket)) continue;
        const double right_sum = total - left_sum;
        const double reduction = left_sum * left_sum / static_cast<double>(nl) +
                                 right_sum * right_sum / static_cast<double>(nr) -
                                 total * total / static_cast<double>(m);
        if (!best || reduction > best->reduction) {
            std::vector<int> left_codes(present.begin(), present.begin() + static_cast<long>(cut) + 1);
            std::sort(left_codes.begin(), left_codes.end());
            ScanResult r;
            r.reduction = reduction;
            r.cond.variable = data.spec(j).name;
            r.cond.kind = ConditionKind::set_in;
            for (int c : left_codes) r.cond.levels.push_back(data.spec(j).levels[static_cast<std::size_t>(c)]);
            best = std::move(r);
        }
    }
    return best;
}

std::optional<ScanResult> scan_column(const DataSet& data, const std::vector<std::size_t>& rows,
                                      int column, const std::vector<double>& response, int minbucket) {
    if (data.spec(static_cast<std::size_t>(column)).kind == ColumnKind::numeric) {
        return scan_numeric(data, rows, column, response, minbucket);
    }
    return scan_categorical(data, rows, column, response, minbucket);
}

// asymptotic association p-value between one candidate column and the response
double association_pvalue(const DataSet& data, const std::vector<std::size_t>& rows, int column,
                          const std::vector<double>& response) {
    const std::size_t m = rows.size();
    double ybar = 0.0;
    for (std::size_t r : rows) ybar += response[r];
    ybar /= static_cast<double>(m);
    double syy = 0.0;
    for (std::size_t r : rows) {
        const double d = response[r] - ybar;
        syy += d * d;
    }
    if (syy <= 0.0) return 1.0;

    const std::size_t j = static_cast<std::size_t>(column);
    if (data.spec(j).kind == ColumnKind::numeric) {
        const auto& x = data.numeric(j);
        double xbar = 0.0;
        for (std::size_t r : rows) xbar += x[r];
        xbar /= static_cast<double>(m);
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t r : rows) {
            const double dx = x[r] - xbar;
            sxx += dx * dx;
            sxy += dx * (response[r] - ybar);
        }
        if (sxx <= 0.0) return 1.0;
        const double r2 = sxy * sxy / (sxx * syy);
        return chisq_sf(static_cast<double>(m) * r2, 1.0);
    }

    const auto& codes = data.codes(j);
    const std::size_t nlevels = data.spec(j).levels.size();
    std::vector<double> sum(nlevels, 0.0);
    std::vector<std::size_t> count(nlevels, 0);
    for (std::size_t r : rows) {
        sum[static_cast<std::size_t>(codes[r])] += response[r];
        ++count[static_cast<std::size_t>(codes[r])];
    }
    double ssb = 0.0;
    std::size_t k_eff = 0;
    for (std::size_t k = 0; k < nlevels; ++k) {
        if (count[k] == 0) continue;
        ++k_eff;
        const double mean_k = sum[k] / static_cast<double>(count[k]);
        ssb += static_cast<double>(count[k]) * (mean_k - ybar) * (mean_k - ybar);
    }
    if (k_eff < 2) return 1.0;
    const double eta2 = ssb / syy;
    return chisq_sf(static_cast<double>(m) * eta2, static_cast<double>(k_eff - 1));
}

std::vector<int> apply_mtry(const std::vector<int>& candidates, const TreeConfig& config, Rng& rng) {
    if (!config.mtry || *config.mtry <= 0 ||
        static_cast<std::size_t>(*config.mtry) >= candidates.size()) {
        return candidates;
    }
    std::vector<int> pool = candidates;
    const std::size_t k = static_cast<std::size_t>(*config.mtry);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

std::string Condition::describe() const {
    switch (kind) {
        case ConditionKind::numeric_le:
            return variable + " <= " + format_double(threshold);
        case ConditionKind::numeric_gt:
            return variable + " > " + format_double(threshold);
        case ConditionKind::set_in:
            return variable + " in {" + join(levels, ", ") + "}";
    }
    return variable;
}

bool Condition::matches(const DataSet& data, std::size_t row) const {
    const std::size_t j = data.column_index(variable);
    if (kind == ConditionKind::set_in) {
        if (data.spec(j).kind != ColumnKind::categorical) {
            throw std::invalid_argument("condition on '" + variable + "' expects a categorical column");
        }
        const auto& label = data.level_label(j, data.codes(j)[row]);
        return std::find(levels.begin(), levels.end(), label) != levels.end();
    }
    const double v = data.numeric(j)[row];
    return kind == ConditionKind::numeric_le ? v <= threshold : v > threshold;
}

std::string describe_conditions(const std::vector<Condition>& conditions) {
    std::vector<std::string> parts;
    parts.reserve(conditions.size());
    for (const auto& c : conditions) parts.push_back(c.describe());
    return join(parts, "  &  ");
}

std::vector<Condition> parse_conditions(const std::string& text) {
    // split on '&' outside braces
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '{') ++depth;
        if (c == '}') --depth;
        if (c == '&' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);

    std::vector<Condition> out;
    for (const auto& raw : parts) {
        const std::string s = trim(raw);
        if (s.empty()) throw std::invalid_argument("empty condition in '" + text + "'");
        Condition c;
        std::size_t pos;
        if ((pos = s.find("<=")) != std::string::npos) {
            c.kind = ConditionKind::numeric_le;
            c.variable = trim(s.substr(0, pos));
            const std::string num = trim(s.substr(pos + 2));
            char* end = nullptr;
            c.threshold = std::strtod(num.c_str(), &end);
            if (num.empty() || end != num.c_str() + num.size()) {
                throw std::invalid_argument("bad threshold in condition '" + s + "'");
            }
        } else if ((pos = s.find('>')) != std::string::npos) {
            c.kind = ConditionKind::numeric_gt;
            c.variable = trim(s.substr(0, pos));
            const std::string num = trim(s.substr(pos + 1));
            char* end = nullptr;
            c.threshold = std::strtod(num.c_str(), &end);
            if (num.empty() || end != num.c_str() + num.size()) {
                throw std::invalid_argument("bad threshold in condition '" + s + "'");
            }
        } else if ((pos = s.find(" in ")) != std::string::npos ||
                   (pos = s.find(" in{")) != std::string::npos) {
            c.kind = ConditionKind::set_in;
            c.variable = trim(s.substr(0, pos));
            const std::size_t open = s.find('{', pos);
            const std::size_t close = s.rfind('}');
            if (open == std::string::npos || close == std::string::npos || close <= open) {
                throw std::invalid_argument("bad level set in condition '" + s + "'");
            }
            std::string inner = s.substr(open + 1, close - open - 1);
            std::string level;
            std::vector<std::string> levels;
            for (char ch : inner) {
                if (ch == ',') {
                    levels.push_back(trim(level));
                    level.clear();
                } else {
                    level += ch;
                }
            }
            levels.push_back(trim(level));
            for (const auto& l : levels) {
                if (l.empty()) throw std::invalid_argument("empty level in condition '" + s + "'");
            }
            c.levels = std::move(levels);
        } else {
            throw std::invalid_argument("cannot parse condition '" + s + "'");
        }
        if (c.variable.empty()) throw std::invalid_argument("missing variable in condition '" + s + "'");
        out.push_back(std::move(c));
    }
    return out;
}

Condition negate_condition(const Condition& c, const DataSet& data) {
    Condition out = c;
    switch (c.kind) {
        case ConditionKind::numeric_le:
            out.kind = ConditionKind::numeric_gt;
            return out;
        case ConditionKind::numeric_gt:
            out.kind = ConditionKind::numeric_le;
            return out;
        case ConditionKind::set_in: {
            const std::size_t j = data.column_index(c.variable);
            out.levels.clear();
            for (const auto& level : data.spec(j).levels) {
                if (std::find(c.levels.begin(), c.levels.end(), level) == c.levels.end()) {
                    out.levels.push_back(level);
                }
            }
            if (out.levels.empty()) {
                throw std::logic_error("negation of condition on '" + c.variable + "' has no levels");
            }
            return out;
        }
    }
    return out;
}

std::optional<int> select_split_variable(const DataSet& data, const std::vector<std::size_t>& rows,
                                         const std::vector<double>& response,
                                         const std::vector<int>& candidates, const TreeConfig& config,
                                         Rng& rng) {
    if (rows.size() < 2 || candidates.empty()) return std::nullopt;
    const std::vector<int> pool = apply_mtry(candidates, config, rng);

    if (config.algorithm == TreeConfig::Algorithm::exhaustive) {
        std::optional<int> best;
        double best_reduction = 0.0;
        for (int column : pool) {
            const auto scan = scan_column(data, rows, column, response, config.minbucket);
            if (scan && scan->reduction > best_reduction) {
                best_reduction = scan->reduction;
                best = column;
            }
        }
        return best;
    }

    std::optional<int> best;
    double best_p = std::numeric_limits<double>::infinity();
    for (int column : pool) {
        const double p = association_pvalue(data, rows, column, response);
        if (p < best_p) {
            best_p = p;
            best = column;
        }
    }
    if (!best) return std::nullopt;
    const double adjusted = std::min(1.0, best_p * static_cast<double>(pool.size()));
    if (adjusted > config.alpha) return std::nullopt;
    return best;
}

std::optional<Condition> best_split(const DataSet& data, const std::vector<std::size_t>& rows,
                                    int column, const std::vector<double>& response, int minbucket) {
    auto scan = scan_column(data, rows, column, response, minbucket);
    if (!scan) return std::nullopt;
    return std::move(scan->cond);
}

Tree grow_tree(const DataSet& data, const std::vector<std::size_t>& rows,
               const std::vector<double>& response, const TreeConfig& config, Rng& rng,
               const std::vector<int>& candidates) {
    if (rows.empty()) throw std::invalid_argument("grow_tree: no rows");
    if (config.minbucket < 1) throw std::invalid_argument("grow_tree: minbucket must be >= 1");
    Tree tree;

    // preorder construction; returns the node index
    auto build = [&](auto&& self, const std::vector<std::size_t>& node_rows, int depth) -> int {
        const int idx = static_cast<int>(tree.nodes.size());
        TreeNode node;
        node.depth = depth;
        node.n = node_rows.size();
        double sum = 0.0;
        for (std::size_t r : node_rows) sum += response[r];
        node.value = sum / static_cast<double>(node_rows.size());
        tree.nodes.push_back(std::move(node));

        if (depth >= config.maxdepth) return idx;
        if (node_rows.size() < static_cast<std::size_t>(config.minsplit)) return idx;
        const auto variable = select_split_variable(data, node_rows, response, candidates, config, rng);
        if (!variable) return idx;
        auto cond = best_split(data, node_rows, *variable, response, config.minbucket);
        if (!cond) return idx;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : node_rows) {
            (cond->matches(data, r) ? left_rows : right_rows).push_back(r);
        }
        tree.nodes[static_cast<std::size_t>(idx)].cond = *cond;
        tree.nodes[static_cast<std::size_t>(idx)].cond_right = negate_condition(*cond, data);
        const int left = self(self, left_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = left;
        const int right = self(self, right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].right = right;
        return idx;
    };
    build(build, rows, 0);
    return tree;
}

double Tree::predict(const DataSet& data, std::size_t row) const {
    std::size_t idx = 0;
    while (!nodes[idx].is_leaf()) {
        idx = static_cast<std::size_t>(nodes[idx].cond->matches(data, row) ? nodes[idx].left
                                                                           : nodes[idx].right);
    }
    return nodes[idx].value;
}

std::vector<double> Tree::predict_all(const DataSet& data) const {
    std::vector<double> out(data.n_rows());
    std::vector<std::pair<int, std::vector<std::size_t>>> stack;
    std::vector<std::size_t> all(data.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    stack.emplace_back(0, std::move(all));
    while (!stack.empty()) {
        auto [idx, rows] = std::move(stack.back());
        stack.pop_back();
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        if (node.is_leaf()) {
            for (std::size_t r : rows) out[r] = node.value;
            continue;
        }
        // resolve the column once, then route the whole block
        std::vector<std::size_t> left_rows, right_rows;
        const std::size_t j = data.column_index(node.cond->variable);
        if (node.cond->kind == ConditionKind::set_in) {
            const auto& spec = data.spec(j);
            std::vector<char> in_set(spec.levels.size(), 0);
            for (std::size_t k = 0; k < spec.levels.size(); ++k) {
                if (std::find(node.cond->levels.begin(), node.cond->levels.end(), spec.levels[k]) !=
                    node.cond->levels.end()) {
                    in_set[k] = 1;
                }
            }
            const auto& codes = data.codes(j);
            for (std::size_t r : rows) {
                (in_set[static_cast<std::size_t>(codes[r])] ? left_rows : right_rows).push_back(r);
            }
        } else {
            const auto& x = data.numeric(j);
            const bool le = node.cond->kind == ConditionKind::numeric_le;
            for (std::size_t r : rows) {
                const bool goes_left = le ? x[r] <= node.cond->threshold : x[r] > node.cond->threshold;
                (goes_left ? left_rows : right_rows).push_back(r);
            }
        }
        stack.emplace_back(node.left, std::move(left_rows));
        stack.emplace_back(node.right, std::move(right_rows));
    }
    return out;
}

std::string Tree::print() const {
    std::string out;
    auto walk = [&](auto&& self, int idx, int indent, const std::string& label) -> void {
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        out.append(static_cast<std::size_t>(indent) * 2, ' ');
        if (!label.empty()) out += label + ": ";
        out += "n=" + std::to_string(node.n) + " mean=" + format_double(node.value);
        if (node.is_leaf()) out += " *";
        out += '\n';
        if (!node.is_leaf()) {
            self(self, node.left, indent + 1, node.cond->describe());
            self(self, node.right, indent + 1, node.cond_right->describe());
        }
    };
    walk(walk, 0, 0, "");
    return out;
}

} // namespace prens
