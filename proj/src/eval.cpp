#include "prens/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "prens/parallel.hpp"
#include "prens/penalized_glm.hpp"

namespace prens {

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
    if (scores.empty()) throw std::invalid_argument("auc: empty input");
    std::size_t npos = 0;
    for (double l : labels) {
        if (l != 0.0 && l != 1.0) throw std::invalid_argument("auc: labels must be 0/1");
        if (l == 1.0) ++npos;
    }
    const std::size_t nneg = labels.size() - npos;
    if (npos == 0 || nneg == 0) throw std::invalid_argument("auc: both classes must be present");

    // midrank form of the Mann-Whitney statistic
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1.0) rank_sum_pos += midrank;
        }
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(npos) * (static_cast<double>(npos) + 1.0) / 2.0;
    return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

double brier(const std::vector<double>& probs, const std::vector<double>& labels) {
    if (probs.size() != labels.size()) throw std::invalid_argument("brier: length mismatch");
    if (probs.empty()) throw std::invalid_argument("brier: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0 || probs[i] > 1.0) throw std::invalid_argument("brier: probabilities must be in [0,1]");
        total += (probs[i] - labels[i]) * (probs[i] - labels[i]);
    }
    return total / static_cast<double>(probs.size());
}

double mse(const std::vector<double>& pred, const std::vector<double>& obs) {
    if (pred.size() != obs.size()) throw std::invalid_argument("mse: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mse: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        total += (pred[i] - obs[i]) * (pred[i] - obs[i]);
    }
    return total / static_cast<double>(pred.size());
}

double r_squared(const std::vector<double>& pred, const std::vector<double>& obs) {
    if (pred.size() != obs.size()) throw std::invalid_argument("r_squared: length mismatch");
    if (pred.empty()) throw std::invalid_argument("r_squared: empty input");
    double mean = 0.0;
    for (double y : obs) mean += y;
    mean /= static_cast<double>(obs.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sse += (obs[i] - pred[i]) * (obs[i] - pred[i]);
        sst += (obs[i] - mean) * (obs[i] - mean);
    }
    if (sst <= 0.0) throw std::invalid_argument("r_squared: observations have zero variance");
    return 1.0 - sse / sst;
}

RepeatedCvResult repeated_cv(const DataSet& data, Family family, const FitterFn& fitter, int k,
                             int repeats, Rng rng, int threads) {
    const std::size_t n = data.n_rows();
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("repeated_cv: n < k");
    if (repeats < 1) throw std::invalid_argument("repeated_cv: repeats must be >= 1");
    const Eigen::MatrixXd y = response_matrix(data, family);
    const Eigen::Index q = y.cols();

    RepeatedCvResult out;
    out.loss_name = family == Family::binomial ? "brier" : "mse";
    out.effect_name = family == Family::binomial ? "auc" : "r_squared";

    std::vector<int> strata;
    if (family == Family::binomial) {
        strata.resize(n);
        for (std::size_t i = 0; i < n; ++i) strata[i] = y(static_cast<Eigen::Index>(i), 0) > 0.5 ? 1 : 0;
    }

    struct FoldOutcome {
        std::vector<double> loss;            // per response
        std::vector<double> effect;          // per response
        std::vector<std::size_t> test_rows;
        Eigen::MatrixXd predictions;
    };
    std::vector<std::vector<int>> assignments(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        Rng fold_rng = rng.derive(static_cast<std::uint64_t>(r));
        assignments[static_cast<std::size_t>(r)] =
            kfold_assignments(n, k, fold_rng, strata.empty() ? nullptr : &strata);
    }

    const std::size_t total = static_cast<std::size_t>(repeats) * static_cast<std::size_t>(k);
    std::vector<FoldOutcome> outcomes(total);
    parallel_for(total, threads, [&](std::size_t task) {
        const int r = static_cast<int>(task) / k;
        const int f = static_cast<int>(task) % k;
        const auto& assignment = assignments[static_cast<std::size_t>(r)];
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < n; ++i) {
            (assignment[i] == f ? test_rows : train_rows).push_back(i);
        }
        const DataSet train = data.subset(train_rows);
        const DataSet test = data.subset(test_rows);
        const ModelFn model = fitter(train);
        Eigen::MatrixXd pred = model(test);
        if (pred.rows() != static_cast<Eigen::Index>(test_rows.size()) || pred.cols() != q) {
            throw std::runtime_error("repeated_cv: model returned predictions of the wrong shape (repeat " +
                                     std::to_string(r + 1) + ", fold " + std::to_string(f + 1) + ")");
        }
        FoldOutcome outcome;
        outcome.loss.resize(static_cast<std::size_t>(q));
        outcome.effect.resize(static_cast<std::size_t>(q));
        for (Eigen::Index c = 0; c < q; ++c) {
            std::vector<double> p(test_rows.size()), o(test_rows.size());
            for (std::size_t i = 0; i < test_rows.size(); ++i) {
                p[i] = pred(static_cast<Eigen::Index>(i), c);
                o[i] = y(static_cast<Eigen::Index>(test_rows[i]), c);
            }
            const auto cu = static_cast<std::size_t>(c);
            if (family == Family::binomial) {
                outcome.loss[cu] = brier(p, o);
            } else {
                outcome.loss[cu] = mse(p, o);
            }
            try {
                outcome.effect[cu] = family == Family::binomial ? auc(p, o) : r_squared(p, o);
            } catch (const std::invalid_argument&) {
                outcome.effect[cu] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        outcome.test_rows = std::move(test_rows);
        outcome.predictions = std::move(pred);
        outcomes[task] = std::move(outcome);
    });

    std::vector<std::vector<double>> losses(static_cast<std::size_t>(q)); // per response, k*repeats entries
    std::vector<std::vector<double>> repeat_effects(static_cast<std::size_t>(q));
    for (int r = 0; r < repeats; ++r) {
        Eigen::MatrixXd pooled(static_cast<Eigen::Index>(n), q);
        for (int f = 0; f < k; ++f) {
            const auto& outcome = outcomes[static_cast<std::size_t>(r) * static_cast<std::size_t>(k) +
                                           static_cast<std::size_t>(f)];
            for (Eigen::Index c = 0; c < q; ++c) {
                CvRecord rec;
                rec.repeat = r + 1;
                rec.fold = f + 1;
                rec.response = static_cast<int>(c);
                rec.loss = outcome.loss[static_cast<std::size_t>(c)];
                rec.effect = outcome.effect[static_cast<std::size_t>(c)];
                out.records.push_back(rec);
                losses[static_cast<std::size_t>(c)].push_back(rec.loss);
            }
            for (std::size_t i = 0; i < outcome.test_rows.size(); ++i) {
                pooled.row(static_cast<Eigen::Index>(outcome.test_rows[i])) =
                    outcome.predictions.row(static_cast<Eigen::Index>(i));
            }
        }
        for (Eigen::Index c = 0; c < q; ++c) {
            std::vector<double> p(n), o(n);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = pooled(static_cast<Eigen::Index>(i), c);
                o[i] = y(static_cast<Eigen::Index>(i), c);
            }
            repeat_effects[static_cast<std::size_t>(c)].push_back(
                family == Family::binomial ? auc(p, o) : r_squared(p, o));
        }
    }

    for (Eigen::Index c = 0; c < q; ++c) {
        const auto& ls = losses[static_cast<std::size_t>(c)];
        double mean = 0.0;
        for (double l : ls) mean += l;
        mean /= static_cast<double>(ls.size());
        double var = 0.0;
        for (double l : ls) var += (l - mean) * (l - mean);
        var = ls.size() > 1 ? var / static_cast<double>(ls.size() - 1) : 0.0;
        const auto& effs = repeat_effects[static_cast<std::size_t>(c)];
        double eff = 0.0;
        for (double e : effs) eff += e;
        eff /= static_cast<double>(effs.size());
        CvResponseSummary s;
        s.response = data.response_names()[static_cast<std::size_t>(c)];
        s.mean_loss = mean;
        s.se_loss = std::sqrt(var / static_cast<double>(ls.size()));
        s.effect = eff;
        out.summary.push_back(std::move(s));
    }
    return out;
}

RepeatedCvResult repeated_cv_pre(const DataSet& data, const FitConfig& config, int k, int repeats,
                                 Rng rng, int threads) {
    if (threads <= 0) threads = default_threads();
    FitConfig inner = config;
    inner.threads = 1; // folds are already parallel
    const FitterFn fitter = [inner](const DataSet& train) -> ModelFn {
        FittedEnsemble fitted = fit_pre(train, inner);
        return [fitted = std::move(fitted)](const DataSet& test) {
            return predict(fitted, test, PredictScale::response);
        };
    };
    return repeated_cv(data, config.family, fitter, k, repeats, rng, threads);
}

} // namespace prens
