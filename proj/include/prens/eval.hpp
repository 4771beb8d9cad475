#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prens/dataset.hpp"
#include "prens/ensemble.hpp"
#include "prens/rng.hpp"

namespace prens {

// probability a random positive outranks a random negative, ties counted 1/2
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

double brier(const std::vector<double>& probs, const std::vector<double>& labels);
double mse(const std::vector<double>& pred, const std::vector<double>& obs);

// 1 - SSE/SST with SST about the mean of `obs`
double r_squared(const std::vector<double>& pred, const std::vector<double>& obs);

struct CvRecord {
    int repeat = 0;
    int fold = 0;
    int response = 0;
    double loss = 0.0;   // SEL/Brier for binomial, MSE otherwise
    double effect = 0.0; // per-fold AUC or R^2 (NaN when undefined)
};

struct CvResponseSummary {
    std::string response;
    double mean_loss = 0.0;
    double se_loss = 0.0;  // sd over the k*repeats fold losses / sqrt(k*repeats)
    double effect = 0.0;   // AUC or R^2 of pooled predictions, averaged over repeats
};

struct RepeatedCvResult {
    std::vector<CvRecord> records; // deterministic (repeat, fold, response) order
    std::vector<CvResponseSummary> summary;
    std::string loss_name;   // "brier" or "mse"
    std::string effect_name; // "auc" or "r_squared"
};

// a fitted model is anything that maps data to response-scale predictions
using ModelFn = std::function<Eigen::MatrixXd(const DataSet&)>;
using FitterFn = std::function<ModelFn(const DataSet& train)>;

/// Repeated k-fold cross validation of an arbitrary fitter. Binomial folds
/// are stratified by class. Per repeat the held-out predictions are pooled to
/// one full-length vector before computing the effect size.
RepeatedCvResult repeated_cv(const DataSet& data, Family family, const FitterFn& fitter, int k,
                             int repeats, Rng rng, int threads = 1);

// convenience wrapper fitting fit_pre with the given config on each fold
RepeatedCvResult repeated_cv_pre(const DataSet& data, const FitConfig& config, int k, int repeats,
                                 Rng rng, int threads = 0);

} // namespace prens
