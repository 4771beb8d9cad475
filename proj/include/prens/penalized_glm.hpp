#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prens/family.hpp"
#include "prens/rng.hpp"

namespace prens {

/// Pathwise lasso configuration. Columns are taken at the caller's scale:
/// the solver never re-standardizes. Intercepts are always fit, unpenalized
/// and unconstrained.
struct PenaltySpec {
    std::vector<double> lambda;       // explicit decreasing grid; empty = auto
    int nlambda = 100;
    double lambda_min_ratio = 0.0;    // 0 = 1e-4 if n > p else 1e-2
    std::vector<double> penalty_factor; // per column, >= 0; 0 = unpenalized; empty = all 1
    std::vector<double> lower;          // per column box, <= 0; empty = -inf
    std::vector<double> upper;          // per column box, >= 0; empty = +inf
    double tol = 1e-7;                  // max absolute coefficient change
    long max_sweeps = 100000;           // per lambda
    bool record_objective = false;      // per-sweep objective traces (diagnostics)
};

struct LassoPath {
    std::vector<double> lambda;
    Eigen::MatrixXd intercept;             // nlambda x q
    std::vector<Eigen::MatrixXd> coef;     // per lambda, p x q
    std::vector<int> nonzero;              // columns with any nonzero coefficient
    std::vector<std::string> warnings;
    std::vector<std::vector<double>> objective; // per lambda, if recorded
};

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

/// Coordinate-descent lasso over a lambda grid with warm starts.
/// gaussian: covariance-updating cyclic descent; binomial/poisson: IRLS around
/// a weighted gaussian inner solve; mgaussian: grouped descent with the
/// euclidean-norm soft threshold. Updates are clipped into [lower, upper].
LassoPath fit_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family,
                   const PenaltySpec& spec = {});

enum class CvRule { min, one_se };
enum class BinomialLoss { brier, deviance };

struct CvCurve {
    std::vector<double> lambda;
    std::vector<double> mean_error;
    std::vector<double> se;
    int index_min = -1;
    int index_1se = -1;
    double lambda_min = 0.0;
    double lambda_1se = 0.0;
};

struct CvFit {
    LassoPath path;    // full-data path
    CvCurve curve;
    int chosen_index = -1;
    double chosen_lambda = 0.0;
    Eigen::VectorXd intercept; // q
    Eigen::MatrixXd coef;      // p x q
};

// shuffled round-robin fold labels in [0, k); sizes differ by at most one.
// With strata, each stratum is dealt separately (labels stay balanced).
std::vector<int> kfold_assignments(std::size_t n, int k, Rng& rng,
                                   const std::vector<int>* strata = nullptr);

/// K-fold cross validation over the path's grid plus a full-data refit at the
/// selected lambda. Binomial folds are redrawn stratified if a fold ends up
/// single-class. Loss: squared error (gaussian/mgaussian), Brier by default
/// (binomial), deviance (poisson).
CvFit cv_select(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family,
                const PenaltySpec& spec, int folds, CvRule rule, Rng rng, int threads = 1,
                BinomialLoss binomial_loss = BinomialLoss::brier);

} // namespace prens
