#include "prens/penalized_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "prens/parallel.hpp"

namespace prens {

namespace {

constexpr double kEtaCap = 30.0;    // |eta| beyond this flags separation
constexpr double kWeightFloor = 1e-5;

struct Coefs {
    double beta0 = 0.0;
    Eigen::VectorXd beta;
};

double clip(double v, double lo, double up) { return std::min(std::max(v, lo), up); }

void validate_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family) {
    if (x.rows() != y.rows()) throw std::invalid_argument("fit_path: x and y row counts differ");
    if (x.rows() < 2) throw std::invalid_argument("fit_path: need at least two rows");
    if (!x.allFinite()) throw std::invalid_argument("fit_path: x contains non-finite values");
    if (!y.allFinite()) throw std::invalid_argument("fit_path: y contains non-finite values");
    if (family == Family::mgaussian) {
        if (y.cols() < 2) throw std::invalid_argument("fit_path: mgaussian needs >= 2 responses");
    } else if (y.cols() != 1) {
        throw std::invalid_argument("fit_path: single-response family got a response matrix");
    }
    if (family == Family::binomial) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            if (y(i, 0) != 0.0 && y(i, 0) != 1.0) {
                throw std::invalid_argument("fit_path: binomial response must be 0/1");
            }
        }
    }
    if (family == Family::poisson) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const double v = y(i, 0);
            if (v < 0.0 || std::abs(v - std::round(v)) > 1e-9) {
                throw std::invalid_argument("fit_path: poisson response must be nonnegative integers");
            }
        }
    }
}

struct Penalty {
    Eigen::VectorXd pf, lo, up;
};

Penalty materialize(const PenaltySpec& spec, Eigen::Index p) {
    Penalty out;
    const double inf = std::numeric_limits<double>::infinity();
    out.pf = Eigen::VectorXd::Ones(p);
    out.lo = Eigen::VectorXd::Constant(p, -inf);
    out.up = Eigen::VectorXd::Constant(p, inf);
    auto fill = [&](const std::vector<double>& src, Eigen::VectorXd& dst, const char* what) {
        if (src.empty()) return;
        if (static_cast<Eigen::Index>(src.size()) != p) {
            throw std::invalid_argument(std::string("PenaltySpec: ") + what + " length mismatch");
        }
        for (Eigen::Index j = 0; j < p; ++j) dst(j) = src[static_cast<std::size_t>(j)];
    };
    fill(spec.penalty_factor, out.pf, "penalty_factor");
    fill(spec.lower, out.lo, "lower");
    fill(spec.upper, out.up, "upper");
    for (Eigen::Index j = 0; j < p; ++j) {
        if (out.pf(j) < 0.0) throw std::invalid_argument("PenaltySpec: penalty factors must be >= 0");
        if (out.lo(j) > 0.0 || out.up(j) < 0.0) {
            throw std::invalid_argument("PenaltySpec: need lower <= 0 <= upper so zero stays feasible");
        }
    }
    return out;
}

// null-model means per response
Eigen::RowVectorXd null_mu(const Eigen::MatrixXd& y, Family family) {
    Eigen::RowVectorXd mu = y.colwise().mean();
    (void)family; // binomial/poisson null means equal the response mean
    return mu;
}

std::vector<double> make_grid(const PenaltySpec& spec, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y, Family family, const Penalty& pen) {
    if (!spec.lambda.empty()) {
        for (std::size_t i = 1; i < spec.lambda.size(); ++i) {
            if (!(spec.lambda[i] < spec.lambda[i - 1])) {
                throw std::invalid_argument("PenaltySpec: lambda grid must be strictly decreasing");
            }
        }
        if (spec.lambda.back() <= 0.0) throw std::invalid_argument("PenaltySpec: lambda must be positive");
        return spec.lambda;
    }
    const Eigen::Index n = x.rows(), p = x.cols();
    const Eigen::MatrixXd resid = y.rowwise() - null_mu(y, family);
    double lambda_max = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (pen.pf(j) <= 0.0) continue;
        const double g = (x.col(j).transpose() * resid).norm() / static_cast<double>(n);
        lambda_max = std::max(lambda_max, g / pen.pf(j));
    }
    if (lambda_max <= 0.0) lambda_max = 1.0;
    lambda_max *= 1.0 + 1e-10; // keep the grid head strictly in the all-zero region
    double ratio = spec.lambda_min_ratio;
    if (ratio <= 0.0) ratio = n > p ? 1e-4 : 1e-2;
    const int nl = std::max(spec.nlambda, 2);
    std::vector<double> grid(static_cast<std::size_t>(nl));
    for (int i = 0; i < nl; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lambda_max * std::pow(ratio, static_cast<double>(i) / static_cast<double>(nl - 1));
    }
    return grid;
}

[[noreturn]] void fail_convergence(std::size_t lambda_index) {
    throw std::runtime_error("coordinate descent did not converge at lambda index " +
                             std::to_string(lambda_index));
}

// ---------------------------------------------------------------------------
// gaussian, single response: covariance-updating coordinate descent.
// Maintains cov_r[j] = <x_j, r>, sum_r = <1, r> and the residual sum of
// squares across the whole path; Gram columns are cached on first activation.
class GaussianCovSolver {
public:
    GaussianCovSolver(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Penalty& pen,
                      const PenaltySpec& spec)
        : x_(x), pen_(pen), spec_(spec), n_(x.rows()), p_(x.cols()) {
        colsum_ = x_.colwise().sum();
        colsq_ = x_.colwise().squaredNorm();
        cov_r_ = x_.transpose() * y;
        sum_r_ = y.sum();
        rss_ = y.squaredNorm();
        beta_ = Eigen::VectorXd::Zero(p_);
        gram_.resize(static_cast<std::size_t>(p_));
        have_gram_.assign(static_cast<std::size_t>(p_), 0);
        is_active_.assign(static_cast<std::size_t>(p_), 0);
    }

    void fit(double lambda, std::size_t lambda_index, std::vector<double>* objective) {
        long sweeps = 0;
        auto account = [&] {
            if (++sweeps > spec_.max_sweeps) fail_convergence(lambda_index);
            if (objective) objective->push_back(this->objective(lambda));
        };
        for (;;) {
            double maxd = full_sweep(lambda);
            account();
            if (maxd < spec_.tol) break;
            for (;;) {
                maxd = active_sweep(lambda);
                account();
                if (maxd < spec_.tol) break;
            }
        }
    }

    double intercept() const { return beta0_; }
    const Eigen::VectorXd& coef() const { return beta_; }

private:
    double objective(double lambda) const {
        double pen_sum = 0.0;
        for (Eigen::Index j = 0; j < p_; ++j) pen_sum += pen_.pf(j) * std::abs(beta_(j));
        return rss_ / (2.0 * static_cast<double>(n_)) + lambda * pen_sum;
    }

    void update_intercept(double& maxd) {
        const double delta = sum_r_ / static_cast<double>(n_);
        if (delta == 0.0) return;
        beta0_ += delta;
        rss_ += delta * (delta * static_cast<double>(n_) - 2.0 * sum_r_);
        cov_r_ -= delta * colsum_.transpose();
        sum_r_ -= delta * static_cast<double>(n_);
        maxd = std::max(maxd, std::abs(delta));
    }

    void update_coef(Eigen::Index j, double lambda, double& maxd) {
        const double v = colsq_(j) / static_cast<double>(n_);
        if (v <= 0.0) return;
        const double z = cov_r_(j) / static_cast<double>(n_) + v * beta_(j);
        const double target = clip(soft_threshold(z, lambda * pen_.pf(j)) / v, pen_.lo(j), pen_.up(j));
        const double delta = target - beta_(j);
        if (delta == 0.0) return;
        const auto ju = static_cast<std::size_t>(j);
        if (!have_gram_[ju]) {
            gram_[ju] = x_.transpose() * x_.col(j);
            have_gram_[ju] = 1;
        }
        rss_ += delta * (delta * colsq_(j) - 2.0 * cov_r_(j));
        cov_r_ -= delta * gram_[ju];
        sum_r_ -= delta * colsum_(j);
        beta_(j) = target;
        if (!is_active_[ju]) {
            is_active_[ju] = 1;
            active_.push_back(j);
        }
        maxd = std::max(maxd, std::abs(delta));
    }

    double full_sweep(double lambda) {
        double maxd = 0.0;
        update_intercept(maxd);
        for (Eigen::Index j = 0; j < p_; ++j) update_coef(j, lambda, maxd);
        return maxd;
    }

    double active_sweep(double lambda) {
        double maxd = 0.0;
        update_intercept(maxd);
        for (Eigen::Index j : active_) update_coef(j, lambda, maxd);
        return maxd;
    }

    const Eigen::MatrixXd& x_;
    Penalty pen_;
    const PenaltySpec& spec_;
    Eigen::Index n_, p_;
    Eigen::RowVectorXd colsum_, colsq_;
    Eigen::VectorXd cov_r_;
    double sum_r_ = 0.0, rss_ = 0.0, beta0_ = 0.0;
    Eigen::VectorXd beta_;
    std::vector<Eigen::VectorXd> gram_;
    std::vector<char> have_gram_;
    std::vector<Eigen::Index> active_;
    std::vector<char> is_active_;
};

// ---------------------------------------------------------------------------
// weighted gaussian inner solve for IRLS; naive residual updates
class WeightedCd {
public:
    WeightedCd(const Eigen::MatrixXd& x, const Penalty& pen, const PenaltySpec& spec)
        : x_(x), pen_(pen), spec_(spec), n_(x.rows()), p_(x.cols()) {
        is_active_.assign(static_cast<std::size_t>(p_), 0);
    }

    // solves on working response z with weights w, warm-started at (beta0, beta);
    // sweeps accumulates toward the per-lambda budget
    void solve(const Eigen::VectorXd& w, const Eigen::VectorXd& z, double lambda, Coefs& c,
               long& sweeps, std::size_t lambda_index) {
        vw_ = ((x_.array().square().colwise() * w.array()).colwise().sum()) / static_cast<double>(n_);
        wsum_ = w.sum();
        r_ = z - Eigen::VectorXd::Constant(n_, c.beta0) - x_ * c.beta;
        active_.clear();
        std::fill(is_active_.begin(), is_active_.end(), 0);
        for (Eigen::Index j = 0; j < p_; ++j) {
            if (c.beta(j) != 0.0) {
                is_active_[static_cast<std::size_t>(j)] = 1;
                active_.push_back(j);
            }
        }
        auto account = [&] {
            if (++sweeps > spec_.max_sweeps) fail_convergence(lambda_index);
        };
        for (;;) {
            double maxd = sweep(w, lambda, c, /*full=*/true);
            account();
            if (maxd < spec_.tol) break;
            for (;;) {
                maxd = sweep(w, lambda, c, /*full=*/false);
                account();
                if (maxd < spec_.tol) break;
            }
        }
    }

private:
    double sweep(const Eigen::VectorXd& w, double lambda, Coefs& c, bool full) {
        double maxd = 0.0;
        const double d0 = w.dot(r_) / wsum_;
        if (d0 != 0.0) {
            c.beta0 += d0;
            r_.array() -= d0;
            maxd = std::abs(d0);
        }
        auto visit = [&](Eigen::Index j) {
            const double v = vw_(j);
            if (v <= 0.0) return;
            const double zj = (x_.col(j).array() * w.array() * r_.array()).sum() / static_cast<double>(n_) +
                              v * c.beta(j);
            const double target = clip(soft_threshold(zj, lambda * pen_.pf(j)) / v, pen_.lo(j), pen_.up(j));
            const double delta = target - c.beta(j);
            if (delta == 0.0) return;
            r_ -= delta * x_.col(j);
            c.beta(j) = target;
            const auto ju = static_cast<std::size_t>(j);
            if (!is_active_[ju]) {
                is_active_[ju] = 1;
                active_.push_back(j);
            }
            maxd = std::max(maxd, std::abs(delta));
        };
        if (full) {
            for (Eigen::Index j = 0; j < p_; ++j) visit(j);
        } else {
            for (Eigen::Index j : active_) visit(j);
        }
        return maxd;
    }

    const Eigen::MatrixXd& x_;
    Penalty pen_;
    const PenaltySpec& spec_;
    Eigen::Index n_, p_;
    Eigen::RowVectorXd vw_;
    double wsum_ = 0.0;
    Eigen::VectorXd r_;
    std::vector<Eigen::Index> active_;
    std::vector<char> is_active_;
};

// IRLS outer loop for binomial / poisson
class IrlsSolver {
public:
    IrlsSolver(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Family family, const Penalty& pen,
               const PenaltySpec& spec)
        : x_(x), y_(y), family_(family), pen_(pen), spec_(spec), inner_(x, pen, spec),
          n_(x.rows()) {
        coefs_.beta = Eigen::VectorXd::Zero(x.cols());
    }

    void fit(double lambda, std::size_t lambda_index, std::vector<double>* objective,
             std::vector<std::string>& warnings) {
        long sweeps = 0;
        double dev_prev = penalized_deviance(lambda);
        if (objective) objective->push_back(dev_prev);
        constexpr int max_outer = 200;
        for (int outer = 0;; ++outer) {
            if (outer >= max_outer) fail_convergence(lambda_index);
            const Coefs before = coefs_;
            const Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_, coefs_.beta0) + x_ * coefs_.beta;
            Eigen::VectorXd w(n_), z(n_);
            for (Eigen::Index i = 0; i < n_; ++i) {
                const double e = std::clamp(eta(i), -kEtaCap, kEtaCap);
                const double mu = family_ == Family::binomial ? logistic(e) : std::exp(e);
                const double wi = std::max(family_ == Family::binomial ? mu * (1.0 - mu) : mu,
                                           kWeightFloor);
                w(i) = wi;
                z(i) = eta(i) + (y_(i) - mu) / wi;
            }
            inner_.solve(w, z, lambda, coefs_, sweeps, lambda_index);

            // the quadratic approximation can overshoot; back off toward the
            // previous iterate until the penalized deviance stops increasing
            double dev = penalized_deviance(lambda);
            for (int halvings = 0; dev > dev_prev + 1e-12 * (1.0 + std::abs(dev_prev)) && halvings < 20;
                 ++halvings) {
                coefs_.beta0 = 0.5 * (coefs_.beta0 + before.beta0);
                coefs_.beta = 0.5 * (coefs_.beta + before.beta);
                dev = penalized_deviance(lambda);
            }
            if (objective) objective->push_back(dev);
            dev_prev = dev;

            double maxd = std::abs(coefs_.beta0 - before.beta0);
            maxd = std::max(maxd, (coefs_.beta - before.beta).cwiseAbs().maxCoeff());
            if (maxd < spec_.tol) break;
        }
        const Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_, coefs_.beta0) + x_ * coefs_.beta;
        if (family_ == Family::binomial && eta.cwiseAbs().maxCoeff() > kEtaCap &&
            !separation_flagged_) {
            warnings.push_back("possible separation at lambda index " + std::to_string(lambda_index) +
                               " (|eta| > " + std::to_string(static_cast<int>(kEtaCap)) + ")");
            separation_flagged_ = true;
        }
    }

    double intercept() const { return coefs_.beta0; }
    const Eigen::VectorXd& coef() const { return coefs_.beta; }

private:
    double penalized_deviance(double lambda) const {
        const Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_, coefs_.beta0) + x_ * coefs_.beta;
        double nll = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double e = std::clamp(eta(i), -kEtaCap, kEtaCap);
            if (family_ == Family::binomial) {
                // log(1 + exp(e)) - y*e, stable form
                nll += std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))) - y_(i) * eta(i);
            } else {
                nll += std::exp(e) - y_(i) * eta(i);
            }
        }
        double pen_sum = 0.0;
        for (Eigen::Index j = 0; j < coefs_.beta.size(); ++j) {
            pen_sum += pen_.pf(j) * std::abs(coefs_.beta(j));
        }
        return nll / static_cast<double>(n_) + lambda * pen_sum;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    Family family_;
    Penalty pen_;
    const PenaltySpec& spec_;
    WeightedCd inner_;
    Eigen::Index n_;
    Coefs coefs_;
    bool separation_flagged_ = false;
};

// ---------------------------------------------------------------------------
// multivariate gaussian: grouped coordinate descent, one coefficient row per
// column shrunk through the euclidean-norm soft threshold, then clipped
class MGaussSolver {
public:
    MGaussSolver(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Penalty& pen,
                 const PenaltySpec& spec)
        : x_(x), pen_(pen), spec_(spec), n_(x.rows()), p_(x.cols()), q_(y.cols()) {
        colsq_ = x_.colwise().squaredNorm();
        beta0_ = Eigen::RowVectorXd::Zero(q_);
        b_ = Eigen::MatrixXd::Zero(p_, q_);
        r_ = y;
        is_active_.assign(static_cast<std::size_t>(p_), 0);
    }

    void fit(double lambda, std::size_t lambda_index, std::vector<double>* objective) {
        long sweeps = 0;
        auto account = [&] {
            if (++sweeps > spec_.max_sweeps) fail_convergence(lambda_index);
            if (objective) objective->push_back(this->objective(lambda));
        };
        for (;;) {
            double maxd = sweep(lambda, true);
            account();
            if (maxd < spec_.tol) break;
            for (;;) {
                maxd = sweep(lambda, false);
                account();
                if (maxd < spec_.tol) break;
            }
        }
    }

    const Eigen::RowVectorXd& intercept() const { return beta0_; }
    const Eigen::MatrixXd& coef() const { return b_; }

private:
    double objective(double lambda) const {
        double pen_sum = 0.0;
        for (Eigen::Index j = 0; j < p_; ++j) pen_sum += pen_.pf(j) * b_.row(j).norm();
        return r_.squaredNorm() / (2.0 * static_cast<double>(n_)) + lambda * pen_sum;
    }

    double sweep(double lambda, bool full) {
        double maxd = 0.0;
        const Eigen::RowVectorXd d0 = r_.colwise().mean();
        if (d0.cwiseAbs().maxCoeff() > 0.0) {
            beta0_ += d0;
            r_.rowwise() -= d0;
            maxd = d0.cwiseAbs().maxCoeff();
        }
        auto visit = [&](Eigen::Index j) {
            const double v = colsq_(j) / static_cast<double>(n_);
            if (v <= 0.0) return;
            const Eigen::RowVectorXd z = (x_.col(j).transpose() * r_) / static_cast<double>(n_) +
                                         v * b_.row(j);
            Eigen::RowVectorXd target = Eigen::RowVectorXd::Zero(q_);
            const double norm = z.norm();
            const double gamma = lambda * pen_.pf(j);
            if (norm > gamma) {
                target = z * ((1.0 - gamma / norm) / v);
                for (Eigen::Index c = 0; c < q_; ++c) target(c) = clip(target(c), pen_.lo(j), pen_.up(j));
            }
            const Eigen::RowVectorXd delta = target - b_.row(j);
            const double dmax = delta.cwiseAbs().maxCoeff();
            if (dmax == 0.0) return;
            r_ -= x_.col(j) * delta;
            b_.row(j) = target;
            const auto ju = static_cast<std::size_t>(j);
            if (!is_active_[ju]) {
                is_active_[ju] = 1;
                active_.push_back(j);
            }
            maxd = std::max(maxd, dmax);
        };
        if (full) {
            for (Eigen::Index j = 0; j < p_; ++j) visit(j);
        } else {
            for (Eigen::Index j : active_) visit(j);
        }
        return maxd;
    }

    const Eigen::MatrixXd& x_;
    Penalty pen_;
    const PenaltySpec& spec_;
    Eigen::Index n_, p_, q_;
    Eigen::RowVectorXd colsq_;
    Eigen::RowVectorXd beta0_;
    Eigen::MatrixXd b_;
    Eigen::MatrixXd r_;
    std::vector<Eigen::Index> active_;
    std::vector<char> is_active_;
};

// per-observation mean loss on held-out data at one lambda
double holdout_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family,
                    const Eigen::VectorXd& intercept, const Eigen::MatrixXd& coef,
                    BinomialLoss binomial_loss) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd eta = x * coef;
    eta.rowwise() += intercept.transpose();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (family) {
            case Family::gaussian:
            case Family::mgaussian: {
                total += (y.row(i) - eta.row(i)).squaredNorm();
                break;
            }
            case Family::binomial: {
                const double p = logistic(eta(i, 0));
                if (binomial_loss == BinomialLoss::brier) {
                    total += (p - y(i, 0)) * (p - y(i, 0));
                } else {
                    const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
                    total += -2.0 * (y(i, 0) * std::log(pc) + (1.0 - y(i, 0)) * std::log(1.0 - pc));
                }
                break;
            }
            case Family::poisson: {
                const double mu = std::exp(std::clamp(eta(i, 0), -kEtaCap, kEtaCap));
                const double yi = y(i, 0);
                double dev = 2.0 * (mu - yi);
                if (yi > 0.0) dev += 2.0 * yi * std::log(yi / mu);
                total += dev;
                break;
            }
        }
    }
    return total / static_cast<double>(n);
}

} // namespace

LassoPath fit_path(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family,
                   const PenaltySpec& spec) {
    validate_inputs(x, y, family);
    const Penalty pen = materialize(spec, x.cols());
    const std::vector<double> grid = make_grid(spec, x, y, family, pen);

    LassoPath path;
    path.lambda = grid;
    path.intercept.resize(static_cast<Eigen::Index>(grid.size()), y.cols());
    path.coef.reserve(grid.size());
    if (spec.record_objective) path.objective.resize(grid.size());

    auto store = [&](std::size_t i, const Eigen::VectorXd& icept, const Eigen::MatrixXd& coef) {
        path.intercept.row(static_cast<Eigen::Index>(i)) = icept.transpose();
        path.coef.push_back(coef);
        int nz = 0;
        for (Eigen::Index j = 0; j < coef.rows(); ++j) {
            if (coef.row(j).cwiseAbs().maxCoeff() != 0.0) ++nz;
        }
        path.nonzero.push_back(nz);
    };

    switch (family) {
        case Family::gaussian: {
            GaussianCovSolver solver(x, y.col(0), pen, spec);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                solver.fit(grid[i], i, spec.record_objective ? &path.objective[i] : nullptr);
                store(i, Eigen::VectorXd::Constant(1, solver.intercept()), solver.coef());
            }
            break;
        }
        case Family::binomial:
        case Family::poisson: {
            IrlsSolver solver(x, y.col(0), family, pen, spec);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                solver.fit(grid[i], i, spec.record_objective ? &path.objective[i] : nullptr,
                           path.warnings);
                store(i, Eigen::VectorXd::Constant(1, solver.intercept()), solver.coef());
            }
            break;
        }
        case Family::mgaussian: {
            MGaussSolver solver(x, y, pen, spec);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                solver.fit(grid[i], i, spec.record_objective ? &path.objective[i] : nullptr);
                store(i, solver.intercept().transpose(), solver.coef());
            }
            break;
        }
    }
    return path;
}

std::vector<int> kfold_assignments(std::size_t n, int k, Rng& rng, const std::vector<int>* strata) {
    if (k < 2) throw std::invalid_argument("kfold_assignments: need k >= 2");
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("kfold_assignments: n < k");
    std::vector<int> fold(n, -1);
    int next = 0;
    if (strata) {
        if (strata->size() != n) throw std::invalid_argument("kfold_assignments: strata length mismatch");
        std::vector<int> levels(*strata);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        for (int level : levels) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if ((*strata)[i] == level) members.push_back(i);
            }
            rng.shuffle(members);
            for (std::size_t i : members) fold[i] = (next++) % k;
        }
    } else {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t i : order) fold[i] = (next++) % k;
    }
    return fold;
}

CvFit cv_select(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Family family,
                const PenaltySpec& spec, int folds, CvRule rule, Rng rng, int threads,
                BinomialLoss binomial_loss) {
    validate_inputs(x, y, family);
    if (folds < 2) throw std::invalid_argument("cv_select: need at least 2 folds");
    if (x.rows() < folds) throw std::invalid_argument("cv_select: fewer rows than folds");

    CvFit out;
    out.path = fit_path(x, y, family, spec);
    const std::size_t nl = out.path.lambda.size();
    const std::size_t n = static_cast<std::size_t>(x.rows());

    Rng fold_rng = rng.derive(0);
    std::vector<int> assignment = kfold_assignments(n, folds, fold_rng);
    if (family == Family::binomial) {
        auto has_single_class_fold = [&](const std::vector<int>& a) {
            for (int f = 0; f < folds; ++f) {
                bool seen0 = false, seen1 = false;
                for (std::size_t i = 0; i < n; ++i) {
                    if (a[i] != f) continue;
                    (y(static_cast<Eigen::Index>(i), 0) > 0.5 ? seen1 : seen0) = true;
                }
                if (!seen0 || !seen1) return true;
            }
            return false;
        };
        if (has_single_class_fold(assignment)) {
            std::vector<int> strata(n);
            for (std::size_t i = 0; i < n; ++i) {
                strata[i] = y(static_cast<Eigen::Index>(i), 0) > 0.5 ? 1 : 0;
            }
            Rng strat_rng = rng.derive(1);
            assignment = kfold_assignments(n, folds, strat_rng, &strata);
            if (has_single_class_fold(assignment)) {
                throw std::runtime_error("cv_select: a fold has a single response class even after "
                                         "stratification; reduce the number of folds");
            }
        }
    }

    PenaltySpec fold_spec = spec;
    fold_spec.lambda = out.path.lambda; // shared grid
    fold_spec.record_objective = false;

    std::vector<std::vector<double>> fold_losses(static_cast<std::size_t>(folds));
    parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < n; ++i) {
            (assignment[i] == static_cast<int>(f) ? test : train).push_back(static_cast<Eigen::Index>(i));
        }
        Eigen::MatrixXd xtr(train.size(), x.cols()), xte(test.size(), x.cols());
        Eigen::MatrixXd ytr(train.size(), y.cols()), yte(test.size(), y.cols());
        for (std::size_t i = 0; i < train.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
            ytr.row(static_cast<Eigen::Index>(i)) = y.row(train[i]);
        }
        for (std::size_t i = 0; i < test.size(); ++i) {
            xte.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
            yte.row(static_cast<Eigen::Index>(i)) = y.row(test[i]);
        }
        const LassoPath fold_path = fit_path(xtr, ytr, family, fold_spec);
        std::vector<double> losses(nl);
        for (std::size_t i = 0; i < nl; ++i) {
            losses[i] = holdout_loss(xte, yte, family, fold_path.intercept.row(static_cast<Eigen::Index>(i)),
                                     fold_path.coef[i], binomial_loss);
        }
        fold_losses[f] = std::move(losses);
    });

    out.curve.lambda = out.path.lambda;
    out.curve.mean_error.resize(nl);
    out.curve.se.resize(nl);
    for (std::size_t i = 0; i < nl; ++i) {
        double mean = 0.0;
        for (int f = 0; f < folds; ++f) mean += fold_losses[static_cast<std::size_t>(f)][i];
        mean /= static_cast<double>(folds);
        double var = 0.0;
        for (int f = 0; f < folds; ++f) {
            const double d = fold_losses[static_cast<std::size_t>(f)][i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(folds - 1);
        out.curve.mean_error[i] = mean;
        out.curve.se[i] = std::sqrt(var / static_cast<double>(folds));
    }

    // grid is descending, so the first index at the minimum is the largest lambda
    std::size_t idx_min = 0;
    for (std::size_t i = 1; i < nl; ++i) {
        if (out.curve.mean_error[i] < out.curve.mean_error[idx_min]) idx_min = i;
    }
    const double threshold = out.curve.mean_error[idx_min] + out.curve.se[idx_min];
    std::size_t idx_1se = idx_min;
    for (std::size_t i = 0; i <= idx_min; ++i) {
        if (out.curve.mean_error[i] <= threshold) {
            idx_1se = i;
            break;
        }
    }
    out.curve.index_min = static_cast<int>(idx_min);
    out.curve.index_1se = static_cast<int>(idx_1se);
    out.curve.lambda_min = out.curve.lambda[idx_min];
    out.curve.lambda_1se = out.curve.lambda[idx_1se];

    const std::size_t chosen = rule == CvRule::min ? idx_min : idx_1se;
    out.chosen_index = static_cast<int>(chosen);
    out.chosen_lambda = out.curve.lambda[chosen];
    out.intercept = out.path.intercept.row(static_cast<Eigen::Index>(chosen)).transpose();
    out.coef = out.path.coef[chosen];
    return out;
}

} // namespace prens
