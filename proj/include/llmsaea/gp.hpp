#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "llmsaea/surrogates.hpp"

namespace llmsaea {

struct GPConfig {
    std::size_t restarts = 3;
    std::size_t max_evaluations = 200; // likelihood evaluations per start
    std::size_t probe_evaluations = 15; // per start before only the best continues, 0 = run all starts fully
    double min_lengthscale = 1e-3;     // normalized input units
    double max_lengthscale = 1e3;
    double min_signal_variance = 1e-3; // standardized target units
    double max_signal_variance = 1e3;
    double initial_nugget = 1e-8;
    double max_nugget = 1e-2;
};

/// Hyperparameters in log space: log lengthscale per dimension, then log signal variance.
using GPParams = Eigen::VectorXd;

/// Log marginal likelihood of the anisotropic squared-exponential GP on
/// standardized targets. Returns -inf if the Cholesky factorization fails.
/// When `gradient` is non-null it receives d(lml)/d(params).
double gp_log_marginal_likelihood(const TrainingSet& data, const GPParams& params, double nugget,
                                  Eigen::VectorXd* gradient = nullptr);

struct GPPrediction {
    double mean;
    double std;
};

class GPModel {
public:
    /// Multi-start bounded quasi-Newton maximization of the marginal likelihood.
    /// `warm_start` replaces the default first start (e.g. the previous fit's optimum).
    static GPModel fit(TrainingSet data, const GPConfig& config = {}, std::uint64_t seed = 0,
                       const GPParams* warm_start = nullptr);
    /// Fixed hyperparameters, no optimization (nugget still escalates).
    static GPModel with_params(TrainingSet data, const GPParams& params, const GPConfig& config = {});

    GPPrediction predict(std::span<const double> x) const;
    double predict_mean(std::span<const double> x) const { return predict(x).mean; }

    const GPParams& params() const { return params_; }
    double nugget() const { return nugget_; }
    double log_likelihood() const { return lml_; }
    /// Likelihood at each multi-start initial point, in start order.
    const std::vector<double>& start_log_likelihoods() const { return start_lml_; }
    const TrainingSet& data() const { return data_; }

private:
    void factorize(); // throws TrainingError

    TrainingSet data_;
    GPParams params_;
    double nugget_ = 1e-8;
    double lml_ = 0.0;
    std::vector<double> start_lml_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd inv_sq_lengthscale_;
    double signal_variance_ = 1.0;
};

struct BoxMaximizeResult {
    Eigen::VectorXd x;
    double value;
    std::size_t evaluations;
};

/// Projected BFGS ascent inside [lower, upper]. `fn` returns the value and,
/// when the pointer is non-null, writes the gradient. Line-search trials ask
/// for values only. Never returns a point worse than `start`.
BoxMaximizeResult maximize_in_box(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>& fn,
                                  Eigen::VectorXd start, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                  std::size_t max_evaluations);

} // namespace llmsaea
